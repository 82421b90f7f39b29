"""Growth-optimal investment on scenario trees with solvency cones.

The package models self-financing trading under proportional frictions as
paths of a convex-cone dynamical system on a finite Markov scenario tree,
solves for log-optimal strategies, and certifies optimality through dual
price processes.
"""

import os as _os


def _cap_threads() -> None:
    # VNG_THREADS caps the BLAS pools; must run before numpy is imported.
    cap = _os.environ.get("VNG_THREADS")
    if not cap:
        return
    try:
        cap_n = max(1, int(cap))
    except ValueError:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        cur = _os.environ.get(var)
        try:
            cur_n = int(cur) if cur else None
        except ValueError:
            cur_n = None
        if cur_n is None or cur_n > cap_n:
            _os.environ[var] = str(cap_n)


_cap_threads()

from .cones import (
    ConeSpec,
    ConeTable,
    ValidationReport,
    contains,
    max_alpha,
    boundary_scale,
    dual_contains,
    dual_violation,
    liquidation_value,
    membership_residual,
    validate_assumptions,
)
from .lp import (
    LPError,
    LPInfeasibleError,
    LPUnboundedError,
    LPCyclingError,
    LPResult,
    lp_solve,
)
from .scenario import (
    MarkovSpec,
    ScenarioTree,
    build_tree,
    conditional_expectation,
    sample_paths,
)
from .plans import (
    BalancedStrategy,
    ContingentPlan,
    DualPlan,
    expand_balanced,
    expand_balanced_dual,
    is_self_financing,
    ratio_process,
)
from .solver import (
    EquilibriumResult,
    SolverError,
    TreeSolveResult,
    extract_equilibrium_prices,
    numeraire_dual_frictionless,
    solve_stationary_equilibrium,
    solve_tree_log_optimal,
)
from .certify import (
    CertificateReport,
    DominanceReport,
    asymptotic_dominance,
    check_rapid,
    supermartingale_defect,
)

__version__ = "0.1.0"

__all__ = [
    "ConeSpec",
    "ConeTable",
    "ValidationReport",
    "contains",
    "max_alpha",
    "boundary_scale",
    "dual_contains",
    "dual_violation",
    "liquidation_value",
    "membership_residual",
    "validate_assumptions",
    "LPError",
    "LPInfeasibleError",
    "LPUnboundedError",
    "LPCyclingError",
    "LPResult",
    "lp_solve",
    "MarkovSpec",
    "ScenarioTree",
    "build_tree",
    "conditional_expectation",
    "sample_paths",
    "BalancedStrategy",
    "ContingentPlan",
    "DualPlan",
    "expand_balanced",
    "expand_balanced_dual",
    "is_self_financing",
    "ratio_process",
    "EquilibriumResult",
    "SolverError",
    "TreeSolveResult",
    "extract_equilibrium_prices",
    "numeraire_dual_frictionless",
    "solve_stationary_equilibrium",
    "solve_tree_log_optimal",
    "CertificateReport",
    "DominanceReport",
    "asymptotic_dominance",
    "check_rapid",
    "supermartingale_defect",
    "__version__",
]
