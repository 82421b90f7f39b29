"""Log-optimal plans on scenario trees and stationary balanced strategies.

The tree solver maximizes expected terminal log value over self-financing
plans.  Every cone family used here admits a finite list of linear
inequality rows per tree edge (transaction-cost cones via one row per
buy/sell sign pattern, currency cones via an exchange-matrix lift), so
the feasible set is polyhedral and the program is concave with a
tree-structured Hessian.  It is solved by a log-barrier interior-point
method whose Newton systems are eliminated leaf-to-root: each node's
block couples only its parent, giving linear-time steps in the node
count.  Barrier iterates are strictly feasible, so the returned plan is
exactly self-financing.

Dual prices are recovered afterwards by a feasibility linear program:
minimize the single largest violation of the support conditions
(price times predecessor portfolio equal to one) and of the dual-cone
conditions across the tree.  The optimal slack is reported as
``kkt_residual``; zero certifies the plan globally optimal, since any
exactly-supporting dual makes every competitor's deflated wealth a
supermartingale.

The stationary solver searches over per-state simplex proportions with a
seeded multistart pattern search, growth factors being recovered per
transition as the largest feasible scale toward the destination
proportions; supporting state prices come from the analogous stationary
feasibility program.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cones import (
    CURRENCY,
    FRICTIONLESS,
    PROPORTIONAL_TC,
    ConeSpec,
    boundary_scale,
    dual_cone_rows,
    validate_assumptions,
    wealth_weights,
)
from .lp import lp_solve, LPError
from .plans import BalancedStrategy, ContingentPlan, DualPlan
from .scenario import MarkovSpec, ScenarioTree

__all__ = [
    "SolverError",
    "TreeSolveResult",
    "EquilibriumResult",
    "solve_tree_log_optimal",
    "solve_stationary_equilibrium",
    "extract_equilibrium_prices",
    "numeraire_dual_frictionless",
]

_WEALTH_FLOOR = 1e-300


class SolverError(RuntimeError):
    """Raised when optimization cannot meet its contract."""


@dataclass(frozen=True)
class TreeSolveResult:
    """Solution of the finite-horizon program.

    objective     expected terminal log value, exact tree arithmetic
    kkt_residual  optimal uniform slack of the dual feasibility program
                  (0 certifies global optimality); NaN when dual
                  extraction was skipped
    """

    plan: ContingentPlan
    dual: DualPlan | None
    objective: float
    kkt_residual: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "plan": self.plan.to_dict(),
            "dual": None if self.dual is None else self.dual.to_dict(),
        }


@dataclass(frozen=True)
class EquilibriumResult:
    """Balanced strategy, supporting state prices, and growth data."""

    strategy: BalancedStrategy
    prices: dict
    log_growth: float
    certificate_residual: float
    stationary: dict

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.to_dict(),
            "prices": {s: list(map(float, p))
                       for s, p in sorted(self.prices.items())},
            "log_growth": self.log_growth,
            "certificate_residual": self.certificate_residual,
            "stationary": dict(sorted(self.stationary.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EquilibriumResult":
        return cls(
            strategy=BalancedStrategy.from_dict(d["strategy"]),
            prices={s: np.asarray(p, dtype=float)
                    for s, p in d["prices"].items()},
            log_growth=float(d["log_growth"]),
            certificate_residual=float(d["certificate_residual"]),
            stationary={s: float(w) for s, w in d["stationary"].items()},
        )


# ---------------------------------------------------------------------------
# Edge constraint compilation


def _edge_matrices(cone: ConeSpec):
    """Linear rows Fa.a + Fb.b + FD.d <= 0 describing cone membership.

    ``d`` is the flattened exchange matrix for currency cones (FD is None
    otherwise).  All rows are homogeneous.
    """
    n = cone.n
    if cone.family == FRICTIONLESS:
        return -cone.returns[None, :], np.ones((1, n)), None
    if cone.family == PROPORTIONAL_TC:
        rows = []
        for pattern in itertools.product((0, 1), repeat=n):
            c = np.where(pattern, 1.0 + cone.lambda_plus,
                         1.0 - cone.lambda_minus)
            rows.append(c)
        Fb = np.array(rows)
        Fa = -Fb * cone.returns[None, :]
        return Fa, Fb, None
    # currency: availability then delivery rows over the n*n lift
    Fa = np.zeros((2 * n, n))
    Fb = np.zeros((2 * n, n))
    FD = np.zeros((2 * n, n * n))
    for i in range(n):
        Fa[i, i] = -1.0
        FD[i, np.arange(n) * n + i] = 1.0  # sum_j d[j, i] <= a_i
    for i in range(n):
        Fb[n + i, i] = 1.0
        FD[n + i, i * n: (i + 1) * n] = -cone.mu[i]
    return Fa, Fb, FD


class _EdgeGroup:
    """Edges sharing one cone, vectorized together."""

    def __init__(self, cone, nodes, parents):
        self.cone = cone
        self.nodes = np.asarray(nodes, dtype=int)
        self.parents = np.asarray(parents, dtype=int)
        self.Fa, self.Fb, self.FD = _edge_matrices(cone)
        self.n = cone.n
        self.nlift = 0 if self.FD is None else cone.n * cone.n

    def residual_rows(self, X, D):
        A = X[self.parents]
        B = X[self.nodes]
        r = A @ self.Fa.T + B @ self.Fb.T
        if self.FD is not None:
            r = r + np.stack([D[v] for v in self.nodes]) @ self.FD.T
        return r


def _edge_groups(tree: ScenarioTree, cone_table):
    by_cone = {}
    for v in range(1, tree.n_nodes):
        cone = cone_table.resolve(*tree.transition_label(v))
        by_cone.setdefault(id(cone), (cone, [], []))
        by_cone[id(cone)][1].append(v)
        by_cone[id(cone)][2].append(tree.parent[v])
    return [_EdgeGroup(cone, nodes, parents)
            for cone, nodes, parents in by_cone.values()]


def _interior_start(tree, cone_table, x0, n):
    """Strictly feasible plan: roll half the boundary scale toward the
    all-ones direction at every edge; currency lifts spread positive
    mass over all exchange entries."""
    X = np.zeros((tree.n_nodes, n))
    X[0] = x0
    D = {}
    ones = np.ones(n)
    for v in range(1, tree.n_nodes):
        cone = cone_table.resolve(*tree.transition_label(v))
        a = X[tree.parent[v]]
        if cone.family == CURRENCY:
            d = np.zeros((n, n))
            for j in range(n):
                d[:, j] = 0.3 * a[j] / max(n - 1, 1)
                d[j, j] = 0.5 * a[j]
            deliver = (cone.mu * d).sum(axis=1)
            t = 0.4 * deliver.min()
            if t <= 0:
                raise SolverError("cannot construct interior start "
                                  f"(zero deliverable mass at node {v})")
            X[v] = t * ones
            D[v] = d.ravel()
        else:
            t = 0.5 * boundary_scale(cone, a, ones)
            if t <= 0:
                raise SolverError("cannot construct interior start "
                                  f"(zero growth at node {v})")
            X[v] = t * ones
    return X, D


# ---------------------------------------------------------------------------
# Barrier solve


class _TreeProgram:
    def __init__(self, tree, cone_table, x0, objective):
        self.tree = tree
        self.n = cone_table.n
        self.groups = _edge_groups(tree, cone_table)
        self.leaves = tree.leaves()
        self.leaf_prob = tree.abs_prob[self.leaves]
        W = np.zeros((self.leaves.size, self.n))
        for i, v in enumerate(self.leaves):
            cone = cone_table.resolve(*tree.transition_label(int(v)))
            W[i] = wealth_weights(cone, objective)
        self.leaf_w = W
        self.has_lift = any(g.nlift for g in self.groups)

    def objective_value(self, X):
        vals = (self.leaf_w * X[self.leaves]).sum(axis=1)
        if (vals <= _WEALTH_FLOOR).any():
            raise SolverError("terminal wealth collapsed to zero")
        return float(self.leaf_prob @ np.log(vals))

    def phi(self, X, D, mu):
        """Barrier objective (to minimize); +inf outside the interior."""
        vals = (self.leaf_w * X[self.leaves]).sum(axis=1)
        if (vals <= _WEALTH_FLOOR).any():
            return np.inf
        total = -float(self.leaf_prob @ np.log(vals))
        if (X[1:] <= 0.0).any():
            return np.inf
        total -= mu * float(np.log(X[1:]).sum())
        for g in self.groups:
            r = g.residual_rows(X, D)
            if (r >= 0.0).any():
                return np.inf
            total -= mu * float(np.log(-r).sum())
            if g.nlift:
                Dm = np.stack([D[v] for v in g.nodes])
                if (Dm <= 0.0).any():
                    return np.inf
                total -= mu * float(np.log(Dm).sum())
        return total

    def newton_step(self, X, D, mu):
        """One damped Newton step on the barrier; returns the updated
        (X, D), the Newton decrement, and the step size taken."""
        tree, n = self.tree, self.n
        N = tree.n_nodes
        dims = np.full(N, n, dtype=int)
        GX = np.zeros((N, n))
        HX = np.zeros((N, n, n))
        CP = np.zeros((N, n, n))  # rows: own x, cols: parent x
        GD, HDD, HXD, CPD = {}, {}, {}, {}

        # coordinate barriers on portfolios
        GX[1:] -= mu / X[1:]
        idx = np.arange(n)
        HX[1:, idx, idx] += mu / X[1:] ** 2

        # terminal objective
        vals = (self.leaf_w * X[self.leaves]).sum(axis=1)
        GX[self.leaves] += (-self.leaf_prob / vals)[:, None] * self.leaf_w
        HX[self.leaves] += (self.leaf_prob / vals ** 2)[:, None, None] * \
            np.einsum("li,lj->lij", self.leaf_w, self.leaf_w)

        for g in self.groups:
            r = g.residual_rows(X, D)
            u = 1.0 / (-r)  # positive
            w = mu * u ** 2
            Fa, Fb, FD = g.Fa, g.Fb, g.FD
            np.add.at(GX, g.parents, mu * (u @ Fa))
            np.add.at(GX, g.nodes, mu * (u @ Fb))
            np.add.at(HX, g.parents, np.einsum("gr,ri,rj->gij", w, Fa, Fa))
            np.add.at(HX, g.nodes, np.einsum("gr,ri,rj->gij", w, Fb, Fb))
            np.add.at(CP, g.nodes, np.einsum("gr,ri,rj->gij", w, Fb, Fa))
            if g.nlift:
                dims[g.nodes] = n + g.nlift
                HxD = np.einsum("gr,ri,rj->gij", w, Fb, FD)
                HdD = np.einsum("gr,ri,rj->gij", w, FD, FD)
                CpD = np.einsum("gr,ri,rj->gij", w, FD, Fa)
                gD = mu * (u @ FD)
                for i, v in enumerate(g.nodes):
                    Dv = D[v]
                    GD[v] = gD[i] - mu / Dv
                    HDD[v] = HdD[i] + np.diag(mu / Dv ** 2)
                    HXD[v] = HxD[i]
                    CPD[v] = CpD[i]

        if self.has_lift:
            dX, dD, decrement = self._solve_kkt_by_node(
                GX, HX, CP, GD, HDD, HXD, CPD, dims)
        else:
            dX, decrement = self._solve_kkt_by_depth(GX, HX, CP)
            dD = {}
        if decrement <= 0:
            return X, D, 0.0, 0.0

        # fraction to the boundary
        t_max = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            neg = dX[1:] < 0
            if neg.any():
                t_max = min(t_max, float((-X[1:][neg] / dX[1:][neg]).min()))
            for g in self.groups:
                r = g.residual_rows(X, D)
                dA = dX[g.parents]
                dB = dX[g.nodes]
                dr = dA @ g.Fa.T + dB @ g.Fb.T
                if g.nlift:
                    dr = dr + np.stack([dD[v] for v in g.nodes]) @ g.FD.T
                    for v in g.nodes:
                        negd = dD[v] < 0
                        if negd.any():
                            t_max = min(t_max, float(
                                (-D[v][negd] / dD[v][negd]).min()))
                grow = dr > 0
                if grow.any():
                    t_max = min(t_max, float((-r[grow] / dr[grow]).min()))
        t = min(1.0, 0.99 * t_max)

        # Armijo backtracking on the barrier objective
        base = self.phi(X, D, mu)
        slope = -decrement
        for _ in range(60):
            Xn = X + t * dX
            Dn = {v: D[v] + t * dD.get(v, 0.0) for v in D}
            if self.phi(Xn, Dn, mu) <= base + 0.25 * t * slope:
                return Xn, Dn, decrement, t
            t *= 0.5
        raise SolverError("line search failed to make progress")

    def _solve_kkt_by_depth(self, GX, HX, CP):
        """Tree-structured Newton solve, batched one depth at a time.

        Each node's Hessian block couples only to its parent, so
        eliminating whole generations leaf-to-root factors the system
        in O(depth) batched dense solves.  Lift-free cones only.
        """
        tree, n = self.tree, self.n
        N = tree.n_nodes
        idx = np.arange(n)
        # relative ridge: value-flat directions (a leaf cares only
        # about total wealth) otherwise drive the block singular as
        # the barrier weight vanishes
        diag_max = np.maximum(HX[1:, idx, idx].max(axis=1), 1.0)
        HX[1:, idx, idx] += 1e-14 * diag_max[:, None]
        g0 = GX.copy()

        GV = np.zeros((N, n))
        KK = np.zeros((N, n, n))
        parent = tree.parent
        for d in range(tree.horizon, 0, -1):
            vs = tree.nodes_at_depth(d)
            try:
                sol = np.linalg.solve(
                    HX[vs], np.concatenate([GX[vs][:, :, None], CP[vs]],
                                           axis=2))
            except np.linalg.LinAlgError:
                raise SolverError("singular Newton system at depth "
                                  f"{d}") from None
            GV[vs] = sol[:, :, 0]
            KK[vs] = sol[:, :, 1:]
            if d > 1:
                np.add.at(HX, parent[vs],
                          -np.einsum("vrc,vrk->vck", CP[vs], KK[vs]))
                np.add.at(GX, parent[vs],
                          -np.einsum("vrc,vr->vc", CP[vs], GV[vs]))

        delta = np.zeros((N, n))
        for d in range(1, tree.horizon + 1):
            vs = tree.nodes_at_depth(d)
            delta[vs] = -(GV[vs] + np.einsum("vrc,vc->vr", KK[vs],
                                             delta[parent[vs]]))
        decrement = -float(np.einsum("vi,vi->", g0[1:], delta[1:]))
        return delta, decrement

    def _solve_kkt_by_node(self, GX, HX, CP, GD, HDD, HXD, CPD, dims):
        """Per-node elimination for trees whose cones carry lift
        variables, where block sizes vary node to node."""
        tree, n = self.tree, self.n
        N = tree.n_nodes
        Hd = [None] * N
        g_vec = [None] * N
        Cp = [None] * N
        for v in range(1, N):
            if dims[v] == n:
                Hd[v] = HX[v].copy()
                g_vec[v] = GX[v].copy()
                Cp[v] = CP[v]
            else:
                m = dims[v]
                blk = np.zeros((m, m))
                blk[:n, :n] = HX[v]
                blk[:n, n:] = HXD[v]
                blk[n:, :n] = HXD[v].T
                blk[n:, n:] = HDD[v]
                Hd[v] = blk
                g_vec[v] = np.concatenate([GX[v], GD[v]])
                cp = np.zeros((m, n))
                cp[:n] = CP[v]
                cp[n:] = CPD[v]
                Cp[v] = cp
            m = dims[v]
            ridge = 1e-14 * max(float(Hd[v].diagonal().max()), 1.0)
            Hd[v][np.arange(m), np.arange(m)] += ridge
        g0 = [None if gv is None else gv.copy() for gv in g_vec]

        parent = tree.parent
        for v in range(N - 1, 0, -1):
            u_ = parent[v]
            if u_ >= 1:
                try:
                    piv = np.linalg.solve(Hd[v],
                                          np.hstack([g_vec[v][:, None],
                                                     Cp[v]]))
                except np.linalg.LinAlgError:
                    raise SolverError("singular Newton system "
                                      f"at node {v}") from None
                Hd[u_][:n, :n] -= Cp[v].T @ piv[:, 1:]
                g_vec[u_][:n] -= Cp[v].T @ piv[:, 0]

        delta = [None] * N
        for v in range(1, N):
            u_ = parent[v]
            rhs = g_vec[v].copy()
            if u_ >= 1:
                rhs = rhs + Cp[v] @ delta[u_][:n]
            try:
                delta[v] = -np.linalg.solve(Hd[v], rhs)
            except np.linalg.LinAlgError:
                raise SolverError(f"singular Newton system at node {v}") \
                    from None

        decrement = -sum(float(g0[v] @ delta[v]) for v in range(1, N))
        dX = np.zeros((N, n))
        for v in range(1, N):
            dX[v] = delta[v][:n]
        dD = {v: delta[v][n:] for v in range(1, N) if dims[v] > n}
        return dX, dD, decrement


def solve_tree_log_optimal(tree: ScenarioTree, cone_table, x0,
                           objective: str = "wealth",
                           extract_dual: bool = True,
                           mu_final: float = 1e-12) -> TreeSolveResult:
    """Maximize expected terminal log value over self-financing plans.

    ``x0`` is the strictly positive starting portfolio held at the root.
    ``objective`` selects the terminal functional: plain wealth or
    liquidation value (selling costs applied at the horizon).  With
    ``extract_dual`` the supporting price system is recovered by the
    feasibility program described in the module docstring; skip it on
    large trees where the dense LP would dominate runtime.

    Deterministic: no randomness anywhere in the solve.
    """
    if objective not in ("wealth", "liquidation"):
        raise ValueError(f"unknown objective: {objective!r}")
    n = cone_table.n
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have length {n}")
    if (x0 <= 0).any() or not np.isfinite(x0).all():
        raise SolverError("x0 must be strictly positive and finite")
    report = validate_assumptions(cone_table)
    if not report.g5_ok or report.gamma <= 0:
        raise SolverError(
            "cone table fails the growth assumption (gamma = "
            f"{report.gamma:.3e}); solve aborted"
        )

    prog = _TreeProgram(tree, cone_table, x0, objective)
    X, D = _interior_start(tree, cone_table, x0, n)

    iterations = 0
    mu = 1.0
    while True:
        stage_tol = max(1e-13, 1e-3 * mu)
        for _ in range(40):
            X, D, dec, _t = prog.newton_step(X, D, mu)
            iterations += 1
            if dec / 2.0 <= stage_tol:
                break
        if mu <= mu_final:
            break
        mu = max(mu * 0.1, mu_final * (1.0 - 1e-12))

    plan = ContingentPlan(tree, X, units=(
        "physical" if any(g.cone.family == CURRENCY for g in prog.groups)
        else "market"))
    value = prog.objective_value(X)

    # feasibility audit: barrier iterates must be strictly inside
    bad = []
    for g in prog.groups:
        r = g.residual_rows(X, D)
        worst = float(r.max())
        if worst > 1e-8:
            bad.append(worst)
    if bad:
        raise SolverError(f"plan left the feasible set: residual {max(bad)}")

    if not extract_dual:
        return TreeSolveResult(plan, None, value, float("nan"), iterations)

    dual, resid = _extract_tree_dual(tree, cone_table, X, prog)
    return TreeSolveResult(plan, dual, value, resid, iterations)


def _extract_tree_dual(tree, cone_table, X, prog):
    """Price system minimizing the largest certificate violation.

    Variables: one price vector per node of depth >= 1, auxiliary lift
    variables where the dual cone needs them, and a single uniform slack
    bounding (i) deviations of price-times-predecessor-portfolio from 1
    and (ii) dual-cone row violations.  The terminal layer is pinned to
    the terminal objective gradient w / (w . x_T), which is the exact
    price of wealth one step past the horizon.
    """
    n = prog.n
    N = tree.n_nodes
    leaves = tree.leaves()
    leaf0 = int(leaves[0])

    # terminal vectors
    term = np.zeros((leaves.size, n))
    for i in range(leaves.size):
        w = prog.leaf_w[i]
        term[i] = w / (w @ X[leaves[i]])

    rows_cache = {}
    offs = np.zeros(N, dtype=int)
    pos = 0
    lift_offs = {}
    for v in range(1, N):
        offs[v] = pos
        pos += n
    for v in range(1, N):
        cone = cone_table.resolve(*tree.transition_label(v))
        dr = rows_cache.setdefault(id(cone), dual_cone_rows(cone))
        if dr.n_lift:
            lift_offs[v] = pos
            pos += dr.n_lift
    slack = pos
    nv = pos + 1

    A_rows, b_rows = [], []
    for v in range(1, N):
        a = X[tree.parent[v]]
        row = np.zeros(nv)
        row[offs[v]: offs[v] + n] = a
        row[slack] = -1.0
        A_rows.append(row)
        b_rows.append(1.0)
        row = np.zeros(nv)
        row[offs[v]: offs[v] + n] = -a
        row[slack] = -1.0
        A_rows.append(row)
        b_rows.append(-1.0)

    for v in range(1, N):
        cone = cone_table.resolve(*tree.transition_label(v))
        dr = rows_cache[id(cone)]
        is_leaf = tree.depth[v] == tree.horizon
        kids = None if is_leaf else tree.children(v)
        for k in range(dr.n_rows):
            row = np.zeros(nv)
            row[offs[v]: offs[v] + n] += dr.F_c[k]
            rhs = 0.0
            if is_leaf:
                rhs = -float(dr.F_d[k] @ term[v - leaf0])
            else:
                for c in kids:
                    row[offs[c]: offs[c] + n] += (tree.cond_prob[c]
                                                  * dr.F_d[k])
            if dr.n_lift:
                lo = lift_offs[v]
                row[lo: lo + dr.n_lift] += dr.F_lift[k]
            row[slack] -= 1.0
            A_rows.append(row)
            b_rows.append(rhs)

    c = np.zeros(nv)
    c[slack] = 1.0
    try:
        res = lp_solve(c, A_ub=np.array(A_rows), b_ub=np.array(b_rows))
    except LPError as exc:
        raise SolverError(f"dual extraction failed: {exc}") from exc

    prices = np.zeros((N, n))
    for v in range(1, N):
        prices[v] = res.x[offs[v]: offs[v] + n]
    dual = DualPlan(tree, prices, term)
    return dual, float(max(res.objective, 0.0))


# ---------------------------------------------------------------------------
# Stationary equilibria


def _transition_pairs(spec: MarkovSpec):
    return [(u, v) for u in range(spec.k) for v in range(spec.k)
            if spec.P[u, v] > 0.0]


class _StationaryProgram:
    """Stationary growth objective with transition cones resolved once.

    For frictionless and transaction-cost cones the boundary scale is an
    exact row ratio minimum (their membership rows are Fa.a + Fb.b <= 0
    with Fb nonnegative), so the hot path avoids bisection entirely;
    currency cones fall back to the LP-based boundary scale.
    """

    def __init__(self, spec, cone_table, pi):
        self.k = spec.k
        self.pi = pi
        self.edges = []
        for v in range(spec.k):
            preds = []
            for u in np.flatnonzero(spec.P[:, v] > 0.0):
                cone = cone_table.resolve(spec.states[u], spec.states[v])
                if cone.family == CURRENCY:
                    preds.append((int(u), cone, None, None))
                else:
                    Fa, Fb, _ = _edge_matrices(cone)
                    preds.append((int(u), cone, Fa, Fb))
            self.edges.append((v, preds))

    def growth_factors(self, xs):
        """alpha[v]: largest scale of x(v) reachable from all predecessors."""
        alpha = np.ones(self.k)
        for v, preds in self.edges:
            if not preds:
                continue
            best = np.inf
            for u, cone, Fa, Fb in preds:
                if Fa is None:
                    best = min(best, boundary_scale(cone, xs[u], xs[v]))
                    continue
                cap = -(Fa @ xs[u])
                load = Fb @ xs[v]
                live = load > 1e-300
                if not live.any():
                    continue
                best = min(best, float((cap[live] / load[live]).min()))
            alpha[v] = 0.0 if best < 0 else (1.0 if best == np.inf else best)
        return alpha

    def value(self, xs):
        alpha = self.growth_factors(xs)
        mask = self.pi > 0
        if (alpha[mask] <= 0.0).any():
            return -np.inf, alpha
        logs = np.zeros(self.k)
        logs[mask] = np.log(alpha[mask])
        return float(self.pi @ logs), alpha


def _pattern_search(xs0, prog, h0=0.25, h_min=1e-7):
    """Best-improvement search over per-state simplex moves.

    Moves shift mass h from coordinate j to i within one state, or
    within every state at once.  The coordinated moves matter: growth
    factors are minima over predecessor states, so single-state moves
    can stall on the ridge where two predecessors tie.
    """
    xs = xs0.copy()
    k, n = xs.shape
    f_cur, _ = prog.value(xs)
    scopes = [(s,) for s in range(k)]
    if k > 1:
        scopes.append(tuple(range(k)))
    h = h0
    while h >= h_min:
        best_gain = 1e-15
        best_move = None
        for scope in scopes:
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    if any(xs[s, j] < h - 1e-15 for s in scope):
                        continue
                    trial = xs.copy()
                    for s in scope:
                        trial[s, i] += h
                        trial[s, j] = max(trial[s, j] - h, 0.0)
                    f_new, _ = prog.value(trial)
                    if f_new - f_cur > best_gain:
                        best_gain = f_new - f_cur
                        best_move = trial
        if best_move is None:
            h *= 0.5
        else:
            xs = best_move
            f_cur, _ = prog.value(xs)
    return xs, f_cur


def solve_stationary_equilibrium(spec: MarkovSpec, cone_table,
                                 starts: int = 32,
                                 seed: int = 0) -> EquilibriumResult:
    """Balanced strategy maximizing expected log growth, with prices.

    Searches per-state proportion vectors on the simplex by multistart
    pattern search (start 0 is the uniform portfolio; the rest are seeded
    Dirichlet draws, so results are reproducible).  Growth factors are
    the binding boundary scales over all positive-probability
    predecessors.  Supporting prices and the certificate residual come
    from :func:`extract_equilibrium_prices`.
    """
    report = validate_assumptions(cone_table)
    if not report.g5_ok or report.gamma <= 0:
        raise SolverError(
            "cone table fails the growth assumption (gamma = "
            f"{report.gamma:.3e}); equilibrium solve aborted"
        )
    k, n = spec.k, cone_table.n
    pi = spec.stationary_distribution()
    rng = np.random.default_rng(seed)
    prog = _StationaryProgram(spec, cone_table, pi)

    best = (-np.inf, None)
    for s_idx in range(max(starts, 1)):
        if s_idx == 0:
            xs0 = np.full((k, n), 1.0 / n)
        else:
            xs0 = rng.dirichlet(np.ones(n), size=k)
        xs, f = _pattern_search(xs0, prog)
        if f > best[0] + 1e-12:
            best = (f, xs)
    if best[1] is None or not np.isfinite(best[0]):
        raise SolverError("no start produced a positive growth factor")

    xs = best[1]
    alpha = prog.growth_factors(xs)
    strategy = BalancedStrategy(
        x={spec.states[s]: xs[s] for s in range(k)},
        alpha={spec.states[s]: float(alpha[s]) for s in range(k)},
    )
    prices, residual = extract_equilibrium_prices(strategy, spec,
                                                  cone_table)
    log_growth = float(pi @ np.log(alpha))
    return EquilibriumResult(
        strategy=strategy,
        prices=prices,
        log_growth=log_growth,
        certificate_residual=residual,
        stationary={spec.states[s]: float(pi[s]) for s in range(k)},
    )


def extract_equilibrium_prices(strategy: BalancedStrategy,
                               spec: MarkovSpec, cone_table):
    """Stationary supporting prices for a balanced strategy.

    Solves for per-state price vectors p(s) >= 0 minimizing the largest
    violation among, over every positive-probability transition u -> v:

    * support rows  p(v) . x(u) = 1,
    * dual-cone rows  (p(v), sum_w P(v,w) p(w) / alpha(v)) in the dual
      cone of the (u, v) transition.

    Returns ``(prices, residual)``; a residual at numerical zero
    certifies the strategy rapid in the stationary sense, while a
    clearly positive one is an infeasibility report: no stationary
    price supports the strategy.  Frictionless log-optimal strategies
    always admit prices; under transaction costs even the best balanced
    strategy may not (the truly optimal policy holds a no-trade band
    rather than fixed proportions), and the residual quantifies that.
    """
    k = spec.k
    xs = np.stack([strategy.x[s] for s in spec.states])
    alpha = np.array([strategy.alpha[s] for s in spec.states])
    n = xs.shape[1]

    pairs = _transition_pairs(spec)
    rows_cache = {}
    pos = k * n
    lift_offs = {}
    for (u, v) in pairs:
        cone = cone_table.resolve(spec.states[u], spec.states[v])
        dr = rows_cache.setdefault(id(cone), dual_cone_rows(cone))
        if dr.n_lift:
            lift_offs[(u, v)] = pos
            pos += dr.n_lift
    slack = pos
    nv = pos + 1

    A_rows, b_rows = [], []
    for (u, v) in pairs:
        row = np.zeros(nv)
        row[v * n: (v + 1) * n] = xs[u]
        row[slack] = -1.0
        A_rows.append(row)
        b_rows.append(1.0)
        row = np.zeros(nv)
        row[v * n: (v + 1) * n] = -xs[u]
        row[slack] = -1.0
        A_rows.append(row)
        b_rows.append(-1.0)
    for (u, v) in pairs:
        cone = cone_table.resolve(spec.states[u], spec.states[v])
        dr = rows_cache[id(cone)]
        for r_i in range(dr.n_rows):
            row = np.zeros(nv)
            row[v * n: (v + 1) * n] += dr.F_c[r_i]
            for w in range(k):
                if spec.P[v, w] > 0.0:
                    row[w * n: (w + 1) * n] += (spec.P[v, w] / alpha[v]
                                                * dr.F_d[r_i])
            if dr.n_lift:
                lo = lift_offs[(u, v)]
                row[lo: lo + dr.n_lift] += dr.F_lift[r_i]
            row[slack] -= 1.0
            A_rows.append(row)
            b_rows.append(0.0)

    c = np.zeros(nv)
    c[slack] = 1.0
    try:
        res = lp_solve(c, A_ub=np.array(A_rows), b_ub=np.array(b_rows))
    except LPError as exc:
        raise SolverError(f"price extraction failed: {exc}") from exc
    prices = {spec.states[s]: res.x[s * n: (s + 1) * n].copy()
              for s in range(k)}
    return prices, float(max(res.objective, 0.0))


# ---------------------------------------------------------------------------
# Closed-form dual for frictionless markets


def numeraire_dual_frictionless(plan: ContingentPlan,
                                cone_table) -> DualPlan:
    """Dual price candidate for a frictionless plan.

    The price at a node is the return vector of its incoming step
    deflated by the plan's post-return wealth at the parent:
    ``p(v) = R(v) / (R(v) . x(parent))``.  The support product
    ``p(v) . x(parent)`` is then exactly one, and for the log-optimal
    plan the dual-cone condition holds as well (the classical numeraire
    property, verifiable with the certificate checker).  The terminal
    layer extends the same construction one step past the horizon using
    the Markov transition probabilities.
    """
    tree = plan.tree
    spec = tree.spec
    n = plan.n
    X = plan.x
    prices = np.zeros((tree.n_nodes, n))
    for v in range(1, tree.n_nodes):
        cone = cone_table.resolve(*tree.transition_label(v))
        if cone.family != FRICTIONLESS:
            raise ValueError("numeraire construction requires frictionless "
                             f"cones; transition into node {v} is "
                             f"{cone.family}")
        denom = float(cone.returns @ X[tree.parent[v]])
        if denom <= _WEALTH_FLOOR:
            raise SolverError(f"zero post-return wealth above node {v}")
        prices[v] = cone.returns / denom
    leaves = tree.leaves()
    term = np.zeros((leaves.size, n))
    for i, v in enumerate(leaves):
        s = tree.state[v]
        acc = np.zeros(n)
        for w in np.flatnonzero(spec.P[s] > 0.0):
            cone = cone_table.resolve(spec.states[s], spec.states[w])
            if cone.family != FRICTIONLESS:
                raise ValueError("numeraire construction requires "
                                 "frictionless cones past the horizon")
            denom = float(cone.returns @ X[v])
            if denom <= _WEALTH_FLOOR:
                raise SolverError(f"zero post-return wealth at leaf {v}")
            acc += spec.P[s, w] * cone.returns / denom
        term[i] = acc
    return DualPlan(tree, prices, term)
