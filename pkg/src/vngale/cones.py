"""Solvency cones for frictionless, transaction-cost and currency markets.

A solvency cone is the set of portfolio pairs ``(a, b)`` such that the
holdings ``a``, after returns are applied, can be rebalanced into ``b``
without injecting outside funds.  Self-financing trading strategies are
exactly the paths of the induced dynamical system: ``(x_{t-1}, x_t)`` must
lie in the cone attached to the step.  Three families are provided:

``frictionless``
    Positions are market values.  Rebalancing preserves total wealth:
    ``sum(b) <= sum(R * a)`` with ``R`` the vector of gross returns over
    the step.

``proportional_tc``
    Frictionless plus proportional transaction costs.  Buying one value
    unit of asset ``i`` costs ``1 + lambda_plus[i]``; selling one yields
    ``1 - lambda_minus[i]``.  Membership is the single piecewise-linear
    budget inequality

        sum_i max((1 + lp_i) d_i, (1 - lm_i) d_i) <= 0,
        d = b - R * a,

    which equals the buy/sell form
    ``sum (1+lp)(b-Ra)_+ <= sum (1-lm)(Ra-b)_+``.

``currency``
    Positions are physical units of ``n`` currencies.  ``mu[i, j] > 0`` is
    the number of units of currency ``i`` received per unit of currency
    ``j`` exchanged (``mu[i, i] == 1``).  ``(a, b)`` is a member when some
    nonnegative exchange matrix ``d`` ships at most ``a`` and delivers at
    least ``b``:

        sum_j d[j, i] <= a[i]      and      b[i] <= sum_j mu[i, j] d[i, j].

All cones are closed and convex, contain no short positions, and allow
free disposal.  Membership tests use a relative tolerance scaled by
``1 + |a| + |b|`` (L1 norms).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import lp_solve, LPInfeasibleError, LPUnboundedError

__all__ = [
    "FRICTIONLESS",
    "PROPORTIONAL_TC",
    "CURRENCY",
    "ConeSpec",
    "ConeTable",
    "ValidationReport",
    "DualConeRows",
    "contains",
    "membership_residual",
    "boundary_scale",
    "max_alpha",
    "dual_violation",
    "dual_contains",
    "dual_cone_rows",
    "liquidation_value",
    "wealth_weights",
    "sample_member",
    "validate_assumptions",
]

FRICTIONLESS = "frictionless"
PROPORTIONAL_TC = "proportional_tc"
CURRENCY = "currency"


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ConeSpec:
    """Specification of one solvency cone.

    Use the classmethod constructors; they validate parameter ranges.
    ``lambda_minus`` entries equal to 1 are accepted at construction (a
    fully illiquid sale) but are rejected by :func:`validate_assumptions`,
    which is the contract gate for well-posed models.
    """

    family: str
    n: int
    returns: np.ndarray | None = None
    lambda_plus: np.ndarray | None = None
    lambda_minus: np.ndarray | None = None
    mu: np.ndarray | None = None

    @classmethod
    def frictionless(cls, returns) -> "ConeSpec":
        r = _readonly(returns)
        if r.ndim != 1 or r.size == 0:
            raise ValueError("returns must be a nonempty vector")
        if not np.isfinite(r).all() or (r <= 0).any():
            raise ValueError("returns must be finite and strictly positive")
        return cls(FRICTIONLESS, r.size, returns=r)

    @classmethod
    def proportional_tc(cls, returns, lambda_plus, lambda_minus) -> "ConeSpec":
        r = _readonly(returns)
        lp_ = _readonly(np.broadcast_to(np.asarray(lambda_plus, dtype=float),
                                        r.shape))
        lm = _readonly(np.broadcast_to(np.asarray(lambda_minus, dtype=float),
                                       r.shape))
        if r.ndim != 1 or r.size == 0:
            raise ValueError("returns must be a nonempty vector")
        if not np.isfinite(r).all() or (r <= 0).any():
            raise ValueError("returns must be finite and strictly positive")
        if (lp_ < 0).any() or not np.isfinite(lp_).all():
            raise ValueError("lambda_plus must be finite and >= 0")
        if (lm < 0).any() or (lm > 1).any():
            raise ValueError("lambda_minus must lie in [0, 1]")
        return cls(PROPORTIONAL_TC, r.size, returns=r, lambda_plus=lp_,
                   lambda_minus=lm)

    @classmethod
    def currency(cls, mu) -> "ConeSpec":
        m = _readonly(mu)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("mu must be a square matrix")
        if not np.isfinite(m).all() or (m <= 0).any():
            raise ValueError("exchange rates must be finite and positive")
        if not np.allclose(np.diag(m), 1.0, rtol=0, atol=1e-12):
            raise ValueError("diagonal exchange rates must equal 1")
        return cls(CURRENCY, m.shape[0], mu=m)

    def to_dict(self) -> dict:
        if self.family == FRICTIONLESS:
            return {"family": self.family, "returns": self.returns.tolist()}
        if self.family == PROPORTIONAL_TC:
            return {
                "family": self.family,
                "returns": self.returns.tolist(),
                "lambda_plus": self.lambda_plus.tolist(),
                "lambda_minus": self.lambda_minus.tolist(),
            }
        return {"family": self.family, "mu": self.mu.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ConeSpec":
        fam = d.get("family")
        if fam == FRICTIONLESS:
            return cls.frictionless(d["returns"])
        if fam == PROPORTIONAL_TC:
            return cls.proportional_tc(d["returns"], d["lambda_plus"],
                                       d["lambda_minus"])
        if fam == CURRENCY:
            return cls.currency(d["mu"])
        raise ValueError(f"unknown cone family: {fam!r}")


def _check_pair(cone: ConeSpec, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (cone.n,) or b.shape != (cone.n,):
        raise ValueError(
            f"expected vectors of length {cone.n}, got {a.shape} and {b.shape}"
        )
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("portfolio vectors must be finite")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("portfolio vectors must be nonnegative")
    return a, b


def membership_residual(cone: ConeSpec, a, b) -> float:
    """Scaled membership residual of ``(a, b)``.

    Nonpositive (or below the working tolerance) means member.  For the
    closed-form families the value is the signed constraint slack divided
    by ``1 + |a| + |b|``; for currency cones it is the smallest uniform
    delivery shortfall obtainable by any exchange matrix, likewise scaled,
    so it is zero (never negative) on members.
    """
    a, b = _check_pair(cone, a, b)
    scale = 1.0 + a.sum() + b.sum()
    if cone.family == FRICTIONLESS:
        return float(b.sum() - cone.returns @ a) / scale
    if cone.family == PROPORTIONAL_TC:
        d = b - cone.returns * a
        terms = np.maximum((1.0 + cone.lambda_plus) * d,
                           (1.0 - cone.lambda_minus) * d)
        return float(terms.sum()) / scale
    return _currency_shortfall(cone, a, b) / scale


def _currency_shortfall(cone: ConeSpec, a, b) -> float:
    """Smallest uniform shortfall s >= 0 such that some exchange matrix
    delivers ``b - s`` from ``a``.  Zero iff (a, b) is a member."""
    n = cone.n
    nv = n * n + 1  # d (row-major) then s
    # availability: sum_j d[j, i] <= a_i
    A1 = np.zeros((n, nv))
    for i in range(n):
        A1[i, np.arange(n) * n + i] = 1.0
    # delivery: b_i - sum_j mu[i,j] d[i,j] - s <= 0
    A2 = np.zeros((n, nv))
    for i in range(n):
        A2[i, i * n: (i + 1) * n] = -cone.mu[i]
        A2[i, -1] = -1.0
    c = np.zeros(nv)
    c[-1] = 1.0
    res = lp_solve(c, A_ub=np.vstack([A1, A2]),
                   b_ub=np.concatenate([a, -b]))
    return max(res.objective, 0.0)


def contains(cone: ConeSpec, a, b, tol: float = 1e-9) -> bool:
    """True when ``(a, b)`` belongs to the cone.

    The test is ``membership_residual(cone, a, b) <= tol`` with the
    residual already scaled by ``1 + |a| + |b|``, i.e. boundary membership
    is decided at relative tolerance ``tol``.
    """
    return membership_residual(cone, a, b) <= tol


def boundary_scale(cone: ConeSpec, a, direction, iters: int = 60) -> float:
    """Largest ``t >= 0`` with ``(a, t * direction)`` in the cone.

    Free disposal makes the feasible set of ``t`` an interval ``[0, t*]``.
    Frictionless cones have the closed form ``t* = (R.a) / sum(direction)``;
    transaction-cost cones are solved by bisection (the returned value is
    the last point verified to be a member); currency cones solve one
    linear program maximizing ``t`` directly.
    """
    a, d = _check_pair(cone, a, direction)
    if d.sum() <= 0.0:
        raise ValueError("direction must have positive mass")
    if cone.family == FRICTIONLESS:
        return float(cone.returns @ a) / float(d.sum())
    if cone.family == CURRENCY:
        n = cone.n
        nv = n * n + 1  # d-matrix then t
        A1 = np.zeros((n, nv))
        for i in range(n):
            A1[i, np.arange(n) * n + i] = 1.0
        A2 = np.zeros((n, nv))
        for i in range(n):
            A2[i, i * n: (i + 1) * n] = -cone.mu[i]
            A2[i, -1] = d[i]
        c = np.zeros(nv)
        c[-1] = 1.0
        try:
            res = lp_solve(c, A_ub=np.vstack([A1, A2]),
                           b_ub=np.concatenate([a, np.zeros(n)]),
                           maximize=True)
        except LPUnboundedError:
            return np.inf
        return max(res.objective, 0.0)
    # proportional_tc: wealth cannot grow past sum(R a), so bracket there.
    hi = float(cone.returns @ a) / float(d.sum()) * (1.0 + 1e-9) + 1e-12
    lo = 0.0
    if _tc_raw_residual(cone, a, hi * d) <= 0.0:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _tc_raw_residual(cone, a, mid * d) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def _tc_raw_residual(cone: ConeSpec, a, b) -> float:
    d = b - cone.returns * a
    return float(np.maximum((1.0 + cone.lambda_plus) * d,
                            (1.0 - cone.lambda_minus) * d).sum())


def max_alpha(cone: ConeSpec, x, iters: int = 60) -> float:
    """Largest ``alpha`` with ``(x, alpha * x)`` in the cone.

    ``x`` must lie on the unit simplex (nonnegative, summing to one).
    This is the growth factor of the proportion vector ``x`` across the
    step; solvency-cone feasibility in ``alpha`` is an interval, so the
    supremum is well defined.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (cone.n,):
        raise ValueError(f"expected a vector of length {cone.n}")
    if (x < 0).any() or abs(x.sum() - 1.0) > 1e-9:
        raise ValueError("x must lie on the unit simplex")
    return boundary_scale(cone, x, x, iters=iters)


@dataclass(frozen=True)
class DualConeRows:
    """Linear description of dual-cone membership.

    ``(c, d)`` lies in the dual cone iff there exist ``lift >= 0`` with

        F_c @ c + F_d @ d + F_lift @ lift <= 0   (row-wise).

    Frictionless and currency cones need no lift (``F_lift`` has zero
    columns).  Transaction-cost cones use ``n + 1`` lift variables.
    """

    F_c: np.ndarray
    F_d: np.ndarray
    F_lift: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.F_c.shape[0]

    @property
    def n_lift(self) -> int:
        return self.F_lift.shape[1]


def dual_cone_rows(cone: ConeSpec) -> DualConeRows:
    """Inequality rows characterizing the dual cone.

    The dual cone consists of the price pairs ``(c, d)`` with
    ``d.b <= c.a`` for every member ``(a, b)``; these rows express it as a
    projection of a polyhedron.  Frictionless: ``c_i >= R_i * d_j`` for
    all ``i, j``.  Currency: ``mu[i, j] * d_i <= c_j``.  Transaction
    costs: a lift ``(y, tau)`` with ``d <= y``, ``R * y <= c`` and
    ``(1 - lm) tau <= y <= (1 + lp) tau``, obtained by LP duality from the
    buy/sell representation of the cone.
    """
    n = cone.n
    if cone.family == FRICTIONLESS:
        rows = n * n
        F_c = np.zeros((rows, n))
        F_d = np.zeros((rows, n))
        r = 0
        for i in range(n):
            for j in range(n):
                F_c[r, i] = -1.0
                F_d[r, j] = cone.returns[i]
                r += 1
        return DualConeRows(F_c, F_d, np.zeros((rows, 0)))
    if cone.family == CURRENCY:
        rows = n * n
        F_c = np.zeros((rows, n))
        F_d = np.zeros((rows, n))
        r = 0
        for i in range(n):
            for j in range(n):
                F_c[r, j] = -1.0
                F_d[r, i] = cone.mu[i, j]
                r += 1
        return DualConeRows(F_c, F_d, np.zeros((rows, 0)))
    # proportional_tc lift: variables (y_1..y_n, tau)
    eye = np.eye(n)
    zn = np.zeros((n, n))
    col0 = np.zeros((n, 1))
    blocks = [
        # d - y <= 0
        (zn, eye, np.hstack([-eye, col0])),
        # R*y - c <= 0
        (-eye, zn, np.hstack([np.diag(cone.returns), col0])),
        # (1 - lm) tau - y <= 0
        (zn, zn, np.hstack([-eye, (1.0 - cone.lambda_minus)[:, None]])),
        # y - (1 + lp) tau <= 0
        (zn, zn, np.hstack([eye, -(1.0 + cone.lambda_plus)[:, None]])),
    ]
    F_c = np.vstack([blk[0] for blk in blocks])
    F_d = np.vstack([blk[1] for blk in blocks])
    F_l = np.vstack([blk[2] for blk in blocks])
    return DualConeRows(F_c, F_d, F_l)


def dual_violation(cone: ConeSpec, c, d, method: str = "auto") -> float:
    """Worst violation of ``d.b <= c.a`` over the normalized cone slice.

    Computes ``sup { d.b - c.a : (a, b) in cone, |a| + |b| = 1 }``; the
    pair ``(c, d)`` belongs to the dual cone iff the value is <= 0.

    method
        ``"lp"``      maximize over the slice with the internal simplex
                      (available for every family),
        ``"closed"``  evaluate the maximum over the cone's extreme rays
                      (frictionless and currency only),
        ``"auto"``    closed form where available, LP otherwise.
    """
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    if c.shape != (cone.n,) or d.shape != (cone.n,):
        raise ValueError(f"expected price vectors of length {cone.n}")
    if (c < 0).any() or (d < 0).any():
        raise ValueError("price vectors must be nonnegative")
    if method not in ("auto", "lp", "closed"):
        raise ValueError(f"unknown method: {method!r}")
    if method == "auto":
        method = "lp" if cone.family == PROPORTIONAL_TC else "closed"

    n = cone.n
    if method == "closed":
        if cone.family == FRICTIONLESS:
            # extreme rays: (e_i, R_i e_j) and the disposal rays (e_i, 0)
            best = float((-c).max())
            dm = float(d.max())
            vals = (cone.returns * dm - c) / (1.0 + cone.returns)
            return max(best, float(vals.max()))
        if cone.family == CURRENCY:
            # extreme rays: (e_j, mu[i, j] e_i) and (e_j, 0)
            best = float((-c).max())
            vals = (cone.mu * d[:, None] - c[None, :]) / (1.0 + cone.mu)
            return max(best, float(vals.max()))
        raise ValueError(
            "no closed-form dual for family %r; use method='lp'" % cone.family
        )

    # LP route: maximize d.b - c.a over the cone slice |a| + |b| = 1.
    if cone.family == FRICTIONLESS:
        nv = 2 * n  # a, b
        obj = np.concatenate([-c, d])
        A_ub = np.concatenate([-cone.returns, np.ones(n)])[None, :]
        b_ub = np.zeros(1)
        A_eq = np.ones((1, nv))
        b_eq = np.ones(1)
    elif cone.family == PROPORTIONAL_TC:
        nv = 4 * n  # a, b, buys, sells
        obj = np.concatenate([-c, d, np.zeros(2 * n)])
        eye = np.eye(n)
        # b - R*a - buys + sells = 0
        A_eq = np.hstack([-np.diag(cone.returns), eye, -eye, eye])
        b_eq = np.zeros(n)
        A_eq = np.vstack([A_eq,
                          np.concatenate([np.ones(2 * n), np.zeros(2 * n)])])
        b_eq = np.append(b_eq, 1.0)
        A_ub = np.concatenate([np.zeros(2 * n), 1.0 + cone.lambda_plus,
                               -(1.0 - cone.lambda_minus)])[None, :]
        b_ub = np.zeros(1)
    else:  # currency
        nv = 2 * n + n * n  # a, b, exchange matrix d (row-major)
        obj = np.concatenate([-c, d, np.zeros(n * n)])
        rows = []
        for i in range(n):
            row = np.zeros(nv)
            row[i] = -1.0
            row[2 * n + np.arange(n) * n + i] = 1.0
            rows.append(row)  # sum_j x[j, i] <= a_i
        for i in range(n):
            row = np.zeros(nv)
            row[n + i] = 1.0
            row[2 * n + i * n: 2 * n + (i + 1) * n] = -cone.mu[i]
            rows.append(row)  # b_i <= sum_j mu[i, j] x[i, j]
        A_ub = np.array(rows)
        b_ub = np.zeros(2 * n)
        A_eq = np.concatenate([np.ones(2 * n), np.zeros(n * n)])[None, :]
        b_eq = np.ones(1)
    res = lp_solve(obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                   maximize=True)
    return float(res.objective)


def dual_contains(cone: ConeSpec, c, d, tol: float = 1e-9,
                  method: str = "auto") -> bool:
    """True when the price pair ``(c, d)`` lies in the dual cone."""
    return dual_violation(cone, c, d, method=method) <= tol


def liquidation_value(cone: ConeSpec, b) -> float:
    """Cash obtained by selling the portfolio ``b`` at the cone's rates.

    ``sum (1 - lambda_minus) * b`` under proportional transaction costs,
    plain total ``sum(b)`` otherwise.  Satisfies
    ``l * |b| <= value <= |b|`` with ``l = min(1 - lambda_minus)``.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (cone.n,):
        raise ValueError(f"expected a vector of length {cone.n}")
    if (b < 0).any():
        raise ValueError("portfolio must be nonnegative")
    if cone.family == PROPORTIONAL_TC:
        return float((1.0 - cone.lambda_minus) @ b)
    return float(b.sum())


def wealth_weights(cone: ConeSpec, objective: str = "wealth") -> np.ndarray:
    """Linear weights w with ``w.b`` the objective value of a portfolio."""
    if objective == "wealth":
        return np.ones(cone.n)
    if objective == "liquidation":
        if cone.family == PROPORTIONAL_TC:
            return 1.0 - cone.lambda_minus
        return np.ones(cone.n)
    raise ValueError(f"unknown objective: {objective!r}")


def sample_member(cone: ConeSpec, rng: np.random.Generator,
                  scale: float = 1.0):
    """Draw a random member ``(a, b)``: random positive holdings, a random
    target direction scaled to the boundary, then pulled inside."""
    a = rng.exponential(scale=scale, size=cone.n) + 1e-9
    w = rng.dirichlet(np.ones(cone.n))
    t = boundary_scale(cone, a, w)
    return a, float(rng.uniform(0.0, 1.0)) * t * w


# ---------------------------------------------------------------------------
# Cone tables: transition-keyed collections with wildcard resolution.


class ConeTable:
    """Cones keyed by Markov transitions ``u -> v``.

    Keys are ``"u->v"`` strings (or ``(u, v)`` tuples); the wildcards
    ``"*->v"`` and ``"*->*"`` are allowed, and the most specific key wins
    at resolution time.  All cones must share the same dimension.
    """

    def __init__(self, mapping):
        entries = {}
        for key, cone in mapping.items():
            entries[self._normalize(key)] = cone
        if not entries:
            raise ValueError("cone table is empty")
        dims = {cone.n for cone in entries.values()}
        if len(dims) != 1:
            raise ValueError(f"cones disagree on dimension: {sorted(dims)}")
        self._entries = entries
        self.n = dims.pop()

    @staticmethod
    def _normalize(key):
        if isinstance(key, str):
            parts = key.split("->")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"bad cone key {key!r}; expected 'u->v'")
            key = (parts[0], parts[1])
        u, v = key
        return (str(u), str(v))

    def resolve(self, u: str, v: str) -> ConeSpec:
        """Cone for transition ``u -> v`` (exact, then ``*->v``, then
        ``*->*``)."""
        for key in ((u, v), ("*", v), ("*", "*")):
            if key in self._entries:
                return self._entries[key]
        raise KeyError(f"no cone for transition {u!r} -> {v!r}")

    def items(self):
        return self._entries.items()

    def values(self):
        return self._entries.values()

    def __len__(self):
        return len(self._entries)

    def to_dict(self) -> dict:
        return {f"{u}->{v}": cone.to_dict()
                for (u, v), cone in sorted(self._entries.items())}

    @classmethod
    def from_dict(cls, d: dict) -> "ConeTable":
        return cls({k: ConeSpec.from_dict(v) for k, v in d.items()})


def _as_cone_items(cone_table):
    if isinstance(cone_table, ConeTable):
        return list(cone_table.items())
    if isinstance(cone_table, dict):
        return [(ConeTable._normalize(k), v) for k, v in cone_table.items()]
    raise TypeError("cone_table must be a ConeTable or a dict")


# ---------------------------------------------------------------------------
# Standing-assumption validation.


def _uniform_bound(cone: ConeSpec) -> float:
    """Closed-form uniform bound M with |b| <= M |a| on the cone."""
    if cone.family in (FRICTIONLESS, PROPORTIONAL_TC):
        return float(cone.returns.max())
    return float(cone.n * cone.mu.max())


def _unit_growth(cone: ConeSpec, i: int, iters: int = 60) -> float:
    """Largest gamma with (e_i, gamma * ones) in the cone."""
    e = np.zeros(cone.n)
    e[i] = 1.0
    return boundary_scale(cone, e, np.ones(cone.n), iters=iters)


@dataclass
class ValidationReport:
    """Outcome of the standing-assumption checks on a cone table.

    g1_ok   every unit portfolio admits a successor (the pair (e_i, 0) is
            a member, so transitions never dead-end)
    g2_ok   wealth is uniformly bounded step-to-step: |b| <= M |a|
    g3_ok   some strictly positive bundle is reachable from every unit
            portfolio (implied by g5)
    g4_ok   free disposal: raising holdings or lowering targets preserves
            membership
    g5_ok   every unit portfolio can be rebalanced into a positive
            multiple of the all-ones bundle (gamma > 0)
    M_bound smallest verified uniform bound M (closed form per family)
    gamma   worst-case all-ones growth factor across table entries
    """

    g1_ok: bool
    g2_ok: bool
    g3_ok: bool
    g4_ok: bool
    g5_ok: bool
    M_bound: float
    gamma: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.g1_ok and self.g2_ok and self.g3_ok and self.g4_ok
                and self.g5_ok)

    def to_dict(self) -> dict:
        return {
            "g1_ok": self.g1_ok,
            "g2_ok": self.g2_ok,
            "g3_ok": self.g3_ok,
            "g4_ok": self.g4_ok,
            "g5_ok": self.g5_ok,
            "M_bound": self.M_bound,
            "gamma": self.gamma,
            "ok": self.ok,
            "violations": self.violations,
        }


def validate_assumptions(cone_table, samples: int = 200, seed: int = 0,
                         tol: float = 1e-9) -> ValidationReport:
    """Check the standing assumptions on every cone in the table.

    Closed-form checks where available (uniform bound, unit growth by
    bisection), randomized spot checks elsewhere (free disposal and the
    bound verified on ``samples`` random members per cone).  Returns a
    report; callers decide whether a failed report is fatal.
    """
    items = _as_cone_items(cone_table)
    rng = np.random.default_rng(seed)
    violations = []
    g1_ok = g2_ok = g4_ok = g5_ok = True
    M_bound = 0.0
    gamma = np.inf

    for key, cone in items:
        label = "->".join(key) if isinstance(key, tuple) else str(key)
        zero = np.zeros(cone.n)
        for i in range(cone.n):
            e = np.zeros(cone.n)
            e[i] = 1.0
            if not contains(cone, e, zero, tol):
                g1_ok = False
                violations.append({"condition": "g1", "cone": label,
                                   "witness": {"unit": i}})
        M = _uniform_bound(cone)
        M_bound = max(M_bound, M)
        growths = [_unit_growth(cone, i) for i in range(cone.n)]
        g = min(growths)
        if g <= 1e-12:
            g5_ok = False
            violations.append({
                "condition": "g5", "cone": label,
                "witness": {"unit": int(np.argmin(growths)), "gamma": g},
            })
        gamma = min(gamma, g)
        for _ in range(samples):
            a, b = sample_member(cone, rng)
            if b.sum() > M * a.sum() * (1.0 + 1e-9) + tol:
                g2_ok = False
                violations.append({
                    "condition": "g2", "cone": label,
                    "witness": {"a": a.tolist(), "b": b.tolist(), "M": M},
                })
                break
        for _ in range(samples):
            a, b = sample_member(cone, rng)
            a2 = a + rng.exponential(size=cone.n)
            b2 = rng.uniform(0.0, 1.0, size=cone.n) * b
            if not contains(cone, a2, b2, max(tol, 1e-9)):
                g4_ok = False
                violations.append({
                    "condition": "g4", "cone": label,
                    "witness": {"a": a2.tolist(), "b": b2.tolist()},
                })
                break

    g3_ok = g5_ok  # a positive reachable bundle is exactly what g5 provides
    if not np.isfinite(gamma):
        gamma = 0.0
    return ValidationReport(g1_ok, g2_ok, g3_ok, g4_ok, g5_ok,
                            float(M_bound), float(gamma), violations)
