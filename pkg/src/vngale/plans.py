"""Portfolio plans on scenario trees and their dual price processes.

A contingent plan assigns a nonnegative portfolio vector to every tree
node; it is self-financing when each parent-to-child pair of portfolios
lies in the solvency cone of that transition.  A dual plan assigns price
vectors to nodes of depth >= 1 plus a terminal expectation layer standing
in for the prices one step past the horizon.  Balanced strategies give
one proportion vector and one growth factor per Markov state and expand
into plans whose portfolios scale geometrically along every path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import membership_residual
from .scenario import ScenarioTree

__all__ = [
    "ContingentPlan",
    "DualPlan",
    "BalancedStrategy",
    "is_self_financing",
    "expand_balanced",
    "expand_balanced_dual",
    "ratio_process",
]


def _plan_array(tree: ScenarioTree, data, n: int, start_depth: int = 0):
    """Normalize a node->vector map (or array) to an (n_nodes, n) array."""
    if isinstance(data, dict):
        arr = np.full((tree.n_nodes, n), np.nan)
        for v, vec in data.items():
            arr[int(v)] = np.asarray(vec, dtype=float)
    else:
        arr = np.array(data, dtype=float)
        if arr.shape != (tree.n_nodes, n):
            raise ValueError(
                f"expected array of shape ({tree.n_nodes}, {n})"
            )
    lo = tree.depth_start[start_depth]
    if np.isnan(arr[lo:]).any():
        missing = int(np.flatnonzero(np.isnan(arr[lo:]).any(axis=1))[0] + lo)
        raise ValueError(f"no vector given for node {missing}")
    if not np.isfinite(arr[lo:]).all():
        raise ValueError("plan entries must be finite")
    if (arr[lo:] < 0).any():
        raise ValueError("plan entries must be nonnegative")
    return arr


@dataclass(frozen=True)
class ContingentPlan:
    """Nonnegative portfolio vector at every node of a scenario tree.

    ``units`` records the value convention: ``"market"`` when coordinates
    are position values (frictionless and transaction-cost families) or
    ``"physical"`` for unit holdings (currency family).
    """

    tree: ScenarioTree
    x: np.ndarray
    units: str = "market"

    def __init__(self, tree: ScenarioTree, portfolio, n: int | None = None,
                 units: str = "market"):
        if units not in ("market", "physical"):
            raise ValueError(f"unknown value convention: {units!r}")
        if n is None:
            if isinstance(portfolio, dict):
                n = np.asarray(next(iter(portfolio.values()))).size
            else:
                n = np.asarray(portfolio).shape[1]
        arr = _plan_array(tree, portfolio, n)
        arr.flags.writeable = False
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "x", arr)
        object.__setattr__(self, "units", units)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def vec(self, v: int) -> np.ndarray:
        return self.x[v]

    def wealth(self, v: int) -> float:
        return float(self.x[v].sum())

    def to_dict(self) -> dict:
        return {
            "units": self.units,
            "portfolio": {str(v): self.x[v].tolist()
                          for v in range(self.tree.n_nodes)},
        }

    @classmethod
    def from_dict(cls, tree: ScenarioTree, d: dict) -> "ContingentPlan":
        port = {int(k): v for k, v in d["portfolio"].items()}
        return cls(tree, port, units=d.get("units", "market"))


@dataclass(frozen=True)
class DualPlan:
    """Price vectors on nodes of depth >= 1 plus a terminal layer.

    ``prices[v]`` is the price vector at node ``v`` (row 0, the root, is
    all zero and unused).  ``terminal[i]`` holds the conditional
    expectation of the one-step-ahead price at the i-th leaf, standing in
    for the virtual layer past the horizon.
    """

    tree: ScenarioTree
    prices: np.ndarray
    terminal: np.ndarray

    def __init__(self, tree: ScenarioTree, prices, terminal):
        if isinstance(prices, dict):
            n = np.asarray(next(iter(prices.values()))).size
            arr = np.full((tree.n_nodes, n), np.nan)
            arr[0] = 0.0
            for v, vec in prices.items():
                arr[int(v)] = np.asarray(vec, dtype=float)
            prices = arr
        else:
            prices = np.array(prices, dtype=float)
        if prices.ndim != 2 or prices.shape[0] != tree.n_nodes:
            raise ValueError("prices must cover every node")
        if np.isnan(prices[1:]).any() or not np.isfinite(prices[1:]).all():
            raise ValueError("prices must be finite on depths 1..T")
        if (prices[1:] < 0).any():
            raise ValueError("prices must be nonnegative")
        leaves = tree.leaves()
        if isinstance(terminal, dict):
            term = np.full((leaves.size, prices.shape[1]), np.nan)
            lo = int(leaves[0])
            for v, vec in terminal.items():
                term[int(v) - lo] = np.asarray(vec, dtype=float)
            terminal = term
        else:
            terminal = np.array(terminal, dtype=float)
        if terminal.shape != (leaves.size, prices.shape[1]):
            raise ValueError("terminal layer must cover every leaf")
        if np.isnan(terminal).any() or not np.isfinite(terminal).all():
            raise ValueError("terminal prices must be finite")
        if (terminal < 0).any():
            raise ValueError("terminal prices must be nonnegative")
        prices.flags.writeable = False
        terminal.flags.writeable = False
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "terminal", terminal)

    @property
    def n(self) -> int:
        return self.prices.shape[1]

    def vec(self, v: int) -> np.ndarray:
        if v == 0:
            raise ValueError("the root carries no price vector")
        return self.prices[v]

    def expected_next(self, v: int) -> np.ndarray:
        """E[p at the next step | node v].

        Exact child average below the horizon; at a leaf, the stored
        terminal expectation.
        """
        tree = self.tree
        if tree.depth[v] >= tree.horizon:
            return self.terminal[v - tree.depth_start[tree.horizon]]
        kids = tree.children(v)
        return self.tree.cond_prob[kids] @ self.prices[kids]

    def to_dict(self) -> dict:
        leaves = self.tree.leaves()
        return {
            "prices": {str(v): self.prices[v].tolist()
                       for v in range(1, self.tree.n_nodes)},
            "terminal": {str(int(v)): self.terminal[i].tolist()
                         for i, v in enumerate(leaves)},
        }

    @classmethod
    def from_dict(cls, tree: ScenarioTree, d: dict) -> "DualPlan":
        prices = {int(k): v for k, v in d["prices"].items()}
        term = {int(k): v for k, v in d["terminal"].items()}
        return cls(tree, prices, term)


@dataclass(frozen=True)
class BalancedStrategy:
    """Per-state proportions on the simplex and positive growth factors."""

    x: dict
    alpha: dict

    def __init__(self, x: dict, alpha: dict):
        if set(x) != set(alpha):
            raise ValueError("x and alpha must cover the same states")
        if not x:
            raise ValueError("strategy must cover at least one state")
        xs = {}
        for s, vec in x.items():
            vec = np.asarray(vec, dtype=float)
            if (vec < 0).any() or abs(vec.sum() - 1.0) > 1e-12:
                raise ValueError(
                    f"proportions for state {s!r} must lie on the simplex"
                )
            vec = vec.copy()
            vec.flags.writeable = False
            xs[str(s)] = vec
        al = {}
        for s, a in alpha.items():
            a = float(a)
            if not np.isfinite(a) or a <= 0:
                raise ValueError(f"growth factor for state {s!r} must be > 0")
            al[str(s)] = a
        dims = {v.size for v in xs.values()}
        if len(dims) != 1:
            raise ValueError("proportion vectors disagree on dimension")
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "alpha", al)

    @property
    def n(self) -> int:
        return next(iter(self.x.values())).size

    def log_growth_rate(self, pi: dict | np.ndarray, states=None) -> float:
        """Expected log growth sum_s pi(s) ln alpha(s)."""
        if isinstance(pi, dict):
            return float(sum(w * np.log(self.alpha[s])
                             for s, w in pi.items()))
        states = list(states)
        return float(sum(pi[i] * np.log(self.alpha[s])
                         for i, s in enumerate(states)))

    def to_dict(self) -> dict:
        return {
            "x": {s: v.tolist() for s, v in sorted(self.x.items())},
            "alpha": {s: a for s, a in sorted(self.alpha.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BalancedStrategy":
        return cls(d["x"], d["alpha"])


def is_self_financing(plan: ContingentPlan, cone_table,
                      tol: float = 1e-9):
    """Check the cone constraint on every tree edge.

    Returns ``(ok, violations)`` where violations is a list of
    ``(node_id, residual)`` for the edges whose (parent, node) portfolio
    pair falls outside its solvency cone by more than ``tol`` (relative
    residual).  Raises ``KeyError`` when a transition has no cone.
    """
    tree = plan.tree
    violations = []
    for v in range(1, tree.n_nodes):
        u_lab, v_lab = tree.transition_label(v)
        cone = cone_table.resolve(u_lab, v_lab)
        res = membership_residual(cone, plan.x[tree.parent[v]], plan.x[v])
        if res > tol:
            violations.append((int(v), float(res)))
    return (len(violations) == 0), violations


def _path_factors(strategy: BalancedStrategy, tree: ScenarioTree):
    """factor[v] = product of alpha over the states on the path to v
    (excluding the root's own state)."""
    factor = np.ones(tree.n_nodes)
    alpha_by_index = np.array([strategy.alpha[s] for s in tree.spec.states])
    for v in range(1, tree.n_nodes):
        factor[v] = factor[tree.parent[v]] * alpha_by_index[tree.state[v]]
    return factor


def _require_states(strategy: BalancedStrategy, tree: ScenarioTree):
    missing = [s for s in tree.spec.states if s not in strategy.x]
    if missing:
        raise KeyError(f"strategy missing states: {missing}")


def expand_balanced(strategy: BalancedStrategy,
                    tree: ScenarioTree) -> ContingentPlan:
    """Expand per-state proportions into a plan on the tree.

    The portfolio at a depth-t node with state path s_1 .. s_t is
    ``alpha(s_t) * ... * alpha(s_1) * x(s_t)``; the root holds
    ``x(root state)``, so the tree must have been built with a root
    state.
    """
    _require_states(strategy, tree)
    if tree.state[0] < 0:
        raise ValueError(
            "tree has no root state; build it with root_state=... to "
            "expand a balanced strategy"
        )
    factor = _path_factors(strategy, tree)
    x_by_index = np.stack([strategy.x[s] for s in tree.spec.states])
    arr = factor[:, None] * x_by_index[tree.state]
    return ContingentPlan(tree, arr)


def expand_balanced_dual(strategy: BalancedStrategy, p: dict,
                         tree: ScenarioTree) -> DualPlan:
    """Expand per-state prices into a dual plan.

    At a depth-t node the price is ``p(s_t)`` divided by the growth
    accumulated through the *parent*: one factor behind the portfolio
    expansion.  The terminal layer holds the exact conditional
    expectation of the virtual next-step prices,
    ``sum_w P(s_T, w) p(w) / factor(leaf)``.
    """
    _require_states(strategy, tree)
    missing = [s for s in tree.spec.states if s not in p]
    if missing:
        raise KeyError(f"prices missing states: {missing}")
    factor = _path_factors(strategy, tree)
    p_by_index = np.stack([np.asarray(p[s], dtype=float)
                           for s in tree.spec.states])
    prices = np.zeros((tree.n_nodes, p_by_index.shape[1]))
    for v in range(1, tree.n_nodes):
        prices[v] = p_by_index[tree.state[v]] / factor[tree.parent[v]]
    leaves = tree.leaves()
    term = np.zeros((leaves.size, p_by_index.shape[1]))
    P = tree.spec.P
    for i, v in enumerate(leaves):
        s = tree.state[v]
        term[i] = (P[s] @ p_by_index) / factor[v]
    return DualPlan(tree, prices, term)


def ratio_process(x: ContingentPlan, y: ContingentPlan) -> dict:
    """Node-wise wealth ratio |y| / |x| (the process certified against a
    supermartingale bound in the rapidity check)."""
    if x.tree is not y.tree:
        raise ValueError("plans live on different trees")
    wx = x.x.sum(axis=1)
    if (wx <= 0).any():
        v = int(np.flatnonzero(wx <= 0)[0])
        raise ValueError(f"zero wealth at node {v} in the reference plan")
    wy = y.x.sum(axis=1)
    r = wy / wx
    return {int(v): float(r[v]) for v in range(x.tree.n_nodes)}
