"""Finite-state Markov drivers and scenario trees.

A scenario tree enumerates every positive-probability state history up to
a horizon.  Node 0 is a root sitting before the first observation; its
children carry the initial states, and each deeper layer applies one
Markov transition.  Node ids are breadth-first, so every depth occupies a
contiguous id range and the children of each node are consecutive.

Monte Carlo sampling uses the Philox counter-based generator with the key
``(seed mod 2**64, path_index)``, so path ``i`` is a function of ``(seed,
i)`` alone: prefixes of a batch never change when more paths are
requested, and paths can be generated in parallel in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MarkovSpec",
    "ScenarioTree",
    "build_tree",
    "conditional_expectation",
    "sample_paths",
]

_DEFAULT_NODE_LIMIT = 10 ** 6


def _readonly(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MarkovSpec:
    """Finite-state Markov chain: labels, transition matrix, start law.

    ``P[i, j]`` is the probability of moving from state ``i`` to state
    ``j``; rows must sum to one within 1e-12.  ``pi0`` is the distribution
    of the first observed state.  ``stationary=True`` asserts the chain is
    started from an invariant law; construction then verifies that
    ``pi0 P = pi0`` to residual 1e-10.
    """

    states: tuple
    P: np.ndarray
    pi0: np.ndarray
    stationary: bool = False

    def __init__(self, states, P, pi0=None, stationary: bool = False):
        states = tuple(str(s) for s in states)
        if len(states) == 0:
            raise ValueError("at least one state required")
        if len(set(states)) != len(states):
            raise ValueError("state labels must be distinct")
        P = _readonly(P)
        k = len(states)
        if P.shape != (k, k):
            raise ValueError(f"transition matrix must be {k}x{k}")
        if (P < 0).any() or not np.isfinite(P).all():
            raise ValueError("transition probabilities must be >= 0")
        if np.abs(P.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("transition matrix rows must sum to 1")
        if pi0 is None:
            pi0 = np.full(k, 1.0 / k)
        pi0 = _readonly(pi0)
        if pi0.shape != (k,):
            raise ValueError(f"initial distribution must have length {k}")
        if (pi0 < 0).any() or abs(pi0.sum() - 1.0) > 1e-12:
            raise ValueError("initial distribution must be a probability "
                             "vector")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi0", pi0)
        object.__setattr__(self, "stationary", bool(stationary))
        if stationary:
            res = float(np.abs(pi0 @ P - pi0).max())
            if res > 1e-10:
                raise ValueError(
                    "stationary flag set but pi0 is not invariant "
                    f"(residual {res:.2e})"
                )

    @property
    def k(self) -> int:
        return len(self.states)

    def state_index(self, label) -> int:
        try:
            return self.states.index(str(label))
        except ValueError:
            raise KeyError(f"unknown state {label!r}") from None

    def stationary_distribution(self) -> np.ndarray:
        """Invariant law pi with pi P = pi, residual below 1e-10.

        Solved as a least-squares system with the normalization row; if
        that produces negative mass (possible for reducible chains), a
        Cesaro-averaged power iteration is used instead, which converges
        for every finite chain including periodic ones.
        """
        k = self.k
        A = np.vstack([self.P.T - np.eye(k), np.ones((1, k))])
        rhs = np.zeros(k + 1)
        rhs[-1] = 1.0
        pi = np.linalg.lstsq(A, rhs, rcond=None)[0]
        if (pi > -1e-12).all():
            pi = np.clip(pi, 0.0, None)
            pi /= pi.sum()
            if float(np.abs(pi @ self.P - pi).max()) <= 1e-10:
                return pi
        # Cesaro fallback
        x = np.full(k, 1.0 / k)
        acc = np.zeros(k)
        for i in range(1, 200001):
            x = x @ self.P
            acc += x
            if i % 100 == 0:
                cand = acc / i
                if float(np.abs(cand @ self.P - cand).max()) <= 1e-11:
                    return cand / cand.sum()
        cand = acc / 200000
        res = float(np.abs(cand @ self.P - cand).max())
        if res > 1e-10:
            raise RuntimeError(
                f"stationary distribution did not converge (residual {res:.2e})"
            )
        return cand / cand.sum()

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "transition": self.P.tolist(),
            "initial": self.pi0.tolist(),
            "stationary": self.stationary,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovSpec":
        return cls(d["states"], d["transition"], d.get("initial"),
                   d.get("stationary", False))


@dataclass(frozen=True)
class ScenarioTree:
    """All positive-probability state histories up to a horizon.

    Arrays are indexed by node id (breadth-first).  The root (id 0) sits
    at depth 0; its state is -1 unless the tree was built with a pinned
    ``root_state``.  Depth-t nodes for t >= 1 correspond to histories of
    length t.

    parent       parent id, -1 for the root
    depth        distance from the root
    state        state index into ``spec.states`` (-1 at the root)
    cond_prob    probability of this node given its parent
    abs_prob     product of conditional probabilities from the root
    first_child, n_children
                 children of v are ids first_child[v] .. +n_children[v]
    depth_start  depth d occupies ids depth_start[d] .. depth_start[d+1]
    """

    spec: MarkovSpec
    horizon: int
    parent: np.ndarray
    depth: np.ndarray
    state: np.ndarray
    cond_prob: np.ndarray
    abs_prob: np.ndarray
    first_child: np.ndarray
    n_children: np.ndarray
    depth_start: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.parent.size

    def nodes_at_depth(self, t: int) -> np.ndarray:
        if not 0 <= t <= self.horizon:
            raise ValueError(f"depth {t} outside [0, {self.horizon}]")
        return np.arange(self.depth_start[t], self.depth_start[t + 1])

    def children(self, v: int) -> np.ndarray:
        return np.arange(self.first_child[v],
                         self.first_child[v] + self.n_children[v])

    def leaves(self) -> np.ndarray:
        return self.nodes_at_depth(self.horizon)

    def state_label(self, v: int) -> str | None:
        s = self.state[v]
        return None if s < 0 else self.spec.states[s]

    def path_to(self, v: int) -> list:
        """Node ids from the root down to ``v`` (inclusive)."""
        out = [int(v)]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out[::-1]

    def transition_label(self, v: int) -> tuple:
        """(parent state label or '*', state label) for the step into v."""
        if v == 0:
            raise ValueError("root has no incoming transition")
        u = self.parent[v]
        pu = "*" if self.state[u] < 0 else self.spec.states[self.state[u]]
        return (pu, self.spec.states[self.state[v]])


def build_tree(spec: MarkovSpec, horizon: int,
               node_limit: int = _DEFAULT_NODE_LIMIT,
               root_state=None) -> ScenarioTree:
    """Enumerate positive-probability histories of length <= horizon.

    Zero-probability transitions are pruned, so the tree can stay small
    even for large state counts.  Raises when the node count passes
    ``node_limit``.

    ``root_state`` pins the chain to a known state at time 0: the root is
    labeled with it and the first observation is drawn from that state's
    transition row instead of ``pi0``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    k = spec.k
    support = [np.flatnonzero(spec.P[s] > 0.0) for s in range(k)]
    sup_n = np.array([s.size for s in support])

    root_idx = -1 if root_state is None else spec.state_index(root_state)
    first_law = spec.pi0 if root_state is None else spec.P[root_idx]

    parent = [np.array([-1])]
    state = [np.array([root_idx])]
    cond = [np.array([1.0])]
    absp = [np.array([1.0])]
    depth_start = [0, 1]
    total = 1

    # depth 1: initial distribution support
    init = np.flatnonzero(first_law > 0.0)
    parent.append(np.zeros(init.size, dtype=int))
    state.append(init)
    cond.append(first_law[init])
    absp.append(first_law[init])
    total += init.size
    depth_start.append(total)
    if total > node_limit:
        raise ValueError(f"node limit exceeded: {total} > {node_limit}")

    for _ in range(2, horizon + 1):
        ids = np.arange(depth_start[-2], depth_start[-1])
        sd = state[-1]
        counts = sup_n[sd]
        new_total = total + int(counts.sum())
        if new_total > node_limit:
            raise ValueError(
                f"node limit exceeded: {new_total} > {node_limit}"
            )
        par = np.repeat(ids, counts)
        st = (np.concatenate([support[s] for s in sd]) if sd.size
              else np.zeros(0, dtype=int))
        cp = spec.P[np.repeat(sd, counts), st]
        ap = np.repeat(absp[-1], counts) * cp
        parent.append(par)
        state.append(st)
        cond.append(cp)
        absp.append(ap)
        total = new_total
        depth_start.append(total)

    parent = np.concatenate(parent)
    state = np.concatenate(state)
    cond = np.concatenate(cond)
    absp = np.concatenate(absp)
    n = parent.size

    first_child = np.full(n, n, dtype=int)
    n_children = np.zeros(n, dtype=int)
    # children are consecutive in BFS order; first occurrence wins
    for v in range(n - 1, 0, -1):
        first_child[parent[v]] = v
    np.add.at(n_children, parent[1:], 1)

    for arr in (parent, state, cond, absp, first_child, n_children):
        arr.flags.writeable = False
    return ScenarioTree(spec=spec, horizon=horizon, parent=parent,
                        depth=_depths_from_starts(depth_start, n),
                        state=state, cond_prob=cond, abs_prob=absp,
                        first_child=first_child, n_children=n_children,
                        depth_start=_readonly(depth_start, dtype=int))


def _depths_from_starts(depth_start, n) -> np.ndarray:
    depth = np.zeros(n, dtype=int)
    for d in range(len(depth_start) - 1):
        depth[depth_start[d]: depth_start[d + 1]] = d
    depth.flags.writeable = False
    return depth


def conditional_expectation(tree: ScenarioTree, f: dict, t: int) -> dict:
    """One-step conditional expectation across depth t.

    ``f`` maps every depth-(t+1) node id to a vector (or scalar); returns
    the map sending each depth-t node to the probability-weighted sum of
    ``f`` over its children.  Exact arithmetic, no sampling.
    """
    if not 0 <= t < tree.horizon:
        raise ValueError(f"depth {t} has no children layer")
    out = {}
    for v in tree.nodes_at_depth(t):
        kids = tree.children(v)
        acc = None
        for c in kids:
            c = int(c)
            if c not in f:
                raise KeyError(f"f is missing child node {c}")
            term = tree.cond_prob[c] * np.asarray(f[c], dtype=float)
            acc = term if acc is None else acc + term
        out[int(v)] = acc
    return out


def sample_paths(spec: MarkovSpec, length: int, count: int,
                 seed: int) -> np.ndarray:
    """Sample ``count`` state-index paths of ``length`` steps.

    Returns an integer array of shape (count, length); row ``i`` is the
    path ``s_1 .. s_L`` drawn from the chain.  Each path uses its own
    Philox stream keyed by ``(seed mod 2**64, i)``, so row ``i`` never
    depends on ``count`` and batches extend earlier ones.
    """
    if length < 1 or count < 1:
        raise ValueError("length and count must be >= 1")
    k = spec.k
    cum0 = np.cumsum(spec.pi0)
    cumP = np.cumsum(spec.P, axis=1)
    out = np.empty((count, length), dtype=np.int64)
    base = np.uint64(seed & (2 ** 64 - 1))
    for i in range(count):
        gen = np.random.Generator(
            np.random.Philox(key=np.array([base, np.uint64(i)],
                                          dtype=np.uint64))
        )
        u = gen.random(length)
        s = int(np.searchsorted(cum0, u[0] * cum0[-1], side="right"))
        s = min(s, k - 1)
        out[i, 0] = s
        for t in range(1, length):
            row = cumP[s]
            s = int(np.searchsorted(row, u[t] * row[-1], side="right"))
            s = min(s, k - 1)
            out[i, t] = s
    return out
