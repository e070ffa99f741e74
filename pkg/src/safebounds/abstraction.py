"""
Finite abstractions of an :class:`AffineGaussianSystem` over a uniform grid.

State ``i < n_p`` stands for grid cell ``i``; state ``n_p`` is the absorbing
unsafe state that lumps everything outside the safe set. Transition tables
are dense arrays indexed ``[action, source, target]``.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AbstractionError
from .kernel import ProbInterval, axis_mass_bounds, gaussian_mass, mean_image_bounds

DEFAULT_PRUNE = 1e-12
ROW_SUM_TOL = 1e-9


def _outer_rows(parts):
    """Row-wise tensor product of per-axis tables, flattened row-major."""
    out = parts[0]
    for p in parts[1:]:
        out = (out[:, :, None] * p[:, None, :]).reshape(out.shape[0], -1)
    return out


def _absorbing(table, n_p):
    table[..., n_p, :] = 0.0
    table[..., n_p, n_p] = 1.0


@dataclass(eq=False)
class IntervalAbstraction:
    """IMC/IMDP with per-edge probability intervals ``[lo, hi]``.

    ``action_map[a]`` is the system action behind abstraction action ``a``.
    ``policy``, when set, has shape (H, n_p) and selects an abstraction action
    per time step and safe state; a one-action abstraction needs no policy.
    Entries pruned at build time hold ``[0, prune_threshold]``.
    """

    lo: np.ndarray
    hi: np.ndarray
    prune_threshold: float = DEFAULT_PRUNE
    action_map: tuple = (0,)
    policy: np.ndarray = None
    grid: object = field(default=None, repr=False)

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.ndim == 2:
            self.lo = self.lo[None]
            self.hi = self.hi[None]
        if self.lo.shape != self.hi.shape or self.lo.shape[1] != self.lo.shape[2]:
            raise ValueError("lo and hi must both have shape (n_actions, n_states, n_states)")
        self.action_map = tuple(int(a) for a in self.action_map)
        if len(self.action_map) != self.lo.shape[0]:
            self.action_map = tuple(range(self.lo.shape[0]))
        if self.policy is not None:
            self.policy = np.asarray(self.policy, dtype=np.int64)

    @property
    def n_states(self):
        return self.lo.shape[1]

    @property
    def n_safe(self):
        return self.n_states - 1

    @property
    def unsafe_state(self):
        return self.n_states - 1

    @property
    def n_actions(self):
        return self.lo.shape[0]

    def interval(self, i, a, j):
        return ProbInterval(float(self.lo[a, i, j]), float(self.hi[a, i, j]))

    def rows(self, actions):
        """(lo, hi) of shape (n_states, n_states) with safe row i taken under ``actions[i]``."""
        actions = np.asarray(actions, dtype=np.int64)
        idx = np.arange(self.n_safe)
        lo = np.empty((self.n_states, self.n_states))
        hi = np.empty_like(lo)
        lo[: self.n_safe] = self.lo[actions, idx]
        hi[: self.n_safe] = self.hi[actions, idx]
        lo[-1] = self.lo[0, -1]
        hi[-1] = self.hi[0, -1]
        return lo, hi

    def step_actions(self, k):
        """Abstraction action per safe state at time step ``k``."""
        if self.policy is not None:
            return self.policy[k]
        if self.n_actions != 1:
            raise ValueError("a multi-action abstraction needs a policy selector")
        return np.zeros(self.n_safe, dtype=np.int64)

    def check(self, tol=ROW_SUM_TOL):
        """Raise :class:`AbstractionError` unless every row admits a distribution."""
        if np.any(self.lo < 0) or np.any(self.hi > 1) or np.any(self.lo > self.hi):
            raise AbstractionError("interval bounds must satisfy 0 <= lo <= hi <= 1")
        s_lo = self.lo.sum(axis=2)
        s_hi = self.hi.sum(axis=2)
        bad = (s_lo > 1 + tol) | (s_hi < 1 - tol)
        if np.any(bad):
            a, i = np.argwhere(bad)[0]
            raise AbstractionError(
                f"row (state {i}, action {a}) is infeasible: "
                f"sum(lo) = {s_lo[a, i]:.17g}, sum(hi) = {s_hi[a, i]:.17g}"
            )
        u = self.unsafe_state
        expect = np.zeros(self.n_states)
        expect[u] = 1.0
        if not (np.array_equal(self.lo[:, u], np.broadcast_to(expect, self.lo[:, u].shape))
                and np.array_equal(self.hi[:, u], np.broadcast_to(expect, self.hi[:, u].shape))):
            raise AbstractionError("unsafe state must be absorbing under every action")
        return self

    def _is_pruned(self):
        return (self.lo == 0.0) & (self.hi <= self.prune_threshold)

    def to_dict(self):
        """Sparse JSON form; pruned entries are omitted."""
        keep = ~self._is_pruned()
        keep[:, :, self.unsafe_state] = True
        keep[:, self.unsafe_state, :] = False
        keep[:, self.unsafe_state, self.unsafe_state] = True
        triples = [
            [int(i), int(a), int(j), float(self.lo[a, i, j]), float(self.hi[a, i, j])]
            for a, i, j in zip(*np.nonzero(keep))
        ]
        triples.sort(key=lambda r: (r[0], r[1], r[2]))
        out = {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "prune_threshold": self.prune_threshold,
            "action_map": list(self.action_map),
            "triples": triples,
        }
        if self.policy is not None:
            out["policy"] = self.policy.tolist()
        return out

    @classmethod
    def from_dict(cls, d):
        n, m = int(d["n_states"]), int(d["n_actions"])
        tau = float(d.get("prune_threshold", DEFAULT_PRUNE))
        lo = np.zeros((m, n, n))
        hi = np.full((m, n, n), tau)
        hi[:, n - 1, :] = 0.0
        for i, a, j, l, h in d["triples"]:
            lo[a, i, j] = l
            hi[a, i, j] = h
        return cls(lo, hi, tau, d.get("action_map", range(m)), d.get("policy")).check()

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(eq=False)
class PointAbstraction:
    """Markov chain (or MDP) from one representative point per cell."""

    probs: np.ndarray
    action_map: tuple = (0,)
    policy: np.ndarray = None

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim == 2:
            self.probs = self.probs[None]
        self.action_map = tuple(int(a) for a in self.action_map)
        if len(self.action_map) != self.probs.shape[0]:
            self.action_map = tuple(range(self.probs.shape[0]))
        if self.policy is not None:
            self.policy = np.asarray(self.policy, dtype=np.int64)

    @property
    def n_states(self):
        return self.probs.shape[1]

    @property
    def n_actions(self):
        return self.probs.shape[0]


def _interval_table(system, grid, action_idx, prune_threshold):
    n_p = grid.n_cells
    lower, upper = grid.cell_bounds()
    m_lo, m_hi = mean_image_bounds(system, action_idx, lower, upper)
    lo_parts, hi_parts = [], []
    safe_lo = np.ones(n_p)
    safe_hi = np.ones(n_p)
    dom = grid.domain
    for d, e in enumerate(grid.edges):
        sd = system.sigma[d]
        lo_d, hi_d = axis_mass_bounds(
            m_lo[:, d, None], m_hi[:, d, None], e[None, :-1], e[None, 1:], sd
        )
        lo_parts.append(lo_d)
        hi_parts.append(hi_d)
        s_lo, s_hi = axis_mass_bounds(m_lo[:, d], m_hi[:, d], dom.lower[d], dom.upper[d], sd)
        safe_lo *= s_lo
        safe_hi *= s_hi

    lo = np.zeros((n_p + 1, n_p + 1))
    hi = np.zeros((n_p + 1, n_p + 1))
    lo[:n_p, :n_p] = _outer_rows(lo_parts)
    hi[:n_p, :n_p] = _outer_rows(hi_parts)
    lo[:n_p, n_p] = np.maximum(0.0, 1.0 - np.minimum(safe_hi, 1.0))
    hi[:n_p, n_p] = np.maximum(0.0, 1.0 - safe_lo)

    if prune_threshold > 0:
        block_lo = lo[:n_p, :n_p]
        block_hi = hi[:n_p, :n_p]
        pruned = block_hi < prune_threshold
        hi[:n_p, n_p] = np.minimum(1.0, hi[:n_p, n_p] + np.where(pruned, block_hi, 0.0).sum(axis=1))
        block_lo[pruned] = 0.0
        block_hi[pruned] = prune_threshold

    _absorbing(lo, n_p)
    _absorbing(hi, n_p)
    return lo, hi


def _check_dims(system, grid):
    if system.dim != grid.dim:
        raise ValueError(f"system dimension {system.dim} does not match grid dimension {grid.dim}")


def build_imdp(system, grid, prune_threshold=DEFAULT_PRUNE, actions=None):
    """Interval abstraction over every system action (or the listed ``actions``)."""
    _check_dims(system, grid)
    if actions is None:
        actions = range(system.n_actions)
    actions = [int(a) for a in actions]
    for a in actions:
        system.offset(a)
    tables = [_interval_table(system, grid, a, prune_threshold) for a in actions]
    lo = np.stack([t[0] for t in tables])
    hi = np.stack([t[1] for t in tables])
    return IntervalAbstraction(lo, hi, prune_threshold, tuple(actions), None, grid).check()


def _split_policy(policy, n_cells):
    """Return (system actions needed, selector remapped to their positions or None)."""
    if np.ndim(policy) == 0:
        return [int(policy)], None
    policy = np.asarray(policy, dtype=np.int64)
    if policy.ndim == 1:
        policy = policy[None, :]
    if policy.shape[1] != n_cells:
        raise ValueError(f"policy must have one action per cell ({n_cells}), got {policy.shape[1]}")
    used = sorted(int(a) for a in np.unique(policy))
    lookup = {a: k for k, a in enumerate(used)}
    selector = np.vectorize(lookup.__getitem__, otypes=[np.int64])(policy)
    return used, selector


def build_imc(system, grid, policy=0, prune_threshold=DEFAULT_PRUNE):
    """Interval Markov chain under a fixed action or a time-varying policy.

    ``policy`` is a single system action index, or an integer array of shape
    (H, n_cells) giving the action per time step and cell. The transition
    table is shared across time; only the per-step selector varies.
    """
    used, selector = _split_policy(policy, grid.n_cells)
    imc = build_imdp(system, grid, prune_threshold, actions=used)
    imc.policy = selector
    return imc


def build_mc(system, grid, policy=0):
    """Representative-point chain: each cell moves like its center."""
    _check_dims(system, grid)
    used, selector = _split_policy(policy, grid.n_cells)
    n_p = grid.n_cells
    centers = grid.centers()
    dom = grid.domain
    tables = []
    for a in used:
        mu = centers @ system.A.T + system.offset(a)
        parts = []
        for d, e in enumerate(grid.edges):
            parts.append(gaussian_mass(e[None, :-1], e[None, 1:], mu[:, d, None], system.sigma[d]))
        p = np.zeros((n_p + 1, n_p + 1))
        p[:n_p, :n_p] = _outer_rows(parts)
        # residual of the row goes to the unsafe state
        p[:n_p, n_p] = np.maximum(0.0, 1.0 - p[:n_p, :n_p].sum(axis=1))
        _absorbing(p, n_p)
        tables.append(p)
    return PointAbstraction(np.stack(tables), tuple(used), selector)


def kernel_lipschitz_bound(system):
    """Infinity-norm Lipschitz constant of x -> T(box | x, a), uniform over boxes and actions.

    Each axis mass has derivative at most 1/(sigma_d sqrt(2 pi)) in its mean;
    the product rule sums those, and the mean moves at most ||A||_inf per unit
    of ||x||_inf.
    """
    row_norm = float(np.max(np.abs(system.A).sum(axis=1)))
    return row_norm * float(np.sum(1.0 / (system.sigma * math.sqrt(2.0 * math.pi))))


def suggested_partition(L, H, epsilon, diameter_l, n):
    """Cell count ``ceil((l H L / epsilon)^n) + 1`` guaranteeing abstraction error below epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if L < 0 or H < 0 or diameter_l < 0 or n < 1:
        raise ValueError("L, H and diameter_l must be nonnegative and n >= 1")
    return int(math.ceil((diameter_l * H * L / epsilon) ** n)) + 1
