"""
Robust backward dynamic programming over interval abstractions.

Values are *unsafety* probabilities: ``pessimistic[k, q]`` upper-bounds and
``optimistic[k, q]`` lower-bounds the probability of leaving the safe set
within the remaining ``H - k`` steps from state ``q``. Safety bounds are
their complements.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import InfeasibleError

FEAS_TOL = 1e-9


@dataclass(eq=False)
class ValueBounds:
    """Per-step unsafety envelopes, both of shape (H + 1, n_states)."""

    horizon: int
    pessimistic: np.ndarray
    optimistic: np.ndarray

    @property
    def n_states(self):
        return self.pessimistic.shape[1]

    def safety_lower(self, k=0):
        """Lower bound on P_s per safe state with ``H - k`` steps to go."""
        return 1.0 - self.pessimistic[k, :-1]

    def safety_upper(self, k=0):
        return 1.0 - self.optimistic[k, :-1]


@dataclass(eq=False)
class SynthesizedPolicy:
    """Deterministic Markov policy: system action per (time step, safe state)."""

    action_index: np.ndarray

    @property
    def horizon(self):
        return self.action_index.shape[0]

    def at(self, k, i):
        return int(self.action_index[k, i])


def _check_polytope(lo, hi, tol=FEAS_TOL):
    s_lo, s_hi = float(np.sum(lo)), float(np.sum(hi))
    if np.any(lo > hi):
        raise InfeasibleError("lower bound exceeds upper bound")
    if s_lo > 1 + tol or s_hi < 1 - tol:
        raise InfeasibleError(f"empty polytope: sum(lo) = {s_lo:.17g}, sum(hi) = {s_hi:.17g}")


def _visit_order(values, maximize):
    # stable sort keeps ascending state index among equal values
    key = -values if maximize else values
    return np.argsort(key, kind="stable")


def _ordered_fill(values, lo, hi, maximize):
    values = np.asarray(values, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    _check_polytope(lo, hi)
    t = _accel.fill_witness(_visit_order(values, maximize), lo[None, :], hi[None, :])[0]
    return float(t @ values), t


def omax(values, lo, hi):
    """Maximise ``values @ t`` over ``{lo <= t <= hi, sum(t) = 1}``.

    Starts from ``lo`` and spends the remaining mass on the highest-valued
    entries first. Returns ``(value, t)``.
    """
    return _ordered_fill(values, lo, hi, maximize=True)


def omin(values, lo, hi):
    """Minimising counterpart of :func:`omax`."""
    return _ordered_fill(values, lo, hi, maximize=False)


def backup(values, lo, hi, maximize):
    """One robust backup of every row of ``(lo, hi)`` against ``values``."""
    return _accel.fill_values(_visit_order(values, maximize), values, lo, hi)


def _terminal(n_states):
    v = np.zeros(n_states)
    v[-1] = 1.0
    return v


def _run_fixed(imc, H, maximize):
    n = imc.n_states
    out = np.empty((H + 1, n))
    out[H] = _terminal(n)
    for k in range(H - 1, -1, -1):
        lo, hi = imc.rows(imc.step_actions(k))
        v = backup(out[k + 1], lo, hi, maximize)
        v[-1] = 1.0
        out[k] = np.clip(v, 0.0, 1.0)
    return out


def vi_fixed_policy(imc, H):
    """Two-sided unsafety bounds of an interval Markov chain over ``H`` steps."""
    if H < 0:
        raise ValueError("horizon must be nonnegative")
    if imc.policy is not None and imc.policy.shape[0] < H:
        raise ValueError(f"policy covers {imc.policy.shape[0]} steps, horizon is {H}")
    return ValueBounds(H, _run_fixed(imc, H, True), _run_fixed(imc, H, False))


def vi_synthesize(imdp, H):
    """Min-max value iteration: choose per step and state the action with least worst-case unsafety.

    Returns ``(policy, bounds)``. The pessimistic values come from the
    synthesis itself; the optimistic ones from re-evaluating the synthesized
    policy on the same abstraction. Ties go to the lowest action index.
    """
    if H < 0:
        raise ValueError("horizon must be nonnegative")
    n, n_p, m = imdp.n_states, imdp.n_safe, imdp.n_actions
    pess = np.empty((H + 1, n))
    pess[H] = _terminal(n)
    selector = np.zeros((H, n_p), dtype=np.int64)
    for k in range(H - 1, -1, -1):
        order = _visit_order(pess[k + 1], True)
        q = np.empty((m, n_p))
        for a in range(m):
            q[a] = _accel.fill_values(order, pess[k + 1], imdp.lo[a, :n_p], imdp.hi[a, :n_p])
        selector[k] = np.argmin(q, axis=0)
        pess[k, :n_p] = np.clip(q[selector[k], np.arange(n_p)], 0.0, 1.0)
        pess[k, n_p] = 1.0

    saved = imdp.policy
    imdp.policy = selector
    try:
        opt = _run_fixed(imdp, H, False)
    finally:
        imdp.policy = saved
    actions = np.asarray(imdp.action_map, dtype=np.int64)[selector]
    return SynthesizedPolicy(actions), ValueBounds(H, pess, opt)


def vi_mc(mc, H, policy=None):
    """Nominal backward DP on a point abstraction.

    Uses ``policy`` (abstraction action per step and safe state) or the
    chain's own selector when given; otherwise minimises over actions.
    Returns unsafety values of shape (H + 1, n_states).
    """
    if policy is None:
        policy = mc.policy
    n = mc.n_states
    n_p = n - 1
    idx = np.arange(n_p)
    out = np.empty((H + 1, n))
    out[H] = _terminal(n)
    for k in range(H - 1, -1, -1):
        q = mc.probs[:, :n_p] @ out[k + 1]
        if policy is not None:
            v = q[np.asarray(policy)[k], idx]
        else:
            v = q.min(axis=0)
        out[k, :n_p] = np.clip(v, 0.0, 1.0)
        out[k, n_p] = 1.0
    return out


def safety_over_initial(bounds, grid, X0):
    """Bounds ``(P_lo, P_hi)`` on the worst-case safety over the initial set.

    Both take the worst cell meeting ``X0``: the pessimistic envelope gives
    the certified lower bound, the optimistic one an upper bound.
    """
    cells = grid.cells_intersecting(X0)
    p_lo = 1.0 - float(np.max(bounds.pessimistic[0, cells]))
    p_hi = 1.0 - float(np.max(bounds.optimistic[0, cells]))
    return p_lo, p_hi
