"""
Stochastic kernel of an affine system with additive diagonal Gaussian noise,
and sound per-cell bounds on its transition probabilities.

The one-step successor of ``x`` under action ``u`` is

    x' = A x + B u + c + v,    v ~ N(0, diag(sigma**2)),

so the probability of landing in a box factors over axes into differences
of standard normal CDFs. All CDF evaluations go through
:func:`scipy.special.ndtr` (erfc based, absolute error well below 1e-14).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .geometry import HyperRect


@dataclass(frozen=True, eq=False)
class AffineGaussianSystem:
    """Dynamics ``x' = A x + Bmat u + c + v`` with a finite action list."""

    A: np.ndarray
    Bmat: np.ndarray = None
    c: np.ndarray = None
    sigma: np.ndarray = None
    actions: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        Bmat = np.asarray([] if self.Bmat is None else self.Bmat, dtype=float)
        if Bmat.size == 0:
            Bmat = np.zeros((n, 0))
        Bmat = Bmat.reshape(n, -1)
        c = np.zeros(n) if self.c is None else np.asarray(self.c, dtype=float).reshape(n)
        if self.sigma is None:
            raise ValueError("sigma is required")
        sigma = np.asarray(self.sigma, dtype=float).reshape(n)
        if not np.all(sigma > 0):
            raise ValueError("sigma must be strictly positive")
        m = Bmat.shape[1]
        raw = [[0.0] * m] if self.actions is None else self.actions
        if len(raw) == 0:
            raise ValueError("actions must be non-empty")
        if m == 0:
            actions = np.zeros((len(raw), 0))
        else:
            actions = np.asarray(raw, dtype=float).reshape(-1, m)
        for name, arr in (("A", A), ("Bmat", Bmat), ("c", c), ("sigma", sigma), ("actions", actions)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self):
        return self.A.shape[0]

    @property
    def n_actions(self):
        return self.actions.shape[0]

    def offset(self, action_idx):
        """Constant part ``B u_a + c`` of the mean map."""
        if not 0 <= action_idx < self.n_actions:
            raise IndexError(f"action index {action_idx} out of range [0, {self.n_actions})")
        return self.Bmat @ self.actions[action_idx] + self.c

    def mean(self, action_idx, x):
        return self.A @ np.asarray(x, dtype=float) + self.offset(action_idx)

    @classmethod
    def from_config(cls, dynamics, actions=None):
        n = len(dynamics["A"])
        B = dynamics.get("B", [[0.0]] * n)
        c = dynamics.get("c", [0.0] * n)
        if actions is None:
            actions = [[0.0] * np.asarray(B).reshape(n, -1).shape[1]]
        return cls(dynamics["A"], B, c, dynamics["sigma"], actions)

    def to_config(self):
        return {
            "A": self.A.tolist(),
            "B": self.Bmat.tolist(),
            "c": self.c.tolist(),
            "sigma": self.sigma.tolist(),
        }


@dataclass(frozen=True)
class ProbInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError(f"invalid probability interval [{self.lo}, {self.hi}]")

    def contains(self, p, tol=0.0):
        return self.lo - tol <= p <= self.hi + tol


def gaussian_mass(lower, upper, mean, sigma):
    """P(lower <= N(mean, sigma^2) <= upper), elementwise and broadcasting.

    Evaluated on whichever tail avoids cancellation between two CDF values
    close to one.
    """
    a = (np.asarray(lower, dtype=float) - mean) / sigma
    b = (np.asarray(upper, dtype=float) - mean) / sigma
    right = a > 0
    with np.errstate(invalid="ignore"):
        out = np.where(right, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a))
    return np.clip(out, 0.0, 1.0)


def mean_image_bounds(system, action_idx, lower, upper):
    """Vectorised :func:`mean_image` for boxes stacked along axis 0."""
    lower = np.atleast_2d(lower)
    upper = np.atleast_2d(upper)
    off = system.offset(action_idx)
    # A[d, k] * x_k over x_k in [lo_k, hi_k] is extremal at an endpoint
    p = system.A[None, :, :] * lower[:, None, :]
    q = system.A[None, :, :] * upper[:, None, :]
    m_lo = np.minimum(p, q).sum(axis=2) + off
    m_hi = np.maximum(p, q).sum(axis=2) + off
    return m_lo, m_hi


def mean_image(system, action_idx, source):
    """Exact box image of ``source`` under the mean map ``A x + B u + c``."""
    m_lo, m_hi = mean_image_bounds(system, action_idx, source.lower, source.upper)
    return HyperRect(m_lo[0], m_hi[0])


def transition_prob(system, action_idx, x, target):
    """T(target | x, u_a) for a box ``target``."""
    mu = system.mean(action_idx, x)
    return float(np.prod(gaussian_mass(target.lower, target.upper, mu, system.sigma)))


def axis_mass_bounds(m_lo, m_hi, t_lo, t_hi, sigma):
    """Min and max over means in ``[m_lo, m_hi]`` of the 1-D mass of ``[t_lo, t_hi]``.

    The mass is unimodal in the mean and peaks at the target midpoint, so the
    maximum sits at the midpoint clamped into the mean range and the minimum
    at the range endpoint farther from the midpoint. Arguments broadcast.
    """
    mid = 0.5 * (np.asarray(t_lo, dtype=float) + np.asarray(t_hi, dtype=float))
    m_best = np.clip(mid, m_lo, m_hi)
    m_worst = np.where(np.abs(m_lo - mid) >= np.abs(m_hi - mid), m_lo, m_hi)
    hi = gaussian_mass(t_lo, t_hi, m_best, sigma)
    lo = gaussian_mass(t_lo, t_hi, m_worst, sigma)
    return np.minimum(lo, hi), hi


def transition_bounds(system, action_idx, source, target):
    """Interval containing T(target | x, u_a) for every x in ``source``.

    Per-axis extremes are multiplied together. This is tight when ``A`` is
    diagonal; otherwise the axes share ``x`` and the product is a sound
    relaxation.
    """
    m = mean_image(system, action_idx, source)
    lo, hi = axis_mass_bounds(m.lower, m.upper, target.lower, target.upper, system.sigma)
    return ProbInterval(float(np.prod(lo)), float(min(np.prod(hi), 1.0)))


def unsafe_bounds(system, action_idx, source, safe_set):
    """Interval for the probability of leaving ``safe_set`` in one step from ``source``."""
    s = transition_bounds(system, action_idx, source, safe_set)
    return ProbInterval(max(0.0, 1.0 - s.hi), max(0.0, 1.0 - s.lo))
