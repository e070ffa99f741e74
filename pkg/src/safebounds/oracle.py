"""
Reference solution of the 1-D safety recursion by trapezoid quadrature.

On a mesh ``y_0 < ... < y_{M-1}`` of the safe interval the unsafety value
satisfies

    V_H(x) = 0,
    V_k(x) = P(x' unsafe | x, a) + integral_safe V_{k+1}(y) N(y | mu(x, a), sigma) dy,

with the escape probability taken from exact normal CDFs, so no Gaussian
tail is ever truncated. Only the integral over the safe set is discretised.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import UnsupportedDimensionError
from .kernel import gaussian_mass


@dataclass(eq=False)
class MeshFunction:
    mesh: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.mesh, self.values)


@dataclass(eq=False)
class OracleSolution:
    """Unsafety values ``values[k]`` on ``mesh`` for k = 0..H.

    ``quadrature_error`` is the accumulated leading-order trapezoid error
    estimate for the whole horizon; ``policy`` (optimal mode only) is the
    minimising system action per step and mesh point.
    """

    mesh: np.ndarray
    values: np.ndarray
    quadrature_error: float
    policy: np.ndarray = None

    @property
    def horizon(self):
        return self.values.shape[0] - 1

    @property
    def steps(self):
        """MeshFunctions of the unsafety value, ordered k = H down to 0."""
        return [MeshFunction(self.mesh, self.values[k]) for k in range(self.horizon, -1, -1)]

    def unsafety(self, x, k=0):
        return np.interp(x, self.mesh, self.values[k])

    def safety(self, x, k=0):
        """P_s from ``x`` with ``H - k`` steps to go (linear interpolation on the mesh)."""
        return 1.0 - self.unsafety(x, k)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "x", "P_s"])
            for k in range(self.horizon + 1):
                for x, v in zip(self.mesh, self.values[k]):
                    w.writerow([k, repr(float(x)), repr(float(1.0 - v))])


def quadrature_error_bound(a, sigma, spacing, H):
    """Leading Euler-Maclaurin error of ``H`` trapezoid backups.

    Per step the trapezoid error is about ``h^2 / 12 |f'(b) - f'(a)|`` for
    ``f(y) = V(y) N(y | mu, sigma)``. With ``|V'| <= |a| sqrt(2/pi) / sigma``
    (the mean moves at rate ``a``, V is an expectation of a [0, 1] function),
    ``N <= 1 / (sigma sqrt(2 pi))`` and ``|N'| <= 1 / (sigma^2 sqrt(2 pi e))``,
    and errors add at most once per step since the backup is nonexpansive.
    """
    dv = abs(a) * math.sqrt(2.0 / math.pi) / sigma
    n_max = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    dn_max = 1.0 / (sigma**2 * math.sqrt(2.0 * math.pi * math.e))
    return H * spacing**2 / 6.0 * (dv * n_max + dn_max)


def exact_dp(system, safe, H, mesh_size=4001, mode="optimal"):
    """Solve the 1-D safety DP on a uniform mesh of ``safe``.

    ``mode`` is ``"optimal"`` (minimise unsafety over the action list at
    every mesh point) or an integer system action index.
    """
    if system.dim != 1:
        raise UnsupportedDimensionError(f"the quadrature oracle is 1-D only, got dimension {system.dim}")
    if mesh_size < 100:
        raise ValueError("mesh_size must be at least 100")
    if H < 0:
        raise ValueError("horizon must be nonnegative")
    lo, hi = float(safe.lower[0]), float(safe.upper[0])
    mesh = np.linspace(lo, hi, mesh_size)
    spacing = (hi - lo) / (mesh_size - 1)
    weights = np.full(mesh_size, spacing)
    weights[0] = weights[-1] = 0.5 * spacing

    a = float(system.A[0, 0])
    sigma = float(system.sigma[0])
    actions = range(system.n_actions) if mode == "optimal" else [int(mode)]
    means = [a * mesh + system.offset(u)[0] for u in actions]
    escape = [1.0 - gaussian_mass(lo, hi, mu, sigma) for mu in means]

    values = np.empty((H + 1, mesh_size))
    values[H] = 0.0
    policy = np.zeros((H, mesh_size), dtype=np.int64) if mode == "optimal" else None
    for k in range(H - 1, -1, -1):
        cand = np.empty((len(means), mesh_size))
        for r, (mu, esc) in enumerate(zip(means, escape)):
            cand[r] = esc
            if np.any(values[k + 1]):
                cand[r] += _accel.gauss_quadrature(mesh, weights, values[k + 1], mu, sigma)
        best = np.argmin(cand, axis=0)
        values[k] = np.clip(cand[best, np.arange(mesh_size)], 0.0, 1.0)
        if policy is not None:
            policy[k] = np.asarray(actions)[best]

    err = quadrature_error_bound(a, sigma, spacing, H)
    return OracleSolution(mesh, values, err, policy)
