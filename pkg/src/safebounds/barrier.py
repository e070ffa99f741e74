"""
Piecewise-constant stochastic barrier functions on a uniform grid.

A barrier holds one value per safe cell and a single value on the unsafe
set. The one-step expected barrier from cell ``i`` is over-approximated by a
worst-case distribution of the cell's interval row, which turns both
certification and synthesis into small linear problems.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .abstraction import DEFAULT_PRUNE, build_imc
from .errors import NonConvergenceError
from .lp import LinearProgram, solve
from .value_iteration import _visit_order, backup

CUT_TOL = 1e-9


@dataclass(eq=False)
class PiecewiseBarrier:
    values: np.ndarray
    unsafe_value: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.unsafe_value = float(self.unsafe_value)

    @classmethod
    def indicator(cls, n_cells):
        """Zero on the safe set, one on the unsafe set."""
        return cls(np.zeros(n_cells), 1.0)

    @property
    def n_cells(self):
        return self.values.size

    def as_vector(self):
        """Values over abstraction states, unsafe state last."""
        return np.append(self.values, self.unsafe_value)

    def satisfies_conditions(self):
        v = self.as_vector()
        return bool(np.all(np.isfinite(v)) and np.all(self.values >= 0.0) and self.unsafe_value >= 1.0)

    def to_list(self):
        return self.as_vector().tolist()

    @classmethod
    def from_list(cls, values):
        values = list(values)
        if len(values) < 2:
            raise ValueError("a barrier needs at least one cell value and the unsafe value")
        return cls(values[:-1], values[-1])


@dataclass(eq=False)
class BarrierCertificate:
    eta: float
    beta: float
    horizon: int
    lower_bound: float
    valid: bool
    barrier: PiecewiseBarrier = field(default=None, repr=False)
    synthesis_info: dict = field(default=None, repr=False)

    def to_dict(self):
        out = {
            "eta": self.eta,
            "beta": self.beta,
            "H": self.horizon,
            "lower_bound": self.lower_bound,
            "valid": self.valid,
        }
        if self.barrier is not None:
            out["barrier"] = self.barrier.to_list()
        return out

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def load_barrier(path):
    """Read the ``barrier`` list back from a certificate JSON file."""
    with open(path) as fh:
        data = json.load(fh)
    return PiecewiseBarrier.from_list(data["barrier"] if isinstance(data, dict) else data)


def eta_of(barrier, grid, X0):
    """Largest barrier value on cells meeting the initial set."""
    return float(np.max(barrier.values[grid.cells_intersecting(X0)]))


def _row_tables(imc):
    """Distinct (lo, hi) tables the policy can select, safe rows only."""
    n_p = imc.n_safe
    if imc.policy is None:
        if imc.n_actions != 1:
            raise ValueError("beta needs a single-action abstraction or a policy selector")
        return [(imc.lo[0, :n_p], imc.hi[0, :n_p])]
    tables = []
    for sel in np.unique(imc.policy, axis=0):
        lo, hi = imc.rows(sel)
        tables.append((lo[:n_p], hi[:n_p]))
    return tables


def beta_of(barrier, imc):
    """Sound bound on the one-step expected growth of the barrier over safe cells, clamped at 0."""
    if barrier.n_cells != imc.n_safe:
        raise ValueError(f"barrier has {barrier.n_cells} cells, abstraction has {imc.n_safe}")
    b = barrier.as_vector()
    growth = 0.0
    for lo, hi in _row_tables(imc):
        expected = backup(b, lo, hi, maximize=True)
        growth = max(growth, float(np.max(expected - barrier.values)))
    return growth


def certify(barrier, system, grid, X0, H, action=0, imc=None, prune_threshold=DEFAULT_PRUNE):
    """Check the barrier conditions and compute ``1 - (eta + beta H)``."""
    if barrier.n_cells != grid.n_cells:
        raise ValueError(f"barrier has {barrier.n_cells} cells, grid has {grid.n_cells}")
    if H < 0:
        raise ValueError("horizon must be nonnegative")
    if imc is None:
        imc = build_imc(system, grid, action, prune_threshold)
    eta = eta_of(barrier, grid, X0)
    beta = beta_of(barrier, imc)
    bound = min(1.0, max(0.0, 1.0 - (eta + beta * H)))
    return BarrierCertificate(eta, beta, H, bound, barrier.satisfies_conditions(), barrier)


def synthesize(system, grid, X0, H, action=0, imc=None, max_iter=200, prune_threshold=DEFAULT_PRUNE):
    """Best piecewise-constant barrier for ``1 - (eta + beta H)`` by cutting planes.

    Solves ``min eta + H beta`` over ``0 <= B_i <= 1`` with ``eta >= B_i`` on
    initial cells; the growth constraint of each cell is added lazily, one
    worst-case distribution (a vertex of the interval polytope) at a time.
    The returned certificate is recomputed from scratch by :func:`certify`.
    """
    if imc is None:
        imc = build_imc(system, grid, action, prune_threshold)
    n_p = grid.n_cells
    i_eta, i_beta = n_p, n_p + 1
    c = np.zeros(n_p + 2)
    c[i_eta] = 1.0
    c[i_beta] = float(H)
    bounds = np.array([[0.0, 1.0]] * n_p + [[0.0, np.inf]] * 2)
    lp = LinearProgram(c, bounds=bounds)
    for i in grid.cells_intersecting(X0):
        row = np.zeros(n_p + 2)
        row[i] = 1.0
        row[i_eta] = -1.0
        lp.add_constraint(row, "<=", 0.0)

    tables = _row_tables(imc)
    seen = set()
    best = None
    for it in range(1, max_iter + 1):
        res = solve(lp)
        # B = 1, eta = 1, beta = 0 is always feasible and the objective is bounded below
        assert res.optimal, f"barrier LP returned {res.status}"
        values = np.clip(res.x[:n_p], 0.0, 1.0)
        beta = res.x[i_beta]
        barrier = PiecewiseBarrier(values, 1.0)
        best = barrier
        b = barrier.as_vector()
        order = _visit_order(b, True)
        added = 0
        for lo, hi in tables:
            t = _accel.fill_witness(order, lo, hi)
            growth = t @ b - values
            for i in np.flatnonzero(growth > beta + CUT_TOL):
                row = np.zeros(n_p + 2)
                row[:n_p] = t[i, :n_p]
                row[i] -= 1.0
                row[i_beta] = -1.0
                key = row.tobytes()
                if key in seen:
                    continue
                seen.add(key)
                lp.add_constraint(row, "<=", -t[i, n_p])
                added += 1
        if added == 0:
            cert = certify(barrier, system, grid, X0, H, action, imc=imc)
            cert.synthesis_info = {
                "iterations": it,
                "cuts": len(seen),
                "lp_eta": float(res.x[i_eta]),
                "lp_beta": float(beta),
                "lp_objective": float(res.objective_value),
            }
            return barrier, cert
    raise NonConvergenceError(f"cutting planes did not converge in {max_iter} iterations", best=best)
