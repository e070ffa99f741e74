"""
Dense two-phase primal simplex with Bland's rule.

Meant for the small programs this package produces (a few hundred rows and
columns). Pivoting is deterministic: the entering column is the lowest index
with a negative reduced cost, and ties in the ratio test go to the row whose
basic variable has the lowest index.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
BREAKDOWN_TOL = 1e-12
STABLE_PIVOT_RATIO = 1e-3

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = {"<=": LE, "<": LE, "==": EQ, "=": EQ, ">=": GE, ">": GE}


@dataclass
class LinearProgram:
    """minimize ``c @ x`` subject to ``A[i] @ x (rel[i]) b[i]`` and ``lb <= x <= ub``."""

    c: np.ndarray
    A: list = field(default_factory=list)
    relations: list = field(default_factory=list)
    b: list = field(default_factory=list)
    bounds: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = [np.asarray(r, dtype=float).ravel() for r in self.A]
        self.relations = [_RELATIONS[r] for r in self.relations]
        self.b = [float(v) for v in self.b]
        if self.bounds is None:
            self.bounds = np.tile([0.0, np.inf], (n, 1))
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(n, 2)
        self.validate()

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_constraints(self):
        return len(self.A)

    def add_constraint(self, row, relation, rhs):
        row = np.asarray(row, dtype=float).ravel()
        if row.size != self.n_vars:
            raise ValueError(f"constraint row has {row.size} entries, expected {self.n_vars}")
        self.A.append(row)
        self.relations.append(_RELATIONS[relation])
        self.b.append(float(rhs))

    def validate(self):
        n = self.n_vars
        if not (len(self.A) == len(self.relations) == len(self.b)):
            raise ValueError("A, relations and b must have the same length")
        for r in self.A:
            if r.size != n:
                raise ValueError(f"constraint row has {r.size} entries, expected {n}")
        if self.bounds.shape != (n, 2):
            raise ValueError("bounds must have shape (n_vars, 2)")
        if np.any(self.bounds[:, 0] > self.bounds[:, 1]):
            raise ValueError("variable lower bound exceeds upper bound")

    def matrix(self):
        return np.array(self.A, dtype=float).reshape(len(self.A), self.n_vars)


@dataclass
class LpResult:
    status: str
    x: np.ndarray = None
    objective_value: float = float("nan")
    dual: np.ndarray = None
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"


def _standardize(lp):
    """Rewrite as ``min cs @ z + const`` s.t. ``As z = bs``, ``z >= 0``.

    Returns the pieces plus ``(x0, M)`` with ``x = x0 + M @ z[:ny]``.
    """
    n = lp.n_vars
    lb, ub = lp.bounds[:, 0], lp.bounds[:, 1]
    cols, x0 = [], np.zeros(n)
    bound_rows = []  # (column in y, ub - lb)
    for j in range(n):
        if np.isfinite(lb[j]):
            x0[j] = lb[j]
            cols.append((j, 1.0))
            if np.isfinite(ub[j]):
                bound_rows.append((len(cols) - 1, ub[j] - lb[j]))
        elif np.isfinite(ub[j]):
            x0[j] = ub[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    M = np.zeros((n, ny))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s

    A = lp.matrix()
    rows = [A @ M] if A.size else [np.zeros((0, ny))]
    rel = list(lp.relations)
    rhs = list(np.asarray(lp.b) - (A @ x0 if A.size else np.zeros(0)))
    if bound_rows:
        Bb = np.zeros((len(bound_rows), ny))
        for r, (k, width) in enumerate(bound_rows):
            Bb[r, k] = 1.0
            rhs.append(width)
            rel.append(LE)
        rows.append(Bb)
    Ay = np.vstack(rows)
    m = Ay.shape[0]

    n_slack = sum(1 for r in rel if r != EQ)
    As = np.zeros((m, ny + n_slack))
    As[:, :ny] = Ay
    slack_of_row = [-1] * m
    s = ny
    for i, r in enumerate(rel):
        if r == LE:
            As[i, s] = 1.0
        elif r == GE:
            As[i, s] = -1.0
        else:
            continue
        slack_of_row[i] = s
        s += 1
    cs = np.zeros(ny + n_slack)
    cs[:ny] = lp.c @ M
    return As, np.asarray(rhs, dtype=float), cs, float(lp.c @ x0), x0, M, ny, slack_of_row


class _Tableau:
    """Dense tableau ``[B^-1 A | B^-1 b]`` over reduced costs, rebuilt from
    the original rows every ``REFRESH`` pivots to stop error build-up."""

    REFRESH = 25

    def __init__(self, A, b, cost, basis):
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.set_cost(cost)

    @property
    def m(self):
        return self.A.shape[0]

    def set_cost(self, cost):
        self.cost = cost
        self.refresh()

    def refresh(self):
        m, n = self.A.shape
        if m:
            X = np.linalg.solve(self.A[:, self.basis], np.column_stack([self.A, self.b]))
        else:
            X = np.zeros((0, n + 1))
        cb = self.cost[self.basis]
        T = np.empty((m + 1, n + 1))
        T[:m] = X
        T[m, :n] = self.cost - cb @ X[:, :n]
        T[m, n] = -(cb @ X[:, n])
        rhs = T[:m, -1]
        rhs[(rhs < 0.0) & (rhs > -FEAS_TOL)] = 0.0
        T[:m][:, self.basis] = np.eye(m)
        T[m, self.basis] = 0.0
        self.T = T

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j

    def run(self, n_cols, max_iter, counter):
        """Bland-rule primal simplex over the first ``n_cols`` columns."""
        m = self.m
        since = 0
        while True:
            if counter[0] >= max_iter:
                raise DegeneracyError(f"simplex exceeded {max_iter} pivots")
            T = self.T
            neg = np.flatnonzero(T[-1, :n_cols] < -OPT_TOL)
            if neg.size == 0:
                if since:
                    # confirm optimality on freshly factored data
                    self.refresh()
                    since = 0
                    continue
                return "optimal"
            j = int(neg[0])
            col = T[:m, j]
            eligible = np.flatnonzero(col > PIVOT_TOL)
            if eligible.size == 0:
                if np.any(col > BREAKDOWN_TOL):
                    raise DegeneracyError(f"entering column {j} has only pivots below {PIVOT_TOL}")
                return "unbounded"
            ratios = np.maximum(T[eligible, -1], 0.0) / col[eligible]
            best = ratios.min()
            ties = eligible[ratios <= best + FEAS_TOL * max(1.0, best)]
            # Bland among ties, after discarding pivots far smaller than the
            # largest tied one (tiny degenerate pivots wreck the tableau)
            ties = ties[col[ties] >= STABLE_PIVOT_RATIO * col[ties].max()]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j)
            counter[0] += 1
            since += 1
            if since >= self.REFRESH:
                self.refresh()
                since = 0
            else:
                rhs = self.T[:m, -1]
                rhs[(rhs < 0.0) & (rhs > -FEAS_TOL)] = 0.0


def solve(lp, max_iter=50_000, debug_path=None):
    """Solve ``lp``; returns an :class:`LpResult` with status optimal, infeasible or unbounded.

    ``dual`` holds one multiplier per constraint of ``lp`` followed by one per
    finite-width variable bound, in variable order. ``debug_path`` dumps the
    final tableau as text.
    """
    lp.validate()
    As, bs, cs, const, x0, M, ny, slack_of_row = _standardize(lp)
    m, nz = As.shape
    counter = [0]

    sign = np.where(bs < 0, -1.0, 1.0)
    A1 = As * sign[:, None]
    b1 = bs * sign
    basis, art_rows = [], []
    for i in range(m):
        s = slack_of_row[i]
        if s >= 0 and A1[i, s] == 1.0:
            basis.append(s)
        else:
            basis.append(nz + len(art_rows))
            art_rows.append(i)
    n_art = len(art_rows)
    A_ext = np.zeros((m, nz + n_art))
    A_ext[:, :nz] = A1
    for k, i in enumerate(art_rows):
        A_ext[i, nz + k] = 1.0
    kept_rows = np.arange(m)

    if n_art:
        # phase 1: minimise the artificial sum
        cost1 = np.zeros(nz + n_art)
        cost1[nz:] = 1.0
        tab = _Tableau(A_ext, b1, cost1, basis)
        tab.run(nz + n_art, max_iter, counter)
        scale = max(1.0, float(np.max(np.abs(b1), initial=0.0)))
        if -tab.T[-1, -1] > FEAS_TOL * scale:
            return LpResult("infeasible", iterations=counter[0])
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= nz:
                cand = np.flatnonzero(np.abs(tab.T[r, :nz]) > PIVOT_TOL)
                if cand.size:
                    tab.pivot(r, int(cand[np.argmax(np.abs(tab.T[r, cand]))]))
                else:
                    keep[r] = False
        kept_rows = np.flatnonzero(keep)
        basis = [tab.basis[r] for r in kept_rows]

    tab = _Tableau(A1[kept_rows], b1[kept_rows], cs, basis)
    status = tab.run(nz, max_iter, counter)
    if debug_path is not None:
        np.savetxt(debug_path, tab.T, header=f"basis: {tab.basis}")
    if status != "optimal":
        return LpResult(status, iterations=counter[0])

    z = np.zeros(nz)
    z[tab.basis] = np.maximum(tab.T[:-1, -1], 0.0)
    x = x0 + M @ z[:ny]

    dual = np.zeros(m)
    if tab.basis:
        Bmat = As[np.ix_(kept_rows, tab.basis)]
        dual[kept_rows] = np.linalg.solve(Bmat.T, cs[tab.basis])
    return LpResult("optimal", x, float(lp.c @ x), dual, counter[0])


def dual_objective(lp, dual):
    """Objective of the dual program at ``dual`` (same ordering as ``LpResult.dual``)."""
    As, bs, cs, const, *_ = _standardize(lp)
    return float(bs @ dual + const)
