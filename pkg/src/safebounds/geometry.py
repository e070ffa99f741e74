"""Axis-aligned boxes and uniform grid partitions."""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyIntersectionError

# relative overlap (in cell widths) below which two boxes only touch
_TOUCH_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HyperRect:
    """Closed axis-aligned box ``[lower, upper]`` in state coordinates."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise ValueError("lower and upper must be 1-D vectors of equal length >= 1")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lower > upper):
            raise ValueError(f"lower must not exceed upper: {lower} > {upper}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_dict(cls, d):
        return cls(d["lower"], d["upper"])

    def to_dict(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @property
    def dim(self):
        return self.lower.size

    @property
    def widths(self):
        return self.upper - self.lower

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def volume(self):
        return float(np.prod(self.widths))

    @property
    def diameter(self):
        """Largest infinity-norm distance between two points of the box."""
        return float(np.max(self.widths))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def contains_box(self, other):
        return bool(np.all(other.lower >= self.lower) and np.all(other.upper <= self.upper))

    def __eq__(self, other):
        if not isinstance(other, HyperRect):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self):
        parts = ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(self.lower, self.upper))
        return f"HyperRect({parts})"


@dataclass(frozen=True, eq=False)
class UniformGrid:
    """Uniform partition of ``domain`` into ``counts[d]`` cells per axis.

    Cells are numbered row-major (axis 0 varies slowest), matching
    ``np.ravel_multi_index`` with C order.
    """

    domain: HyperRect
    counts: np.ndarray
    _edges: tuple = field(init=False, repr=False)

    def __post_init__(self):
        counts = np.atleast_1d(np.asarray(self.counts)).astype(np.int64)
        if counts.shape != (self.domain.dim,):
            raise ValueError("counts must have one entry per domain axis")
        if np.any(counts < 1):
            raise ValueError("counts must be positive")
        if np.any(self.domain.widths <= 0):
            raise ValueError("grid domain must have positive width on every axis")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        # edges[d][k] = lower + width * k / counts, so cell k of axis d is
        # [edges[d][k], edges[d][k + 1]] and neighbours share faces exactly
        edges = tuple(
            self.domain.lower[d]
            + self.domain.widths[d] * np.arange(counts[d] + 1) / counts[d]
            for d in range(self.dim)
        )
        for e, hi in zip(edges, self.domain.upper):
            e[-1] = hi
            e.setflags(write=False)
        object.__setattr__(self, "_edges", edges)

    @property
    def dim(self):
        return self.domain.dim

    @property
    def n_cells(self):
        return int(np.prod(self.counts))

    @property
    def cell_widths(self):
        return self.domain.widths / self.counts

    @property
    def edges(self):
        """Per-axis cell edges, ``counts[d] + 1`` values each."""
        return self._edges

    def max_cell_width(self):
        return float(np.max(self.cell_widths))

    def multi_index(self, index):
        return np.unravel_index(index, tuple(self.counts))

    def flat_index(self, multi):
        return int(np.ravel_multi_index(tuple(multi), tuple(self.counts)))

    def _check_index(self, index):
        if not 0 <= index < self.n_cells:
            raise IndexError(f"cell index {index} out of range [0, {self.n_cells})")

    def cell_of(self, index):
        """Closed box of cell ``index``."""
        index = int(index)
        self._check_index(index)
        multi = self.multi_index(index)
        lo = [self._edges[d][k] for d, k in enumerate(multi)]
        hi = [self._edges[d][k + 1] for d, k in enumerate(multi)]
        return HyperRect(lo, hi)

    def cell_bounds(self):
        """Lower and upper corners of every cell, each of shape (n_cells, dim)."""
        grids_lo = np.meshgrid(*[e[:-1] for e in self._edges], indexing="ij")
        grids_hi = np.meshgrid(*[e[1:] for e in self._edges], indexing="ij")
        lower = np.stack([g.ravel() for g in grids_lo], axis=1)
        upper = np.stack([g.ravel() for g in grids_hi], axis=1)
        return lower, upper

    def centers(self):
        lower, upper = self.cell_bounds()
        return 0.5 * (lower + upper)

    def locate(self, x):
        """Index of the cell containing point ``x`` (faces go to the upper cell)."""
        x = np.asarray(x, dtype=float)
        if not self.domain.contains(x):
            raise ValueError(f"point {x} lies outside the grid domain")
        multi = []
        for d in range(self.dim):
            k = int(np.searchsorted(self._edges[d], x[d], side="right")) - 1
            multi.append(min(max(k, 0), int(self.counts[d]) - 1))
        return self.flat_index(multi)

    def cells_intersecting(self, query):
        """Indices of cells overlapping ``query`` with positive volume, ascending."""
        if query.dim != self.dim:
            raise ValueError("query dimension does not match the grid")
        per_axis = []
        for d in range(self.dim):
            e = self._edges[d]
            tol = _TOUCH_TOL * self.cell_widths[d]
            overlap = np.minimum(e[1:], query.upper[d]) - np.maximum(e[:-1], query.lower[d])
            ks = np.flatnonzero(overlap > tol)
            if ks.size == 0:
                raise EmptyIntersectionError(
                    f"query {query!r} meets the grid domain in a set of zero measure"
                )
            per_axis.append(ks)
        mesh = np.meshgrid(*per_axis, indexing="ij")
        flat = np.ravel_multi_index(tuple(m.ravel() for m in mesh), tuple(self.counts))
        return sorted(int(i) for i in flat)

    @classmethod
    def from_config(cls, safe_set, counts):
        return cls(HyperRect.from_dict(safe_set), counts)
