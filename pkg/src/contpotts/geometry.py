"""Boxes aligned to the delta-cell grid, cell indexing, and the neighbour grid.

The simulation volume is always a rectangular union of grid cells.  A cell
with integer coordinates ``j`` covers ``]( j_k - 1/2 ) * delta, ( j_k + 1/2 ) * delta]``
per axis (lower-open, upper-closed); points landing exactly on a face are
assigned to the lower-open/upper-closed cell, a measure-zero convention.
"""

import itertools
import math

import numpy as np


class Box:
    """Rectangular union of delta-grid cells.

    Parameters
    ----------
    j0 : sequence of int
        Integer grid coordinates of the first (lowest) cell per axis.
    cells : sequence of int
        Number of cells per axis (>= 0).
    delta : float
        Cell side length.
    """

    def __init__(self, j0, cells, delta):
        self.j0 = np.asarray(j0, dtype=np.int64)
        self.cells = np.asarray(cells, dtype=np.int64)
        if self.j0.shape != self.cells.shape or self.j0.ndim != 1:
            raise ValueError("j0 and cells must be 1-d with equal length")
        if np.any(self.cells < 0):
            raise ValueError("cell counts must be >= 0")
        self.delta = float(delta)
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        self.d = len(self.cells)
        self.lower = (self.j0 - 0.5) * self.delta
        self.upper = self.lower + self.cells * self.delta
        self._lower_t = tuple(float(v) for v in self.lower)
        self._upper_t = tuple(float(v) for v in self.upper)
        self._volume = float(np.prod(self.cells) * self.delta**self.d)
        # row-major strides over the cell lattice
        self._strides = np.ones(self.d, dtype=np.int64)
        for k in range(self.d - 2, -1, -1):
            self._strides[k] = self._strides[k + 1] * max(self.cells[k + 1], 1)

    @classmethod
    def centered(cls, cells_per_side, delta, d=2):
        """Origin-centred box with an odd number of cells per side."""
        m = int(cells_per_side)
        if m < 1 or m % 2 == 0:
            raise ValueError("centered boxes need an odd cell count per side")
        j0 = [-(m - 1) // 2] * d
        return cls(j0, [m] * d, delta)

    @property
    def volume(self):
        return self._volume

    @property
    def n_cells(self):
        return int(np.prod(self.cells))

    def contains(self, x):
        lo, hi = self._lower_t, self._upper_t
        for k in range(self.d):
            v = x[k]
            if not lo[k] < v <= hi[k]:
                return False
        return True

    def boundary_distance(self, x):
        """Distance from x (inside the box) to the box complement; negative
        values indicate x lies outside."""
        lo, hi = self._lower_t, self._upper_t
        best = math.inf
        for k in range(self.d):
            v = x[k]
            a = v - lo[k]
            b = hi[k] - v
            if a < best:
                best = a
            if b < best:
                best = b
        return best

    def boundary_distances(self, xs):
        xs = np.asarray(xs, dtype=float).reshape(-1, self.d)
        lo = (xs - self.lower).min(axis=1)
        hi = (self.upper - xs).min(axis=1)
        return np.minimum(lo, hi)

    def cell_index(self, x):
        """Integer grid coordinates of the cell containing x (upper-closed rule)."""
        x = np.asarray(x, dtype=float)
        j = np.ceil(x / self.delta - 0.5).astype(np.int64)
        return np.clip(j, self.j0, self.j0 + self.cells - 1)

    def cell_indices(self, xs):
        xs = np.asarray(xs, dtype=float).reshape(-1, self.d)
        j = np.ceil(xs / self.delta - 0.5).astype(np.int64)
        return np.clip(j, self.j0, self.j0 + self.cells - 1)

    def flat_cell_index(self, j):
        return int(np.dot(np.asarray(j) - self.j0, self._strides))

    def flat_cell_indices(self, js):
        js = np.asarray(js, dtype=np.int64).reshape(-1, self.d)
        return (js - self.j0) @ self._strides

    def all_cells(self):
        """All integer cell coordinates, row-major (matches flat indices)."""
        ranges = [range(int(self.j0[k]), int(self.j0[k] + self.cells[k]))
                  for k in range(self.d)]
        return np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(self.n_cells, self.d)

    def cell_center(self, j):
        return np.asarray(j, dtype=float) * self.delta

    def interior_cell_mask(self, shell_width):
        """Flags cells whose closed hull lies strictly more than shell_width
        from the complement of the box."""
        js = self.all_cells()
        lo = (js - 0.5) * self.delta - self.lower
        hi = self.upper - (js + 0.5) * self.delta
        return np.minimum(lo, hi).min(axis=1) > shell_width

    def sample_uniform(self, rng, n):
        return self.lower + rng.random((n, self.d)) * (self.upper - self.lower)

    def __repr__(self):
        return f"Box(j0={self.j0.tolist()}, cells={self.cells.tolist()}, delta={self.delta})"


def cell_side_for_dimension(r3, d):
    """Cell side guaranteeing that any two points of face-adjacent cells are
    within r3 of each other: the bounding box of two such cells measures
    2*side along the shared axis and side along the d-1 others, giving a
    diagonal of side*sqrt(4 + (d-1)) = side*sqrt(d+3)."""
    return r3 / math.sqrt(d + 3)


class NeighborGrid:
    """Hash grid over point positions with bucket side >= the interaction cutoff.

    Buckets are keyed by floor(x/side) per axis, so any two points within
    ``side`` of each other sit in the same or adjacent buckets.
    """

    def __init__(self, side, d):
        if side <= 0:
            raise ValueError("grid side must be positive")
        self.side = float(side)
        self.d = d
        self.buckets = {}
        self._offsets = [o for o in itertools.product((-1, 0, 1), repeat=d)]
        # strictly-positive lexicographic offsets enumerate each bucket pair once
        self._forward = [o for o in self._offsets if o > (0,) * d]

    def key(self, x):
        return tuple(int(math.floor(x[k] / self.side)) for k in range(self.d))

    def add(self, idx, x):
        k = self.key(x)
        self.buckets.setdefault(k, []).append(idx)
        return k

    def remove(self, idx, key):
        b = self.buckets[key]
        b.remove(idx)
        if not b:
            del self.buckets[key]

    def replace(self, old_idx, new_idx, key):
        b = self.buckets[key]
        b[b.index(old_idx)] = new_idx

    def candidates(self, x):
        """Indices in the 3^d bucket block around x (superset of the ball of
        radius ``side``)."""
        get = self.buckets.get
        out = []
        if self.d == 2:
            kx = int(math.floor(x[0] / self.side))
            ky = int(math.floor(x[1] / self.side))
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    b = get((kx + dx, ky + dy))
                    if b:
                        out.extend(b)
            return out
        kx = self.key(x)
        for off in self._offsets:
            b = get(tuple(kx[k] + off[k] for k in range(self.d)))
            if b:
                out.extend(b)
        return out

    def bucket_pairs(self):
        """Yields (bucket, same_bucket_or_None) covering every unordered
        bucket pair at block distance <= 1 exactly once."""
        for key, members in self.buckets.items():
            yield members, None
            for off in self._forward:
                other = self.buckets.get(tuple(key[k] + off[k] for k in range(self.d)))
                if other:
                    yield members, other
