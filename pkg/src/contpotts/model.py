"""Model parameters, point configurations, Hamiltonians and the assumption checks.

The interaction has two parts: a colour-repulsion potential ``phi`` summed
over unordered pairs of *differently coloured* points, and a colour-blind
background potential ``psi`` summed over all unordered pairs.  Both are
radial with finite cutoff, so pair sums localise to the neighbour grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, NeighborGrid, cell_side_for_dimension
from .potentials import PairPotential


def ball_volume(d, r):
    """Volume of the Euclidean ball of radius r in dimension d."""
    return math.pi ** (d / 2) * r**d / math.gamma(d / 2 + 1)


_EMPTY_IDX = np.zeros(0, dtype=np.int64)
_EMPTY_DIST = np.zeros(0, dtype=float)


@dataclass
class ModelParams:
    """Full parameterization of one model instance.

    alpha is the colour mark distribution; colour 1 must have maximal
    proportion (it is the colour wired to the boundary shell).
    """

    dimension: int
    activity: float
    q: int
    alpha: np.ndarray
    u: float
    r1: float
    r2: float
    r3: float
    r4: float
    phi: PairPotential
    psi: PairPotential
    pstar: float = 0.9
    nstar: int = 1

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.q < 2:
            raise ValueError("need at least two colours")
        if len(self.alpha) != self.q:
            raise ValueError("alpha length must equal the colour count")
        if np.any(self.alpha <= 0):
            raise ValueError("all colour proportions must be positive")
        if abs(self.alpha.sum() - 1.0) > 1e-12:
            raise ValueError("colour proportions must sum to 1")
        if np.any(self.alpha[0] < self.alpha - 1e-15):
            raise ValueError("colour 1 must have maximal proportion")
        if self.activity <= 0:
            raise ValueError("activity must be positive")
        if self.u <= 0:
            raise ValueError("repulsion strength u must be positive")
        if not (0 <= self.r1 <= self.r2 < self.r3 <= self.r4 < np.inf):
            raise ValueError("radii must satisfy 0 <= r1 <= r2 < r3 <= r4 < inf")
        if not (0 < self.pstar < 1):
            raise ValueError("pstar must lie in (0, 1)")
        if self.nstar < 1:
            raise ValueError("nstar must be a positive integer")
        self._cutoff = max(self.r4, self.phi.cutoff, self.psi.cutoff)

    @property
    def delta(self):
        return cell_side_for_dimension(self.r3, self.dimension)

    @property
    def interaction_cutoff(self):
        return self._cutoff

    def alpha_of(self, colors):
        """Proportions of 1-based colour labels."""
        return self.alpha[np.asarray(colors) - 1]

    def box(self, cells_per_side):
        return Box.centered(cells_per_side, self.delta, self.dimension)

    def replace(self, **kw):
        from dataclasses import replace
        return replace(self, **kw)


def widom_rowlinson_preset(activity=1.0, dimension=2):
    """Two colours with equal proportions, hard colour exclusion at distance 1,
    no background interaction."""
    return ModelParams(
        dimension=dimension,
        activity=activity,
        q=2,
        alpha=np.array([0.5, 0.5]),
        u=np.inf,
        r1=0.0,
        r2=0.0,
        r3=1.0,
        r4=1.0,
        phi=PairPotential.hard_core(1.0),
        psi=PairPotential.zero(),
        pstar=0.9,
        nstar=1,
    )


class PointConfig:
    """Finite point set in a box with a neighbour-grid index.

    Mutation (add/remove/move) keeps the grid in sync; removal swaps the last
    point into the vacated slot, so external index references are only valid
    between mutations.  ``version`` increments on every mutation.
    """

    _GROW = 64

    def __init__(self, box, points=None, grid_side=None):
        self.box = box
        self.d = box.d
        extent = float(np.max(box.upper - box.lower)) if box.n_cells else 0.0
        if grid_side is None:
            # single-bucket fallback: correct for any query radius, O(n^2)
            grid_side = max(extent, 1e-9)
        self.grid = NeighborGrid(grid_side, self.d)
        # a grid at least as coarse as the box answers any radius exactly
        self._any_radius = grid_side >= extent
        pts = np.zeros((0, self.d)) if points is None else np.asarray(points, dtype=float).reshape(-1, self.d)
        cap = max(len(pts) + self._GROW, self._GROW)
        self._pos = np.zeros((cap, self.d))
        self._pos[:len(pts)] = pts
        self.n = len(pts)
        self._keys = [None] * cap
        for i in range(self.n):
            self._keys[i] = self.grid.add(i, self._pos[i])
        self.version = 0
        self.pos_version = 0

    @property
    def points(self):
        return self._pos[:self.n]

    def _grow(self):
        cap = len(self._pos)
        new = np.zeros((cap + max(cap // 2, self._GROW), self.d))
        new[:cap] = self._pos
        self._pos = new
        self._keys.extend([None] * (len(self._pos) - cap))

    def add_point(self, x):
        if self.n == len(self._pos):
            self._grow()
        i = self.n
        self._pos[i] = x
        self._keys[i] = self.grid.add(i, self._pos[i])
        self.n += 1
        self.version += 1
        self.pos_version += 1
        return i

    def remove_point(self, i):
        self.grid.remove(i, self._keys[i])
        last = self.n - 1
        if i != last:
            self._pos[i] = self._pos[last]
            self._keys[i] = self._keys[last]
            self.grid.replace(last, i, self._keys[i])
        self._keys[last] = None
        self.n = last
        self.version += 1
        self.pos_version += 1

    def move_point(self, i, x):
        old = self._keys[i]
        self._pos[i] = x
        new = self.grid.key(self._pos[i])
        if new != old:
            self.grid.remove(i, old)
            self.grid.add(i, self._pos[i])
            self._keys[i] = new
        self.version += 1
        self.pos_version += 1

    def neighbors_within(self, x, r, exclude=-1):
        """(index array, distance array) of points within r of x, via the grid.

        Requires r <= grid side.
        """
        if r > self.grid.side * (1 + 1e-12) and not self._any_radius:
            raise ValueError("query radius exceeds the neighbour-grid side")
        cand = self.grid.candidates(x)
        if exclude >= 0 and exclude in cand:
            cand.remove(exclude)
        if not cand:
            return _EMPTY_IDX, _EMPTY_DIST
        idx = np.asarray(cand, dtype=np.int64)
        diff = self._pos[idx] - np.asarray(x, dtype=float)
        d2 = (diff * diff).sum(axis=1)
        mask = d2 <= r * r
        return idx[mask], np.sqrt(d2[mask])

    def all_pairs_within(self, r):
        """Arrays (i, j, dist) over all unordered pairs with |x_i - x_j| <= r.

        Requires r <= grid side.  Pair order is deterministic for a given
        mutation history.
        """
        if r > self.grid.side * (1 + 1e-12) and not self._any_radius:
            raise ValueError("query radius exceeds the neighbour-grid side")
        pos = self._pos
        ii, jj, dd = [], [], []
        for members, other in self.grid.bucket_pairs():
            if other is None:
                m = len(members)
                for a in range(m):
                    ia = members[a]
                    pa = pos[ia]
                    for b in range(a + 1, m):
                        ib = members[b]
                        s = 0.0
                        for k in range(self.d):
                            t = pos[ib][k] - pa[k]
                            s += t * t
                        s = math.sqrt(s)
                        if s <= r:
                            ii.append(ia)
                            jj.append(ib)
                            dd.append(s)
            else:
                for ia in members:
                    pa = pos[ia]
                    for ib in other:
                        s = 0.0
                        for k in range(self.d):
                            t = pos[ib][k] - pa[k]
                            s += t * t
                        s = math.sqrt(s)
                        if s <= r:
                            ii.append(ia)
                            jj.append(ib)
                            dd.append(s)
        return (np.asarray(ii, dtype=np.int64),
                np.asarray(jj, dtype=np.int64),
                np.asarray(dd, dtype=float))

    def shell_mask(self, r4):
        """Per-point flag: within r4 of the complement of the box."""
        if self.n == 0:
            return np.zeros(0, dtype=bool)
        return self.box.boundary_distances(self.points) <= r4


class ColoredConfig(PointConfig):
    """Point configuration with a colour mark in {1..q} per point."""

    def __init__(self, box, points=None, colors=None, grid_side=None):
        super().__init__(box, points, grid_side)
        self._col = np.zeros(len(self._pos), dtype=np.int64)
        if colors is not None:
            colors = np.asarray(colors, dtype=np.int64).reshape(-1)
            if len(colors) != self.n:
                raise ValueError("colour array length must equal point count")
            self._col[:self.n] = colors

    @property
    def colors(self):
        return self._col[:self.n]

    def _grow(self):
        old = self._col
        super()._grow()
        new = np.zeros(len(self._pos), dtype=np.int64)
        new[:len(old)] = old
        self._col = new

    def add_point(self, x, color=1):
        i = PointConfig.add_point(self, x)
        self._col[i] = color
        return i

    def remove_point(self, i):
        last = self.n - 1
        if i != last:
            self._col[i] = self._col[last]
        PointConfig.remove_point(self, i)

    def set_color(self, i, color):
        self._col[i] = color
        self.version += 1

    def set_colors(self, colors):
        self._col[:self.n] = colors
        self.version += 1

    def freeze(self):
        """Compact snapshot (positions and colours copied)."""
        return (self.points.copy(), self.colors.copy())


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def _window_pair_mask(config, ii, jj, window):
    if window is None:
        return slice(None)
    pts = config.points
    in_w = np.fromiter((window.contains(p) for p in pts), bool, count=config.n)
    return in_w[ii] | in_w[jj]

def hamiltonian_phi(config, params, window=None):
    """Colour-repulsion energy: sum of phi over differently coloured pairs
    meeting the window (extended real; +inf under a hard core)."""
    phi = params.phi
    if phi.cutoff == 0 or config.n < 2:
        return 0.0
    ii, jj, dd = config.all_pairs_within(phi.cutoff)
    if len(ii) == 0:
        return 0.0
    col = config.colors
    mask = col[ii] != col[jj]
    wmask = _window_pair_mask(config, ii, jj, window)
    mask = mask & wmask if not isinstance(wmask, slice) else mask
    return float(np.sum(phi.value(dd[mask])))

def hamiltonian_psi(config, params, window=None):
    """Background energy: sum of psi over all pairs meeting the window."""
    psi = params.psi
    if psi.cutoff == 0 or config.n < 2:
        return 0.0
    ii, jj, dd = config.all_pairs_within(psi.cutoff)
    if len(ii) == 0:
        return 0.0
    wmask = _window_pair_mask(config, ii, jj, window)
    if isinstance(wmask, slice):
        return float(np.sum(psi.value(dd)))
    return float(np.sum(psi.value(dd[wmask])))

def hamiltonian(config, params, window=None):
    return hamiltonian_phi(config, params, window) + hamiltonian_psi(config, params, window)


def interaction_energy(config, params, x, color, exclude=-1):
    """Energy of a point at x with the given colour against the existing
    configuration (pairs involving x only)."""
    phi, psi = params.phi, params.psi
    idx, dist = config.neighbors_within(x, params.interaction_cutoff, exclude)
    if len(idx) == 0:
        return 0.0
    total = 0.0
    if phi.cutoff > 0:
        mask = (dist <= phi.cutoff) & (config._col[idx] != color)
        if mask.any():
            if phi.is_pure_hard_core:
                return np.inf
            total += float(phi.value(dist[mask]).sum())
            if total == np.inf:
                return np.inf
    if psi.cutoff > 0:
        mask = dist <= psi.cutoff
        if mask.any():
            total += float(psi.value(dist[mask]).sum())
    return total

def energy_delta_insert(config, x, color, params):
    """H(config + (x, colour)) - H(config), via the neighbour grid."""
    return interaction_energy(config, params, x, color)

def energy_delta_delete(config, i, params):
    """H(config - point i) - H(config)."""
    e = interaction_energy(config, params, config.points[i],
                           config.colors[i], exclude=i)
    return -e


# ---------------------------------------------------------------------------
# Assumption validation
# ---------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def lines(self):
        out = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            out.append(f"{c.name:24s} {status:4s} margin={c.margin:< .6g}  {c.detail}")
        return out

    def __str__(self):
        return "\n".join(self.lines())


def validate_assumptions(params):
    """Machine checks of the potential/scale assumptions.

    The strict-repulsion and zero-beyond-cutoff conditions are exact piecewise
    checks; the cutoff boundary point itself is treated as measure zero, so a
    hard core extending exactly to r4 validates.  Superstability of a psi with
    negative part is a declared property of the chosen family, not verified.
    """
    rep = ValidationReport()
    phi, psi, d = params.phi, params.psi, params.dimension

    # strict repulsion: phi >= 0 everywhere, phi >= u on [0, r3]
    phi_min = min([v for _, _, v in phi.pieces()] + [0.0])
    min_core = phi.min_value_on(0.0, params.r3)
    a1 = phi_min >= 0 and min_core >= params.u
    rep.checks.append(Check(
        "A1 strict repulsion", bool(a1),
        float(min_core - params.u) if np.isfinite(min_core) and np.isfinite(params.u)
        else (np.inf if a1 else -np.inf),
        f"min phi on [0,r3]={min_core:g}, u={params.u:g}"))

    # finite range: phi identically 0 beyond r4
    tail = [v for _, b, v in phi.pieces() if b > params.r4 and v != 0.0]
    rep.checks.append(Check(
        "A2 finite range", not tail,
        float(params.r4 - phi.cutoff),
        f"phi cutoff={phi.cutoff:g}, r4={params.r4:g}"))

    # stability of psi: nonnegative, or declared superstable + lower regular
    psi_min = min([v for _, _, v in psi.pieces()] + [0.0])
    a3 = psi_min >= 0 or psi.superstable
    rep.checks.append(Check(
        "A3 stability", bool(a3), float(psi_min),
        "psi >= 0" if psi_min >= 0 else
        ("declared superstable" if psi.superstable else "negative psi not declared superstable")))

    # short repulsion range: psi <= 0 beyond r2, integrable positive part
    psi_tail_max = max([v for _, b, v in psi.pieces() if b > params.r2] + [0.0])
    pos_int = psi.positive_part_integral(params.r1, d)
    a4 = psi_tail_max <= 0 and np.isfinite(pos_int)
    rep.checks.append(Check(
        "A4 short range psi", bool(a4), float(-psi_tail_max),
        f"max psi beyond r2={psi_tail_max:g}, int psi+ (|x|>=r1)={pos_int:g}"))

    # scale relations: r2 < r3 / (2 sqrt(d+3)) and the excluded-volume bound
    delta = params.delta
    scale_margin = delta / 2 - params.r2
    lhs = (params.nstar - 1) * ball_volume(d, params.r1)
    rhs = (delta - 2 * params.r2) ** d if delta > 2 * params.r2 else 0.0
    a5 = scale_margin > 0 and lhs < rhs
    rep.checks.append(Check(
        "A5 scale relations", bool(a5),
        float(min(scale_margin, rhs - lhs)),
        f"delta/2-r2={scale_margin:g}, (n*-1)|B(0,r1)|={lhs:g} vs (delta-2r2)^d={rhs:g}"))

    return rep
