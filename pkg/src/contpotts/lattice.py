"""Mixed site-bond Bernoulli percolation, random-graph connectivity bounds and
coarse-graining of continuum samples into good/linked cells.

The finite-box percolation proxy reports the probability that the centre
site's open cluster (through open sites and open bonds) reaches the box
boundary; it decreases with the box side toward the infinite-volume
percolation probability.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .coupling import UnionFind, bernoulli_edge_probability
from .sampling import _as_generator


@dataclass
class LatticeState:
    """Open/closed flags on a finite chunk of the hypercubic lattice.

    sites has shape (L,)*d; bonds[a] flags the bond from each site to its
    neighbour in direction +e_a (entries on the far face are unused).
    """

    d: int
    L: int
    sites: np.ndarray
    bonds: np.ndarray

    @property
    def origin(self):
        return (self.L // 2,) * self.d


def simulate_site_bond(L, p_site, p_bond, rng, d=2):
    """Independent Bernoulli flags: each site open w.p. p_site, each
    nearest-neighbour bond open w.p. p_bond."""
    if L < 2:
        raise ValueError("lattice side must be at least 2")
    gen = _as_generator(rng)
    shape = (L,) * d
    sites = gen.random(shape) < p_site
    bonds = gen.random((d,) + shape) < p_bond
    return LatticeState(d, L, sites, bonds)


def _site_labels(state):
    """Connected-component labels over open sites joined by open bonds."""
    L, d = state.L, state.d
    n = L**d
    flat_sites = state.sites.reshape(-1)
    rows, cols = [], []
    strides = np.array([L**k for k in range(d - 1, -1, -1)], dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    for a in range(d):
        # sites with a neighbour in direction +e_a
        coord = (idx // strides[a]) % L
        has_next = coord < L - 1
        src = idx[has_next]
        dst = src + strides[a]
        open_bond = state.bonds[a].reshape(-1)[src]
        ok = flat_sites[src] & flat_sites[dst] & open_bond
        rows.append(src[ok])
        cols.append(dst[ok])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    g = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    return labels


def origin_to_boundary(state):
    """True iff the centre site's open cluster touches the box boundary."""
    L, d = state.L, state.d
    origin = state.origin
    if not state.sites[origin]:
        return False
    if min(origin) == 0 or max(origin) == L - 1:
        return True
    labels = _site_labels(state)
    strides = np.array([L**k for k in range(d - 1, -1, -1)], dtype=np.int64)
    oflat = int(np.dot(origin, strides))
    olabel = labels[oflat]
    idx = np.arange(L**d, dtype=np.int64)
    on_boundary = np.zeros(L**d, dtype=bool)
    for a in range(d):
        coord = (idx // strides[a]) % L
        on_boundary |= (coord == 0) | (coord == L - 1)
    mask = on_boundary & state.sites.reshape(-1)
    return bool(np.any(labels[mask] == olabel))


def theta_estimate(d, L, p, runs, rng, p_bond=None):
    """Monte Carlo estimate (and binomial stderr) of the origin-to-boundary
    connection probability at site and bond parameter p."""
    gen = _as_generator(rng)
    if p_bond is None:
        p_bond = p
    hits = 0
    for _ in range(runs):
        state = simulate_site_bond(L, p, p_bond, gen, d)
        hits += origin_to_boundary(state)
    est = hits / runs
    stderr = math.sqrt(est * (1.0 - est) / runs)
    return est, stderr


# ---------------------------------------------------------------------------
# Random-graph connectivity
# ---------------------------------------------------------------------------

def _gamma_exact(n, p):
    """P(G(n, p) connected) by recursion on the component of vertex 1."""
    gamma = [0.0, 1.0]
    for m in range(2, n + 1):
        s = 0.0
        for k in range(1, m):
            s += math.comb(m - 1, k - 1) * gamma[k] * (1.0 - p) ** (k * (m - k))
        gamma.append(1.0 - s)
    return gamma[n]


def connectivity_bound(n, p):
    """Analytic lower bound 1 - (n-1)(1-p^2)^(n-2); exact 1 at n <= 1."""
    if n <= 1:
        return 1.0
    return max(0.0, 1.0 - (n - 1) * (1.0 - p * p) ** (n - 2))


def er_connectivity_mc(n, p, runs, rng):
    """(estimate, stderr) of the connection probability by direct sampling,
    vectorised over runs with a bitmask reachability sweep."""
    gen = _as_generator(rng)
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    draws = gen.random((runs, m)) < p
    adj = np.zeros((runs, n), dtype=np.int64)
    for k, (i, j) in enumerate(pairs):
        col = draws[:, k]
        adj[:, i] |= col << j
        adj[:, j] |= col << i
    reach = np.ones(runs, dtype=np.int64)
    for _ in range(n):
        for v in range(n):
            has = (reach >> v) & 1
            reach |= adj[:, v] * has
    full = (1 << n) - 1
    est = float(np.mean(reach == full))
    return est, math.sqrt(est * (1.0 - est) / runs)


def er_connectivity(n, p, mode="exact", runs=100_000, rng=None):
    """Connection probability of the n-vertex Bernoulli(p) random graph.

    mode "exact" sums over connected graphs (n <= 7), "mc" estimates by
    sampling, "bound" evaluates the analytic lower bound.
    """
    if n < 1:
        raise ValueError("need at least one vertex")
    if mode == "exact":
        if n > 7:
            raise ValueError("exact mode supports n <= 7")
        return _gamma_exact(n, p)
    if mode == "bound":
        return connectivity_bound(n, p)
    if mode == "mc":
        if rng is None:
            raise ValueError("mc mode needs an rng")
        return er_connectivity_mc(n, p, runs, rng)[0]
    raise ValueError(f"unknown mode {mode!r}")


def gamma_lower_bound(p, max_n=4000):
    """Positive lower bound on inf over n of the connection probability.

    Computes exact connectivity values outward until the analytic tail bound
    (monotone increasing beyond 1/p^2) certifies that no larger graph can dip
    below the running minimum; the result then equals the true infimum.
    """
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    if p == 1.0:
        return 1.0
    start = max(int(math.ceil(1.0 / (p * p))) + 2, 8)
    gamma = [0.0, 1.0]
    running_min = 1.0
    for m in range(2, max_n + 1):
        s = 0.0
        for k in range(1, m):
            s += math.comb(m - 1, k - 1) * gamma[k] * (1.0 - p) ** (k * (m - k))
        gamma.append(1.0 - s)
        running_min = min(running_min, gamma[m])
        if m >= start and connectivity_bound(m + 1, p) >= running_min:
            return running_min
    return max(0.0, min(running_min, connectivity_bound(max_n + 1, p)))


def compute_nstar(params):
    """Smallest n at which both the analytic connectivity bound reaches
    sqrt(pstar) and the cross-cell edge bound 1-(1-pbar)^(n^2) reaches pstar.

    Uses the analytic connectivity bound, so the result is conservative
    (possibly larger than what exact connectivity values would give).
    """
    pbar = bernoulli_edge_probability(params)
    if pbar <= 0:
        raise ValueError("decoupled edge probability must be positive")
    pstar = params.pstar
    root = math.sqrt(pstar)
    n = 1
    while True:
        lam = 1.0 - (1.0 - pbar) ** (n * n)
        if connectivity_bound(n, pbar) >= root and lam >= pstar:
            return n
        n += 1
        if n > 10_000_000:
            raise RuntimeError("cell threshold search did not terminate")


# ---------------------------------------------------------------------------
# Coarse-graining of continuum samples
# ---------------------------------------------------------------------------

@dataclass
class CoarseGrain:
    """Good flags per box cell and linked flags per adjacent cell pair.

    cell_pairs holds flat cell index pairs at sup-distance 1 (face or corner
    adjacency); linked[k] flags an edge crossing cell_pairs[k].
    """

    good: np.ndarray
    cell_pairs: np.ndarray
    linked: np.ndarray


def adjacent_cell_pairs(box):
    """All unordered pairs of face-adjacent box cells (Euclidean distance 1
    on the cell lattice), as flat indices.

    Face adjacency is the reading forced by the cell-side choice: only for
    face neighbours does the two-cell bounding box have diagonal r3, and the
    comparison lattice uses distance-1 bonds.  Memoised on the box instance.
    """
    cached = getattr(box, "_adjacent_cell_pairs", None)
    if cached is not None:
        return cached
    cells = box.all_cells()
    have = {tuple(c): box.flat_cell_index(c) for c in cells}
    offsets = [tuple(1 if k == a else 0 for k in range(box.d))
               for a in range(box.d)]
    pairs = []
    for c in cells:
        a = have[tuple(c)]
        for off in offsets:
            nb = tuple(c[k] + off[k] for k in range(box.d))
            b = have.get(nb)
            if b is not None:
                pairs.append((a, b))
    out = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    box._adjacent_cell_pairs = out
    return out


def coarse_grain(config, edges, params):
    """Good cells (at least nstar points whose induced edge graph is
    connected) and linked adjacent cell pairs (an edge crossing the pair)."""
    box = config.box
    n = config.n
    cell_of = box.flat_cell_indices(box.cell_indices(config.points)) if n else np.zeros(0, np.int64)
    counts = np.bincount(cell_of, minlength=box.n_cells)

    # local indices within each cell
    local = np.zeros(n, dtype=np.int64)
    seen = {}
    for i in range(n):
        c = int(cell_of[i])
        local[i] = seen.get(c, 0)
        seen[c] = local[i] + 1

    internal = {}
    crossing = set()
    for i, j in edges.pairs:
        ci, cj = int(cell_of[i]), int(cell_of[j])
        if ci == cj:
            internal.setdefault(ci, []).append((int(local[i]), int(local[j])))
        else:
            crossing.add((min(ci, cj), max(ci, cj)))

    good = np.zeros(box.n_cells, dtype=bool)
    for c in range(box.n_cells):
        m = int(counts[c])
        if m < params.nstar:
            continue
        uf = UnionFind(m)
        for a, b in internal.get(c, ()):
            uf.union(a, b)
        roots = {uf.find(a) for a in range(m)}
        good[c] = len(roots) == 1

    cell_pairs = adjacent_cell_pairs(box)
    linked = np.array([(min(a, b), max(a, b)) in crossing for a, b in cell_pairs],
                      dtype=bool)
    return CoarseGrain(good, cell_pairs, linked)
