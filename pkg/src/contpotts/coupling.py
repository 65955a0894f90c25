"""Edge drawing, cluster decomposition and the generalized random-cluster weights.

The joint measure couples a coloured configuration with an edge set: each
unordered pair is an edge independently with probability 1 - exp(-phi(x-y)),
and the authorized event keeps only edge sets whose edges join equal colours.
Points within r4 of the box complement are linked to an imaginary point at
infinity; the cluster containing them is the wired cluster.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .model import ColoredConfig

INF_ROOT = -1  # union-find root representing the point at infinity


class UnionFind:
    """Array union-find with path halving; slot n is the point at infinity."""

    def __init__(self, n):
        self.parent = list(range(n + 1))
        self.n = n

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the infinity slot a root so wired clusters stay identifiable
            if rb == self.n:
                ra, rb = rb, ra
            self.parent[rb] = ra


class EdgeSet:
    """Undirected edges among point indices plus per-point shell links.

    shell[i] is True iff point i lies within r4 of the box complement and is
    therefore linked to the imaginary point at infinity.  validate=False skips
    the normalization/duplicate checks for internally generated pairs that are
    unique and ordered by construction.
    """

    __slots__ = ("pairs", "shell")

    def __init__(self, pairs, shell, validate=True):
        if validate:
            pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
            shell = np.asarray(shell, dtype=bool).reshape(-1)
            if len(pairs):
                if np.any(pairs[:, 0] == pairs[:, 1]):
                    raise ValueError("self-loops are not allowed")
                lo = np.minimum(pairs[:, 0], pairs[:, 1])
                hi = np.maximum(pairs[:, 0], pairs[:, 1])
                pairs = np.column_stack([lo, hi])
                if len(np.unique(pairs, axis=0)) != len(pairs):
                    raise ValueError("duplicate edges are not allowed")
        self.pairs = pairs
        self.shell = shell

    def __eq__(self, other):
        return (isinstance(other, EdgeSet)
                and np.array_equal(self.pairs, other.pairs)
                and np.array_equal(self.shell, other.shell))

    def __repr__(self):
        return f"EdgeSet(pairs={self.pairs.tolist()}, shell={self.shell.tolist()})"

    @property
    def n_points(self):
        return len(self.shell)

    def dump_csv(self, path):
        """Rows (i, j, shell_link): ordinary edges carry 0; each shell-linked
        point appears once as (i, -1, 1), -1 being the point at infinity."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "shell_link"])
            for i, j in self.pairs:
                w.writerow([int(i), int(j), 0])
            for i in np.nonzero(self.shell)[0]:
                w.writerow([int(i), -1, 1])

    @classmethod
    def load_csv(cls, path, n_points):
        pairs, shell = [], np.zeros(n_points, dtype=bool)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        for i, j, s in rows:
            if int(s):
                shell[int(i)] = True
            else:
                pairs.append((int(i), int(j)))
        return cls(np.array(pairs, dtype=np.int64).reshape(-1, 2), shell)


@dataclass
class ClusterDecomposition:
    """Partition of point indices into connected clusters.

    labels[i] is a cluster id in 0..n_clusters-1; infinite_id is the id of
    the wired cluster or None when no point touches the shell.
    """

    labels: np.ndarray
    sizes: np.ndarray
    infinite_id: int | None = None

    @property
    def n_points(self):
        return len(self.labels)

    @property
    def n_clusters(self):
        return len(self.sizes)

    @property
    def infinite_size(self):
        return int(self.sizes[self.infinite_id]) if self.infinite_id is not None else 0

    def infinite_mask(self):
        if self.infinite_id is None:
            return np.zeros(self.n_points, dtype=bool)
        return self.labels == self.infinite_id

    def finite_sizes(self):
        if self.infinite_id is None:
            return self.sizes
        return np.delete(self.sizes, self.infinite_id)


def decompose_clusters(config_or_n, edges):
    """Connected components of (points, edges) with all shell-linked points
    merged into the wired cluster.

    Accepts a PointConfig or a plain point count.
    """
    n = config_or_n if isinstance(config_or_n, int) else config_or_n.n
    if edges.n_points != n:
        raise ValueError("edge set does not match the point count")
    if n > 64 and len(edges.pairs) > 2 * n:
        return _decompose_sparse(n, edges)
    uf = UnionFind(n)
    for i, j in edges.pairs:
        uf.union(int(i), int(j))
    for i in np.nonzero(edges.shell)[0]:
        uf.union(n, int(i))
    roots = [uf.find(i) for i in range(n)]
    inf_root = uf.find(n)
    order = {}
    labels = np.empty(n, dtype=np.int64)
    for i, r in enumerate(roots):
        if r not in order:
            order[r] = len(order)
        labels[i] = order[r]
    sizes = np.bincount(labels, minlength=len(order)) if n else np.zeros(0, dtype=np.int64)
    has_shell = bool(edges.shell.any())
    infinite_id = order.get(inf_root) if has_shell else None
    return ClusterDecomposition(labels, sizes, infinite_id)


def _decompose_sparse(n, edges):
    """csgraph-backed variant for large instances; identical partition."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    shell_idx = np.nonzero(edges.shell)[0]
    # point n is the imaginary point at infinity
    rows = np.concatenate([edges.pairs[:, 0], shell_idx])
    cols = np.concatenate([edges.pairs[:, 1], np.full(len(shell_idx), n, dtype=np.int64)])
    data = np.ones(len(rows), dtype=np.int8)
    g = coo_matrix((data, (rows, cols)), shape=(n + 1, n + 1))
    _, raw = connected_components(g, directed=False)
    inf_label = raw[n]
    raw = raw[:n]
    # renumber by first appearance so labels are deterministic
    uniq, labels = np.unique(raw, return_inverse=True)
    first = np.full(len(uniq), n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(n))
    rank = np.argsort(np.argsort(first, kind="stable"), kind="stable")
    labels = rank[labels]
    sizes = np.bincount(labels, minlength=len(uniq))
    infinite_id = None
    if len(shell_idx):
        infinite_id = int(rank[np.nonzero(uniq == inf_label)[0][0]])
    return ClusterDecomposition(labels, sizes, infinite_id)


def wired_counts_per_cell(config, decomp):
    """Number of wired-cluster points per box cell, row-major flat cells."""
    box = config.box
    counts = np.zeros(box.n_cells, dtype=np.int64)
    mask = decomp.infinite_mask()
    if mask.any():
        flat = box.flat_cell_indices(box.cell_indices(config.points[mask]))
        np.add.at(counts, flat, 1)
    return counts


# ---------------------------------------------------------------------------
# Edge sampling
# ---------------------------------------------------------------------------

def edge_probability(phi, dist):
    """P(pair at this distance is an edge) = 1 - exp(-phi)."""
    return -np.expm1(-phi.value(dist))


def sample_edges(config, phi, rng, respect_colors=False, r4=None):
    """Independent edge draw among pairs within the phi cutoff.

    With respect_colors (the conditional law given the authorized event),
    differently coloured pairs have probability 0 and equal-colour pairs keep
    1 - exp(-phi).  r4 sets the shell width for the infinity links and
    defaults to the phi cutoff.
    """
    from .sampling import _as_generator
    gen = _as_generator(rng)
    if respect_colors and not isinstance(config, ColoredConfig):
        raise TypeError("respect_colors requires a coloured configuration")
    if r4 is None:
        r4 = phi.cutoff
    shell = config.shell_mask(r4)
    if config.n < 2 or phi.cutoff == 0:
        return EdgeSet(np.zeros((0, 2), dtype=np.int64), shell)
    ii, jj, dd = config.all_pairs_within(phi.cutoff)
    if len(ii) == 0:
        return EdgeSet(np.zeros((0, 2), dtype=np.int64), shell)
    if respect_colors:
        col = config.colors
        keep = col[ii] == col[jj]
        ii, jj, dd = ii[keep], jj[keep], dd[keep]
    probs = edge_probability(phi, dd)
    take = gen.random(len(dd)) < probs
    return EdgeSet(np.column_stack([ii[take], jj[take]]), shell)


def cached_pairs(config, cutoff, cache):
    """Pair list for the current configuration, reusing cache when the
    configuration has not mutated.  cache is a dict owned by the caller."""
    if cache.get("version") != config.version or cache.get("cutoff") != cutoff:
        cache["pairs"] = config.all_pairs_within(cutoff)
        cache["version"] = config.version
        cache["cutoff"] = cutoff
    return cache["pairs"]


# ---------------------------------------------------------------------------
# Generalized random-cluster weights and conditional edge probabilities
# ---------------------------------------------------------------------------

def cluster_weight_sum(alpha, size):
    """sum_i alpha_i^size, the colour weight of one finite cluster."""
    return float(np.sum(np.asarray(alpha, dtype=float) ** size))


def gcrcm_weight(decomp, alpha, wired_color=1):
    """alpha_wired^{|wired cluster|} * prod over finite clusters of
    sum_i alpha_i^{|C|}; empty product is 1."""
    alpha = np.asarray(alpha, dtype=float)
    w = alpha[wired_color - 1] ** decomp.infinite_size
    for s in decomp.finite_sizes():
        w *= cluster_weight_sum(alpha, int(s))
    return float(w)


def log_gcrcm_weight(decomp, alpha, wired_color=1):
    alpha = np.asarray(alpha, dtype=float)
    lw = decomp.infinite_size * np.log(alpha[wired_color - 1])
    for s in decomp.finite_sizes():
        lw += np.log(cluster_weight_sum(alpha, int(s)))
    return float(lw)


def bernoulli_edge_probability(params):
    """Edge probability of the decoupled Bernoulli comparison process,
    (1 - e^-u) / (q^2 e^-u + 1 - e^-u), applied to pairs within r3."""
    eu = np.exp(-params.u)
    return float((1.0 - eu) / (params.q**2 * eu + 1.0 - eu))


def conditional_edge_probability(config, edges_minus_e, e, phi, alpha,
                                 wired_color=1):
    """P(e is an edge | all other edges) under the generalized random-cluster
    edge law at fixed points.

    Three cases on the connectivity of the endpoints in (points, other edges),
    where connectivity counts paths through the point at infinity:
    already connected; exactly one endpoint wired; both endpoints in finite
    clusters.
    """
    x, y = int(e[0]), int(e[1])
    if x == y:
        raise ValueError("edge endpoints must differ")
    pts = config.points
    dist = float(np.linalg.norm(pts[x] - pts[y]))
    v = phi.value(dist)
    if v == 0.0:
        return 0.0
    e_phi = float(np.exp(-v))           # 0 for a hard core
    p_edge = 1.0 - e_phi
    decomp = decompose_clusters(config, edges_minus_e)
    lx, ly = decomp.labels[x], decomp.labels[y]
    if lx == ly:
        return p_edge
    alpha = np.asarray(alpha, dtype=float)
    a1 = alpha[wired_color - 1]
    inf_id = decomp.infinite_id
    if inf_id is not None and (lx == inf_id or ly == inf_id):
        other = ly if lx == inf_id else lx
        k = int(decomp.sizes[other])
        s = float(np.sum((alpha / a1) ** k))
        return 1.0 / (1.0 + (e_phi / p_edge) * s)
    kx, ky = int(decomp.sizes[lx]), int(decomp.sizes[ly])
    num = cluster_weight_sum(alpha, kx) * cluster_weight_sum(alpha, ky)
    den = cluster_weight_sum(alpha, kx + ky)
    return 1.0 / (1.0 + (e_phi / p_edge) * num / den)


def holley_pointwise_check(config, edges_minus_e, e, params, tol=1e-12):
    """True iff the conditional edge probability dominates the decoupled
    Bernoulli probability; vacuously true beyond r3 where the latter is 0."""
    x, y = int(e[0]), int(e[1])
    dist = float(np.linalg.norm(config.points[x] - config.points[y]))
    if dist > params.r3:
        return True
    cond = conditional_edge_probability(config, edges_minus_e, e,
                                        params.phi, params.alpha)
    return cond >= bernoulli_edge_probability(params) - tol


# ---------------------------------------------------------------------------
# Cluster recolouring (the colours-given-edges conditional)
# ---------------------------------------------------------------------------

def cluster_color_probabilities(alpha, size):
    """P(cluster of this size gets colour i) = alpha_i^size / sum_j alpha_j^size,
    computed stably for large clusters."""
    la = np.log(np.asarray(alpha, dtype=float)) * size
    la -= la.max()
    w = np.exp(la)
    return w / w.sum()


def recolor_clusters(decomp, alpha, rng, wired_color=1):
    """Colour array drawn from the conditional colour law given (points, edges):
    the wired cluster gets the wired colour, each finite cluster independently
    gets colour i with probability proportional to alpha_i^{|C|}."""
    from .sampling import _as_generator
    gen = _as_generator(rng)
    alpha = np.asarray(alpha, dtype=float)
    n_clusters = decomp.n_clusters
    if n_clusters == 0:
        return np.zeros(0, dtype=np.int64)
    la = decomp.sizes[:, None] * np.log(alpha)[None, :]
    la -= la.max(axis=1, keepdims=True)
    cum = np.cumsum(np.exp(la), axis=1)
    u = gen.random(n_clusters)
    colors_of_cluster = 1 + (cum < (u * cum[:, -1])[:, None]).sum(axis=1)
    if decomp.infinite_id is not None:
        colors_of_cluster[decomp.infinite_id] = wired_color
    return colors_of_cluster[decomp.labels]
