"""Exact enumeration of the joint coloured-edge measure on small fixed point
sets; the ground truth for the projection identities, the conditional edge
formula, the pointwise domination bound, and the density-ratio lower bound.

For a fixed point set, the joint weight of a colouring and an edge subset is

    prod_x alpha_{sigma_x} * [shell colours wired] *
    prod_{e in E} (1-e^{-phi_e}) * prod_{e not in E} e^{-phi_e} *
    [every edge joins equal colours].

Pairs with phi = 0 are never edges and pairs with phi = +inf always are, so
only pairs with 0 < phi < inf are enumerated; the background energy enters as
a constant factor for fixed points and is tracked separately.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import (
    EdgeSet,
    UnionFind,
    bernoulli_edge_probability,
    conditional_edge_probability,
    decompose_clusters,
    gcrcm_weight,
)
from .model import ColoredConfig, PointConfig, hamiltonian_psi
from .sampling import RngStream

MAX_POINTS = 8
MAX_CANDIDATE_PAIRS = 24
MAX_TABLE_ENTRIES = 8_000_000


@dataclass
class PairData:
    """Candidate pairs split by the edge-probability regime."""

    all_pairs: np.ndarray      # (P, 2) pairs with phi > 0
    phis: np.ndarray           # (P,) potential values
    random_idx: np.ndarray     # indices into all_pairs with 0 < phi < inf
    forced_idx: np.ndarray     # indices with phi = inf (edges almost surely)


def _candidate_pairs(config, phi):
    if config.n < 2 or phi.cutoff == 0:
        empty = np.zeros((0, 2), dtype=np.int64)
        return PairData(empty, np.zeros(0), np.zeros(0, np.int64), np.zeros(0, np.int64))
    ii, jj, dd = config.all_pairs_within(phi.cutoff)
    vals = phi.value(dd)
    keep = vals > 0
    pairs = np.column_stack([ii[keep], jj[keep]])
    vals = vals[keep]
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs, vals = pairs[order], vals[order]
    random_idx = np.nonzero(np.isfinite(vals))[0]
    forced_idx = np.nonzero(np.isinf(vals))[0]
    return PairData(pairs, vals, random_idx, forced_idx)


def _all_colorings(n, q, shell, wired_color=1):
    """Colourings (rows) with shell points pinned to the wired colour."""
    free = np.nonzero(~shell)[0]
    if len(free) == 0:
        return np.full((1, n), wired_color, dtype=np.int64)
    grids = np.array(list(itertools.product(range(1, q + 1), repeat=len(free))),
                     dtype=np.int64)
    out = np.full((len(grids), n), wired_color, dtype=np.int64)
    out[:, free] = grids
    return out


@dataclass
class EnumerationTable:
    """Joint weights over colourings x edge subsets for one fixed point set.

    colorings keeps only rows with positive total weight (shell pinned,
    hard pairs monochromatic); the weight matrix is w_col x w_edge masked by
    the edge-colour compatibility of each (colouring, subset) pair.
    """

    config: PointConfig
    params: object
    wired_color: int
    shell: np.ndarray
    pair_data: PairData
    colorings: np.ndarray          # (S, n)
    w_col: np.ndarray              # (S,)
    w_edge: np.ndarray             # (M,)
    in_bits: np.ndarray            # (M, m) over random pairs
    compat: np.ndarray             # (S, M) bool
    weight: np.ndarray             # (S, M)
    h_phi: np.ndarray              # (S,) colour-repulsion energy per colouring
    decomps: list                  # per edge subset
    gcrcm: np.ndarray              # (M,)
    psi_energy: float
    cell_of: np.ndarray            # (n,) flat cell index per point

    @property
    def total(self):
        return float(self.weight.sum())

    def color_marginal(self):
        return self.weight.sum(axis=1)

    def edge_marginal(self):
        return self.weight.sum(axis=0)

    def edge_set(self, m_index, extra_pair=None):
        """EdgeSet for one enumerated subset: selected random pairs plus all
        forced pairs (plus optionally one extra pair)."""
        pd = self.pair_data
        sel = pd.all_pairs[pd.random_idx[self.in_bits[m_index]]]
        forced = pd.all_pairs[pd.forced_idx]
        rows = [sel, forced]
        if extra_pair is not None:
            rows.append(np.asarray(extra_pair, dtype=np.int64).reshape(1, 2))
        pairs = np.vstack(rows) if any(len(r) for r in rows) else np.zeros((0, 2), np.int64)
        return EdgeSet(pairs, self.shell)


def enumerate_joint(config, params, wired_color=1):
    """Build the full joint table for a fixed point configuration.

    Enforces the instance limits (points, candidate pairs, table size) and
    raises ValueError for anything larger.
    """
    n = config.n
    if n > MAX_POINTS:
        raise ValueError(f"enumeration supports up to {MAX_POINTS} points")
    pd = _candidate_pairs(config, params.phi)
    if len(pd.all_pairs) > MAX_CANDIDATE_PAIRS:
        raise ValueError(
            f"enumeration supports up to {MAX_CANDIDATE_PAIRS} candidate pairs")
    shell = config.shell_mask(params.r4)
    q = params.q
    colorings = _all_colorings(n, q, shell, wired_color)

    # hard pairs force equal colours on every positive-weight colouring
    forced_pairs = pd.all_pairs[pd.forced_idx]
    ok = np.ones(len(colorings), dtype=bool)
    for i, j in forced_pairs:
        ok &= colorings[:, i] == colorings[:, j]
    colorings = colorings[ok]
    S = len(colorings)

    m = len(pd.random_idx)
    M = 1 << m
    if S * M > MAX_TABLE_ENTRIES:
        raise ValueError("instance too large to enumerate")

    alpha = params.alpha
    w_col = (np.prod(alpha[colorings - 1], axis=1) if n
             else np.ones(max(S, 1)))
    if n == 0:
        colorings = np.zeros((1, 0), dtype=np.int64)
        w_col = np.ones(1)
        S = 1

    rnd_pairs = pd.all_pairs[pd.random_idx]
    rnd_phis = pd.phis[pd.random_idx]
    in_bits = ((np.arange(M)[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)
    log_p = np.log(-np.expm1(-rnd_phis)) if m else np.zeros(0)
    log_np = -rnd_phis
    w_edge = np.exp(in_bits @ log_p + (~in_bits) @ log_np) if m else np.ones(M)

    if m and S:
        same = colorings[:, rnd_pairs[:, 0]] == colorings[:, rnd_pairs[:, 1]]
        bad = (~same).astype(np.int16) @ in_bits.T.astype(np.int16)
        compat = bad == 0
    else:
        compat = np.ones((S, M), dtype=bool)
    weight = w_col[:, None] * w_edge[None, :] * compat

    # colour-repulsion energy per colouring over all pairs within the cutoff
    h_phi = np.zeros(S)
    if n >= 2 and params.phi.cutoff > 0:
        ii, jj, dd = config.all_pairs_within(params.phi.cutoff)
        vals = params.phi.value(dd)
        for k in range(len(ii)):
            diff = colorings[:, ii[k]] != colorings[:, jj[k]]
            h_phi = h_phi + np.where(diff, vals[k], 0.0)

    decomps = []
    gc = np.empty(M)
    for mi in range(M):
        es = _edge_set_static(pd, in_bits[mi], shell)
        dec = decompose_clusters(n, es)
        decomps.append(dec)
        gc[mi] = gcrcm_weight(dec, alpha, wired_color)

    psi_energy = hamiltonian_psi(config, params)
    box = config.box
    cell_of = (box.flat_cell_indices(box.cell_indices(config.points))
               if n else np.zeros(0, np.int64))
    return EnumerationTable(config, params, wired_color, shell, pd, colorings,
                            w_col, w_edge, in_bits, compat, weight, h_phi,
                            decomps, gc, psi_energy, cell_of)


def _edge_set_static(pd, bits, shell):
    sel = pd.all_pairs[pd.random_idx[bits]]
    forced = pd.all_pairs[pd.forced_idx]
    pairs = np.vstack([sel, forced]) if (len(sel) or len(forced)) else np.zeros((0, 2), np.int64)
    return EdgeSet(pairs, shell)


# ---------------------------------------------------------------------------
# Verification reports
# ---------------------------------------------------------------------------

@dataclass
class VerifyReport:
    name: str
    max_rel_error: float
    passed: bool
    detail: str = ""

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return f"{self.name:32s} max_rel_err={self.max_rel_error:.3e} {status} {self.detail}"


def _rel_error(actual, expected, scale):
    denom = max(scale, 1e-300)
    return float(np.max(np.abs(actual - expected)) / denom) if np.size(actual) else 0.0


def verify_potts_projection(table, tol=1e-12):
    """Colour marginal of the joint table against the wired colour density:
    summing the edge measure over compatible subsets must give exactly
    exp(-H_phi) per colouring."""
    actual = table.color_marginal()
    with np.errstate(over="ignore"):
        expected = table.w_col * np.exp(-table.h_phi)
    scale = max(float(expected.max()), float(actual.max()))
    err = _rel_error(actual, expected, scale)
    return VerifyReport("potts projection", err, err < tol,
                        f"S={len(actual)}")


def verify_gcrcm_projection(table, tol=1e-12):
    """Edge marginal of the joint table against the cluster-weighted edge
    measure: summing colours at fixed edges gives the wired-cluster colour
    weight times the edge probability factor."""
    actual = table.edge_marginal()
    expected = table.gcrcm * table.w_edge
    scale = max(float(expected.max()), float(actual.max()))
    err = _rel_error(actual, expected, scale)
    return VerifyReport("random-cluster projection", err, err < tol,
                        f"M={len(actual)}")


def verify_color_connectivity_identity(table, color, tol=1e-12):
    """Expected (wired-colour count minus tied-colour count) equals expected
    wired-cluster count, per box cell, under the normalized table."""
    params = table.params
    w = table.wired_color
    if color == w:
        raise ValueError("pick a colour different from the wired colour")
    if abs(params.alpha[color - 1] - params.alpha[w - 1]) > 1e-12:
        raise ValueError("identity needs a colour tied with the wired colour")
    n_cells = table.config.box.n_cells
    n = table.config.n
    S = len(table.colorings)
    cell_onehot = np.zeros((n, n_cells))
    if n:
        cell_onehot[np.arange(n), table.cell_of] = 1.0
    count_w = (table.colorings == w).astype(float) @ cell_onehot
    count_i = (table.colorings == color).astype(float) @ cell_onehot
    wS = table.color_marginal()
    lhs = wS @ (count_w - count_i)

    wM = table.edge_marginal()
    wired_counts = np.zeros((len(table.decomps), n_cells))
    for mi, dec in enumerate(table.decomps):
        mask = dec.infinite_mask()
        if mask.any():
            np.add.at(wired_counts[mi], table.cell_of[mask], 1.0)
    rhs = wM @ wired_counts

    scale = max(table.total, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    err = _rel_error(lhs, rhs, scale)
    return VerifyReport(f"imbalance=connectivity (colour {color})", err,
                        err < tol, f"cells={n_cells}")


# ---------------------------------------------------------------------------
# Density ratio (edge enumeration only; colours summed out analytically)
# ---------------------------------------------------------------------------

def _edge_only_enumeration(config, params, wired_color=1):
    """(w_edge, gcrcm weights) over edge subsets of a fixed point set."""
    n = config.n
    if n > MAX_POINTS + 1:
        raise ValueError("too many points")
    pd = _candidate_pairs(config, params.phi)
    if len(pd.all_pairs) > MAX_CANDIDATE_PAIRS:
        raise ValueError("too many candidate pairs")
    shell = config.shell_mask(params.r4)
    m = len(pd.random_idx)
    M = 1 << m
    rnd_phis = pd.phis[pd.random_idx]
    in_bits = ((np.arange(M)[:, None] >> np.arange(m)[None, :]) & 1).astype(bool)
    log_p = np.log(-np.expm1(-rnd_phis)) if m else np.zeros(0)
    w_edge = np.exp(in_bits @ log_p + (~in_bits) @ (-rnd_phis)) if m else np.ones(M)
    gc = np.empty(M)
    for mi in range(M):
        es = _edge_set_static(pd, in_bits[mi], shell)
        gc[mi] = gcrcm_weight(decompose_clusters(n, es), params.alpha, wired_color)
    return w_edge, gc


def compute_h(config, params, added_point=None, wired_color=1):
    """Unnormalized density of the point marginal of the wired random-cluster
    measure: sum over edge subsets of cluster weight times edge probability.

    With added_point, returns the ratio h(points + x) / h(points).
    """
    w_edge, gc = _edge_only_enumeration(config, params, wired_color)
    h = float(w_edge @ gc)
    if added_point is None:
        return h
    pts = np.vstack([config.points, np.asarray(added_point, dtype=float)])
    bigger = PointConfig(config.box, pts)
    w_edge2, gc2 = _edge_only_enumeration(bigger, params, wired_color)
    return float(w_edge2 @ gc2) / h


def papangelou_lower_bound(params, x, box):
    """Enumerable lower bound for the density ratio at an added point:
    (alpha_wired / q^k) * gamma_lb^k with k cubes of diameter r3 covering the
    interaction ball.  Weaker than the sharp constant, which needs the exact
    infimum of random-graph connectivity."""
    from .lattice import gamma_lower_bound

    d = params.dimension
    side = params.r3 / math.sqrt(d)
    k = int(math.ceil(2 * params.r4 / side)) ** d
    ptilde = bernoulli_edge_probability(params)
    glb = gamma_lower_bound(ptilde)
    return params.alpha[0] / params.q**k * glb**k, k


# ---------------------------------------------------------------------------
# Conditional edge probability cross-checks
# ---------------------------------------------------------------------------

def _subset_weight(n, pd, shell, present_mask, alpha, wired_color):
    """Full unnormalized weight of one edge subset over candidate pairs:
    cluster weight times the product of per-pair edge factors."""
    pairs = pd.all_pairs[present_mask]
    es = EdgeSet(pairs, shell) if len(pairs) else EdgeSet(np.zeros((0, 2), np.int64), shell)
    dec = decompose_clusters(n, es)
    logw = 0.0
    for k in range(len(pd.phis)):
        v = pd.phis[k]
        if present_mask[k]:
            p = -math.expm1(-v)
            if p == 0.0:
                return 0.0
            logw += math.log(p)
        else:
            if not np.isfinite(v):
                return 0.0
            logw += -v
    return gcrcm_weight(dec, alpha, wired_color) * math.exp(logw)


def enumerate_conditionals(config, params, wired_color=1):
    """Exhaustive (edge, other-edges) sweep on a small instance.

    Yields dicts with the enumerated conditional probability, the closed-form
    value, the pair distance, and the decoupled Bernoulli level, for every
    candidate edge and every subset of the remaining random pairs (hard pairs
    stay present: subsets dropping them have zero weight on both sides).
    """
    n = config.n
    pd = _candidate_pairs(config, params.phi)
    shell = config.shell_mask(params.r4)
    P = len(pd.all_pairs)
    alpha = params.alpha
    pbar = bernoulli_edge_probability(params)
    pts = config.points
    for e_idx in range(P):
        others_random = [k for k in pd.random_idx if k != e_idx]
        mo = len(others_random)
        for bits in range(1 << mo):
            present = np.zeros(P, dtype=bool)
            present[pd.forced_idx] = True
            present[e_idx] = False
            for t in range(mo):
                if (bits >> t) & 1:
                    present[others_random[t]] = True
            w_out = _subset_weight(n, pd, shell, present, alpha, wired_color)
            present[e_idx] = True
            w_in = _subset_weight(n, pd, shell, present, alpha, wired_color)
            present[e_idx] = False
            if w_in + w_out == 0.0:
                continue
            enumerated = w_in / (w_in + w_out)
            other_pairs = pd.all_pairs[present]
            edges_minus_e = EdgeSet(other_pairs, shell)
            e = pd.all_pairs[e_idx]
            formula = conditional_edge_probability(config, edges_minus_e, e,
                                                   params.phi, alpha, wired_color)
            dist = float(np.linalg.norm(pts[e[0]] - pts[e[1]]))
            yield {
                "edge": (int(e[0]), int(e[1])),
                "others_bits": bits,
                "enumerated": enumerated,
                "formula": formula,
                "dist": dist,
                "pbar": pbar,
                "within_r3": dist <= params.r3,
            }


# ---------------------------------------------------------------------------
# Fixture corpus
# ---------------------------------------------------------------------------

@dataclass
class CorpusInstance:
    name: str
    params: object
    box_cells: int
    points: np.ndarray

    def config(self):
        box = self.params.box(self.box_cells)
        return PointConfig(box, self.points)


def _phi_family(tag):
    from .potentials import PairPotential

    if tag == "hard":
        return PairPotential.hard_core(1.0), np.inf, 1.0, 1.0
    if tag == "soft":
        phi = PairPotential.step([1.0, 1.3], [1.2, 0.4])
        return phi, 1.2, 1.0, 1.3
    if tag == "mixed":
        phi = PairPotential.step([0.35, 1.0], [np.inf, 0.9])
        return phi, 0.9, 1.0, 1.0
    raise ValueError(tag)


def _psi_family(tag):
    from .potentials import PairPotential

    if tag == "zero":
        return PairPotential.zero(), 0.0, 0.0
    if tag == "core":
        # positive short-range background, exercises the psi bookkeeping
        return PairPotential.step([0.15], [0.5]), 0.1, 0.15
    raise ValueError(tag)


_ALPHAS = {
    "sym2": [0.5, 0.5],
    "asym2": [0.75, 0.25],
    "sym3": [1 / 3, 1 / 3, 1 / 3],
    "tied3": [0.4, 0.4, 0.2],
    "asym3": [0.5, 0.3, 0.2],
}


def _place_points(rng, box, n, shell_width, mode, min_gap, max_pairs, params,
                  tries=4000):
    """Rejection placement meeting a target candidate-pair budget.

    mode: interior (all points away from the shell), shell (at least one shell
    point), chain (first point in the shell, later points near the previous).
    """
    gen = rng.generator
    for _ in range(tries):
        pts = []
        ok = True
        for k in range(n):
            for _ in range(200):
                if mode == "chain" and k > 0:
                    x = pts[k - 1] + (gen.random(box.d) * 2 - 1) * 0.9 * params.r3
                else:
                    x = box.sample_uniform(gen, 1)[0]
                if not box.contains(x):
                    continue
                bd = box.boundary_distance(x)
                if mode == "interior" and bd <= shell_width + 0.05:
                    continue
                if mode in ("shell", "chain") and k == 0 and bd > shell_width:
                    continue
                if pts and min(np.linalg.norm(x - p) for p in pts) < min_gap:
                    continue
                pts.append(x)
                break
            else:
                ok = False
                break
        if not ok:
            continue
        pts = np.array(pts).reshape(n, box.d)
        cfg = PointConfig(box, pts)
        pd = _candidate_pairs(cfg, params.phi)
        if len(pd.all_pairs) > max_pairs:
            continue
        if len(pd.random_idx) > 13:
            continue
        return pts
    raise RuntimeError("could not place a corpus instance")


def build_corpus(seed=20240811):
    """Deterministic 50-instance verification corpus spanning interior-only
    and shell-touching geometry, hard/soft/mixed colour repulsion, two and
    three colours, symmetric and asymmetric proportions."""
    from .model import ModelParams

    rng = RngStream(seed)
    specs = []
    layout = [
        # (phi, psi, alpha, mode, n, d, box_cells)
        ("hard", "zero", "sym2", "interior", 0, 2, 9),
        ("hard", "zero", "sym2", "interior", 1, 2, 9),
        ("hard", "zero", "sym2", "shell", 1, 2, 9),
        ("hard", "zero", "sym2", "interior", 3, 2, 9),
        ("hard", "zero", "sym2", "shell", 3, 2, 9),
        ("hard", "zero", "sym2", "chain", 4, 2, 9),
        ("hard", "zero", "sym2", "interior", 5, 2, 11),
        ("hard", "zero", "sym2", "shell", 6, 2, 11),
        ("hard", "zero", "sym2", "chain", 7, 2, 11),
        ("hard", "zero", "sym2", "shell", 8, 2, 13),
        ("soft", "zero", "sym2", "interior", 2, 2, 9),
        ("soft", "zero", "sym2", "shell", 2, 2, 9),
        ("soft", "zero", "sym2", "interior", 4, 2, 9),
        ("soft", "zero", "sym2", "shell", 4, 2, 9),
        ("soft", "zero", "sym2", "chain", 5, 2, 11),
        ("soft", "zero", "sym2", "interior", 6, 2, 11),
        ("soft", "zero", "sym2", "shell", 6, 2, 11),
        ("soft", "zero", "sym2", "shell", 8, 2, 13),
        ("mixed", "zero", "sym2", "interior", 3, 2, 9),
        ("mixed", "zero", "sym2", "shell", 4, 2, 9),
        ("mixed", "zero", "sym2", "chain", 5, 2, 11),
        ("mixed", "zero", "sym2", "shell", 6, 2, 11),
        ("hard", "zero", "asym2", "interior", 2, 2, 9),
        ("hard", "zero", "asym2", "shell", 3, 2, 9),
        ("hard", "zero", "asym2", "chain", 5, 2, 11),
        ("soft", "zero", "asym2", "interior", 4, 2, 9),
        ("soft", "zero", "asym2", "shell", 5, 2, 11),
        ("mixed", "zero", "asym2", "shell", 4, 2, 9),
        ("hard", "zero", "sym3", "interior", 2, 2, 9),
        ("hard", "zero", "sym3", "shell", 3, 2, 9),
        ("hard", "zero", "sym3", "chain", 4, 2, 9),
        ("hard", "zero", "sym3", "shell", 5, 2, 11),
        ("soft", "zero", "sym3", "interior", 3, 2, 9),
        ("soft", "zero", "sym3", "shell", 4, 2, 9),
        ("soft", "zero", "sym3", "chain", 5, 2, 11),
        ("mixed", "zero", "sym3", "shell", 4, 2, 9),
        ("hard", "zero", "tied3", "interior", 3, 2, 9),
        ("hard", "zero", "tied3", "shell", 4, 2, 9),
        ("hard", "zero", "tied3", "chain", 5, 2, 11),
        ("soft", "zero", "tied3", "shell", 4, 2, 9),
        ("soft", "zero", "tied3", "chain", 6, 2, 11),
        ("hard", "zero", "asym3", "interior", 3, 2, 9),
        ("hard", "zero", "asym3", "shell", 4, 2, 9),
        ("soft", "zero", "asym3", "shell", 5, 2, 11),
        ("hard", "core", "sym2", "shell", 4, 2, 9),
        ("soft", "core", "sym2", "interior", 4, 2, 9),
        ("soft", "core", "tied3", "shell", 4, 2, 9),
        ("hard", "zero", "sym2", "shell", 3, 3, 7),
        ("hard", "zero", "sym3", "shell", 3, 3, 7),
        ("soft", "zero", "sym2", "chain", 4, 3, 7),
    ]
    assert len(layout) == 50
    out = []
    for idx, (ptag, stag, atag, mode, n, d, cells) in enumerate(layout):
        phi, u, r3, r4 = _phi_family(ptag)
        psi, r1, r2 = _psi_family(stag)
        alpha = np.array(_ALPHAS[atag])
        params = ModelParams(
            dimension=d, activity=1.0, q=len(alpha), alpha=alpha, u=u,
            r1=r1, r2=r2, r3=r3, r4=r4, phi=phi, psi=psi, pstar=0.9, nstar=1)
        box = params.box(cells)
        min_gap = 0.45 if ptag != "mixed" else 0.32
        pts = (_place_points(rng.substream(idx), box, n, params.r4, mode,
                             min_gap, max_pairs=11, params=params)
               if n else np.zeros((0, d)))
        name = f"{idx:03d}_{ptag}_{stag}_{atag}_{mode}_n{n}_d{d}"
        out.append(CorpusInstance(name, params, cells, pts))
    return out


def corpus_instance_to_text(inst):
    from .configfile import params_to_ini

    header = params_to_ini(inst.params)
    lines = [f"# {ln}" if ln else "#" for ln in header.strip().splitlines()]
    lines.append(f"# box_cells = {inst.box_cells}")
    lines.append(f"# name = {inst.name}")
    lines.append(",".join(f"x{k+1}" for k in range(inst.params.dimension)))
    for p in inst.points:
        lines.append(",".join(repr(float(v)) for v in p))
    return "\n".join(lines) + "\n"


def corpus_instance_from_text(text):
    from .configfile import params_from_ini

    header, body = [], []
    for ln in text.splitlines():
        if ln.startswith("#"):
            header.append(ln[1:].strip())
        elif ln.strip():
            body.append(ln)
    extras = {}
    ini_lines = []
    for ln in header:
        key = ln.split("=")[0].strip() if "=" in ln else ""
        if key in ("box_cells", "name"):
            extras[key] = ln.split("=", 1)[1].strip()
        else:
            ini_lines.append(ln)
    params = params_from_ini("\n".join(ini_lines))
    pts = []
    for ln in body[1:]:
        pts.append([float(t) for t in ln.split(",")])
    pts = np.array(pts, dtype=float).reshape(-1, params.dimension)
    return CorpusInstance(extras.get("name", ""), params,
                          int(extras["box_cells"]), pts)


def write_corpus(directory, corpus=None):
    import pathlib

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus = corpus if corpus is not None else build_corpus()
    for inst in corpus:
        (directory / f"{inst.name}.csv").write_text(corpus_instance_to_text(inst))
    return corpus


def load_corpus(directory=None):
    """Load the packaged fixture corpus (or another directory of fixtures)."""
    import pathlib

    if directory is None:
        directory = pathlib.Path(__file__).parent / "corpus"
    directory = pathlib.Path(directory)
    out = []
    for path in sorted(directory.glob("*.csv")):
        out.append(corpus_instance_from_text(path.read_text()))
    return out


def verify_corpus(corpus=None, tol=1e-12):
    """Run the three projection identities over the corpus.

    Returns (rows, all_passed); the imbalance identity runs for every colour
    tied with the wired colour and is recorded as skipped when none exists.
    """
    corpus = corpus if corpus is not None else load_corpus()
    rows = []
    ok = True
    for inst in corpus:
        table = enumerate_joint(inst.config(), inst.params)
        reports = [verify_potts_projection(table, tol),
                   verify_gcrcm_projection(table, tol)]
        alpha = inst.params.alpha
        tied = [c for c in range(2, inst.params.q + 1)
                if abs(alpha[c - 1] - alpha[0]) <= 1e-12]
        for c in tied:
            reports.append(verify_color_connectivity_identity(table, c, tol))
        skipped = not tied
        ok &= all(r.passed for r in reports)
        rows.append({"name": inst.name, "reports": reports,
                     "identity_skipped": skipped,
                     "total_weight": table.total})
    return rows, ok
