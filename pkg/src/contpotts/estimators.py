"""Observables and experiments on chain readouts: per-cell colour counts,
wired connectivity, the imbalance/connectivity identity in Monte Carlo form,
cell occupation statistics, and the symmetry-breaking scan.

Error bars come from batch means with an automatic doubling batch size, so
autocorrelated sweeps are handled without storing full time series; the
integrated autocorrelation time is reported alongside.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coupling import decompose_clusters
from .lattice import coarse_grain
from .mcmc import Schedule, run_chain
from .sampling import RngStream

Z_ONE_SIDED_99 = 2.3263478740408408
Z_TWO_SIDED_99 = 2.5758293035489004


class BatchSeries:
    """Batch-means accumulator with doubling batch size.

    Stores at most ``cap`` completed batch means of the given array shape;
    when full, adjacent batches are pairwise averaged and the batch size
    doubles.  Gives stderr of the overall mean and the integrated
    autocorrelation time relative to a raw per-sample variance.
    """

    def __init__(self, shape, cap=64):
        if cap % 2:
            raise ValueError("cap must be even")
        self.shape = tuple(shape)
        self.cap = cap
        self.batch_size = 1
        self.means = []
        self._partial = np.zeros(self.shape)
        self._fill = 0

    def add(self, x):
        self._partial += x
        self._fill += 1
        if self._fill == self.batch_size:
            self.means.append(self._partial / self.batch_size)
            self._partial = np.zeros(self.shape)
            self._fill = 0
            if len(self.means) == self.cap:
                self._coarsen()

    def _coarsen(self):
        it = iter(self.means)
        self.means = [(a + b) / 2.0 for a, b in zip(it, it)]
        self.batch_size *= 2

    def n_batches(self):
        return len(self.means)

    def stderr(self):
        """Standard error of the overall mean, per component."""
        k = len(self.means)
        if k < 2:
            return np.full(self.shape, np.inf)
        m = np.stack(self.means)
        return m.std(axis=0, ddof=1) / math.sqrt(k)

    def batch_variance(self):
        k = len(self.means)
        if k < 2:
            return np.full(self.shape, np.nan)
        return np.stack(self.means).var(axis=0, ddof=1)

    def tau_int(self, raw_variance):
        """Integrated autocorrelation time estimate B * var(batch)/var(raw)."""
        bv = self.batch_variance()
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = self.batch_size * bv / raw_variance
        return np.where(raw_variance > 0, np.maximum(tau, 0.0), 0.0)

    def merge(self, other):
        """Combine completed batches of two accumulators (partials dropped on
        both sides, keeping the operation order-independent)."""
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        a_means, a_B = list(self.means), self.batch_size
        b_means, b_B = list(other.means), other.batch_size

        def coarsen(means, B, target):
            while B < target:
                if len(means) % 2:
                    means = means[:-1]
                it = iter(means)
                means = [(x + y) / 2.0 for x, y in zip(it, it)]
                B *= 2
            return means, B

        target = max(a_B, b_B)
        a_means, _ = coarsen(a_means, a_B, target)
        b_means, _ = coarsen(b_means, b_B, target)
        out = BatchSeries(self.shape, self.cap)
        out.batch_size = target
        out.means = a_means + b_means
        out._fill = 0
        while len(out.means) >= out.cap:
            out._coarsen()
        return out


class ObservableAccumulator:
    """Per-cell running sums for colour counts, wired connectivity, good-cell
    flags, and the imbalance-minus-connectivity differences, with batch-means
    machinery for the quantities needing error bars."""

    def __init__(self, box, params, wired_color=1, track_good=True):
        self.box = box
        self.params = params
        self.wired_color = wired_color
        self.track_good = track_good
        cells, q = box.n_cells, params.q
        self.q = q
        self.other_colors = [c for c in range(1, q + 1) if c != wired_color]
        self.count = 0
        self.sum_counts = np.zeros((cells, q))
        self.sumsq_counts = np.zeros((cells, q))
        self.sum_wired = np.zeros(cells)
        self.sumsq_wired = np.zeros(cells)
        self.sum_good = np.zeros(cells)
        self.sum_occupied = np.zeros(cells)  # indicator N_cell >= nstar
        self.sum_diff = np.zeros((cells, q - 1))
        self.sumsq_diff = np.zeros((cells, q - 1))
        self.interior = box.interior_cell_mask(params.r4)
        self.batch_diff = BatchSeries((cells, q - 1))
        self.batch_imb_interior = BatchSeries((q - 1,))
        self.batch_wired = BatchSeries((cells,))

    # raw moments ----------------------------------------------------------

    def mean_counts(self):
        return self.sum_counts / max(self.count, 1)

    def mean_wired(self):
        return self.sum_wired / max(self.count, 1)

    def mean_diff(self):
        return self.sum_diff / max(self.count, 1)

    def raw_variance_diff(self):
        m = self.sum_diff / max(self.count, 1)
        return self.sumsq_diff / max(self.count, 1) - m**2

    def merge(self, other):
        if self.box is not other.box and self.box.n_cells != other.box.n_cells:
            raise ValueError("accumulators cover different boxes")
        if self.wired_color != other.wired_color:
            raise ValueError("accumulators have different wired colours")
        out = ObservableAccumulator(self.box, self.params, self.wired_color,
                                    self.track_good)
        out.count = self.count + other.count
        for name in ("sum_counts", "sumsq_counts", "sum_wired", "sumsq_wired",
                     "sum_good", "sum_occupied", "sum_diff", "sumsq_diff"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        out.batch_diff = self.batch_diff.merge(other.batch_diff)
        out.batch_imb_interior = self.batch_imb_interior.merge(other.batch_imb_interior)
        out.batch_wired = self.batch_wired.merge(other.batch_wired)
        return out


def record(readout, acc):
    """Tally one joint readout into the accumulator and return it."""
    box = acc.box
    q = acc.q
    pts, cols, edges = readout.points, readout.colors, readout.edges
    cells = box.n_cells
    counts = np.zeros((cells, q))
    if len(cols):
        flat = box.flat_cell_indices(box.cell_indices(pts))
        np.add.at(counts, (flat, np.asarray(cols) - 1), 1.0)
    decomp = decompose_clusters(len(cols), edges)
    wired = np.zeros(cells)
    mask = decomp.infinite_mask()
    if mask.any():
        np.add.at(wired, box.flat_cell_indices(box.cell_indices(pts[mask])), 1.0)

    acc.count += 1
    acc.sum_counts += counts
    acc.sumsq_counts += counts**2
    acc.sum_wired += wired
    acc.sumsq_wired += wired**2
    acc.sum_occupied += counts.sum(axis=1) >= acc.params.nstar
    if acc.track_good:
        cg = coarse_grain(readout, edges, acc.params)
        acc.sum_good += cg.good

    w = acc.wired_color - 1
    others = [c - 1 for c in acc.other_colors]
    imb = counts[:, [w] * len(others)] - counts[:, others]
    diff = imb - wired[:, None]
    acc.sum_diff += diff
    acc.sumsq_diff += diff**2
    acc.batch_diff.add(diff)
    acc.batch_wired.add(wired)
    if acc.interior.any():
        acc.batch_imb_interior.add(imb[acc.interior].mean(axis=0))
    return acc


@dataclass
class IdentityReport:
    color: int
    zscores: np.ndarray
    max_abs_z: float
    passed: bool
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int
    threshold: float = 4.0

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"identity colour {self.color}: max|z|={self.max_abs_z:.3f} "
                f"over {len(self.zscores)} cells, {self.n_samples} samples -> {status}")


def identity_test(acc, color, scope="all", threshold=4.0):
    """Per-cell z-scores of (mean imbalance - mean wired connectivity).

    Requires the colour to tie the wired colour's proportion; the difference
    then has exact mean zero per cell under the joint measure.
    """
    alpha = acc.params.alpha
    if color == acc.wired_color:
        raise ValueError("pick a colour different from the wired colour")
    if abs(alpha[color - 1] - alpha[acc.wired_color - 1]) > 1e-12:
        raise ValueError("identity needs a colour tied with the wired colour")
    if acc.batch_diff.n_batches() < 2:
        raise ValueError("not enough samples for a batch-means error estimate")
    pos = acc.other_colors.index(color)
    mean = acc.mean_diff()[:, pos]
    stderr = acc.batch_diff.stderr()[:, pos]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(stderr > 0, mean / stderr,
                     np.where(np.abs(mean) < 1e-12, 0.0, np.inf))
    if scope == "interior":
        sel = acc.interior
    elif scope == "all":
        sel = np.ones(len(z), dtype=bool)
    else:
        raise ValueError("scope must be 'all' or 'interior'")
    zsel = z[sel]
    max_abs = float(np.max(np.abs(zsel))) if len(zsel) else 0.0
    return IdentityReport(color, zsel, max_abs, bool(max_abs < threshold),
                          mean[sel], stderr[sel], acc.count, threshold)


def count_max_colors(alpha, tol=1e-12):
    """Number of colours attaining the maximal proportion."""
    alpha = np.asarray(alpha, dtype=float)
    return int(np.sum(alpha >= alpha.max() - tol))


# ---------------------------------------------------------------------------
# Chain orchestration
# ---------------------------------------------------------------------------

def _chain_job(args):
    (params, box_cells, schedule, seed, chain_index, wired_color,
     keep_readouts, track_good) = args
    box = params.box(box_cells)
    rng = RngStream(seed).substream(wired_color, chain_index)
    acc = ObservableAccumulator(box, params, wired_color, track_good)
    readouts = [] if keep_readouts else None
    for ro in run_chain(params, box, schedule, rng, wired_color, chain_index):
        record(ro, acc)
        if keep_readouts:
            readouts.append(ro)
    return acc, readouts


def run_chains(params, box_cells, schedule, seed, chains, wired_color=1,
               workers=1, keep_readouts=False, track_good=True):
    """Run independent chains, merge their accumulators, and optionally return
    the raw readouts in chain order."""
    jobs = [(params, box_cells, schedule, seed, k, wired_color, keep_readouts,
             track_good) for k in range(chains)]
    if workers > 1 and chains > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chain_job, jobs))
    else:
        results = [_chain_job(j) for j in jobs]
    acc = results[0][0]
    for other, _ in results[1:]:
        acc = acc.merge(other)
    readouts = None
    if keep_readouts:
        readouts = [ro for _, ros in results for ro in ros]
    return acc, readouts


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass
class OccupationReport:
    rows: list
    threshold: float
    first_z_meeting: float | None

    def __str__(self):
        lines = [f"target sqrt(pstar)={self.threshold:.4f}"]
        for r in self.rows:
            lines.append(f"z={r['z']:<8g} min interior P(N>=n*)={r['min_prob']:.4f} "
                         f"(+-{r['stderr']:.4f})")
        lines.append(f"threshold first met at z={self.first_z_meeting}")
        return "\n".join(lines)


def occupation_test(params, box_cells, z_grid, runs, seed, chains=2,
                    workers=1):
    """Minimum over interior cells of P(N_cell >= nstar) under the point
    marginal, estimated per activity in the grid; reports the first grid
    activity meeting sqrt(pstar)."""
    threshold = math.sqrt(params.pstar)
    rows = []
    first = None
    for zi, z in enumerate(sorted(z_grid)):
        pz = params.replace(activity=z)
        box = pz.box(box_cells)
        per_chain = max(runs // chains, 1)
        bd = max(20, int(2 * z * box.volume))
        sched = Schedule(sweeps=40 + 2 * per_chain, burn_in=40,
                         readout_every=2, bd_steps_per_sweep=bd)
        acc, _ = run_chains(pz, box_cells, sched, seed + zi, chains,
                            workers=workers, track_good=False)
        prob = acc.sum_occupied / max(acc.count, 1)
        interior_probs = prob[acc.interior]
        pmin = float(interior_probs.min()) if len(interior_probs) else 0.0
        stderr = math.sqrt(max(pmin * (1 - pmin), 1e-12) / max(acc.count, 1))
        rows.append({"z": z, "min_prob": pmin, "stderr": stderr,
                     "met": pmin >= threshold, "samples": acc.count})
        if first is None and pmin >= threshold:
            first = z
    return OccupationReport(rows, threshold, first)


@dataclass
class PhaseRow:
    box_cells: int
    z: float
    wired_color: int
    mean: float
    stderr: float
    lcb99: float
    tau: float
    n_samples: int
    cell_means: np.ndarray = field(repr=False, default=None)
    cell_stderr: np.ndarray = field(repr=False, default=None)


@dataclass
class PhaseReport:
    rows: list
    verdicts: dict
    maximal_colors: list

    def row(self, box_cells, z, wired_color):
        for r in self.rows:
            if (r.box_cells, r.z, r.wired_color) == (box_cells, z, wired_color):
                return r
        raise KeyError((box_cells, z, wired_color))

    def __str__(self):
        lines = []
        for r in self.rows:
            lines.append(
                f"box={r.box_cells:<3d} z={r.z:<8g} wired={r.wired_color} "
                f"imbalance={r.mean:+.4f} +-{r.stderr:.4f} lcb99={r.lcb99:+.4f} "
                f"tau={r.tau:.2f} n={r.n_samples}")
        for z, v in self.verdicts.items():
            lines.append(f"z={z}: evidence={v['evidence']} mirror_ok={v['mirror_ok']}")
        return "\n".join(lines)


def default_phase_schedule(params, box_cells, readouts_per_chain=350,
                           burn_in=150, readout_every=2):
    box = params.box(box_cells)
    bd = max(30, int(1.2 * params.activity * box.volume))
    sweeps = burn_in + readout_every * readouts_per_chain
    return Schedule(sweeps=sweeps, burn_in=burn_in,
                    readout_every=readout_every, bd_steps_per_sweep=bd)


def phase_transition_experiment(params, box_sizes, z_values, chains, seed,
                                workers=1, readouts_per_chain=350,
                                burn_in=150):
    """Wired-colour scan: for each box size, activity, and maximal colour b,
    runs wired-b chains and reports the interior-cell mean imbalance toward b
    with batch-means errors.

    Evidence of symmetry breaking at an activity means the one-sided 99%
    lower confidence bound of the imbalance is positive for every maximal
    colour at the two largest box sizes; with a single maximal colour no
    multi-measure claim is made.
    """
    alpha = params.alpha
    amax = alpha.max()
    maximal = [c + 1 for c in range(params.q) if alpha[c] >= amax - 1e-12]
    rows = []
    for bi, box_cells in enumerate(sorted(box_sizes)):
        for zi, z in enumerate(z_values):
            pz = params.replace(activity=z)
            sched = default_phase_schedule(pz, box_cells, readouts_per_chain,
                                           burn_in)
            for b in maximal:
                acc, _ = run_chains(pz, box_cells, sched,
                                    seed + 1000 * bi + 10 * zi, chains,
                                    wired_color=b, workers=workers,
                                    track_good=False)
                # imbalance toward b against another maximal colour when one
                # exists, else against the strongest minority colour
                others = acc.other_colors
                tied = [c for c in others if abs(alpha[c - 1] - alpha[b - 1]) <= 1e-12]
                ref = tied[0] if tied else max(others, key=lambda c: alpha[c - 1])
                pos = others.index(ref)
                k = acc.count
                counts = acc.mean_counts()
                cell_imb = counts[:, b - 1] - counts[:, ref - 1]
                mean = float(cell_imb[acc.interior].mean())
                stderr = float(acc.batch_imb_interior.stderr()[pos])
                raw_var = acc.raw_variance_diff()[:, pos]
                tau_cells = acc.batch_diff.tau_int(raw_var)[acc.interior]
                tau = float(np.nanmedian(tau_cells)) if len(tau_cells) else 0.0
                cell_se = acc.batch_diff.stderr()[:, pos]
                rows.append(PhaseRow(box_cells, z, b, mean, stderr,
                                     mean - Z_ONE_SIDED_99 * stderr, tau, k,
                                     cell_means=cell_imb,
                                     cell_stderr=cell_se))
    report = PhaseReport(rows, {}, maximal)
    top_boxes = sorted(box_sizes)[-2:]
    for z in z_values:
        evidence = all(report.row(bc, z, b).lcb99 > 0
                       for bc in top_boxes for b in maximal)
        mirror_ok = True
        for i in range(len(maximal)):
            for j in range(i + 1, len(maximal)):
                for bc in top_boxes:
                    ra = report.row(bc, z, maximal[i])
                    rb = report.row(bc, z, maximal[j])
                    gap = abs(ra.mean - rb.mean)
                    lim = 3.0 * math.sqrt(ra.stderr**2 + rb.stderr**2)
                    mirror_ok &= gap <= lim
        report.verdicts[z] = {
            "evidence": bool(evidence),
            "mirror_ok": bool(mirror_ok),
            "multi_measure_claim": len(maximal) > 1 and bool(evidence),
        }
    return report
