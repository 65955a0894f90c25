"""Samplers targeting the wired-boundary colour specification.

The chain combines reversible birth/death/move proposals (handling point
positions) with cluster sweeps (resampling edges given colours, then colours
given edges).  Both kernels leave the wired specification invariant, and the
pair (edges, fresh colours) produced by a cluster sweep is a draw of the
joint coloured-edge measure restricted to the authorized event, so readouts
taken right after a sweep feed the random-cluster estimators directly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .coupling import (ClusterDecomposition, EdgeSet, decompose_clusters,
                       recolor_clusters)
from .model import ColoredConfig, hamiltonian, interaction_energy
from .sampling import RngStream, _as_generator

BIRTH_FRACTION = 0.4
DEATH_FRACTION = 0.4  # remainder is the local move fraction


@dataclass
class Schedule:
    sweeps: int
    burn_in: int = 0
    readout_every: int = 1
    bd_steps_per_sweep: int = 0

    def __post_init__(self):
        if self.sweeps < 0 or self.burn_in < 0:
            raise ValueError("sweeps and burn_in must be nonnegative")
        if self.sweeps > 0 and self.burn_in >= self.sweeps:
            raise ValueError("burn_in must be smaller than sweeps")
        if self.readout_every < 1:
            raise ValueError("readout_every must be >= 1")


@dataclass
class Readout:
    """Frozen (points, colours, edges) snapshot plus bookkeeping."""

    points: np.ndarray
    colors: np.ndarray
    edges: EdgeSet
    box: object
    sweep: int
    chain: int = 0

    @property
    def n(self):
        return len(self.colors)


class ChainState:
    """Mutable sampler state: coloured configuration, RNG, sweep counter and
    the readout slot for the last cluster-sweep edge draw.

    Every point within r4 of the box complement keeps the wired colour at all
    times, and the configuration always has finite energy.
    """

    def __init__(self, params, config, rng, wired_color=1):
        self.params = params
        self.config = config
        self.box = config.box
        self.rng = rng.generator if isinstance(rng, RngStream) else rng
        self.wired_color = wired_color
        self.sweep = 0
        self.last_edges = None
        self._pair_cache = {}
        self._cum_alpha = np.cumsum(params.alpha)
        self.move_radius = params.delta
        self.accepted = {"birth": 0, "death": 0, "move": 0, "flip": 0}
        self.proposed = {"birth": 0, "death": 0, "move": 0, "flip": 0}

    @classmethod
    def empty(cls, params, box, rng, wired_color=1):
        config = ColoredConfig(box, grid_side=max(params.interaction_cutoff,
                                                  params.delta))
        return cls(params, config, rng, wired_color)

    @classmethod
    def from_points(cls, params, box, points, colors, rng, wired_color=1):
        config = ColoredConfig(box, points, colors,
                               grid_side=max(params.interaction_cutoff, params.delta))
        state = cls(params, config, rng, wired_color)
        state.assert_shell_constraint()
        return state

    # -- invariant checks --------------------------------------------------

    def shell_mask(self):
        return self.config.shell_mask(self.params.r4)

    def assert_shell_constraint(self):
        mask = self.shell_mask()
        if np.any(self.config.colors[mask] != self.wired_color):
            raise AssertionError("shell point without the wired colour")

    def energy(self):
        return hamiltonian(self.config, self.params)

    # -- cached geometry ---------------------------------------------------

    def _pairs_and_probs(self):
        """(i, j, edge probability, shell mask) for pairs within the phi
        cutoff, cached while point positions are unchanged."""
        cache = self._pair_cache
        cfg = self.config
        if cache.get("pos_version") != cfg.pos_version:
            ii, jj, dd = cfg.all_pairs_within(self.params.phi.cutoff)
            probs = -np.expm1(-self.params.phi.value(dd))
            shell = cfg.shell_mask(self.params.r4)
            cache.update(pos_version=cfg.pos_version, ii=ii, jj=jj,
                         probs=probs, shell=shell)
        return cache["ii"], cache["jj"], cache["probs"], cache["shell"]


def _draw_color(state):
    u = state.rng.random()
    c = int(np.searchsorted(state._cum_alpha, u, side="right")) + 1
    return min(c, state.params.q)


def _in_shell(state, x):
    return state.box.boundary_distance(x) <= state.params.r4


def _accept(rng, log_acc):
    if log_acc >= 0:
        return True
    return rng.random() < math.exp(log_acc)


def step_birth_death_move(state):
    """One reversible proposal: birth (uniform position, colour from alpha),
    death (uniform point), or local move, in fixed proportions.

    Proposals that would break the wired shell colour have target density 0
    and are rejected outright.  Returns the move type and acceptance flag.
    """
    rng = state.rng
    params = state.params
    cfg = state.config
    zv = params.activity * state.box.volume
    u = rng.random()
    if u < BIRTH_FRACTION:
        kind = "birth"
        state.proposed[kind] += 1
        x = state.box.sample_uniform(rng, 1)[0]
        c = _draw_color(state)
        if c != state.wired_color and _in_shell(state, x):
            return kind, False
        dh = interaction_energy(cfg, params, x, c)
        if dh == math.inf:
            return kind, False
        if _accept(rng, math.log(zv / (cfg.n + 1)) - dh):
            cfg.add_point(x, c)
            state.accepted[kind] += 1
            return kind, True
        return kind, False
    if u < BIRTH_FRACTION + DEATH_FRACTION:
        kind = "death"
        state.proposed[kind] += 1
        n = cfg.n
        if n == 0:
            return kind, False
        i = int(rng.integers(n))
        dh = -interaction_energy(cfg, params, cfg.points[i], cfg.colors[i],
                                 exclude=i)
        if _accept(rng, math.log(n / zv) - dh):
            cfg.remove_point(i)
            state.accepted[kind] += 1
            return kind, True
        return kind, False
    kind = "move"
    state.proposed[kind] += 1
    n = cfg.n
    if n == 0:
        return kind, False
    i = int(rng.integers(n))
    x = cfg.points[i].copy()
    y = x + (rng.random(cfg.d) * 2.0 - 1.0) * state.move_radius
    if not state.box.contains(y):
        return kind, False
    c = int(cfg.colors[i])
    if c != state.wired_color and _in_shell(state, y):
        return kind, False
    e_new = interaction_energy(cfg, params, y, c, exclude=i)
    if e_new == math.inf:
        return kind, False
    e_old = interaction_energy(cfg, params, x, c, exclude=i)
    if _accept(rng, e_old - e_new):
        cfg.move_point(i, y)
        state.accepted[kind] += 1
        return kind, True
    return kind, False


def step_color_flip(state):
    """Resample one point's colour from alpha with a Metropolis correction;
    the workhorse for fixed-point chains."""
    rng = state.rng
    cfg = state.config
    state.proposed["flip"] += 1
    n = cfg.n
    if n == 0:
        return "flip", False
    i = int(rng.integers(n))
    c_new = _draw_color(state)
    c_old = int(cfg.colors[i])
    if c_new == c_old:
        state.accepted["flip"] += 1
        return "flip", True
    x = cfg.points[i]
    if c_new != state.wired_color and _in_shell(state, x):
        return "flip", False
    dh = _color_flip_delta(state, i, c_old, c_new)
    if dh == math.inf:
        return "flip", False
    if _accept(rng, -dh):
        cfg.set_color(i, c_new)
        state.accepted["flip"] += 1
        return "flip", True
    return "flip", False


def _color_flip_delta(state, i, c_old, c_new):
    params = state.params
    cfg = state.config
    phi = params.phi
    idx, dist = cfg.neighbors_within(cfg.points[i], phi.cutoff, exclude=i)
    col = cfg.colors
    dh = 0.0
    for j, r in zip(idx, dist):
        cj = col[j]
        was, now = cj != c_old, cj != c_new
        if was == now:
            continue
        v = phi.value(r)
        if v == np.inf:
            if now:
                return math.inf
            raise AssertionError("finite-energy state contained a hard pair")
        dh += v if now else -v
    return dh


def sweep_swendsen_wang(state):
    """Cluster sweep: draw edges given colours (equal-colour pairs within the
    phi cutoff, probability 1-exp(-phi)), then redraw colours given edges.

    The drawn edges together with the fresh colours form a joint sample of the
    coloured-edge measure; they are parked in state.last_edges.  The sweep
    asserts the authorized event (edges join equal colours) and the wired
    shell on exit.  Small instances take a loop-based path, large ones a
    vectorised path; both implement the same two conditionals.
    """
    cfg = state.config
    if cfg.n <= 24 and not getattr(state, "force_bulk", False):
        return _sweep_small(state)
    ii, jj, probs, shell = state._pairs_and_probs()
    rng = state.rng
    col = cfg.colors
    if len(ii):
        take = (col[ii] == col[jj]) & (rng.random(len(ii)) < probs)
        pairs = np.column_stack([ii[take], jj[take]])
    else:
        pairs = np.zeros((0, 2), dtype=np.int64)
    edges = EdgeSet(pairs, shell, validate=False)
    decomp = decompose_clusters(cfg.n, edges)
    new_colors = recolor_clusters(decomp, state.params.alpha, rng,
                                  state.wired_color)
    cfg.set_colors(new_colors)
    state.last_edges = edges
    state.sweep += 1
    if len(pairs) and np.any(new_colors[pairs[:, 0]] != new_colors[pairs[:, 1]]):
        raise AssertionError("cluster sweep produced an unauthorized edge")
    if np.any(new_colors[shell] != state.wired_color):
        raise AssertionError("cluster sweep broke the wired shell colour")
    return decomp


def _small_sweep_cache(state):
    cache = state._pair_cache
    cfg = state.config
    if cache.get("small_version") != cfg.pos_version:
        ii, jj, probs, shell = state._pairs_and_probs()
        cache["small_pairs"] = [(int(a), int(b), float(p))
                                for a, b, p in zip(ii, jj, probs) if p > 0.0]
        cache["small_shell"] = np.nonzero(shell)[0].tolist()
        cache["small_version"] = cfg.pos_version
    return cache["small_pairs"], cache["small_shell"], cache["shell"]


def _sweep_small(state):
    """Loop-based cluster sweep for small point counts."""
    cfg = state.config
    n = cfg.n
    pairs_py, shell_idx, shell = _small_sweep_cache(state)
    rng = state.rng
    col = cfg._col[:n].tolist()
    alpha = state.params.alpha.tolist()
    q = state.params.q
    wired = state.wired_color

    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    m = len(pairs_py)
    draws = rng.random(m).tolist() if m else []
    kept = []
    for k in range(m):
        i, j, p = pairs_py[k]
        if col[i] == col[j] and draws[k] < p:
            kept.append((i, j))
            ra, rb = find(i), find(j)
            if ra != rb:
                if rb == n:
                    ra, rb = rb, ra
                parent[rb] = ra
    for s in shell_idx:
        ra, rb = find(n), find(s)
        if ra != rb:
            parent[rb] = ra

    labels = [0] * n
    order = {}
    sizes = []
    for i in range(n):
        r = find(i)
        c = order.get(r)
        if c is None:
            c = len(order)
            order[r] = c
            sizes.append(0)
        labels[i] = c
        sizes[c] += 1
    inf_id = order.get(find(n)) if shell_idx else None

    n_clusters = len(sizes)
    cdraws = rng.random(n_clusters).tolist() if n_clusters else []
    cluster_color = [0] * n_clusters
    for c in range(n_clusters):
        if c == inf_id:
            cluster_color[c] = wired
            continue
        k = sizes[c]
        weights = [a**k for a in alpha]
        u = cdraws[c] * sum(weights)
        acc = 0.0
        ci = q
        for t in range(q):
            acc += weights[t]
            if u < acc:
                ci = t + 1
                break
        cluster_color[c] = ci

    new_col = [cluster_color[labels[i]] for i in range(n)]
    for i in shell_idx:
        if new_col[i] != wired:
            raise AssertionError("cluster sweep broke the wired shell colour")
    cfg.set_colors(np.asarray(new_col, dtype=np.int64))
    pairs = (np.asarray(kept, dtype=np.int64).reshape(-1, 2) if kept
             else np.zeros((0, 2), dtype=np.int64))
    state.last_edges = EdgeSet(pairs, shell, validate=False)
    state.sweep += 1
    return ClusterDecomposition(np.asarray(labels, dtype=np.int64),
                                np.asarray(sizes, dtype=np.int64), inf_id)


def run_chain(params, box, schedule, rng, wired_color=1, chain_index=0,
              initial=None):
    """Generator of joint readouts at the requested cadence.

    Each sweep runs the scheduled number of birth/death/move steps followed by
    one cluster sweep; readouts snapshot (points, colours, last edge draw).
    """
    if isinstance(rng, RngStream):
        rng = rng.generator
    if initial is None:
        state = ChainState.empty(params, box, rng, wired_color)
    else:
        state = ChainState.from_points(params, box, initial[0], initial[1],
                                       rng, wired_color)
    for t in range(1, schedule.sweeps + 1):
        for _ in range(schedule.bd_steps_per_sweep):
            step_birth_death_move(state)
        sweep_swendsen_wang(state)
        if t > schedule.burn_in and (t - schedule.burn_in) % schedule.readout_every == 0:
            pts, cols = state.config.freeze()
            yield Readout(pts, cols, state.last_edges, box, sweep=t,
                          chain=chain_index)


# ---------------------------------------------------------------------------
# Reversibility audit
# ---------------------------------------------------------------------------

def _log_min1(log_ratio):
    return min(0.0, log_ratio)


def audit_detailed_balance(params, box, rng, n_states=40, proposals_per_state=25,
                           wired_color=1):
    """Numerical reversibility check of the birth/death/move kernel.

    For sampled (state, proposal) pairs, compares log pi(s) + log T(s -> s')
    with log pi(s') + log T(s' -> s) using unnormalized densities and full
    Hamiltonian recomputation (independent of the incremental deltas the
    chain uses).  Returns the largest absolute residual.
    """
    from .sampling import sample_marked_poisson

    gen = _as_generator(rng)
    vol = box.volume
    zv = params.activity * vol
    log_z = math.log(params.activity)
    gside = max(params.interaction_cutoff, params.delta)
    move_frac = 1.0 - BIRTH_FRACTION - DEATH_FRACTION
    worst = 0.0

    def log_density(config):
        shell = config.shell_mask(params.r4)
        if np.any(config.colors[shell] != wired_color):
            return -math.inf
        h = hamiltonian(config, params)
        if h == math.inf:
            return -math.inf
        la = float(np.log(params.alpha_of(config.colors)).sum()) if config.n else 0.0
        return config.n * log_z + la - h

    made = 0
    while made < n_states:
        intensity = min(params.activity, 8.0 / max(vol, 1e-9))
        config = sample_marked_poisson(box, intensity, params.alpha, gen,
                                       grid_side=gside)
        config.colors[config.shell_mask(params.r4)] = wired_color
        base = log_density(config)
        if base == -math.inf:
            continue
        made += 1
        n = config.n
        for _ in range(proposals_per_state):
            u = gen.random()
            if u < 1 / 3:
                x = box.sample_uniform(gen, 1)[0]
                ci = int(np.searchsorted(np.cumsum(params.alpha), gen.random(),
                                         side="right")) + 1
                ci = min(ci, params.q)
                trial = ColoredConfig(
                    box, np.vstack([config.points, x]),
                    np.append(config.colors, ci), grid_side=gside)
                new = log_density(trial)
                if new == -math.inf:
                    continue
                dh = log_z + math.log(params.alpha[ci - 1]) - (new - base)
                lhs = (base + math.log(BIRTH_FRACTION) - math.log(vol)
                       + math.log(params.alpha[ci - 1])
                       + _log_min1(math.log(zv / (n + 1)) - dh))
                rhs = (new + math.log(DEATH_FRACTION) - math.log(n + 1)
                       + _log_min1(math.log((n + 1) / zv) + dh))
                worst = max(worst, abs(lhs - rhs))
            elif u < 2 / 3 and n > 0:
                i = int(gen.integers(n))
                keep = np.arange(n) != i
                trial = ColoredConfig(box, config.points[keep],
                                      config.colors[keep], grid_side=gside)
                new = log_density(trial)
                ci = int(config.colors[i])
                dh = (new - base) + log_z + math.log(params.alpha[ci - 1])
                dh = -dh  # energy gained by removing the point
                lhs = (base + math.log(DEATH_FRACTION) - math.log(n)
                       + _log_min1(math.log(n / zv) - dh))
                rhs = (new + math.log(BIRTH_FRACTION) - math.log(vol)
                       + math.log(params.alpha[ci - 1])
                       + _log_min1(math.log(zv / n) + dh))
                worst = max(worst, abs(lhs - rhs))
            elif n > 0:
                i = int(gen.integers(n))
                y = config.points[i] + (gen.random(box.d) * 2 - 1) * params.delta
                if not box.contains(y):
                    continue
                pts = config.points.copy()
                pts[i] = y
                trial = ColoredConfig(box, pts, config.colors, grid_side=gside)
                new = log_density(trial)
                if new == -math.inf:
                    continue
                lhs = (base + math.log(move_frac) - math.log(n)
                       + _log_min1(new - base))
                rhs = (new + math.log(move_frac) - math.log(n)
                       + _log_min1(base - new))
                worst = max(worst, abs(lhs - rhs))
    return worst
