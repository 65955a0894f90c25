"""Seeded generation of (marked) Poisson point configurations.

Randomness is counter-based: a 64-bit seed plus a tuple of stream keys feeds
numpy's Philox generator through SeedSequence, so every (chain, purpose)
combination owns a reproducible, statistically independent stream.
"""

import csv

import numpy as np

from .model import ColoredConfig, PointConfig


class RngStream:
    """Reproducible random stream keyed by (seed, stream key tuple)."""

    def __init__(self, seed, key=()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key) if not isinstance(key, int) else (int(key),)
        self._gen = None

    @property
    def generator(self):
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def substream(self, *keys):
        """Derived independent stream; the parent stream is unaffected."""
        return RngStream(self.seed, self.key + tuple(int(k) for k in keys))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def _as_generator(rng):
    return rng.generator if isinstance(rng, RngStream) else rng


def sample_poisson(box, activity, rng, grid_side=None):
    """Homogeneous Poisson configuration on the box: Poisson(z|box|) points,
    i.i.d. uniform given the count."""
    gen = _as_generator(rng)
    mean = activity * box.volume
    n = int(gen.poisson(mean)) if mean > 0 else 0
    pts = box.sample_uniform(gen, n)
    return PointConfig(box, pts, grid_side=grid_side)


def sample_marked_poisson(box, activity, alpha, rng, grid_side=None):
    """Poisson configuration with i.i.d. colour marks distributed as alpha."""
    gen = _as_generator(rng)
    alpha = np.asarray(alpha, dtype=float)
    mean = activity * box.volume
    n = int(gen.poisson(mean)) if mean > 0 else 0
    pts = box.sample_uniform(gen, n)
    colors = gen.choice(len(alpha), size=n, p=alpha) + 1
    return ColoredConfig(box, pts, colors, grid_side=grid_side)


def dump_config_csv(path, config):
    """Write a configuration as CSV columns x1..xd[,color]."""
    colored = isinstance(config, ColoredConfig)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = [f"x{k+1}" for k in range(config.d)]
        if colored:
            header.append("color")
        w.writerow(header)
        for i in range(config.n):
            row = [repr(float(v)) for v in config.points[i]]
            if colored:
                row.append(str(int(config.colors[i])))
            w.writerow(row)


def load_config_csv(path, box, grid_side=None):
    """Read a configuration written by dump_config_csv."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    colored = header[-1] == "color"
    d = len(header) - (1 if colored else 0)
    pts = np.array([[float(v) for v in r[:d]] for r in data], dtype=float).reshape(-1, d)
    if colored:
        colors = np.array([int(r[d]) for r in data], dtype=np.int64)
        return ColoredConfig(box, pts, colors, grid_side=grid_side)
    return PointConfig(box, pts, grid_side=grid_side)
