"""Radial pair potentials with finite cutoff.

All supported families are piecewise constant in the pair distance:
``values[0]`` applies on ``[0, breaks[0]]``, ``values[k]`` on
``(breaks[k-1], breaks[k]]``, and the potential is 0 beyond ``breaks[-1]``.
The right-closed convention keeps the strict-repulsion requirement
(value >= u up to and including r3) exact, while the zero tail starts
immediately after the last break.
"""

import numpy as np

_KINDS = ("hard-core", "soft-shoulder", "tabulated-radial", "zero")


class PairPotential:
    """Even, radial, finite-range pair potential.

    Parameters
    ----------
    kind : str
        One of "hard-core", "soft-shoulder", "tabulated-radial", "zero".
    breaks : array-like
        Strictly increasing positive radii delimiting the constant pieces.
    values : array-like
        One value per piece; +inf encodes a hard core.
    superstable : bool
        Declared (not machine-verified) superstability/lower-regularity of a
        potential with negative values.  Irrelevant for phi.
    """

    def __init__(self, kind, breaks, values, superstable=False):
        if kind not in _KINDS:
            raise ValueError(f"unknown potential kind {kind!r}")
        self.kind = kind
        self.breaks = np.asarray(breaks, dtype=float).reshape(-1)
        self.values = np.asarray(values, dtype=float).reshape(-1)
        if len(self.breaks) != len(self.values):
            raise ValueError("breaks and values must have equal length")
        if len(self.breaks) and (np.any(self.breaks <= 0)
                                 or np.any(np.diff(self.breaks) <= 0)):
            raise ValueError("breaks must be strictly increasing and positive")
        self.superstable = bool(superstable)
        # values padded with the zero tail for vectorised lookup
        self._lut = np.concatenate([self.values, [0.0]])
        self.cutoff = float(self.breaks[-1]) if len(self.breaks) else 0.0
        self.is_pure_hard_core = (len(self.values) == 1
                                  and np.isinf(self.values[0]))

    @classmethod
    def hard_core(cls, radius):
        return cls("hard-core", [radius], [np.inf])

    @classmethod
    def step(cls, breaks, values, superstable=False):
        return cls("soft-shoulder", breaks, values, superstable)

    @classmethod
    def tabulated(cls, breaks, values, superstable=False):
        return cls("tabulated-radial", breaks, values, superstable)

    @classmethod
    def zero(cls):
        return cls("zero", [], [])

    def value(self, r):
        """Evaluate at scalar or array distances."""
        if np.isscalar(r):
            idx = int(np.searchsorted(self.breaks, r, side="left"))
            return float(self._lut[idx])
        idx = np.searchsorted(self.breaks, np.asarray(r, dtype=float), side="left")
        return self._lut[idx]

    # -- exact piecewise range queries (used by the assumption validator) --

    def pieces(self):
        """(lo, hi, value) triples covering [0, cutoff]; lo is open except 0."""
        lo = 0.0
        out = []
        for b, v in zip(self.breaks, self.values):
            out.append((lo, float(b), float(v)))
            lo = float(b)
        return out

    def min_value_on(self, lo, hi):
        """Infimum of the potential over [lo, hi] (hi may exceed the cutoff)."""
        vals = [v for a, b, v in self.pieces() if a < hi and b >= lo]
        if hi > self.cutoff:
            vals.append(0.0)
        return min(vals) if vals else 0.0

    def max_value_beyond(self, r):
        """Supremum of the potential over (r, infinity)."""
        vals = [v for _, b, v in self.pieces() if b > r]
        vals.append(0.0)
        return max(vals)

    def positive_part_integral(self, r_min, dim):
        """Integral of max(value, 0) over {|x| >= r_min} in R^dim.

        Finite by construction for cutoff potentials; reported as the margin
        of the short-range-repulsion check.
        """
        from math import gamma, pi

        def ball_vol(r):
            return pi ** (dim / 2) * r**dim / gamma(dim / 2 + 1)

        total = 0.0
        for a, b, v in self.pieces():
            if v <= 0 or b <= r_min:
                continue
            a = max(a, r_min)
            if np.isinf(v):
                return np.inf
            total += v * (ball_vol(b) - ball_vol(a))
        return total

    def __eq__(self, other):
        return (isinstance(other, PairPotential)
                and self.kind == other.kind
                and np.array_equal(self.breaks, other.breaks)
                and np.array_equal(self.values, other.values)
                and self.superstable == other.superstable)

    def __repr__(self):
        return (f"PairPotential({self.kind!r}, breaks={self.breaks.tolist()}, "
                f"values={self.values.tolist()})")
