import numpy as np
import pytest

from contpotts.model import ModelParams, widom_rowlinson_preset
from contpotts.potentials import PairPotential
from contpotts.sampling import RngStream


@pytest.fixture
def wr():
    return widom_rowlinson_preset(activity=1.0)


@pytest.fixture
def soft2():
    """Two colours, finite repulsion ln 2 out to r3 = r4 = 1."""
    return ModelParams(
        dimension=2, activity=1.0, q=2, alpha=[0.5, 0.5], u=np.log(2),
        r1=0.0, r2=0.0, r3=1.0, r4=1.0,
        phi=PairPotential.step([1.0], [np.log(2)]),
        psi=PairPotential.zero())


@pytest.fixture
def soft3():
    """Three colours with a tied pair of maximal proportions."""
    return ModelParams(
        dimension=2, activity=1.0, q=3, alpha=[0.4, 0.4, 0.2], u=1.2,
        r1=0.0, r2=0.0, r3=1.0, r4=1.3,
        phi=PairPotential.step([1.0, 1.3], [1.2, 0.4]),
        psi=PairPotential.zero())


@pytest.fixture
def rng():
    return RngStream(20240810)


def brute_force_phi(points, colors, phi, window_mask=None):
    total = 0.0
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            if window_mask is not None and not (window_mask[i] or window_mask[j]):
                continue
            if colors[i] != colors[j]:
                total += phi.value(float(np.linalg.norm(points[i] - points[j])))
    return total


def brute_force_psi(points, psi, window_mask=None):
    total = 0.0
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            if window_mask is not None and not (window_mask[i] or window_mask[j]):
                continue
            total += psi.value(float(np.linalg.norm(points[i] - points[j])))
    return total
