import math

import numpy as np
import pytest

from conftest import brute_force_phi, brute_force_psi
from contpotts.geometry import Box
from contpotts.model import (
    ColoredConfig,
    PointConfig,
    energy_delta_delete,
    energy_delta_insert,
    hamiltonian,
    hamiltonian_phi,
    hamiltonian_psi,
)
from contpotts.potentials import PairPotential
from contpotts.sampling import RngStream, sample_marked_poisson


def test_hard_core_pair_examples(wr):
    box = wr.box(9)
    cfg = ColoredConfig(box, [[0.0, 0.0], [0.5, 0.0]], [1, 2])
    assert hamiltonian_phi(cfg, wr) == np.inf
    cfg_same = ColoredConfig(box, [[0.0, 0.0], [0.5, 0.0]], [1, 1])
    assert hamiltonian_phi(cfg_same, wr) == 0.0


def test_soft_pair_example(soft2):
    box = soft2.box(9)
    cfg = ColoredConfig(box, [[0.0, 0.0], [0.5, 0.0]], [1, 2])
    assert hamiltonian_phi(cfg, soft2) == pytest.approx(math.log(2))


def test_psi_examples(wr):
    box = wr.box(9)
    r2 = 0.2
    params = wr.replace(r1=0.1, r2=r2,
                        psi=PairPotential.step([r2, 2 * r2], [0.0, -1.0],
                                               superstable=True))
    cfg = PointConfig(box, [[0.0, 0.0], [1.5 * r2, 0.0]])
    assert hamiltonian_psi(cfg, params) == pytest.approx(-1.0)
    # three mutually-in-range points at constant psi = c: three pairs
    c = -0.25
    params3 = wr.replace(r1=0.1, r2=r2,
                         psi=PairPotential.step([2 * r2], [c], superstable=True))
    tri = PointConfig(box, [[0.0, 0.0], [0.3, 0.0], [0.15, 0.2]])
    assert hamiltonian_psi(tri, params3) == pytest.approx(3 * c)
    # psi identically zero
    assert hamiltonian_psi(tri, wr) == 0.0


def test_hamiltonians_match_brute_force(soft2, rng):
    params = soft2.replace(
        r1=0.05, r2=0.1,
        psi=PairPotential.step([0.1, 0.5], [0.4, -0.3], superstable=True))
    box = params.box(9)
    gen = rng.generator
    for trial in range(200):
        cfg = sample_marked_poisson(box, 1.2, params.alpha, gen,
                                    grid_side=params.interaction_cutoff)
        got_phi = hamiltonian_phi(cfg, params)
        got_psi = hamiltonian_psi(cfg, params)
        want_phi = brute_force_phi(cfg.points, cfg.colors, params.phi)
        want_psi = brute_force_psi(cfg.points, params.psi)
        assert got_phi == pytest.approx(want_phi, abs=1e-12)
        assert got_psi == pytest.approx(want_psi, abs=1e-12)


def test_hamiltonian_window_restriction(soft2):
    box = soft2.box(9)
    window = Box.centered(3, soft2.delta, 2)
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [1.6, 0.0], [2.0, 0.0]])
    cols = np.array([1, 2, 1, 2])
    cfg = ColoredConfig(box, pts, cols)
    in_w = np.array([window.contains(p) for p in pts])
    want = brute_force_phi(pts, cols, soft2.phi, window_mask=in_w)
    got = hamiltonian_phi(cfg, soft2, window=window)
    assert got == pytest.approx(want)
    # the pair (1.6, 2.0) lies outside the window and is excluded
    assert got < brute_force_phi(pts, cols, soft2.phi)


def test_nonnegative_hamiltonian_when_potentials_nonnegative(soft2, rng):
    box = soft2.box(9)
    gen = rng.generator
    for _ in range(30):
        cfg = sample_marked_poisson(box, 1.0, soft2.alpha, gen,
                                    grid_side=soft2.interaction_cutoff)
        assert hamiltonian(cfg, soft2) >= 0.0


def test_energy_delta_insert_examples(wr):
    box = wr.box(9)
    empty = ColoredConfig(box, grid_side=wr.interaction_cutoff)
    assert energy_delta_insert(empty, [0.0, 0.0], 1, wr) == 0.0
    one = ColoredConfig(box, [[0.0, 0.0]], [1], grid_side=wr.interaction_cutoff)
    assert energy_delta_insert(one, [0.5, 0.0], 2, wr) == np.inf
    assert energy_delta_insert(one, [0.5, 0.0], 1, wr) == 0.0


def test_energy_delta_matches_brute_force(soft2, rng):
    params = soft2.replace(
        r1=0.05, r2=0.1,
        psi=PairPotential.step([0.1, 0.6], [0.2, -0.4], superstable=True))
    box = params.box(9)
    gen = rng.generator
    for trial in range(40):
        cfg = sample_marked_poisson(box, 1.0, params.alpha, gen,
                                    grid_side=params.interaction_cutoff)
        if cfg.n > 20:
            continue
        x = box.sample_uniform(gen, 1)[0]
        c = int(gen.integers(1, 3))
        pts0, col0 = cfg.points.copy(), cfg.colors.copy()
        h0 = (brute_force_phi(pts0, col0, params.phi)
              + brute_force_psi(pts0, params.psi))
        pts1 = np.vstack([pts0, x])
        col1 = np.append(col0, c)
        h1 = (brute_force_phi(pts1, col1, params.phi)
              + brute_force_psi(pts1, params.psi))
        got = energy_delta_insert(cfg, x, c, params)
        assert got == pytest.approx(h1 - h0, abs=1e-12)


def test_insert_then_delete_roundtrip(soft2, rng):
    box = soft2.box(9)
    gen = rng.generator
    cfg = sample_marked_poisson(box, 1.0, soft2.alpha, gen,
                                grid_side=soft2.interaction_cutoff)
    x = np.array([0.1, -0.2])
    d_in = energy_delta_insert(cfg, x, 2, soft2)
    i = cfg.add_point(x, 2)
    d_out = energy_delta_delete(cfg, i, soft2)
    assert d_in == pytest.approx(-d_out, abs=1e-12)


def test_colored_config_length_invariant(wr):
    box = wr.box(9)
    with pytest.raises(ValueError):
        ColoredConfig(box, [[0.0, 0.0]], [1, 2])


def test_shell_mask(wr):
    box = wr.box(9)   # side ~4.02, shell width 1
    cfg = PointConfig(box, [[0.0, 0.0], [1.2, 0.0]])
    mask = cfg.shell_mask(wr.r4)
    assert mask.tolist() == [False, True]
