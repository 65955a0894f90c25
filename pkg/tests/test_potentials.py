import math

import numpy as np
import pytest

from contpotts.model import ModelParams, ball_volume, validate_assumptions, widom_rowlinson_preset
from contpotts.potentials import PairPotential


def test_hard_core_semantics():
    phi = PairPotential.hard_core(1.0)
    assert phi.value(0.0) == np.inf
    assert phi.value(1.0) == np.inf          # closed at the core radius
    assert phi.value(1.0 + 1e-12) == 0.0
    assert phi.cutoff == 1.0
    assert phi.is_pure_hard_core


def test_step_semantics_right_closed():
    psi = PairPotential.step([0.2, 0.4], [0.0, -1.0])
    assert psi.value(0.1) == 0.0
    assert psi.value(0.2) == 0.0            # first piece closed at its break
    assert psi.value(0.2 + 1e-12) == -1.0
    assert psi.value(0.4) == -1.0
    assert psi.value(0.41) == 0.0
    # vectorised lookup agrees
    r = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    assert np.allclose(psi.value(r), [0.0, 0.0, -1.0, -1.0, 0.0])


def test_zero_potential():
    z = PairPotential.zero()
    assert z.cutoff == 0.0
    assert z.value(0.3) == 0.0


def test_invalid_breaks():
    with pytest.raises(ValueError):
        PairPotential.step([0.5, 0.5], [1.0, 2.0])
    with pytest.raises(ValueError):
        PairPotential.step([0.5], [1.0, 2.0])
    with pytest.raises(ValueError):
        PairPotential("bogus", [], [])


def test_positive_part_integral():
    psi = PairPotential.step([1.0], [2.0])
    # 2 * area of unit disk in d=2
    assert psi.positive_part_integral(0.0, 2) == pytest.approx(2 * math.pi)
    # starting beyond the support: zero
    assert psi.positive_part_integral(1.5, 2) == 0.0


def test_wr_preset_validates(wr):
    rep = validate_assumptions(wr)
    assert rep.ok, str(rep)
    assert wr.delta == pytest.approx(1.0 / math.sqrt(5.0))


def test_model_params_invariants():
    wr = widom_rowlinson_preset()
    with pytest.raises(ValueError):
        wr.replace(alpha=np.array([0.25, 0.75]))   # colour 1 not maximal
    with pytest.raises(ValueError):
        wr.replace(alpha=np.array([0.6, 0.5]))     # does not sum to 1
    with pytest.raises(ValueError):
        wr.replace(q=1, alpha=np.array([1.0]))
    with pytest.raises(ValueError):
        wr.replace(activity=-1.0)
    with pytest.raises(ValueError):
        wr.replace(r2=1.0)                         # r2 < r3 violated (r3 = 1)
    with pytest.raises(ValueError):
        wr.replace(nstar=0)


def test_a1_fails_when_repulsion_below_u(wr):
    weak = wr.replace(phi=PairPotential.step([1.0], [0.5]), u=1.0)
    rep = validate_assumptions(weak)
    names = {c.name: c.passed for c in rep.checks}
    assert not names["A1 strict repulsion"]
    assert not rep.ok


def test_a2_fails_beyond_r4(wr):
    long_phi = PairPotential.step([1.0, 2.0], [np.inf, 0.3])
    rep = validate_assumptions(wr.replace(phi=long_phi))
    names = {c.name: c.passed for c in rep.checks}
    assert not names["A2 finite range"]


def test_a3_negative_psi_needs_declaration(wr):
    att = PairPotential.step([0.2, 0.4], [0.0, -1.0])
    rep = validate_assumptions(wr.replace(psi=att, r1=0.1, r2=0.2))
    names = {c.name: c.passed for c in rep.checks}
    assert not names["A3 stability"]
    att_declared = PairPotential.step([0.2, 0.4], [0.0, -1.0], superstable=True)
    rep2 = validate_assumptions(wr.replace(psi=att_declared, r1=0.1, r2=0.2))
    names2 = {c.name: c.passed for c in rep2.checks}
    assert names2["A3 stability"]


def test_a4_fails_on_positive_tail(wr):
    bad = PairPotential.step([0.5], [0.7])   # positive beyond r2 = 0
    rep = validate_assumptions(wr.replace(psi=bad))
    names = {c.name: c.passed for c in rep.checks}
    assert not names["A4 short range psi"]


def test_a5_scale_relation_fails_when_r2_large(wr):
    # d=2: need r2 < r3 / (2 sqrt(5)) = 0.2236; r2 = 0.3 violates the scale
    # relation while the radii ordering stays legal
    bad = wr.replace(r2=0.3, r1=0.0)
    rep = validate_assumptions(bad)
    names = {c.name: c.passed for c in rep.checks}
    assert not names["A5 scale relations"]


def test_a5_volume_inequality():
    # evaluate both sides of the excluded-volume inequality independently
    wr = widom_rowlinson_preset()
    delta = wr.delta
    r2 = 0.1
    # pick r1 so that 9 * pi * r1^2 >= (delta - 2 r2)^2, with r1 <= r2
    rhs = (delta - 2 * r2) ** 2
    r1 = math.sqrt(rhs / (9 * math.pi)) * 1.05
    assert r1 <= r2
    bad = wr.replace(r1=r1, r2=r2, nstar=10)
    assert (bad.nstar - 1) * ball_volume(2, r1) >= rhs
    rep = validate_assumptions(bad)
    names = {c.name: c.passed for c in rep.checks}
    assert not names["A5 scale relations"]
    # shrinking r1 restores the inequality
    good = wr.replace(r1=r1 / 2, r2=r2, nstar=10)
    assert (good.nstar - 1) * ball_volume(2, r1 / 2) < rhs
    assert validate_assumptions(good).ok
