import math

import numpy as np
import pytest

from blowuplab.eigenmode import (envelope_mode, solve_eigenmode, verify_hypothesis,
                                 weighted_mass)
from blowuplab.errors import InvalidParameter, OverflowGuard, StepSizeTooLarge
from blowuplab.metric import make_profile
from blowuplab.rescale import DampingProfile, build_rescaling


def test_flat_three_dim_closed_form():
    mode = solve_eigenmode(make_profile("flat", n=3), 1.0, r_max=20.0, h=1e-3)
    i = int(round(2.0 / mode.h))
    assert mode.phi[i] == pytest.approx(math.sinh(2.0) / 2.0, rel=1e-6)
    assert mode.phi[i] == pytest.approx(1.813430, abs=1e-6)
    r = mode.r[1:]
    np.testing.assert_allclose(mode.phi[1:], np.sinh(r) / r, rtol=1e-6)


def test_small_lambda_constant():
    mode = solve_eigenmode(make_profile("flat", n=4), 1e-3, r_max=1e4, h=1.0)
    assert np.max(np.abs(mode.phi[: int(10 / mode.h)] - 1)) < 1e-4


def test_positive_increasing():
    mode = solve_eigenmode(make_profile("power_perturbation", 0.1, 1.0, 3), 1.0, r_max=30.0, h=1e-2)
    assert mode.phi[0] == 1.0
    assert np.all(mode.phi > 0) and np.all(np.diff(mode.phi) > 0)


def test_perturbed_plateau():
    prof = make_profile("power_perturbation", 0.1, 1.0, 3)
    mode = solve_eigenmode(prof, 1.0, r_max=60.0, h=1e-2)
    # phi exp(-lam r~) tends to a constant once the <lam r> factor is included
    ratio = mode.envelope_ratio()
    sel = mode.r >= 30
    assert (ratio[sel].max() - ratio[sel].min()) / ratio[sel].max() < 0.01
    assert verify_hypothesis(mode).passed


def test_fourth_order():
    prof = make_profile("power_perturbation", 0.2, 1.0, 3)
    ref = solve_eigenmode(prof, 1.0, r_max=10.0, h=2.5e-4).phi[-1]
    errs = [abs(solve_eigenmode(prof, 1.0, r_max=10.0, h=h).phi[-1] - ref) for h in (2e-2, 1e-2)]
    assert math.log2(errs[0] / errs[1]) > 3.8


def test_hypothesis_constant_flat():
    v = verify_hypothesis(solve_eigenmode(make_profile("flat", n=3), 1.0, r_max=40.0, h=1e-2))
    assert v.passed and 0.5 <= v.c <= 1.0


def test_hypothesis_planar_plateau():
    v = verify_hypothesis(solve_eigenmode(make_profile("flat", n=2), 1.0, r_max=40.0, h=1e-2))
    assert v.passed and v.plateau_variation < 0.01


def test_hypothesis_fails_on_growth():
    mode = envelope_mode(make_profile("flat", n=3), 1.0, 20.0, 1e-2, lambda r: np.exp(2 * r))
    assert not verify_hypothesis(mode).passed


def test_guards():
    prof = make_profile("flat", n=3)
    with pytest.raises(StepSizeTooLarge):
        solve_eigenmode(prof, 1.0, h=0.2)
    with pytest.raises(OverflowGuard):
        solve_eigenmode(prof, 1.0, r_max=800.0, h=0.05)
    with pytest.raises(InvalidParameter):
        solve_eigenmode(prof, 1.0, r_max=5.0)


def test_weighted_mass_bands():
    prof = make_profile("flat", n=3)
    mode = solve_eigenmode(prof, 1.0, r_max=210.0, h=2e-2)
    resc = build_rescaling(DampingProfile.from_params(0.0), 300.0)
    ratios = [weighted_mass(mode, t, 1.0, resc).ratio for t in (1, 10, 50, 100, 200)]
    assert max(ratios) / min(ratios) < 3
    masses = [weighted_mass(mode, t, 2.0, resc) for t in (1, 50, 200)]
    assert all(m.exponent == 0 for m in masses)
    assert max(m.value for m in masses) / min(m.value for m in masses) < 2
    m0 = weighted_mass(mode, 0.0, 3.0, resc)
    assert 0 < m0.value < math.inf
