import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blowuplab.errors import InvalidParameter
from blowuplab.metric import (MARGIN, ellipticity_bounds, geodesic_radius, geodesic_radius_grid,
                              make_profile, verify_decay)


def test_flat_is_one():
    prof = make_profile("flat", n=3)
    r = np.linspace(0, 50, 11)
    assert np.all(prof.K(r) == 1.0)


def test_power_value():
    prof = make_profile("power_perturbation", 0.1, 1.0, 3)
    assert prof.K(5.0) == pytest.approx(1 + 0.1 / math.sqrt(26), abs=1e-15)
    assert prof.K(5.0) == pytest.approx(1.019612, abs=1e-6)


@pytest.mark.parametrize("kw", [dict(a=1.0, rho=1.0, n=3),
                                dict(a=0.1, rho=0.0, n=3), dict(a=0.1, rho=1.0, n=1),
                                dict(a=-1.5, rho=1.0, n=3)])
def test_make_profile_rejects(kw):
    with pytest.raises(InvalidParameter):
        make_profile("power_perturbation", **kw)


def test_decay_flat_zero():
    rep = verify_decay(make_profile("flat"), np.linspace(0, 100, 101))
    assert rep.constants == (0.0, 0.0, 0.0) and rep.passed


def test_decay_power():
    prof = make_profile("power_perturbation", 0.1, 1.0, 3)
    rep = verify_decay(prof, np.arange(0, 101, dtype=float))
    assert rep.constants[0] == pytest.approx(0.1, rel=1e-12)
    assert rep.passed


def test_decay_overstated_order_fails():
    prof = make_profile("power_perturbation", 0.1, 1.0, 3)
    rep = verify_decay(prof, np.arange(0, 101, dtype=float), decay_order=2.0)
    assert not rep.passed
    # outer-half maximum roughly doubles the inner one over [0, 100]
    assert rep.growth[0] > 1.9


def test_decay_rejects_bad_samples():
    with pytest.raises(InvalidParameter):
        verify_decay(make_profile("flat"), [])


def test_geodesic_examples():
    assert geodesic_radius(make_profile("flat"), 7.0) == 7.0
    prof = make_profile("power_perturbation", 0.1, 1.0, 3)
    assert geodesic_radius(prof, 1.0) == pytest.approx(1 + 0.1 * math.asinh(1.0), rel=1e-10)
    assert geodesic_radius(prof, 0.0) == 0.0


def test_geodesic_grid_matches_quadrature():
    prof = make_profile("power_perturbation", 0.3, 1.5, 3)
    r = np.linspace(0.05, 20, 400)
    grid = geodesic_radius_grid(prof, r)
    ref = np.array([geodesic_radius(prof, x) for x in r[::37]])
    np.testing.assert_allclose(grid[::37], ref, rtol=1e-12)


def test_ellipticity():
    assert ellipticity_bounds(make_profile("flat")) == 1 - MARGIN
    assert ellipticity_bounds(make_profile("power_perturbation", 0.1, 1.0)) == pytest.approx(1 / 1.1 - MARGIN, abs=1e-15)
    assert ellipticity_bounds(make_profile("power_perturbation", -0.1, 1.0)) == pytest.approx(0.9 - MARGIN, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0.2, 3.0), st.one_of(st.just(0.0), st.floats(1e-6, 40.0)), st.floats(0.01, 5.0))
def test_geodesic_monotone_and_bounded(a, rho, r, dr):
    prof = make_profile("power_perturbation", a, rho, 3)
    d0 = ellipticity_bounds(prof)
    g1, g2 = geodesic_radius(prof, r), geodesic_radius(prof, r + dr)
    assert g2 > g1
    assert d0 * r <= g1 * (1 + 1e-12) and g1 <= r / d0 * (1 + 1e-12)


@pytest.mark.parametrize("family", ["power_perturbation", "exponential_perturbation"])
def test_derivatives_second_order(family):
    prof = make_profile(family, 0.2, 1.3, 3)
    r = np.linspace(0.5, 6, 12)
    errs = []
    for h in (1e-2, 5e-3):
        fd1 = (prof.K(r + h) - prof.K(r - h)) / (2 * h)
        fd2 = (prof.K(r + h) - 2 * prof.K(r) + prof.K(r - h)) / h**2
        errs.append((np.abs(fd1 - prof.dK(r)).max(), np.abs(fd2 - prof.d2K(r)).max()))
    assert errs[0][0] / errs[1][0] == pytest.approx(4, rel=0.05)
    assert errs[0][1] / errs[1][1] == pytest.approx(4, rel=0.05)
