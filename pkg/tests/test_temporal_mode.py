import math

import numpy as np
import pytest

from blowuplab.rescale import DampingProfile, build_rescaling
from blowuplab.temporal_mode import (extrapolated_limit, forward_check, nu_bounds, ode_residual,
                                     solve_decaying_mode, verify_levinson)


def _mode(mu, beta, lam, t_max, samples=4001):
    resc = build_rescaling(DampingProfile.from_params(mu, beta), t_max)
    return solve_decaying_mode(resc, lam, t_max, samples=samples)


def test_zero_damping_exact():
    mode = _mode(0.0, 2.0, 1.5, 20.0)
    assert np.all(mode.nu == 1.5)
    np.testing.assert_allclose(mode.phi, np.exp(-1.5 * mode.t), rtol=1e-15)
    assert nu_bounds(mode) == 1.0
    rep = verify_levinson(mode)
    assert rep.variation < 1e-12 and rep.converged


def test_positive_damping_limit():
    mode = _mode(1.0, 2.0, 1.0, 1000.0)
    assert abs(mode.nu[-1] - math.e) < 2e-3
    assert abs(extrapolated_limit(mode) - math.e) < 1e-4
    d2 = nu_bounds(mode)
    assert 0 < d2 < 1
    assert np.all(mode.nu > 0) and np.all(np.diff(mode.log_phi) < 0)


def test_negative_damping_limit():
    mode = _mode(-0.5, 2.0, 2.0, 1000.0)
    assert abs(extrapolated_limit(mode) - 2 * math.exp(-0.5)) < 1e-4


def test_levinson_plateau():
    rep = verify_levinson(_mode(1.0, 2.0, 1.0, 1000.0))
    assert rep.converged and 0 < rep.plateau < math.inf


def test_levinson_slow_tail_flagged():
    rep = verify_levinson(_mode(1.0, 1.1, 1.0, 200.0))
    assert rep.slow and not rep.converged


def test_ode_residual_second_order():
    mode = _mode(1.0, 2.0, 1.0, 20.0, samples=8001)
    r1, r2 = ode_residual(mode, stride=4), ode_residual(mode, stride=2)
    assert r1 / r2 == pytest.approx(4, rel=0.05)


def test_forward_consistency():
    # forward in time the decaying branch loses digits like exp(2 lam k t)
    mode = _mode(0.8, 2.0, 1.0, 40.0)
    assert forward_check(mode, 2.0) < 1e-6
