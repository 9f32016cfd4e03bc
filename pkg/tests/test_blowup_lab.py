import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blowuplab.blowup_lab import (KatoProblem, comparison_time, growing_mode_floor,
                                  improvement_chain, kato_blowup_time, kato_clock, sweep)
from blowuplab.errors import InsufficientPoints, InvalidParameter, NoBlowup
from blowuplab.rescale import DampingProfile, build_rescaling
from blowuplab.wave_solver import SolverConfig


def test_first_order_no_decay():
    assert kato_blowup_time(KatoProblem(2.0, 0.0, 0.1)).T == pytest.approx(10.0, rel=1e-14)


def test_first_order_log_case():
    res = kato_blowup_time(KatoProblem(2.0, 1.0, 0.1))
    assert res.log1p_T == pytest.approx(10.0, rel=1e-14)
    assert res.T == pytest.approx(math.exp(10) - 1, rel=1e-12)


def test_first_order_integrable_decay():
    # a > 1 bounds the clock by 1/(a-1)
    with pytest.raises(NoBlowup):
        kato_blowup_time(KatoProblem(2.0, 2.0, 0.1))
    assert kato_blowup_time(KatoProblem(2.0, 2.0, 10.0)).T == pytest.approx(1 / 9, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.2, 3.0), st.floats(0.0, 1.0), st.floats(1e-4, 0.5), st.floats(0.2, 5.0))
def test_closed_and_numeric_agree(p, a, eps, kappa):
    pr = KatoProblem(p, a, eps, kappa)
    closed = kato_blowup_time(pr, "closed")
    if closed.log1p_T > 600:
        return
    num = kato_blowup_time(pr, "numeric")
    assert num.log1p_T == pytest.approx(closed.log1p_T, rel=1e-8)


def test_kato_clock_inverse():
    pr = KatoProblem(1.5, 0.5, 1e-3, 0.7)
    res = kato_blowup_time(pr)
    assert float(kato_clock(res.T, 0.5)) == pytest.approx(pr.clock_needed, rel=1e-12)


def test_second_order_comparison_bound():
    pr = KatoProblem(2.0, 3.0, 0.1, 1.0, "second_order", eps1=0.1)
    T = kato_blowup_time(pr).T
    assert math.isfinite(T)
    assert T <= comparison_time(pr, T) * (1 + 1e-9)


def test_second_order_autonomous_closed_form():
    # F'' = F^2, F(0) = 1, F'(0) = sqrt(2/3): F = 6/(t - c)^2, T = sqrt(6)
    pr = KatoProblem(2.0, 0.0, 1.0, 1.0, "second_order", eps1=math.sqrt(2 / 3))
    assert kato_blowup_time(pr).T == pytest.approx(math.sqrt(6), rel=1e-8)


def test_second_order_monotone_in_kappa():
    T = [kato_blowup_time(KatoProblem(2.0, 1.0, 0.05, k, "second_order", eps1=0.05)).T
         for k in (0.5, 1.0, 2.0, 4.0)]
    assert all(x >= y for x, y in zip(T, T[1:]))


def test_second_order_global_side():
    with pytest.raises(NoBlowup):
        kato_blowup_time(KatoProblem(2.0, 4.0, 0.1, 1.0, "second_order", eps1=0.0))


def test_problem_validation():
    with pytest.raises(InvalidParameter):
        KatoProblem(1.0, 0.0, 0.1)
    with pytest.raises(InvalidParameter):
        KatoProblem(2.0, 0.0, 0.1, form="third_order")


def test_floor_cosh():
    resc = build_rescaling(DampingProfile.from_params(0.0), 40.0)
    rep = growing_mode_floor(resc, 1.0, 1.0, 0.0)
    # y = cosh t, y' e^-t = (1 - e^-2t)/2
    assert rep.plateau == pytest.approx(0.5, abs=1e-10)
    assert rep.c == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-9)
    assert rep.lower_holds


def test_floor_sinh():
    resc = build_rescaling(DampingProfile.from_params(0.0), 40.0)
    rep = growing_mode_floor(resc, 1.0, 0.0, 1.0)
    assert rep.c == pytest.approx(0.5, rel=1e-9) and rep.lower_holds


def test_floor_damped_plateau():
    resc = build_rescaling(DampingProfile.from_params(1.0, 2.0), 40.0)
    rep = growing_mode_floor(resc, 1.0, 1.0, 0.0, t_max=30.0)
    assert rep.c > 0 and rep.plateau > 0 and rep.lower_holds
    tail = rep.scaled_dy[rep.t >= 20]
    assert (tail.max() - tail.min()) / tail.max() < 0.02


def test_floor_rejects_zero_data():
    resc = build_rescaling(DampingProfile.from_params(0.0), 10.0)
    with pytest.raises(InvalidParameter):
        growing_mode_floor(resc, 1.0, 0.0, 0.0)


def test_ode_sweep_glassey_law():
    pr = KatoProblem(1.5, 0.5, 1e-2)
    fit = sweep(pr, np.geomspace(1e-2, 1e-5, 7), mode="ode")
    assert fit.predicted_alpha == pytest.approx(1.0)
    assert abs(fit.slope - 1.0) <= 1e-3


def test_ode_sweep_log_law():
    pr = KatoProblem(1.5, 1.0, 1e-2)
    fit = sweep(pr, np.geomspace(1e-2, 1e-6, 5), mode="ode")
    assert abs(fit.slope - 0.5) <= 1e-3 and fit.clock == "log(1+T)"


def test_sweep_needs_three_points():
    with pytest.raises(InsufficientPoints):
        sweep(KatoProblem(1.5, 0.5, 1e-2), [1e-2, 1e-3], mode="ode")


def test_sweep_rejects_non_geometric():
    with pytest.raises(InvalidParameter):
        sweep(KatoProblem(1.5, 0.5, 1e-2), [1e-2, 5e-3, 1e-4], mode="ode")


def test_pde_sweep_small():
    cfg = SolverConfig(n=2, p=2.0, q=2.0, c1=1.0, c2=1.0, h=0.1, cfl=0.97, R0=4.0, t_max=2000.0)
    fit = sweep(cfg, np.geomspace(0.2, 0.05, 3), mode="pde", refine=False, workers=1)
    assert fit.regime == "Z" and np.all(fit.consistent)
    assert np.all(np.diff(fit.T) > 0)


def test_improvement_chain():
    a = improvement_chain(2, 2.0, 2.0, 0.1)
    b = improvement_chain(2, 2.0, 2.0, 0.05)
    assert a.certified and a.T < b.T
    assert [s.name for s in a.stages] == ["forcing", "floor"]
    assert not improvement_chain(3, 2.5, 2.0, 0.1).certified
