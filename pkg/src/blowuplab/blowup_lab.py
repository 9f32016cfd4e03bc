"""Kato-type ODE blow-up engine, growing-mode floors and lifespan sweeps.

First-order problems ``I' = kappa I^p (1+t)^(-a)`` separate exactly in the
clock ``tau(t) = ((1+t)^(1-a) - 1)/(1-a)`` (``log(1+t)`` at ``a = 1``):
``tau(T) = I(0)^(1-p) / ((p-1) kappa)``.  Second-order problems
``F'' = kappa |F|^q (1+t)^(-a)`` have no closed form and are integrated.
"""
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import InsufficientPoints, InvalidParameter, NoBlowup, NumericalFailure
from .exponents import ProblemPoint, classify_region
from .rescale import covering

EVENT = 1e12
FORMS = ("first_order", "second_order")


@dataclass(frozen=True)
class KatoProblem:
    """Model differential inequality taken with equality.

    ``p`` is the power, ``a`` the decay power of ``(1+t)^(-a)``, ``eps`` the
    initial value I(0) (first order) or F(0) (second order), ``eps1`` the
    initial slope F'(0) for the second-order form, and ``t0`` the start
    time of the second-order form.  ``forcing = (c, g)`` adds
    ``c (1+t)^g`` to the second-order right-hand side.
    """

    p: float
    a: float
    eps: float
    kappa: float = 1.0
    form: str = "first_order"
    eps1: float = None
    t0: float = 0.0
    forcing: tuple = None

    def __post_init__(self):
        if self.form not in FORMS:
            raise InvalidParameter(f"form must be one of {FORMS}")
        if not self.p > 1:
            raise InvalidParameter("the power must exceed 1")
        if not (self.kappa > 0 and self.eps > 0):
            raise InvalidParameter("kappa and the initial value must be positive")
        if self.a < 0 or self.t0 < 0:
            raise InvalidParameter("decay power and start time must be nonnegative")
        if self.eps1 is not None and self.eps1 < 0:
            raise InvalidParameter("initial slope must be nonnegative")
        if self.forcing is not None and (self.form != "second_order" or self.forcing[0] < 0):
            raise InvalidParameter("forcing needs the second-order form and c >= 0")

    @property
    def slope0(self):
        return self.eps if self.eps1 is None else self.eps1

    def with_eps(self, eps):
        scale = eps / self.eps
        return replace(self, eps=eps, eps1=None if self.eps1 is None else self.eps1 * scale)

    @property
    def clock_needed(self):
        """I(0)^(1-p) / ((p-1) kappa), the clock at which I blows up."""
        return self.eps ** (1 - self.p) / ((self.p - 1) * self.kappa)

    @property
    def blows_up(self):
        if self.form == "first_order":
            if self.a <= 1:
                return True
            # integrable decay: the clock is bounded by 1/(a-1)
            return self.clock_needed < 1.0 / (self.a - 1)
        # Kato: F >= c t^b0 with b0 = 1 (positive slope) or 0
        b0 = 1.0 if self.slope0 > 0 else 0.0
        if self.forcing is not None and self.forcing[0] > 0:
            b0 = max(b0, 2.0 + self.forcing[1])
        # equality is the critical case; the integrator decides there
        return (self.p - 1) * b0 >= self.a - 2


@dataclass
class KatoResult:
    T: float
    log1p_T: float
    method: str
    t_event: float = None
    tail: float = 0.0

    @property
    def clock(self):
        return self.log1p_T


def _clock_to_log1p(tau, a):
    """log(1+T) from the Kato clock tau."""
    if a == 1:
        return float(tau)
    return math.log1p((1 - a) * tau) / (1 - a)


def kato_clock(T, a):
    """tau(T) = ((1+T)^(1-a) - 1)/(1-a), or log(1+T) at a = 1."""
    T = np.asarray(T, dtype=float)
    if a == 1:
        return np.log1p(T)
    return np.expm1((1 - a) * np.log1p(T)) / (1 - a)


def _result(log1p_T, method, **kw):
    T = math.expm1(log1p_T) if log1p_T < 700 else math.inf
    return KatoResult(T, float(log1p_T), method, **kw)


def kato_blowup_time(problem, method=None):
    """Blow-up time of a Kato problem.

    ``method`` is ``"closed"`` (first order only) or ``"numeric"``; the
    default is closed form for first order and numeric for second order.

    Raises
    ------
    NoBlowup
        If the parameters lie on the global-existence side.
    """
    if not problem.blows_up:
        raise NoBlowup(f"no blow-up for {problem.form} with p = {problem.p}, a = {problem.a}")
    if problem.form == "first_order":
        method = method or "closed"
        if method == "closed":
            return _result(_clock_to_log1p(problem.clock_needed, problem.a), "closed")
        if method == "numeric":
            return _first_order_numeric(problem)
        raise InvalidParameter(f"unknown method {method!r}")
    if method not in (None, "numeric"):
        raise InvalidParameter("second-order problems are solved numerically")
    return _second_order_numeric(problem)


def _first_order_numeric(pr, rtol=1e-12):
    """Integrate s = log(1+t) as a function of y = log I up to I = EVENT.

    With y as the independent variable the blow-up is at finite y-range and
    ``ds/dy = exp(-(p-1) y - (1-a) s) / kappa`` stays bounded.  Past the
    event the remaining clock is exactly I_e^(1-p)/((p-1) kappa).
    """
    p, a, kappa = pr.p, pr.a, pr.kappa

    def rhs(y, s):
        # clamp so rejected trial steps cannot overflow
        return [math.exp(min(-(p - 1) * y - (1 - a) * s[0], 700.0)) / kappa]

    y0, y1 = math.log(pr.eps), math.log(EVENT)
    sol = solve_ivp(rhs, (y0, y1), [0.0], method="DOP853", rtol=rtol, atol=1e-14)
    if not sol.success:
        raise NumericalFailure(sol.message)
    s_e = float(sol.y[0, -1])
    rest = EVENT ** (1 - p) / ((p - 1) * kappa)
    if a == 1:
        log1p_T = s_e + rest
    else:
        # (1+T)^(1-a) = (1+t_e)^(1-a) + (1-a) rest, in logs to avoid overflow
        log1p_T = s_e + math.log1p((1 - a) * rest * math.exp(-(1 - a) * s_e)) / (1 - a)
    t_e = math.expm1(s_e) if s_e < 700 else math.inf
    return _result(log1p_T, "numeric", t_event=t_e, tail=rest)


def _autonomous_time(F0, F1, kappa, q):
    """Blow-up time of F'' = kappa F^q from (F0, F1), F1 >= 0."""

    c = 2 * kappa * F0 ** (q + 1) / (q + 1)

    def integrand(u):
        x = math.exp(u)
        return F0 * x / math.sqrt(F1 * F1 + c * math.expm1((q + 1) * u))

    if F1 > 0:
        # beyond X the slope term is negligible and the tail is a power law
        X = max(10.0, (1e16 * F1 * F1 / c) ** (1.0 / (q + 1)))
        edges = np.linspace(0.0, math.log(X), int(math.log(X)) + 2)
        val = sum(integrate.quad(integrand, lo, hi, limit=200)[0]
                  for lo, hi in zip(edges[:-1], edges[1:]))
        return val + F0 / math.sqrt(c) * 2.0 / (q - 1) * X ** ((1 - q) / 2)
    # F1 = 0: integrable 1/sqrt singularity at x = 1; substitute x = 1 + w^2
    c = 2 * kappa * F0 ** (q - 1) / (q + 1)

    def g(w):
        x = 1.0 + w * w
        d = (x ** (q + 1) - 1) / (w * w) if w > 0 else q + 1.0
        return 2.0 / math.sqrt(c * d)

    val, _ = integrate.quad(g, 0.0, math.inf, limit=400)
    return val


def _second_order_numeric(pr, rtol=1e-11):
    q, a, kappa = pr.p, pr.a, pr.kappa
    fc, fg = pr.forcing if pr.forcing is not None else (0.0, 0.0)

    def rhs(t, y):
        return [y[1], kappa * abs(y[0]) ** q * (1 + t) ** (-a) + fc * (1 + t) ** fg]

    def hit(t, y):
        return y[0] - EVENT

    hit.terminal = True
    t_lo = pr.t0
    y = [pr.eps, pr.slope0]
    span = max(1.0, 1.0 + t_lo)
    # advance in growing windows so very long lifespans need no a priori bound
    for _ in range(400):
        sol = solve_ivp(rhs, (t_lo, t_lo + span), y, method="DOP853", rtol=rtol,
                        atol=1e-14 * max(1.0, abs(y[0])), events=hit)
        if not sol.success:
            raise NumericalFailure(sol.message)
        if sol.status == 1:
            t_e = float(sol.t_events[0][0])
            Fe, dFe = sol.y_events[0][0]
            tail = _autonomous_time(Fe, dFe, kappa * (1 + t_e) ** (-a), q)
            T = t_e + tail
            return KatoResult(T, math.log1p(T), "numeric", t_event=t_e, tail=tail)
        t_lo, y = float(sol.t[-1]), sol.y[:, -1]
        span *= 2.0
        if not np.isfinite(t_lo) or t_lo > 1e300:
            break
    raise NoBlowup("second-order integration found no blow-up")


def comparison_time(problem, T):
    """Blow-up time with the coefficient frozen at its value at T.

    On [t0, T] the frozen problem is a subsolution, so its blow-up time
    bounds the true one from above: ``T <= t0 + comparison_time``.
    """
    if problem.form != "second_order":
        raise InvalidParameter("comparison applies to the second-order form")
    k_T = problem.kappa * (1 + T) ** (-problem.a)
    return problem.t0 + _autonomous_time(problem.eps, problem.slope0, k_T, problem.p)


@dataclass
class FloorReport:
    t: np.ndarray
    dy: np.ndarray
    scaled_dy: np.ndarray
    lower: np.ndarray
    lower_margin: float
    c: float
    plateau: float
    delta1: float

    @property
    def lower_holds(self):
        return self.lower_margin >= -1e-10


def growing_mode_floor(rescaling, lam, C0, C1, t_max=30.0, samples=3001):
    """Growing solution of y'' = lam^2 m~^2 y with y(0) = C0, y'(0) = C1.

    The pair is carried as ``(y, y') exp(-lam eta(t))``, which stays of
    order one.  ``lower_margin`` is the smallest relative excess of y'
    over ``C1 + t delta1^2 lam^2 C0`` and ``c`` the infimum of
    ``y' exp(-lam eta)`` on [1, t_max].
    """
    if C0 < 0 or C1 < 0 or not C0 + C1 > 0:
        raise InvalidParameter("need C0, C1 >= 0 with C0 + C1 > 0")
    if not lam > 0 or not t_max > 1:
        raise InvalidParameter("need lam > 0 and t_max > 1")
    t = np.linspace(0.0, float(t_max), samples)
    if rescaling.damping.is_zero:
        def mt(s):
            return 1.0
        eta = t.copy()
    else:
        rescaling = covering(rescaling, float(t_max))
        grid = np.linspace(0.0, float(t_max), max(samples, int(t_max / 0.01) + 1))
        spl = CubicSpline(grid, rescaling.m_tilde(grid))

        def mt(s):
            return float(spl(s))
        eta = rescaling.eta(t)

    def rhs(s, z):
        m = mt(s)
        return [z[1] - lam * m * z[0], lam * lam * m * m * z[0] - lam * m * z[1]]

    sol = solve_ivp(rhs, (0.0, float(t_max)), [C0, C1], method="DOP853", rtol=1e-11,
                    atol=1e-14, t_eval=t)
    if not sol.success:
        raise NumericalFailure(sol.message)
    Y, P = sol.y
    d1 = rescaling.delta1
    lower = C1 + t * d1 * d1 * lam * lam * C0
    # compare in the scaled variable to avoid overflow
    scaled_lower = lower * np.exp(-lam * eta)
    margin = float(np.min((P - scaled_lower) / np.maximum(P, 1e-300)))
    late = t >= 1.0
    return FloorReport(t, P * np.exp(np.minimum(lam * eta, 700.0)), P, lower, margin,
                       float(np.min(P[late])), float(P[-1]), d1)


@dataclass
class ChainStage:
    name: str
    t: np.ndarray
    floor: np.ndarray
    exponent: float


@dataclass
class ChainReport:
    stages: list
    T: float
    certified: bool
    b0: float


def improvement_chain(n, p, q, eps, kappa1=1.0, kappa2=1.0, t_start=1.0, t_max=None,
                      samples=2001):
    """Floors of the mixed-nonlinearity argument, stage by stage.

    Stage one is the forcing floor ``F'' >= kappa1 eps^p (1+t)^(-(n-1)(p-2)/2)``,
    stage two its double integral from zero data, and stage three the
    second-order Kato problem ``F'' = kappa2 |F|^q (1+t)^(-n(q-1))`` plus
    the stage-one forcing, started at ``t_start`` from the stage-two floor.  ``certified`` is False when
    ``p > 2``, where the forcing exponent is negative and the chain is only
    reported.
    """
    g = -(n - 1) * (p - 2) / 2.0
    b0 = 2.0 + g
    if t_max is None:
        t_max = max(10.0, 10.0 * eps ** (-1.0))
    t = np.concatenate(([0.0], np.geomspace(1e-3, t_max, samples - 1)))
    f2 = kappa1 * eps ** p * (1 + t) ** g
    f1 = integrate.cumulative_trapezoid(f2, t, initial=0.0)
    f0 = integrate.cumulative_trapezoid(f1, t, initial=0.0)
    stages = [ChainStage("forcing", t, f2, g), ChainStage("floor", t, f0, b0)]
    F_s = float(np.interp(t_start, t, f0))
    dF_s = float(np.interp(t_start, t, f1))
    prob = KatoProblem(q, n * (q - 1), max(F_s, 1e-300), kappa2, "second_order",
                       eps1=dF_s, t0=t_start, forcing=(kappa1 * eps ** p, g))
    try:
        T = kato_blowup_time(prob).T
    except NoBlowup:
        T = math.inf
    return ChainReport(stages, T, p <= 2, b0)


@dataclass
class SweepRow:
    eps: float
    T: float
    consistent: bool
    T_half: float = math.nan
    status: str = "ok"


@dataclass
class ScalingFit:
    eps: np.ndarray
    T: np.ndarray
    consistent: np.ndarray
    slope: float
    intercept: float
    r2: float
    predicted_alpha: object
    regime: str
    raw_slope: float
    mode: str
    clock: str = "T"
    rows: list = field(default_factory=list, repr=False)

    def summary(self):
        return {"slope": self.slope, "r2": self.r2, "predicted_alpha": self.predicted_alpha,
                "regime": self.regime, "raw_slope": self.raw_slope, "intercept": self.intercept,
                "mode": self.mode, "clock": self.clock,
                "consistent_points": int(np.count_nonzero(self.consistent))}


def _fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def worker_count(jobs):
    cap = os.environ.get("BLOWUPLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidParameter("BLOWUPLAB_THREADS must be an integer")
    return max(1, min(n, jobs))


def _pde_job(args):
    from .wave_solver import run

    config, eps, solver_mode, refine = args
    try:
        rep = run(config, eps, solver_mode, refine=refine)
    except NumericalFailure as exc:
        return SweepRow(eps, math.nan, False, status=type(exc).__name__)
    if not rep.blown_up:
        return SweepRow(eps, math.nan, False, status="no_blowup")
    T_half = rep.T_half if rep.T_half is not None else math.nan
    ok = rep.refinement_consistent if refine else True
    return SweepRow(eps, rep.T_num, bool(ok), T_half, rep.status)


def _ode_job(args):
    problem, eps = args
    try:
        res = kato_blowup_time(problem.with_eps(eps))
    except NoBlowup:
        return SweepRow(eps, math.nan, False, status="no_blowup")
    row = SweepRow(eps, res.T, True)
    row.log1p_T = res.log1p_T
    return row


def _check_geometric(eps_list):
    e = np.asarray(eps_list, dtype=float)
    if e.ndim != 1 or e.size == 0 or np.any(e <= 0):
        raise InvalidParameter("eps_list must be a nonempty list of positive numbers")
    if e.size > 2:
        r = np.diff(np.log(e))
        if np.max(np.abs(r - r[0])) > 1e-9 * max(1.0, abs(r[0])):
            raise InvalidParameter("eps_list must be geometric")
    return e


def sweep(template, eps_list, mode="pde", solver_mode="transformed", refine=True, workers=None):
    """Lifespans over a geometric eps list and the log-log slope of T against 1/eps.

    ``template`` is a :class:`~blowuplab.wave_solver.SolverConfig` for
    ``mode="pde"`` and a :class:`KatoProblem` for ``mode="ode"``.  First-order
    ODE sweeps fit the Kato clock, which follows an exact power of 1/eps;
    ``slope`` is then converted to the T exponent and ``raw_slope`` keeps
    the plain log T fit.

    Raises
    ------
    InsufficientPoints
        If fewer than three consistent runs remain.
    """
    eps = _check_geometric(eps_list)
    if mode == "pde":
        jobs = [(template, float(e), solver_mode, refine) for e in eps]
        fn = _pde_job
        point = ProblemPoint(template.n, template.p, template.q, template.c1, template.c2)
        verdict = classify_region(point)
        predicted, regime = verdict.predicted_exponent, verdict.regime
    elif mode == "ode":
        jobs = [(template, float(e)) for e in eps]
        fn = _ode_job
        predicted, regime = _ode_prediction(template)
    else:
        raise InvalidParameter("mode must be 'pde' or 'ode'")
    nw = worker_count(len(jobs)) if workers is None else max(1, int(workers))
    if nw == 1:
        rows = [fn(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            rows = list(pool.map(fn, jobs))
    rows.sort(key=lambda r: -r.eps)
    E = np.array([r.eps for r in rows])
    T = np.array([r.T for r in rows])
    ok = np.array([r.consistent and np.isfinite(r.T) for r in rows])
    if mode == "ode":
        ok = np.array([r.consistent for r in rows])
    if np.count_nonzero(ok) < 3:
        raise InsufficientPoints(f"only {np.count_nonzero(ok)} consistent runs; need 3")
    x = np.log(1.0 / E[ok])
    clock = "T"
    if mode == "ode":
        L = np.array([getattr(r, "log1p_T", math.nan) for r in rows])[ok]
        raw, _, _ = _fit(x, np.log(np.expm1(np.minimum(L, 700.0))))
        if template.form == "first_order":
            a = template.a
            tau = L if a == 1 else np.expm1((1 - a) * L) / (1 - a)
            s, b, r2 = _fit(x, np.log(tau))
            slope = s if a == 1 else s / (1 - a)
            clock = "log(1+T)" if a == 1 else "kato_clock"
        else:
            slope, b, r2 = _fit(x, np.log(np.expm1(L)))
    else:
        slope, b, r2 = _fit(x, np.log(T[ok]))
        raw = slope
    return ScalingFit(E, T, ok, slope, b, r2, predicted, regime, raw, mode, clock, rows)


def _ode_prediction(pr):
    if pr.form == "first_order":
        if pr.a == 1:
            return pr.p - 1, "kato_log"
        return (pr.p - 1) / (1 - pr.a), "kato_first_order"
    b0 = 1.0 if pr.slope0 > 0 else 0.0
    return (pr.p - 1) / ((pr.p - 1) * b0 + 2 - pr.a), "kato_second_order"
