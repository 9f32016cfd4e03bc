"""Decaying solution of phi'' = lam^2 m~(t)^2 phi and its logarithmic derivative.

The decaying branch is exponentially recessive forward in time, so it is
built from the Riccati equation for ``nu = -phi'/phi``,

    nu' = nu^2 - lam^2 m~^2,

integrated backward from ``t_max`` where ``nu = lam m~(t_max)``.  Backward
in time the branch ``nu ~ lam m~`` is attracting.  ``phi`` is recovered as
``exp(-int_0^t nu)``.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import InvalidParameter, RiccatiBlowup
from .rescale import covering


@dataclass
class TemporalMode:
    lam: float
    t: np.ndarray
    phi: np.ndarray
    nu: np.ndarray
    log_phi: np.ndarray
    k: float
    delta2: float
    rescaling: object = field(repr=False)
    _sol: object = field(repr=False, default=None)

    @property
    def t_max(self):
        return float(self.t[-1])

    def nu_at(self, t):
        """nu at arbitrary times in [0, t_max] from the dense solution."""
        t = np.asarray(t, dtype=float)
        if self._sol is None:
            return np.full_like(t, self.lam)
        return self._sol(t)[0]

    def log_phi_at(self, t):
        t = np.asarray(t, dtype=float)
        if self._sol is None:
            return -self.lam * t
        return self._sol(t)[1] - self._J0

    def dphi(self):
        return -self.nu * self.phi


def solve_decaying_mode(rescaling, lam, t_max, samples=4001, rtol=1e-11):
    """Decaying temporal factor with phi(0) = 1 on [0, t_max] (transformed time).

    Raises
    ------
    RiccatiBlowup
        If nu leaves (0, 10 lam / delta1) during the backward sweep.
    """
    if not lam > 0 or not t_max > 0:
        raise InvalidParameter("lambda and t_max must be positive")
    t = np.linspace(0.0, float(t_max), samples)
    hi = 10.0 * lam / rescaling.delta1
    if rescaling.damping.is_zero:
        nu = np.full_like(t, float(lam))
        logphi = -lam * t
        return TemporalMode(float(lam), t, np.exp(logphi), nu, logphi, 1.0,
                            _delta2(nu, lam), rescaling)

    lam2 = lam * lam
    rescaling = covering(rescaling, float(t_max))
    # m~ is smooth; a fine cubic table keeps the right-hand side cheap
    grid = np.linspace(0.0, float(t_max), max(samples, int(t_max / 0.01) + 1))
    mt_tab = CubicSpline(grid, rescaling.m_tilde(grid))

    def rhs(s, y):
        mt = float(mt_tab(s))
        return [y[0] * y[0] - lam2 * mt * mt, -y[0]]

    def leave_low(s, y):
        return y[0]

    def leave_high(s, y):
        return hi - y[0]

    leave_low.terminal = leave_high.terminal = True
    nu_end = lam * float(rescaling.m_tilde(float(t_max)))
    sol = solve_ivp(rhs, (float(t_max), 0.0), [nu_end, 0.0], method="DOP853",
                    rtol=rtol, atol=1e-14, dense_output=True, events=(leave_low, leave_high))
    if sol.status == 1 or not sol.success:
        where = sol.t[-1]
        raise RiccatiBlowup(f"nu left (0, {hi:.4g}) at t = {where:.6g}")
    # y[1] = int_t^tmax nu; log phi(t) = -(J(0) - J(t))
    vals = sol.sol(t)
    nu = vals[0]
    J0 = float(sol.sol(0.0)[1])
    logphi = vals[1] - J0
    if np.any(nu <= 0) or np.any(nu >= hi):
        raise RiccatiBlowup("nu left its admissible band on the output grid")
    mode = TemporalMode(float(lam), t, np.exp(logphi), nu, logphi, rescaling.k,
                        _delta2(nu, lam), rescaling, sol.sol)
    mode._J0 = J0
    return mode


def _delta2(nu, lam):
    return float(min(np.min(nu) / lam, lam / np.max(nu), 1.0))


def nu_bounds(mode):
    """delta2 = min(inf nu / lam, lam / sup nu), so lam d2 <= nu <= lam / d2."""
    return _delta2(mode.nu, mode.lam)


@dataclass
class LevinsonReport:
    plateau: float
    variation: float
    converged: bool
    nu_limit_error: float
    slope_ratio: float
    slow: bool


def verify_levinson(mode, rescaling=None, tol=0.01):
    """Plateau of phi(t) exp(lam eta(t)) over the last decade of t.

    ``nu_limit_error`` is |nu(t_max)/(lam k) - 1| and ``slope_ratio`` the
    terminal value of phi' exp(lam eta) / (-lam k plateau), which tends to
    one.  ``slow`` flags damping tails too heavy for the next decade to
    settle: it compares the tail mass int_t^inf |b| at t_max/10 with tol.
    """
    resc = mode.rescaling if rescaling is None else rescaling
    t = mode.t
    eta = resc.eta(t) if not resc.damping.is_zero else t
    log_ratio = mode.log_phi + mode.lam * eta
    sel = t >= t[-1] / 10.0
    seg = np.exp(log_ratio[sel])
    plateau = float(seg[-1])
    variation = float((seg.max() - seg.min()) / seg.max())
    k = mode.k
    nu_err = abs(mode.nu[-1] / (mode.lam * k) - 1.0)
    slope = float(mode.nu[-1] / (mode.lam * k))
    tail = float(abs(resc.damping.tail(resc.eta(t[-1] / 10.0)))) if not resc.damping.is_zero else 0.0
    slow = tail > tol
    return LevinsonReport(plateau, variation, variation < tol and not slow, nu_err, slope, slow)


def extrapolated_limit(mode, fraction=0.5):
    """Estimate lim nu by fitting nu = A + B/(1+t) + C/(1+t)^2 on the late half."""
    t = mode.t
    sel = t >= fraction * t[-1]
    x = 1.0 / (1.0 + t[sel])
    X = np.column_stack([np.ones_like(x), x, x * x])
    coef, *_ = np.linalg.lstsq(X, mode.nu[sel], rcond=None)
    return float(coef[0])


def ode_residual(mode, stride=1):
    """max |phi'' - lam^2 m~^2 phi| / (lam^2 phi) by central differences on the grid."""
    t = mode.t[::stride]
    lp = mode.log_phi[::stride]
    d = t[1] - t[0]
    # phi''/phi = (log phi)'' + ((log phi)')^2
    d1 = (lp[2:] - lp[:-2]) / (2 * d)
    d2 = (lp[2:] - 2 * lp[1:-1] + lp[:-2]) / (d * d)
    mt = mode.rescaling.m_tilde(t[1:-1]) if not mode.rescaling.damping.is_zero else 1.0
    res = d2 + d1 * d1 - mode.lam ** 2 * mt * mt
    return float(np.max(np.abs(res)) / mode.lam ** 2)


def forward_check(mode, t_end=None):
    """Integrate phi forward from (phi, phi')(0) and compare with the mode at t_end.

    The decaying branch is unstable forward, so keep ``t_end`` modest.
    """
    t_end = mode.t_max if t_end is None else float(t_end)
    resc = mode.rescaling
    lam2 = mode.lam ** 2

    def rhs(s, y):
        mt = 1.0 if resc.damping.is_zero else float(resc.m_tilde(s))
        return [y[1], lam2 * mt * mt * y[0]]

    y0 = [1.0, -float(mode.nu_at(0.0))]
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853", rtol=1e-13, atol=1e-16)
    ref = math.exp(float(mode.log_phi_at(t_end)))
    return abs(sol.y[0, -1] / ref - 1.0)
