"""Change of time variable removing an integrable damping term.

With ``m(t) = exp(int_0^t b)`` and ``s = h(t) = int_0^t 1/m``, the damped
equation ``u_tt - Lu + b u_t = N`` becomes
``u_ss - m~(s)^2 Lu = m~^(2-p) c1 |u_s|^p + m~^2 c2 |u|^q`` with
``m~(s) = m(eta(s))`` and ``eta = h^(-1)``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import InvalidParameter, NonIntegrableDamping, ToleranceNotMet

MARGIN = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class DampingProfile:
    """b(t) = mu (1+t)^(-beta); ``family='zero'`` means b = 0."""

    family: str = "zero"
    mu: float = 0.0
    beta: float = 2.0

    def __post_init__(self):
        if self.family not in ("zero", "scattering_power"):
            raise InvalidParameter(f"unknown damping family {self.family!r}")
        if self.family == "scattering_power" and not self.beta > 1:
            raise NonIntegrableDamping(
                f"b = mu (1+t)^(-beta) is not integrable for beta = {self.beta} <= 1")

    @classmethod
    def from_params(cls, mu=0.0, beta=2.0):
        if not beta > 1:
            raise NonIntegrableDamping(f"damping exponent beta = {beta} must exceed 1")
        if mu == 0:
            return cls("zero", 0.0, float(beta))
        return cls("scattering_power", float(mu), float(beta))

    @property
    def is_zero(self):
        return self.family == "zero" or self.mu == 0

    def b(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros_like(t)
        return self.mu * (1.0 + t) ** (-self.beta)

    def primitive(self, t):
        """int_0^t b."""
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros_like(t)
        return self.mu * (1.0 - (1.0 + t) ** (1.0 - self.beta)) / (self.beta - 1.0)

    def tail(self, t):
        """int_t^infinity b."""
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros_like(t)
        return self.mu * (1.0 + t) ** (1.0 - self.beta) / (self.beta - 1.0)

    @property
    def l1_norm(self):
        return 0.0 if self.is_zero else abs(self.mu) / (self.beta - 1.0)

    @property
    def total(self):
        return 0.0 if self.is_zero else self.mu / (self.beta - 1.0)

    def m(self, t):
        return np.exp(self.primitive(t))


@dataclass
class TimeRescaling:
    damping: DampingProfile
    t: np.ndarray
    h_tab: np.ndarray
    k: float
    delta1: float
    tol: float
    residual: float
    _eta: CubicHermiteSpline = field(repr=False, default=None)

    @property
    def t_max(self):
        return float(self.t[-1])

    @property
    def s_max(self):
        return float(self.h_tab[-1])

    def m(self, t):
        return self.damping.m(t)

    def b(self, t):
        return self.damping.b(t)

    def h(self, t):
        """s = int_0^t 1/m, exact to rounding at any t >= 0."""
        t = np.asarray(t, dtype=float)
        if self.damping.is_zero:
            return t.copy()
        if t.ndim == 0:
            return self.h(t[None])[0]
        idx = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 1)
        out = self.h_tab[idx] + _integrate_inv_m(self.damping, self.t[idx], t)
        far = t > self.t_max
        if np.any(far):
            out[far] = self.s_max + _integrate_inv_m(self.damping, self.t_max, t[far], panels=256)
        return out

    def eta(self, s):
        """Inverse of h."""
        s = np.asarray(s, dtype=float)
        if self.damping.is_zero:
            return s.copy()
        if s.ndim == 0:
            return self.eta(s[None])[0]
        out = np.empty_like(s)
        inside = s <= self.s_max
        out[inside] = self._eta(s[inside])
        if np.any(~inside):
            out[~inside] = self._eta_tail(s[~inside])
        return out

    def _eta_tail(self, s):
        # Newton on h(t) = s from the asymptotic guess; h' = 1/m
        # h is concave or convex on the tail; clipping at t_max keeps the
        # iterates inside the region where the tail quadrature applies
        t = self.t_max + (s - self.s_max) * self.k
        for _ in range(100):
            r = self.h(t) - s
            t = np.maximum(t - r * self.m(t), self.t_max)
            if np.all(np.abs(r) <= 1e-14 * np.maximum(1.0, s)):
                break
        return t

    def m_tilde(self, s):
        return self.m(self.eta(s))

    def b_tilde(self, s):
        """b(eta(s)), so that m~' = b(eta) m~^2."""
        return self.b(self.eta(s))


def _integrate_inv_m(damping, a, b, panels=1):
    """int_a^b 1/m elementwise with Gauss-Legendre panels."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    total = np.zeros(a.shape)
    width = (b - a) / panels
    for j in range(panels):
        lo = a + j * width
        mid = lo + 0.5 * width
        x = mid[..., None] + 0.5 * width[..., None] * _GL_NODES
        total = total + 0.5 * width * (np.exp(-damping.primitive(x)) @ _GL_WEIGHTS)
    return total


def build_rescaling(damping, t_max, tol=1e-8, spacing=0.02, max_refine=6):
    """Tabulate m, h on [0, t_max] and invert h with a cubic Hermite interpolant.

    The interpolant uses the exact slopes ``eta'(s) = m(eta(s)) > 0``; the
    inverse residual ``|h(eta(s)) - s|`` is checked at cell midpoints and
    the table refined until it is below ``tol``.

    Raises
    ------
    NonIntegrableDamping
        If the damping is not integrable.
    ToleranceNotMet
        If refinement does not reach ``tol``.
    """
    if not isinstance(damping, DampingProfile):
        raise InvalidParameter("damping must be a DampingProfile")
    if not t_max > 0:
        raise InvalidParameter("t_max must be positive")
    if not 0 < tol <= 1e-6:
        raise InvalidParameter("tol must lie in (0, 1e-6]")
    k = float(np.exp(damping.total))
    if damping.is_zero:
        t = np.array([0.0, float(t_max)])
        return TimeRescaling(damping, t, t.copy(), 1.0, 1.0 - MARGIN, tol, 0.0)

    n = max(int(np.ceil(t_max / spacing)), 16)
    for _ in range(max_refine):
        t = np.linspace(0.0, float(t_max), n + 1)
        pieces = _integrate_inv_m(damping, t[:-1], t[1:])
        h_tab = np.concatenate(([0.0], np.cumsum(pieces)))
        spline = CubicHermiteSpline(h_tab, t, damping.m(t))
        s_mid = 0.5 * (h_tab[:-1] + h_tab[1:])
        resc = TimeRescaling(damping, t, h_tab, k, 0.0, tol, 0.0, spline)
        residual = float(np.max(np.abs(resc.h(spline(s_mid)) - s_mid)))
        if residual <= tol:
            m_tab = damping.m(t)
            lo = min(m_tab.min(), k)
            hi = max(m_tab.max(), k)
            resc.delta1 = float(min(lo, 1.0 / hi) - MARGIN)
            resc.residual = residual
            return resc
        n *= 2
    raise ToleranceNotMet(f"inverse residual {residual:.3e} exceeds tol {tol:.1e}")


def covering(rescaling, s_needed, **kwargs):
    """A rescaling whose table reaches transformed time ``s_needed``.

    Returns ``rescaling`` itself when it already does.
    """
    if rescaling.damping.is_zero:
        if rescaling.t_max >= s_needed:
            return rescaling
        return build_rescaling(rescaling.damping, float(s_needed), tol=rescaling.tol)
    if rescaling.s_max >= s_needed:
        return rescaling
    t_need = float(rescaling.eta(float(s_needed)))
    kwargs.setdefault("tol", rescaling.tol)
    return build_rescaling(rescaling.damping, 1.01 * t_need + 1.0, **kwargs)


@dataclass
class IdentityResiduals:
    step: float
    eta_residual: float
    m_tilde_residual: float


def check_identities(rescaling, sample_count=200, step=1e-3):
    """Centered-difference residuals of eta' = m~ and m~' = b(eta) m~^2."""
    s_hi = rescaling.s_max if not rescaling.damping.is_zero else rescaling.t_max
    s = np.linspace(step, s_hi - step, sample_count)
    eta_p = (rescaling.eta(s + step) - rescaling.eta(s - step)) / (2 * step)
    mt = rescaling.m_tilde(s)
    mt_p = (rescaling.m_tilde(s + step) - rescaling.m_tilde(s - step)) / (2 * step)
    r1 = float(np.max(np.abs(eta_p - mt)))
    r2 = float(np.max(np.abs(mt_p - rescaling.b_tilde(s) * mt * mt)))
    return IdentityResiduals(step, r1, r2)
