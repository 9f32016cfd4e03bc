"""Radial solutions of Delta_g phi = lambda^2 phi and the growth envelope check.

In the radial metric ``K^2 dr^2 + r^2 dw^2`` the equation reads

    (r^(n-1) phi' / K)' = lambda^2 K r^(n-1) phi,   phi(0) = 1, phi'(0) = 0.

It is integrated as a first-order system in ``(phi, phi'/r)``, which is
regular at the origin.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import InvalidParameter, OverflowGuard, QuadratureFailure, StepSizeTooLarge
from .grid import sphere_area
from .metric import geodesic_radius_grid, japanese

OVERFLOW = 1e300


@dataclass
class Eigenmode:
    lam: float
    n: int
    r: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    r_tilde: np.ndarray
    profile: object

    @property
    def h(self):
        return float(self.r[1] - self.r[0])

    @property
    def r_max(self):
        return float(self.r[-1])

    def envelope_ratio(self):
        """phi <lam r>^((n-1)/2) exp(-lam r~), bounded by the envelope constant c."""
        lam = self.lam
        return (self.phi * japanese(lam * self.r) ** (0.5 * (self.n - 1))
                * np.exp(-lam * self.r_tilde))

    @property
    def c(self):
        return float(np.max(self.envelope_ratio()))

    def log_phi(self, r):
        """Spline of log phi, valid on [0, r_max]."""
        r = np.asarray(r, dtype=float)
        if np.any(r > self.r_max * (1 + 1e-12)):
            raise InvalidParameter("radius beyond the solved range")
        spl = getattr(self, "_log_spline", None)
        if spl is None:
            spl = CubicSpline(self.r, np.log(self.phi))
            self._log_spline = spl
        return spl(r)


def solve_eigenmode(profile, lam, n=None, r_max=20.0, h=1e-3):
    """Positive increasing radial solution with phi(0) = 1.

    The unknowns are ``phi`` and ``g = phi'/r``, for which the origin is a
    regular point: ``g' = (lam^2 K^2 phi - n g)/r + g K'/K`` with
    ``g(0) = lam^2 K(0)^2 / n``.  Classical RK4 on this system keeps its
    fourth order up to r = 0, unlike the flux form whose coefficient
    ``r^(1-n)`` spoils the first steps.

    Raises
    ------
    StepSizeTooLarge
        If ``lam * h >= 0.1``.
    OverflowGuard
        If phi exceeds 1e300 before ``r_max``.
    """
    n = profile.n if n is None else n
    if n != profile.n:
        raise InvalidParameter("dimension does not match the profile")
    if not lam > 0:
        raise InvalidParameter("lambda must be positive")
    if not h > 0 or lam * h >= 0.1:
        raise StepSizeTooLarge(f"lambda*h = {lam * h:.3g} must be below 0.1")
    if r_max < 10.0 / lam:
        raise InvalidParameter("r_max must be at least 10/lambda")
    steps = int(round(r_max / h))
    r = h * np.arange(steps + 1)
    half = r[:-1] + 0.5 * h
    K_node, K_half = profile.K(r), profile.K(half)
    L_node = profile.dK(r) / K_node
    L_half = profile.dK(half) / K_half
    lam2 = lam * lam
    K0, K1 = float(K_node[0]), float(profile.dK(0.0))
    # phi = 1 + A r^2 + B r^3 + ..., so g(0) = 2A and g'(0) = 3B
    g0 = lam2 * K0 * K0 / n
    gp0 = lam2 * K0 * K1 * (1.0 / (n + 1) + 1.0 / n)

    def f(x, k, l, y0, y1):
        if x == 0.0:
            return 0.0, gp0
        return x * y1, (lam2 * k * k * y0 - n * y1) / x + y1 * l

    phi = np.empty(steps + 1)
    g = np.empty(steps + 1)
    phi[0], g[0] = 1.0, g0
    for i in range(steps):
        x, y0, y1 = r[i], phi[i], g[i]
        xm = x + 0.5 * h
        a0, a1 = f(x, K_node[i], L_node[i], y0, y1)
        b0, b1 = f(xm, K_half[i], L_half[i], y0 + 0.5 * h * a0, y1 + 0.5 * h * a1)
        c0, c1 = f(xm, K_half[i], L_half[i], y0 + 0.5 * h * b0, y1 + 0.5 * h * b1)
        d0, d1 = f(x + h, K_node[i + 1], L_node[i + 1], y0 + h * c0, y1 + h * c1)
        phi[i + 1] = y0 + h * (a0 + 2 * b0 + 2 * c0 + d0) / 6.0
        g[i + 1] = y1 + h * (a1 + 2 * b1 + 2 * c1 + d1) / 6.0
        if phi[i + 1] > OVERFLOW:
            raise OverflowGuard(f"phi exceeds {OVERFLOW:.0e} at r = {r[i + 1]:.4g}; shrink r_max")
    return Eigenmode(float(lam), n, r, phi, r * g, geodesic_radius_grid(profile, r), profile)


@dataclass
class HypothesisVerdict:
    passed: bool
    c: float
    growth: float
    plateau_variation: float


def verify_hypothesis(mode, profile=None, growth_tol=0.05):
    """Constant c of the growth envelope and a plateau test under r_max doubling.

    ``growth`` compares the sup of the envelope ratio on [0, r_max] with
    the sup on [0, r_max/2]; ``plateau_variation`` is the relative change
    of the ratio itself between r_max/2 and r_max.  Failure means the
    ratio keeps growing, so no finite c exists.
    """
    ratio = mode.envelope_ratio()
    if np.any(mode.phi < 0) or not np.all(np.isfinite(ratio)):
        return HypothesisVerdict(False, math.inf, math.inf, math.inf)
    mid = len(ratio) // 2
    c_half = float(np.max(ratio[: mid + 1]))
    c_full = float(np.max(ratio))
    growth = c_full / c_half - 1.0
    variation = abs(ratio[-1] / ratio[mid] - 1.0)
    return HypothesisVerdict(growth <= growth_tol, c_full, growth, variation)


def envelope_mode(profile, lam, r_max, h, phi):
    """Wrap arbitrary nodal values as an Eigenmode (for checking candidate functions)."""
    r = h * np.arange(int(round(r_max / h)) + 1)
    vals = np.asarray(phi(r), dtype=float)
    return Eigenmode(float(lam), profile.n, r, vals, np.gradient(vals, h),
                     geodesic_radius_grid(profile, r), profile)


@dataclass
class MassReport:
    value: float
    ratio: float
    exponent: float


def weighted_mass(mode, t, q, rescaling, profile=None, R1=1.0, rtol=1e-8):
    """Integral of psi^q over the cone r~ <= eta(t) + R1, psi = phi(x) exp(-lam eta(t)).

    Returns the value and its ratio to (t+1)^(n-1-(n-1)q/2).

    Raises
    ------
    QuadratureFailure
        If the adaptive quadrature misses ``rtol``.
    """
    profile = mode.profile if profile is None else profile
    if q < 1 or t < 0:
        raise InvalidParameter("need q >= 1 and t >= 0")
    n, lam = mode.n, mode.lam
    eta = float(rescaling.eta(t)) if rescaling is not None else float(t)
    edge = eta + R1
    if edge > mode.r_tilde[-1]:
        raise InvalidParameter("eigenmode grid does not cover the cone; increase r_max")
    r_edge = float(np.interp(edge, mode.r_tilde, mode.r))
    shift = q * lam * eta

    def integrand(x):
        return math.exp(q * float(mode.log_phi(x)) - shift) * float(profile.K(x)) * x ** (n - 1)

    breaks = np.linspace(0.0, r_edge, max(2, int(r_edge) + 2))
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        val, err = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=rtol, limit=200)
        if err > max(rtol * abs(val), 1e-300):
            raise QuadratureFailure(f"cone mass on [{a:.3g}, {b:.3g}]: error {err:.2e}")
        total += val
    value = sphere_area(n) * total
    expo = n - 1 - 0.5 * (n - 1) * q
    return MassReport(value, value / (t + 1.0) ** expo, expo)


def discrete_log_eigenmode(grid, lam):
    """log phi for the exact grid eigenvector, L_h phi = lam^2 phi, phi_0 = 1.

    Built by the forward recurrence of the three-point operator, carried
    as successive ratios so large radii do not overflow.
    """
    lam2h = lam * lam * grid.h
    w, c = grid.weight, grid.flux
    size = grid.size
    logphi = np.zeros(size)
    prev = 0.0  # c_{j-1/2} (1 - phi_{j-1}/phi_j)
    for j in range(size - 1):
        ratio = 1.0 + (lam2h * w[j] + prev) / c[j]
        logphi[j + 1] = logphi[j] + math.log(ratio)
        prev = c[j] * (1.0 - 1.0 / ratio)
    return logphi
