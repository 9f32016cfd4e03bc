"""Radial asymptotically Euclidean metrics ``g = K(r)^2 dr^2 + r^2 dw^2``.

Three parametric families are supported:

``flat``
    K = 1.
``power_perturbation``
    K = 1 + a <r>^(-rho), with <r> = sqrt(1 + r^2).
``exponential_perturbation``
    K = 1 + a exp(-alpha r).

Only the radial part of the metric is modelled; the short-range
non-radial perturbation is identically zero.
"""
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidParameter, QuadratureFailure

FAMILIES = ("flat", "power_perturbation", "exponential_perturbation")

#: subtracted from extrema so that strict inclusions survive rounding
MARGIN = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def japanese(r):
    """Return <r> = sqrt(1 + r^2)."""
    return np.sqrt(1.0 + np.square(r))


@dataclass(frozen=True)
class MetricProfile:
    """Radial conformal factor K(r) of an asymptotically Euclidean metric.

    For the exponential family ``rho`` holds the exponential rate alpha.
    """

    family: str
    a: float
    rho: float
    n: int

    def K(self, r):
        r = np.asarray(r, dtype=float)
        if self.family == "flat":
            return np.ones_like(r)
        if self.family == "power_perturbation":
            return 1.0 + self.a * japanese(r) ** (-self.rho)
        return 1.0 + self.a * np.exp(-self.rho * r)

    def dK(self, r):
        r = np.asarray(r, dtype=float)
        if self.family == "flat":
            return np.zeros_like(r)
        if self.family == "power_perturbation":
            return -self.a * self.rho * r * japanese(r) ** (-self.rho - 2.0)
        return -self.a * self.rho * np.exp(-self.rho * r)

    def d2K(self, r):
        r = np.asarray(r, dtype=float)
        if self.family == "flat":
            return np.zeros_like(r)
        if self.family == "power_perturbation":
            rho = self.rho
            return -self.a * rho * japanese(r) ** (-rho - 4.0) * (1.0 - (rho + 1.0) * r * r)
        return self.a * self.rho ** 2 * np.exp(-self.rho * r)

    @property
    def delta0(self):
        return ellipticity_bounds(self)


def make_profile(family, a=0.0, rho=1.0, n=3):
    """Build a validated :class:`MetricProfile`.

    Raises
    ------
    InvalidParameter
        If ``rho <= 0``, ``|a| >= 1``, ``n < 2`` or the family is unknown.
    """
    if family not in FAMILIES:
        raise InvalidParameter(f"unknown metric family {family!r}")
    if int(n) != n or n < 2:
        raise InvalidParameter(f"dimension must be an integer >= 2, got {n}")
    if family == "flat":
        return MetricProfile("flat", 0.0, float(rho) if rho > 0 else 1.0, int(n))
    if not rho > 0:
        raise InvalidParameter(f"decay rate must be positive, got {rho}")
    if not abs(a) < 1:
        raise InvalidParameter(f"|a| must be < 1 to keep K positive, got {a}")
    return MetricProfile(family, float(a), float(rho), int(n))


@dataclass
class DecayReport:
    constants: tuple
    decay_order: float
    passed: bool
    growth: tuple


def verify_decay(profile, r_samples, decay_order=None, growth_tol=0.05):
    """Smallest constants C_k with |d^k (K-1)| <= C_k <r>^(-k-rho) on the samples.

    The bound is accepted as genuine when the weighted quantity over the
    outer half of the sampled range does not exceed its value over the
    inner half by more than ``growth_tol``; a claimed decay order that is
    too strong shows up as growth towards the outer end.
    """
    r = np.asarray(r_samples, dtype=float)
    if r.size == 0 or np.any(r < 0) or not np.all(np.isfinite(r)):
        raise InvalidParameter("r_samples must be nonempty, finite and nonnegative")
    rho = profile.rho if decay_order is None else float(decay_order)
    derivs = (profile.K(r) - 1.0, profile.dK(r), profile.d2K(r))
    split = 0.5 * (r.min() + r.max())
    inner = r <= split
    outer = ~inner
    consts, growth = [], []
    passed = True
    for k, d in enumerate(derivs):
        weighted = np.abs(d) * japanese(r) ** (k + rho)
        c = float(weighted.max())
        consts.append(c)
        if outer.any() and inner.any():
            head = weighted[inner].max()
            tail = weighted[outer].max()
            g = tail / head if head > 0 else (np.inf if tail > 0 else 1.0)
        else:
            g = 1.0
        growth.append(float(g))
        if not np.isfinite(c) or g > 1.0 + growth_tol:
            passed = False
    return DecayReport(tuple(consts), rho, passed, tuple(growth))


def geodesic_radius(profile, r, rtol=1e-10):
    """Geodesic radial coordinate int_0^r K(tau) dtau."""
    r = float(r)
    if r < 0:
        raise InvalidParameter("r must be nonnegative")
    if r == 0.0 or profile.family == "flat":
        return r
    val, err = integrate.quad(lambda x: float(profile.K(x)), 0.0, r,
                              epsabs=0.0, epsrel=rtol, limit=200)
    if err > rtol * abs(val):
        raise QuadratureFailure(f"geodesic radius at r={r}: error {err:.3e}")
    return val


def geodesic_radius_grid(profile, r):
    """Cumulative geodesic radius at the nondecreasing nodes ``r``.

    Each gap between consecutive nodes is integrated with 8-point
    Gauss-Legendre, which is exact to rounding for node spacings used by
    the solvers.
    """
    r = np.asarray(r, dtype=float)
    if profile.family == "flat":
        return r.copy()
    left = np.concatenate(([0.0], r[:-1]))
    if np.any(r - left < 0):
        raise InvalidParameter("nodes must be nondecreasing and nonnegative")
    mid = 0.5 * (r + left)
    half = 0.5 * (r - left)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    pieces = half * (profile.K(x) @ _GL_WEIGHTS)
    return np.cumsum(pieces)


def ellipticity_bounds(profile):
    """Largest delta0 with delta0 < inf K <= sup K < 1/delta0.

    Both perturbed families are monotone in r, so the extrema are K(0) and
    the limit 1 at infinity.
    """
    if profile.family == "flat":
        return 1.0 - MARGIN
    k0 = 1.0 + profile.a
    lo, hi = min(1.0, k0), max(1.0, k0)
    return min(lo, 1.0 / hi) - MARGIN
