"""Critical exponents, (p, q) region classification and lifespan upper bounds.

Exponents are normalised to be positive: a verdict with exponent ``alpha``
stands for the bound ``T <= C0 * eps**(-alpha)``.  The critical (log-type)
verdicts stand for ``T <= exp(C0 * eps**(-kappa))``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter

REFERENCE_EPS = 1e-3
_TIE = 1e-12

# order used when two bounds coincide exactly (the case table lists both)
_TIE_PRIORITY = {"Z": 0, "G": 1, "S": 2, "S1": 3}


def _check_dim(n):
    if int(n) != n or n < 2:
        raise InvalidParameter(f"dimension must be an integer >= 2, got {n}")


def strauss_exponent(n):
    """Positive root of (n-1) q^2 - (n+1) q - 2 = 0."""
    _check_dim(n)
    return ((n + 1) + math.sqrt((n + 1) ** 2 + 8 * (n - 1))) / (2 * (n - 1))


def glassey_exponent(n):
    _check_dim(n)
    return 1.0 + 2.0 / (n - 1)


def alpha_S(n, q):
    """Strauss lifespan exponent, positive for 1 < q < p_S."""
    return 2 * q * (q - 1) / ((n + 1) * q + 2 - (n - 1) * q * q)


def alpha_G(n, p):
    return 2 * (p - 1) / (2 - (n - 1) * (p - 1))


def z_denominator(n, p, q):
    """2q + 2 - (n-1)p(q-1), which equals 4 - (q-1)((n-1)p-2)."""
    return 2 * q + 2 - (n - 1) * p * (q - 1)


def alpha_Z(n, p, q):
    return 2 * p * (q - 1) / z_denominator(n, p, q)


def alpha_S1(q):
    return (q - 1) / (3 - q)


def mixed_condition(n, p, q):
    return (q - 1) * ((n - 1) * p - 2) < 4


@dataclass(frozen=True)
class ProblemPoint:
    n: int
    p: float
    q: float
    c1: float = 1.0
    c2: float = 1.0
    u1_nontrivial: bool = True


@dataclass(frozen=True)
class Candidate:
    regime: str
    alpha: float = None
    kappa: float = None
    formula_id: str = ""

    @property
    def log_type(self):
        return self.alpha is None

    def log_bound(self, eps, C0=1.0):
        """Natural log of the bound, finite even when the bound overflows."""
        if self.log_type:
            return C0 * eps ** (-self.kappa)
        return math.log(C0) - self.alpha * math.log(eps)


@dataclass(frozen=True)
class RegionVerdict:
    regime: str
    predicted_exponent: object
    formula_id: str
    kappa: float = None
    candidates: tuple = ()
    extended_region: bool = False

    @property
    def log_type(self):
        return self.predicted_exponent == "log_type"


def candidate_bounds(point):
    """Every lifespan bound that applies at ``point``."""
    n, p, q = point.n, point.p, point.q
    pS, pG = strauss_exponent(n), glassey_exponent(n)
    out = []
    if point.c2 > 0:
        if abs(q - pS) <= _TIE:
            out.append(Candidate("critical_S", kappa=q * (q - 1), formula_id="strauss_critical"))
        elif 1 < q < pS:
            out.append(Candidate("S", alpha=alpha_S(n, q), formula_id="strauss"))
        if n == 2 and 1 < q < 2 and point.u1_nontrivial:
            out.append(Candidate("S1", alpha=alpha_S1(q), formula_id="strauss_planar"))
    if point.c1 > 0:
        if abs(p - pG) <= _TIE:
            out.append(Candidate("critical_G", kappa=p - 1, formula_id="glassey_critical"))
        elif 1 < p < pG:
            out.append(Candidate("G", alpha=alpha_G(n, p), formula_id="glassey"))
    if point.c1 > 0 and point.c2 > 0:
        den = z_denominator(n, p, q)
        if den > _TIE:
            out.append(Candidate("Z", alpha=2 * p * (q - 1) / den, formula_id="mixed"))
    return out


def classify_region(point):
    """Pick the smallest available lifespan bound at the reference epsilon.

    Raises
    ------
    InvalidParameter
        If both coefficients vanish or p, q <= 1.
    """
    _check_dim(point.n)
    if point.c1 < 0 or point.c2 < 0:
        raise InvalidParameter("coefficients must be nonnegative")
    if point.c1 == 0 and point.c2 == 0:
        raise InvalidParameter("at least one of c1, c2 must be positive")
    if not (point.p > 1 and point.q > 1):
        raise InvalidParameter("p and q must exceed 1")
    cands = candidate_bounds(point)
    if not cands:
        return RegionVerdict("outside_blowup_region", None, "none")

    def key(c):
        lb = c.log_bound(REFERENCE_EPS)
        return (lb, _TIE_PRIORITY.get(c.regime, 9))

    # exact ties between polynomial bounds are resolved by priority, not rounding
    best = min(cands, key=key)
    for c in cands:
        if (not c.log_type and not best.log_type and c is not best
                and abs(c.alpha - best.alpha) <= 1e-12 * max(1.0, best.alpha)
                and _TIE_PRIORITY[c.regime] < _TIE_PRIORITY[best.regime]):
            best = c
    extended = False
    if best.regime == "Z" and point.n >= 3:
        extended = point.p > 2 * point.n / (point.n - 1) or point.q >= 2 * point.n / (point.n - 2)
    exponent = "log_type" if best.log_type else best.alpha
    return RegionVerdict(best.regime, exponent, best.formula_id, best.kappa,
                         tuple(cands), extended)


def lifespan_bound(verdict, eps, C0=1.0):
    """Evaluate the upper bound on the lifespan; overflow returns ``inf``."""
    if not 0 < eps < 1:
        raise InvalidParameter("eps must lie in (0, 1)")
    if not C0 > 0:
        raise InvalidParameter("C0 must be positive")
    if verdict.regime == "outside_blowup_region":
        raise InvalidParameter("no lifespan bound outside the blow-up region")
    if verdict.log_type:
        try:
            return math.exp(C0 * eps ** (-verdict.kappa))
        except OverflowError:
            return math.inf
    return C0 * eps ** (-verdict.predicted_exponent)


def region_boundary_polylines(n, resolution=200, qmax=6.0, pmax=6.0):
    """Boundary curves of the blow-up regions as labelled (q, p) point arrays."""
    _check_dim(n)
    if resolution < 16:
        raise InvalidParameter("resolution must be at least 16")
    pS, pG = strauss_exponent(n), glassey_exponent(n)
    q = np.linspace(1.0, qmax, resolution)
    p = np.linspace(1.0, pmax, resolution)
    curves = {
        "p=p_G": np.column_stack([q, np.full_like(q, pG)]),
        "q=p_S": np.column_stack([np.full_like(p, pS), p]),
        "q=2p-1": np.column_stack([2 * p - 1, p]),
        "p=q": np.column_stack([q, q]),
    }
    # (q-1)((n-1)p-2) = 4  ->  p = (2 + 4/(q-1)) / (n-1)
    qz = np.linspace(1.0 + 4.0 / ((n - 1) * pmax - 2) if (n - 1) * pmax > 2 else 1.0 + 1e-3,
                     qmax, resolution)
    curves["(q-1)((n-1)p-2)=4"] = np.column_stack([qz, (2 + 4 / (qz - 1)) / (n - 1)])
    if n == 2:
        qs = np.linspace(1.0, 2.0, resolution)
        curves["p=2(q+1)/(5-q)"] = np.column_stack([qs, 2 * (qs + 1) / (5 - qs)])
    out = []
    for label, pts in curves.items():
        keep = (pts[:, 0] >= 1) & (pts[:, 0] <= qmax) & (pts[:, 1] >= 1) & (pts[:, 1] <= pmax)
        out.append((label, pts[keep]))
    return out


def classification_grid(n, resolution=100, q_range=(1.05, 5.0), p_range=(1.05, 5.0),
                        c1=1.0, c2=1.0):
    """Verdicts on a ``resolution`` x ``resolution`` grid of (q, p).

    Returns ``(q, p, regimes, exponents)`` with exponents NaN for log-type
    and outside verdicts.
    """
    _check_dim(n)
    qs = np.linspace(*q_range, resolution)
    ps = np.linspace(*p_range, resolution)
    regimes = np.empty((resolution, resolution), dtype=object)
    expo = np.full((resolution, resolution), np.nan)
    for i, p in enumerate(ps):
        for j, q in enumerate(qs):
            v = classify_region(ProblemPoint(n, float(p), float(q), c1, c2))
            regimes[i, j] = v.regime
            if v.predicted_exponent is not None and not v.log_type:
                expo[i, j] = v.predicted_exponent
    return qs, ps, regimes, expo
