"""Cell-centred radial grid and the weighted discrete Laplace-Beltrami operator.

Nodes sit at ``r_j = (j + 1/2) h``.  In divergence form

    w_j (L u)_j = [c_{j+1/2} (u_{j+1} - u_j) - c_{j-1/2} (u_j - u_{j-1})] / h

with cell weight ``w_j = int_cell K r^(n-1) dr`` and face coefficient
``c_{j+1/2} = r_{j+1/2}^(n-1) / K(r_{j+1/2})``.  The face at r = 0 carries
no flux, which encodes the even symmetry (regularity) of radial functions.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import InvalidParameter
from .metric import geodesic_radius_grid

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def sphere_area(n):
    """Surface area of the unit sphere S^(n-1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass
class RadialGrid:
    profile: object
    h: float
    size: int
    r: np.ndarray
    faces: np.ndarray
    weight: np.ndarray
    flux: np.ndarray
    r_tilde: np.ndarray

    @property
    def n(self):
        return self.profile.n

    @property
    def r_max(self):
        return float(self.faces[-1])

    def laplacian(self, u):
        """Apply L_h to a full-length array (values past the end are zero)."""
        u = np.asarray(u, dtype=float)
        du = np.diff(u, append=0.0)
        fl = self.flux * du
        out = fl.copy()
        out[1:] -= fl[:-1]
        return out / (self.h * self.weight)

    def integrate(self, f):
        """Quadrature of a radial function against dv_g over R^n."""
        return sphere_area(self.n) * float(np.dot(self.weight, f))

    def spectral_bound(self):
        """Largest eigenvalue of -L_h, computed from its symmetric tridiagonal form.

        The domain is truncated with a zero outer value, so this also bounds
        the restriction to any active sub-range.
        """
        c = self.flux
        w = self.weight
        left = np.concatenate(([0.0], c[:-1]))
        diag = (c + left) / (self.h * w)
        off = -c[:-1] / (self.h * np.sqrt(w[:-1] * w[1:]))
        m = self.size - 1
        top = eigvalsh_tridiagonal(diag, off, select="i", select_range=(m, m))[0]
        gersh = float(np.max(diag + np.abs(np.append(off, 0.0)) + np.abs(np.insert(off, 0, 0.0))))
        return min(float(top) * (1 + 1e-9), gersh)


def make_grid(profile, h, r_max):
    if not h > 0:
        raise InvalidParameter("grid spacing must be positive")
    if not r_max > h:
        raise InvalidParameter("r_max must exceed h")
    size = int(math.ceil(r_max / h))
    n = profile.n
    j = np.arange(size)
    r = (j + 0.5) * h
    faces = (j + 1.0) * h
    lo = j * h
    x = (lo + 0.5 * h)[:, None] + 0.5 * h * _GL_NODES[None, :]
    weight = 0.5 * h * ((profile.K(x) * x ** (n - 1)) @ _GL_WEIGHTS)
    flux = faces ** (n - 1) / profile.K(faces)
    r_tilde = geodesic_radius_grid(profile, r)
    return RadialGrid(profile, float(h), size, r, faces, weight, flux, r_tilde)
