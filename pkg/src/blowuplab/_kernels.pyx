# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled leapfrog kernel for the radial semilinear wave equation.

Mirrors :func:`blowuplab._pykernel.leapfrog` exactly; see that module for
the meaning of every argument.
"""
from libc.math cimport fabs, pow, sqrt, isfinite

DEF FLUSH = 1e-300

cdef enum:
    STATUS_OK = 0
    STATUS_THRESHOLD = 1
    STATUS_NAN = 2
    STATUS_DOMAIN = 3


cdef inline double _apow(double x, double e) nogil:
    # common exponents avoid the libm pow call, which dominates the step cost
    x = fabs(x)
    if x == 0.0:
        return 0.0
    if e == 2.0:
        return x * x
    if e == 1.5:
        return x * sqrt(x)
    if e == 3.0:
        return x * x * x
    return pow(x, e)


def leapfrog(double[::1] u, double[::1] v,
             const double[::1] weight, const double[::1] flux,
             const double[::1] speed2, const double[::1] damp,
             const double[::1] c1w, const double[::1] c2w,
             double dt, double h, double p, double q, double threshold, double sig_tol,
             Py_ssize_t support, Py_ssize_t nsteps,
             const double[::1] phi, double[:, ::1] moments,
             double[::1] supu, double[::1] supv, Py_ssize_t[::1] supp):
    cdef Py_ssize_t size = u.shape[0]
    cdef Py_ssize_t k, j, hi, last, lastsig = 0
    cdef bint with_moments = phi.shape[0] > 0
    cdef double s2, bd, a1, a2, lap, left, right, a0, vold, vpred, vnew, nl
    cdef double vbar, wj, pj, mu_, mv_, mnl_, muq_, m0, m1, m2, m3, uq
    cdef double su, sv, x
    cdef int status = STATUS_OK

    with nogil:
        for k in range(nsteps):
            s2 = speed2[k]
            bd = 0.5 * dt * damp[k]
            a1 = c1w[k]
            a2 = c2w[k]
            hi = support + 1
            if hi > size - 2:
                status = STATUS_DOMAIN
                break
            mu_ = 0.0; mv_ = 0.0; mnl_ = 0.0; muq_ = 0.0
            m0 = 0.0; m1 = 0.0; m2 = 0.0; m3 = 0.0
            left = 0.0
            for j in range(hi + 1):
                right = flux[j] * (u[j + 1] - u[j])
                lap = (right - left) / (h * weight[j])
                left = right
                uq = _apow(u[j], q) if a2 != 0.0 else 0.0
                a0 = s2 * lap + a2 * uq
                vold = v[j]
                vpred = vold + 0.5 * dt * (a0 + a1 * _apow(vold, p)) - bd * vold
                nl = _apow(vpred, p) if a1 != 0.0 else 0.0
                vnew = (vold * (1.0 - bd) + dt * (a0 + a1 * nl)) / (1.0 + bd)
                v[j] = vnew
                if with_moments:
                    vbar = 0.5 * (vold + vnew)
                    wj = weight[j]
                    pj = phi[j]
                    mu_ += wj * u[j] * pj
                    mv_ += wj * vbar * pj
                    mnl_ += wj * nl * pj
                    muq_ += wj * uq * pj
                    m0 += wj * u[j]
                    m1 += wj * vbar
                    m2 += wj * nl
                    m3 += wj * uq
            if with_moments:
                moments[k, 0] = mu_
                moments[k, 1] = mv_
                moments[k, 2] = mnl_
                moments[k, 3] = muq_
                moments[k, 4] = m0
                moments[k, 5] = m1
                moments[k, 6] = m2
                moments[k, 7] = m3
            su = 0.0
            sv = 0.0
            last = -1
            lastsig = -1
            for j in range(hi + 1):
                u[j] = u[j] + dt * v[j]
                x = fabs(u[j])
                if x < FLUSH and fabs(v[j]) < FLUSH:
                    u[j] = 0.0
                    v[j] = 0.0
                    x = 0.0
                if x > su:
                    su = x
                if fabs(v[j]) > sv:
                    sv = fabs(v[j])
                if u[j] != 0.0 or v[j] != 0.0:
                    last = j
                if x > sig_tol:
                    lastsig = j
            if last > support:
                support = last
            supu[k] = su
            supv[k] = sv
            supp[k] = lastsig
            if not (isfinite(su) and isfinite(sv)):
                status = STATUS_NAN
                k += 1
                break
            if su > threshold or sv > threshold:
                status = STATUS_THRESHOLD
                k += 1
                break
        else:
            k = nsteps
    return k, status, support
