"""Pure numpy leapfrog kernel; the fallback when the compiled one is absent.

One call advances ``nsteps`` steps of

    v^{k+1/2} (1 + dt b_k/2) = v^{k-1/2} (1 - dt b_k/2)
                               + dt (s_k L u^k + c2w_k |u^k|^q + c1w_k |v*|^p)
    u^{k+1} = u^k + dt v^{k+1/2}

where ``v*`` is an explicit predictor of the velocity at t_k.  Only cells
up to one past the current support are touched, so the cost follows the
light cone rather than the allocated domain.

``supp`` records, per step, the last cell with ``|u| > sig_tol`` (-1 if
none), which is what finite-speed checks compare against the light cone.

Status codes: 0 all steps done, 1 threshold crossed, 2 non-finite value,
3 support reached the end of the allocated grid.

Cells where both ``|u|`` and ``|v|`` drop below ``FLUSH`` are set to zero so
that denormal precursors ahead of the wave front do not widen the active
range.
"""
import numpy as np

STATUS_OK = 0
STATUS_THRESHOLD = 1
STATUS_NAN = 2
STATUS_DOMAIN = 3
FLUSH = 1e-300


def _apow(x, e):
    return np.abs(x) ** e


def leapfrog(u, v, weight, flux, speed2, damp, c1w, c2w, dt, h, p, q, threshold,
             sig_tol, support, nsteps, phi, moments, supu, supv, supp):
    size = u.shape[0]
    with_moments = phi.shape[0] > 0
    for k in range(nsteps):
        hi = support + 1
        if hi > size - 2:
            return k, STATUS_DOMAIN, support
        sl = slice(0, hi + 1)
        uu = u[: hi + 2]
        fl = flux[: hi + 1] * (uu[1:] - uu[:-1])
        lap = fl.copy()
        lap[1:] -= fl[:-1]
        lap /= h * weight[sl]
        us = u[sl]
        vold = v[sl].copy()
        bd = 0.5 * dt * damp[k]
        a1, a2 = c1w[k], c2w[k]
        uq = _apow(us, q) if a2 != 0.0 else np.zeros_like(us)
        a0 = speed2[k] * lap + a2 * uq
        if a1 != 0.0:
            vpred = vold + 0.5 * dt * (a0 + a1 * _apow(vold, p)) - bd * vold
            nl = _apow(vpred, p)
        else:
            nl = np.zeros_like(us)
        vnew = (vold * (1.0 - bd) + dt * (a0 + a1 * nl)) / (1.0 + bd)
        v[sl] = vnew
        if with_moments:
            w = weight[sl]
            vbar = 0.5 * (vold + vnew)
            wp = w * phi[sl]
            moments[k] = (wp @ us, wp @ vbar, wp @ nl, wp @ uq,
                          w @ us, w @ vbar, w @ nl, w @ uq)
        u[sl] += dt * vnew
        tiny = (np.abs(u[sl]) < FLUSH) & (np.abs(vnew) < FLUSH)
        if tiny.any():
            u[sl][tiny] = 0.0
            v[sl][tiny] = 0.0
            vnew = v[sl]
        su = float(np.max(np.abs(u[sl])))
        sv = float(np.max(np.abs(vnew)))
        nz = np.nonzero((u[sl] != 0.0) | (vnew != 0.0))[0]
        if nz.size and nz[-1] > support:
            support = int(nz[-1])
        sig = np.nonzero(np.abs(u[sl]) > sig_tol)[0]
        supu[k], supv[k] = su, sv
        supp[k] = int(sig[-1]) if sig.size else -1
        if not (np.isfinite(su) and np.isfinite(sv)):
            return k + 1, STATUS_NAN, support
        if su > threshold or sv > threshold:
            return k + 1, STATUS_THRESHOLD, support
    return nsteps, STATUS_OK, support
