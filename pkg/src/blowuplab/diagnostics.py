"""Test-function functionals along numerical solutions and the inequalities they obey.

All functionals live on the transformed clock ``t`` (the solver's ``s``).
With ``psi = phi(t) phi(x)`` built from the decaying temporal mode and
the grid eigenvector ``L_h phi = lam^2 phi``:

    F = int u_t psi,   G = int u psi,   H = c1 m~^(2-p) int |u_t|^p psi,
    I = B2 int_0^t H + B2 F(0) + (B2/2) nu(0) G(0),

and for mixed nonlinearities ``F_plain = int u`` and
``G_tilde = int u_t exp(-lam eta(t)) phi(x)``.

Within the leapfrog kernel ``u`` sits at whole steps and ``u_t`` is the
average of the neighbouring half-step velocities, so a row at index k
refers to time ``k dt``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .eigenmode import discrete_log_eigenmode
from .errors import GridMismatch, InvalidParameter
from .grid import sphere_area
from .temporal_mode import solve_decaying_mode, nu_bounds
from .wave_solver import integrate

COLUMNS = ("t", "t_orig", "F", "G", "H", "I", "nu", "F_plain", "G_tilde", "sup_u")


@dataclass
class DiscreteEigenmode:
    """Grid eigenvector of L_h, stored as log phi."""

    lam: float
    h: float
    log_phi: np.ndarray

    @classmethod
    def on(cls, grid, lam):
        return cls(float(lam), grid.h, discrete_log_eigenmode(grid, lam))

    def matches(self, grid):
        return self.log_phi.size == grid.size and abs(self.h - grid.h) <= 1e-15 * grid.h


@dataclass
class Constants:
    lam: float
    delta1: float
    delta2: float
    nu0: float
    B1: float
    B2: float
    t0: float

    @classmethod
    def from_modes(cls, lam, delta1, delta2, nu0):
        B1 = lam * delta1 ** 2 * delta2
        B2 = B1 / (lam / delta2 + B1)
        return cls(lam, delta1, delta2, nu0, B1, B2, B2 / B1 * math.log(2.0))

    def t0_residual(self):
        return abs(1.0 - 2.0 * math.exp(-(self.B1 / self.B2) * self.t0))


@dataclass
class FunctionalTrace:
    t: np.ndarray
    t_orig: np.ndarray
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    I: np.ndarray
    nu: np.ndarray
    F_plain: np.ndarray
    G_tilde: np.ndarray
    sup_u: np.ndarray
    psi_mass: np.ndarray
    volume: np.ndarray
    nonlinear_psi: np.ndarray
    m_tilde: np.ndarray
    constants: Constants
    eps: float
    h: float
    dt: float
    n: int
    p: float
    q: float
    c1: float
    c2: float
    report: object = field(default=None, repr=False)

    def __len__(self):
        return self.t.size

    def table(self):
        return np.column_stack([getattr(self, c) for c in COLUMNS])


def compute_functionals(state, eigenmode, temporal_mode, rescaling, config):
    """F, G, H of one solver state (velocity taken at its staggered half step).

    Raises
    ------
    GridMismatch
        If the eigenvector was built on a different grid.
    """
    grid = state.grid
    if not eigenmode.matches(grid):
        raise GridMismatch("eigenmode and state live on different grids")
    s = state.t
    area = sphere_area(grid.n)
    logpsi_t = float(temporal_mode.log_phi_at(s))
    shift = float(np.max(eigenmode.log_phi))
    phi = np.exp(eigenmode.log_phi - shift)
    scale = area * math.exp(shift + logpsi_t)
    mt = 1.0 if rescaling.damping.is_zero else float(rescaling.m_tilde(s))
    wphi = grid.weight * phi
    F = scale * float(wphi @ state.v)
    G = scale * float(wphi @ state.u)
    H = scale * config.c1 * mt ** (2 - config.p) * float(wphi @ np.abs(state.v) ** config.p)
    return F, G, H


class TraceProbe:
    """Collects kernel moments against a shifted grid eigenvector."""

    def __init__(self, lam, temporal=None):
        self.lam = float(lam)
        self.temporal = temporal
        self.rows = []

    def start(self, sim, state, eps):
        self.eps = eps
        self.area = sphere_area(sim.grid.n)
        self.delta1 = sim.rescaling.delta1
        self._grid = None
        sig = np.nonzero(np.abs(state.u) > 1e-14)[0]
        self._last_supp = int(sig[-1]) if sig.size else -1
        self._last_supu = float(np.max(np.abs(state.u)))
        if self.temporal is None:
            self.temporal = solve_decaying_mode(sim.rescaling, self.lam,
                                                max(sim.n_steps * sim.dt, 1.0) * 1.001 + 1.0)

    def _refresh(self, grid):
        if self._grid is not grid:
            self.mode = DiscreteEigenmode.on(grid, self.lam)
            self.cum_w = np.cumsum(grid.weight)
            self._grid = grid

    def chunk_limit(self, sim, state):
        """Steps per chunk keeping log phi within ~200 across the cells a chunk can reach.

        The support advances at most one cell per step, so the spread of
        log phi over a chunk is bounded by lam * K * h per step.
        """
        kmax = 1.0 / sim.config.delta0
        return max(1, int(200.0 / (self.lam * kmax * sim.grid.h)))

    def weights(self, sim, state, nsteps):
        grid = sim.grid
        self._refresh(grid)
        reach = min(grid.size - 1, state.support + nsteps + 2)
        self.shift = float(self.mode.log_phi[reach])
        # cells past the reach are never touched in this chunk
        self.phi = np.zeros(grid.size)
        self.phi[: reach + 1] = np.exp(self.mode.log_phi[: reach + 1] - self.shift)
        self.cum_wphi = np.cumsum(grid.weight * self.phi)
        return self.phi

    def consume(self, sim, k0, out):
        if out.steps == 0:
            return
        s = sim.times(np.arange(k0, k0 + out.steps))
        co = sim.coefficients(k0, k0 + out.steps)
        mom = out.moments
        log_t = self.temporal.log_phi_at(s)
        eta = sim.to_original_time(s)
        scale = self.area * np.exp(self.shift + log_t)
        scale_tilde = self.area * np.exp(self.shift - self.lam * eta)
        # support at the start of step k is the one recorded after step k-1
        supp = np.concatenate(([self._last_supp], out.supp[: out.steps - 1]))
        supu = np.concatenate(([self._last_supu], out.supu[: out.steps - 1]))
        self._last_supp = int(out.supp[out.steps - 1])
        self._last_supu = float(out.supu[out.steps - 1])
        idx = np.maximum(supp, 0)
        has = supp >= 0
        psi_mass = np.where(has, scale * self.cum_wphi[idx], 0.0)
        volume = np.where(has, self.area * self.cum_w[idx], 0.0)
        block = np.column_stack([
            s, eta,
            scale * mom[:, 1],                      # F
            scale * mom[:, 0],                      # G
            scale * co.c1w[: out.steps] * mom[:, 2],  # H
            self.temporal.nu_at(s),
            self.area * mom[:, 4],                  # F_plain
            scale_tilde * mom[:, 1],                # G_tilde
            supu,
            psi_mass, volume,
            scale * (co.c1w[: out.steps] * mom[:, 2] + co.c2w[: out.steps] * mom[:, 3]),
            np.sqrt(co.speed2[: out.steps]),
        ])
        self.rows.append(block)


def record_trace(config, eps, lam=1.0, t_max=None, backend=None):
    """Transformed-mode run with per-step functionals.

    Returns one row per step.  When the run blows up, the final step is
    dropped: its half-step velocity is already past the threshold, so it
    belongs to the unresolved blow-up rather than the solution.
    """
    if config.damping is None:
        raise InvalidParameter("config needs a damping profile")
    probe = TraceProbe(lam)
    rep = integrate(config, eps, "transformed", t_max=t_max, backend=backend, probe=probe)
    data = np.vstack(probe.rows)
    if rep.blown_up and data.shape[0] > 1:
        data = data[:-1]
    tm = probe.temporal
    d1 = probe.delta1
    const = Constants.from_modes(lam, d1, nu_bounds(tm), float(tm.nu_at(0.0)))
    t = data[:, 0]
    H = data[:, 4]
    I = const.B2 * _cumtrapz(H, t) + const.B2 * data[0, 2] + 0.5 * const.B2 * const.nu0 * data[0, 3]
    return FunctionalTrace(t=t, t_orig=data[:, 1], F=data[:, 2], G=data[:, 3], H=H, I=I,
                           nu=data[:, 5], F_plain=data[:, 6], G_tilde=data[:, 7],
                           sup_u=data[:, 8], psi_mass=data[:, 9], volume=data[:, 10],
                           nonlinear_psi=data[:, 11], m_tilde=data[:, 12], constants=const,
                           eps=eps, h=config.h, dt=rep.dt, n=config.n, p=config.p, q=config.q,
                           c1=config.c1, c2=config.c2, report=rep)


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


@dataclass
class MarginReport:
    """Smallest normalized margin per inequality; a check passes when >= -1."""

    margins: dict
    worst_step: dict
    passed: dict
    fitted: dict
    tol_factor: float
    series: dict = field(default_factory=dict, repr=False)

    @property
    def all_passed(self):
        return all(self.passed.values())


def _running_scale(*arrays):
    mag = np.max(np.abs(np.vstack(arrays)), axis=0)
    return np.maximum.accumulate(mag)


def check_inequalities(trace, tol_factor=None, t_end=None, regime=None):
    """Per-step margins of the functional inequalities, normalized by h^2 * scale.

    ``scale`` is the running maximum of the magnitudes of every term
    entering an inequality, so a margin m_k passes when
    ``m_k >= -h^2 scale_k``.  The reported value is
    ``min_k m_k / (h^2 scale_k)``, which must be >= -1.

    The growth law (F + nu G)' >= H is checked over each step in the
    window form ``(X_{k+1} - X_k)/dt >= (H_k + H_{k+1})/2``, which matches
    the staggering of the leapfrog velocity.

    ``regime`` selects the set: ``"glassey"`` for the c1 > 0 chain
    ((F + nu G)' >= H, F, G >= 0, I <= F after t0, and the
    I' >= kappa I^p (1+t)^-a law), ``"mixed"`` for F_plain convexity,
    the F_plain'' >= kappa |F_plain|^q (1+t)^-n(q-1) law and the G_tilde
    floor.  The default picks by the nonlinearity coefficients.
    """
    tol = trace.h ** 2 if tol_factor is None else tol_factor
    if regime is None:
        regime = "mixed" if trace.c2 > 0 else "glassey"
    keep = np.ones(len(trace), bool) if t_end is None else trace.t <= t_end
    t = trace.t[keep]
    margins, worst, passed, fitted, series = {}, {}, {}, {}, {}

    def record(name, m, scale, sel=None):
        sel = np.ones_like(m, bool) if sel is None else sel
        denom = tol * np.where(scale > 0, scale, 1.0)
        norm = np.where(sel, m / denom, np.inf)
        series[name] = np.where(sel, norm, np.nan)
        if not np.any(sel):
            margins[name], worst[name], passed[name] = math.inf, -1, True
            return
        k = int(np.argmin(norm))
        margins[name] = float(norm[k])
        worst[name] = k
        passed[name] = bool(norm[k] >= -1.0)

    c = trace.constants
    if regime == "glassey":
        F, G, H, I, nu = (getattr(trace, x)[keep] for x in ("F", "G", "H", "I", "nu"))
        X = F + nu * G
        dX = np.zeros_like(X)
        Hm = H.copy()
        if X.size > 1:
            dX[:-1] = np.diff(X) / np.diff(t)
            Hm[:-1] = 0.5 * (H[1:] + H[:-1])
        window = np.zeros_like(X, bool)
        window[:-1] = True
        record("FG_growth", dX - Hm, _running_scale(dX, Hm, F, nu * G), window)
        record("F_nonneg", F, _running_scale(F, G))
        record("G_nonneg", G, _running_scale(F, G))
        after = t >= c.t0
        record("I_le_F", F - I, _running_scale(F, I), after)
        a = 0.5 * (trace.n - 1) * (trace.p - 1)
        CL = float(np.max(trace.psi_mass[keep] / (1 + t) ** (0.5 * (trace.n - 1))))
        mt = trace.m_tilde[keep]
        kappa = (c.B2 * trace.c1 * float(np.min(mt ** (2 - trace.p))) / CL ** (trace.p - 1)
                 if CL > 0 else 0.0)
        lhs = c.B2 * H
        rhs = kappa * np.abs(I) ** trace.p * (1 + t) ** (-a)
        record("I_ode", lhs - rhs, _running_scale(lhs, rhs), after)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(after & (I > 0), lhs * (1 + t) ** a / np.abs(I) ** trace.p, np.inf)
        fitted.update(kappa=kappa, kappa_fit=float(np.min(ratio)), C_L=CL, t0=c.t0,
                      B1=c.B1, B2=c.B2, delta2=c.delta2)
        record("I_monotone", np.diff(I, prepend=I[0]), _running_scale(I))
    else:
        Fp = trace.F_plain[keep]
        d2 = np.zeros_like(Fp)
        d2[1:-1] = (Fp[2:] - 2 * Fp[1:-1] + Fp[:-2]) / trace.dt ** 2
        inner = np.zeros_like(Fp, bool)
        inner[1:-1] = True
        record("F_convex", d2, _running_scale(d2), inner)
        dF0 = (Fp[1] - Fp[0]) / trace.dt if Fp.size > 1 else 0.0
        lin = Fp[0] + t * dF0
        record("F_linear_floor", Fp - lin, _running_scale(Fp, lin))
        CV = float(np.max(trace.volume[keep] / (1 + t) ** trace.n))
        mt = trace.m_tilde[keep]
        kappa1 = trace.c2 * float(np.min(mt * mt)) / CV ** (trace.q - 1) if CV > 0 else 0.0
        rhs = kappa1 * np.abs(Fp) ** trace.q * (1 + t) ** (-trace.n * (trace.q - 1))
        record("F_ode", d2 - rhs, _running_scale(d2, rhs), inner)
        Gt = trace.G_tilde[keep]
        late = t >= 1.0
        floor = float(np.min(Gt[late]) / trace.eps) if np.any(late) else math.nan
        record("G_tilde_floor", Gt, _running_scale(Gt), late)
        fitted.update(kappa1=kappa1, C_V=CV, G_tilde_C=floor)
        passed["G_tilde_positive"] = bool(floor > 0)
    return MarginReport(margins, worst, passed, fitted, tol, series)


def trace_table(trace, report=None):
    """Column names and rows for CSV export: the functionals, then margins."""
    report = check_inequalities(trace) if report is None else report
    names = list(COLUMNS) + [f"margin_{k}" for k in report.series]
    n = len(trace)
    cols = [trace.table()]
    for k, v in report.series.items():
        col = np.full(n, np.nan)
        col[: v.size] = v
        cols.append(col[:, None])
    return names, np.hstack(cols)
