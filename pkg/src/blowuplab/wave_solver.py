"""Radial finite-difference solver for the semilinear damped wave equation.

Two equivalent formulations are integrated:

``original``
    u_tt - Lu + b(t) u_t = c1 |u_t|^p + c2 |u|^q
``transformed``
    u_ss - m~(s)^2 Lu = c1 m~^(2-p) |u_s|^p + c2 m~^2 |u|^q

where L is the Laplace-Beltrami operator of ``K^2 dr^2 + r^2 dw^2`` acting
on radial functions.  Times reported by transformed runs are mapped back
to the original clock through ``t = eta(s)``.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import CFLViolation, InvalidParameter, NaNDetected
from .grid import make_grid
from .metric import ellipticity_bounds, geodesic_radius, make_profile
from .rescale import DampingProfile, build_rescaling

MODES = ("original", "transformed")
SIG_TOL = 1e-14
CHUNK = 8192


def bump(r, R0, power=4):
    """(1 - (r/R0)^2)^power on r < R0, zero outside."""
    x = 1.0 - (np.asarray(r, dtype=float) / R0) ** 2
    return np.where(x > 0, np.maximum(x, 0.0) ** power, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    n: int = 3
    p: float = 2.0
    q: float = 2.0
    c1: float = 1.0
    c2: float = 0.0
    metric: object = None
    damping: DampingProfile = field(default_factory=DampingProfile)
    h: float = 0.05
    cfl: float = 0.5
    t_max: float = 100.0
    threshold: float = 1e8
    R0: float = 1.0
    A0: float = 1.0
    A1: float = 1.0
    data_power: int = 4
    r_max: float = None
    u0: object = None
    u1: object = None

    def __post_init__(self):
        if self.metric is None:
            object.__setattr__(self, "metric", make_profile("flat", n=self.n))
        if self.metric.n != self.n:
            raise InvalidParameter("metric dimension does not match n")
        if not (self.p > 1 and self.q > 1):
            raise InvalidParameter("p and q must exceed 1")
        if self.c1 < 0 or self.c2 < 0:
            raise InvalidParameter("c1, c2 must be nonnegative")
        if not 0 < self.cfl < 1:
            raise InvalidParameter("CFL factor must lie in (0, 1)")
        if not (self.h > 0 and self.t_max > 0 and self.R0 > 0 and self.threshold > 0):
            raise InvalidParameter("h, t_max, R0 and threshold must be positive")
        if self.A0 < 0 or self.A1 < 0:
            raise InvalidParameter("data amplitudes must be nonnegative")

    @property
    def delta0(self):
        return ellipticity_bounds(self.metric)

    @property
    def R1(self):
        """Geodesic radius of the initial support."""
        return geodesic_radius(self.metric, self.R0)

    def data(self, r):
        f0 = self.u0 if self.u0 is not None else (lambda x: bump(x, self.R0, self.data_power))
        f1 = self.u1 if self.u1 is not None else (lambda x: bump(x, self.R0, self.data_power))
        return self.A0 * np.asarray(f0(r), dtype=float), self.A1 * np.asarray(f1(r), dtype=float)

    def with_h(self, h):
        return replace(self, h=h)


@dataclass
class RadialState:
    """Discrete (u, v) with v staggered half a step behind u."""

    t: float
    u: np.ndarray
    v: np.ndarray
    support: int
    grid: object
    dt: float
    step_index: int = 0

    @property
    def sig_support(self):
        idx = np.nonzero(np.abs(self.u) > SIG_TOL)[0]
        return int(idx[-1]) if idx.size else -1


@dataclass
class Coefficients:
    """Per-step coefficient arrays of the unified update."""

    speed2: np.ndarray
    damp: np.ndarray
    c1w: np.ndarray
    c2w: np.ndarray


@dataclass
class Simulation:
    """Resolved setup for one (config, eps, mode) run."""

    config: SolverConfig
    mode: str
    grid: object
    dt: float
    rescaling: object
    n_steps: int

    def times(self, k):
        return np.asarray(k, dtype=float) * self.dt

    def coefficients(self, k0, k1):
        cfg = self.config
        s = self.times(np.arange(k0, k1))
        if self.mode == "original":
            one = np.ones_like(s)
            return Coefficients(one, cfg.damping.b(s), cfg.c1 * one, cfg.c2 * one)
        mt = self.rescaling.m_tilde(s) if not cfg.damping.is_zero else np.ones_like(s)
        return Coefficients(mt * mt, np.zeros_like(s), cfg.c1 * mt ** (2 - cfg.p),
                            cfg.c2 * mt * mt)

    def to_original_time(self, s):
        if self.mode == "original" or self.config.damping.is_zero:
            return np.asarray(s, dtype=float)
        return self.rescaling.eta(s)

    def cone_radius(self, s):
        """Geodesic cone radius t + R1 (original time) at run time ``s``."""
        return self.to_original_time(s) + self.config.R1


def setup(config, mode="transformed", t_max=None):
    """Build grid, rescaling and time step for a run up to original time t_max."""
    if mode not in MODES:
        raise InvalidParameter(f"mode must be one of {MODES}")
    t_max = config.t_max if t_max is None else t_max
    d0 = config.delta0
    resc = build_rescaling(config.damping, t_max * 1.05 + 1.0)
    d1 = resc.delta1
    mt_sup = 1.0
    if not config.damping.is_zero:
        mt_sup = max(float(np.max(config.damping.m(resc.t))), resc.k)
    if mode == "transformed":
        dt = config.cfl * d0 * config.h / mt_sup
        s_end = float(resc.h(t_max))
    else:
        dt = config.cfl * d0 * config.h
        s_end = t_max
    if config.r_max is not None:
        r_max = config.r_max
    else:
        r_max = t_max / (d0 * d1) + config.R1 / d0 + 20 * config.h
    grid = make_grid(config.metric, config.h, r_max)
    speed = mt_sup if mode == "transformed" else 1.0
    if 0.5 * dt * speed * math.sqrt(grid.spectral_bound()) > 1.0:
        raise CFLViolation(f"dt = {dt:.3e} exceeds the leapfrog stability limit")
    n_steps = int(math.ceil(s_end / dt))
    return Simulation(config, mode, grid, dt, resc, n_steps)


def init_state(sim, eps):
    """State at t = 0 with u = eps u0 and velocity staggered back half a step."""
    if eps < 0:
        raise InvalidParameter("eps must be nonnegative")
    cfg, grid, dt = sim.config, sim.grid, sim.dt
    f0, f1 = cfg.data(grid.r)
    probe = np.linspace(0.0, cfg.R0 * 1.5, 301)
    g0, g1 = cfg.data(probe)
    if np.any(f0 < 0) or np.any(f1 < 0) or np.any(g0 < 0) or np.any(g1 < 0):
        raise InvalidParameter("initial data must be nonnegative")
    u = eps * f0
    v0 = eps * f1
    co = sim.coefficients(0, 1)
    acc = (co.speed2[0] * grid.laplacian(u) + co.c2w[0] * np.abs(u) ** cfg.q
           + co.c1w[0] * np.abs(v0) ** cfg.p - co.damp[0] * v0)
    v = v0 - 0.5 * dt * acc
    nz = np.nonzero((u != 0) | (v != 0))[0]
    support = int(nz[-1]) if nz.size else 0
    return RadialState(0.0, u, v, support, grid, dt)


@dataclass
class ChunkOutput:
    steps: int
    status: int
    supu: np.ndarray
    supv: np.ndarray
    supp: np.ndarray
    moments: np.ndarray


def advance(sim, state, nsteps, phi=None, backend=None):
    """Advance ``state`` in place by up to ``nsteps`` leapfrog steps."""
    cfg, grid = sim.config, sim.grid
    fn = backend or kernels.leapfrog
    k0 = state.step_index
    co = sim.coefficients(k0, k0 + nsteps)
    phi_arr = np.ascontiguousarray(phi, dtype=float) if phi is not None else np.zeros(0)
    moments = np.zeros((nsteps if phi is not None else 1, 8))
    supu = np.zeros(nsteps)
    supv = np.zeros(nsteps)
    supp = np.full(nsteps, -1, dtype=np.intp)
    done, status, support = fn(state.u, state.v, grid.weight, grid.flux,
                               co.speed2, co.damp, co.c1w, co.c2w,
                               sim.dt, grid.h, float(cfg.p), float(cfg.q),
                               float(cfg.threshold), SIG_TOL, int(state.support), int(nsteps),
                               phi_arr, moments, supu, supv, supp)
    state.support = int(support)
    state.step_index = k0 + int(done)
    state.t = state.step_index * sim.dt
    return ChunkOutput(int(done), int(status), supu[:done], supv[:done], supp[:done],
                       moments[:done] if phi is not None else None)


def extend_grid(sim, state, factor=1.5):
    """Enlarge the domain in place when the active region reaches its end."""
    g = make_grid(sim.config.metric, sim.config.h, sim.grid.r_max * factor)
    for name in ("u", "v"):
        old = getattr(state, name)
        new = np.zeros(g.size)
        new[: old.size] = old
        setattr(state, name, new)
    sim.grid = g
    state.grid = g


def step(state, sim):
    """One leapfrog step; returns the same (mutated) state."""
    out = advance(sim, state, 1)
    if out.status == kernels.STATUS_NAN:
        raise NaNDetected(f"non-finite value at t = {state.t}")
    return state


def discrete_energy(sim, u_new, u_old, v_half):
    """Leapfrog-conserved energy 1/2 <v,v>_w + 1/2 sum c (du_new)(du_old)/h."""
    g = sim.grid
    kin = 0.5 * float(np.dot(g.weight, v_half * v_half))
    dn = np.diff(u_new, append=0.0)
    do = np.diff(u_old, append=0.0)
    pot = 0.5 * float(np.dot(g.flux, dn * do)) / g.h
    return kin + pot


@dataclass
class BlowupReport:
    blown_up: bool
    T_num: float
    refinement_consistent: bool
    mode: str
    h: float
    dt: float
    T_half: float = None
    status: str = "ok"
    steps: int = 0
    support_margin: float = math.inf
    trace: np.ndarray = field(default=None, repr=False)

    def as_dict(self):
        return {
            "blown_up": self.blown_up,
            "T_num": self.T_num,
            "T_half": self.T_half,
            "refinement_consistent": self.refinement_consistent,
            "mode": self.mode,
            "h": self.h,
            "dt": self.dt,
            "status": self.status,
            "steps": self.steps,
            "support_margin": self.support_margin,
        }


_STATUS = {kernels.STATUS_OK: "ok", kernels.STATUS_THRESHOLD: "threshold",
           kernels.STATUS_NAN: "nan", kernels.STATUS_DOMAIN: "domain"}


def integrate(config, eps, mode="transformed", t_max=None, trace_every=None, backend=None,
              probe=None):
    """Single-resolution run; returns a report without the refinement flag.

    ``probe`` (optional) supplies per-chunk test-function weights through
    ``probe.weights(sim, state, nsteps)``, may shorten chunks through
    ``probe.chunk_limit(sim, state)``, and receives every chunk through
    ``probe.consume(sim, k0, out)``; see :mod:`blowuplab.diagnostics`.

    Raises
    ------
    NaNDetected
        If the solution becomes non-finite before crossing the threshold.
    """
    sim = setup(config, mode, t_max)
    state = init_state(sim, eps)
    grid = sim.grid
    if probe is not None:
        probe.start(sim, state, eps)
    rows = []
    margin = math.inf
    status = kernels.STATUS_OK
    thin = trace_every or max(1, sim.n_steps // 2000)
    while state.step_index < sim.n_steps:
        k0 = state.step_index
        nst = min(CHUNK, sim.n_steps - k0)
        if probe is not None:
            nst = min(nst, probe.chunk_limit(sim, state))
        phi = probe.weights(sim, state, nst) if probe is not None else None
        out = advance(sim, state, nst, phi=phi, backend=backend)
        if probe is not None:
            probe.consume(sim, k0, out)
        ks = np.arange(k0 + 1, k0 + 1 + out.steps)
        s = sim.times(ks)
        valid = out.supp >= 0
        if np.any(valid):
            rt = grid.r_tilde[out.supp[valid]]
            margin = min(margin, float(np.min(sim.cone_radius(s[valid]) - rt)))
        sel = (ks % thin == 0) | (ks == ks[-1]) if out.steps else np.zeros(0, bool)
        if out.steps:
            rows.append(np.column_stack([s[sel], sim.to_original_time(s[sel]),
                                         out.supu[sel], out.supv[sel]]))
        status = out.status
        if status == kernels.STATUS_DOMAIN:
            extend_grid(sim, state)
            grid = sim.grid
            continue
        if status != kernels.STATUS_OK:
            break
    if status == kernels.STATUS_NAN:
        raise NaNDetected(f"non-finite solution at s = {state.t:.6g}")
    blown = status == kernels.STATUS_THRESHOLD
    T = float(sim.to_original_time(state.t)) if blown else None
    trace = np.vstack(rows) if rows else np.zeros((0, 4))
    return BlowupReport(blown, T, False, mode, config.h, sim.dt, status=_STATUS[status],
                        steps=state.step_index, support_margin=margin, trace=trace)


def run(config, eps, mode="transformed", refine=True, t_max=None, backend=None):
    """Integrate until the threshold or t_max, then cross-check at h/2."""
    rep = integrate(config, eps, mode, t_max, backend=backend)
    if refine and rep.blown_up:
        fine = integrate(config.with_h(config.h / 2), eps, mode,
                         t_max=min(config.t_max if t_max is None else t_max, 2 * rep.T_num + 1.0),
                         backend=backend)
        rep.T_half = fine.T_num
        if fine.blown_up:
            rep.refinement_consistent = abs(rep.T_num - fine.T_num) / fine.T_num <= 0.05
        rep.support_margin = min(rep.support_margin, fine.support_margin)
    return rep


@dataclass
class SupportReport:
    r_tilde_support: float
    cone: float
    margin: float


def support_radius(state, sim):
    """Geodesic radius of the numerical support against the cone eta(t) + R1."""
    j = state.sig_support
    rt = float(sim.grid.r_tilde[j]) if j >= 0 else 0.0
    cone = float(sim.cone_radius(state.t))
    return SupportReport(rt, cone, cone - rt)
