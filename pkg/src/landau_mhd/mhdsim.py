"""Nonlinear perturbed MHD around a background jet: stepping, energy audits, Duhamel checks.

The perturbation ``(w, B)`` obeys, with unit viscosity and resistivity,

    dw/dt = Lap w - P d_i[w_i w_j - B_i B_j + U_i w_j + w_i U_j]
    dB/dt = Lap B - P d_i[v_i B_j - B_i v_j],      v = w + U.

Both fluxes are formed on the grid from dealiased fields (15 transforms per
evaluation) and stepped with the Lawson RK3 scheme of :mod:`linop`.
"""
import hashlib
import json
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import BlowUpError, ConfigurationError, ContractError
from .landau import make_background, measured_C0
from .linop import LawsonRK3, LinearOperatorHandle, evolve_linear, fit_decay
from .specfield import Grid, NormSeries, SpectralVectorField, random_solenoidal_Lq


@dataclass
class InitialSpec:
    """Initial-data recipe for one of ``w0`` and ``B0``; amplitude is the L2 norm."""
    seed: int = 0
    q_target: float = 1.5
    profile: str = "algebraic-tail"
    amplitude: float = 1.0
    alpha: float = None
    smoothing: float = 3.0


@dataclass
class SimConfig:
    """Everything that determines a nonlinear run.

    ``dt`` is the largest step; steps shrink to ``cfl * h / max(|w| + |U|, |B|)``
    when that is smaller. ``cadence`` is the number of steps between norm
    records (1 keeps the energy quadrature accurate).
    """
    N: int = 64
    L: float = 64.0
    threads: int = 1
    b: tuple = (0.0, 0.0, 0.0)
    eps_core: float = None
    box_window: float = 0.75
    w0: InitialSpec = dc_field(default_factory=InitialSpec)
    B0: InitialSpec = dc_field(default_factory=lambda: InitialSpec(seed=1))
    dt: float = 0.05
    cfl: float = 0.5
    t_final: float = 10.0
    cadence: int = 1
    fit_window: tuple = None

    def __post_init__(self):
        self.b = tuple(float(x) for x in self.b)
        for name in ("w0", "B0"):
            spec = getattr(self, name)
            if isinstance(spec, dict):
                spec = InitialSpec(**spec)
                setattr(self, name, spec)
            if not np.isfinite(spec.amplitude) or spec.amplitude < 0:
                raise ConfigurationError(f"{name}.amplitude must be finite and >= 0")
            if not 1 <= spec.q_target <= 2:
                raise ConfigurationError(f"{name}.q_target must lie in [1, 2]")
        if not (self.dt > 0 and self.t_final > 0 and self.cadence >= 1):
            raise ConfigurationError("dt, t_final must be positive and cadence >= 1")
        if self.fit_window is not None:
            self.fit_window = tuple(float(x) for x in self.fit_window)

    @property
    def b_mag(self):
        return float(np.linalg.norm(self.b))

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class MhdState:
    t: float
    w: SpectralVectorField
    B: SpectralVectorField

    def energy(self):
        return self.w.inner(self.w) + self.B.inner(self.B)


def _zeros_like_phys(grid):
    return np.zeros(grid.phys_shape(3))


def _U(background, grid):
    return _zeros_like_phys(grid) if background is None else background.phys


def _nonlinear_mhd(grid, U, u):
    """Flux part of the right side for the stacked spectrum ``u = (w, B)``."""
    g = grid
    phys = g.ifft(u)
    wp, Bp = phys[:3], phys[3:]
    out = np.empty_like(u)
    S = _kernels.stress(wp, Bp, U, 1.0, 1.0, 1.0, np.empty((6,) + wp.shape[1:]))
    _kernels.div_sym(g.fft(S), g.kx, g.ky, g.kz, g.inv_k2, g.dealias, out[:3])
    A = _kernels.induction(wp, Bp, U, 1.0, 1.0, np.empty((3,) + wp.shape[1:]))
    _kernels.div_anti(g.fft(A), g.kx, g.ky, g.kz, g.inv_k2, g.dealias, out[3:])
    return np.negative(out, out=out)


def _nonlinear_ns(grid, U, w):
    """Flux part for the Navier-Stokes reduction (``B = 0``)."""
    g = grid
    wp = g.ifft(w)
    out = np.empty_like(w)
    S = _kernels.stress(wp, wp, U, 1.0, 0.0, 1.0, np.empty((6,) + wp.shape[1:]))
    _kernels.div_sym(g.fft(S), g.kx, g.ky, g.kz, g.inv_k2, g.dealias, out)
    return np.negative(out, out=out)


def rhs(state, background):
    """Full right side ``(dw/dt, dB/dt)`` as spectral fields."""
    g = state.w.grid
    u = np.concatenate((state.w.spec, state.B.spec))
    d = _nonlinear_mhd(g, _U(background, g), u) - g.k2 * u
    return (SpectralVectorField(g, spec=d[:3], solenoidal=True),
            SpectralVectorField(g, spec=d[3:], solenoidal=True))


def ns_rhs(w, background):
    """Right side of the perturbed Navier-Stokes equation for ``w``."""
    g = w.grid
    d = _nonlinear_ns(g, _U(background, g), w.spec) - g.k2 * w.spec
    return SpectralVectorField(g, spec=d, solenoidal=True)


class Integrator:
    """Lawson RK3 stepper for the stacked state, or for ``w`` alone on the NS path."""

    def __init__(self, grid, background, ns_path=False):
        self.grid = grid
        self.background = background
        self.ns_path = ns_path
        U = _U(background, grid)
        self.U = U
        self.umag = np.sqrt(np.sum(U * U, axis=0))
        fn = _nonlinear_ns if ns_path else _nonlinear_mhd
        self.stepper = LawsonRK3(grid, lambda u: fn(grid, U, u))

    def max_speed(self, phys):
        if self.ns_path:
            return float(np.max(np.sqrt(np.sum(phys * phys, axis=0)) + self.umag))
        w, B = phys[:3], phys[3:]
        return max(float(np.max(np.sqrt(np.sum(w * w, axis=0)) + self.umag)),
                   float(np.max(np.sqrt(np.sum(B * B, axis=0)))))

    def step(self, u, dt):
        return self.stepper.step(u, dt)


def _check_state(grid, u, t):
    comps = u.reshape((-1, 3) + u.shape[1:])
    scale = max(float(np.max(np.abs(u))), 1e-300)
    for c in comps:
        div = np.max(np.abs(grid.kx * c[0] + grid.ky * c[1] + grid.kz * c[2]))
        if div > 1e-10 * scale * np.sqrt(np.max(grid.k2)):
            raise ContractError(f"state lost solenoidality at t={t} ({div:.2e})")
        if np.max(np.abs(c[:, 0, 0, 0])) > 1e-14 * scale:
            raise ContractError(f"state acquired a mean at t={t}")


def step(state, dt, background, integrator=None):
    """Advance ``state`` by ``dt``; checks solenoidality, mean and growth.

    Raises
    ------
    BlowUpError
        If the result is non-finite or its energy grows more than a hundredfold.
    """
    g = state.w.grid
    integ = integrator or Integrator(g, background)
    u = np.concatenate((state.w.spec, state.B.spec))
    e0 = g.inner_spec(u, u)
    new = integ.step(u, dt)
    e1 = g.inner_spec(new, new) if np.all(np.isfinite(new)) else np.inf
    if not np.isfinite(e1) or e1 > 100 * max(e0, 1e-300):
        raise BlowUpError("nonlinear step blew up", {"t": state.t, "dt": dt, "energy_before": e0,
                                                     "energy_after": e1})
    _check_state(g, new, state.t + dt)
    return MhdState(state.t + dt, SpectralVectorField(g, spec=new[:3], solenoidal=True),
                    SpectralVectorField(g, spec=new[3:], solenoidal=True))


@dataclass
class RunResult:
    """Outcome of :func:`run`.

    Attributes
    ----------
    series : NormSeries
        ``l2_w, l2_B, grad_w, grad_B, couple_w, couple_B, dt`` per record.
    state : MhdState
        Final state.
    snapshots : dict
        ``{t: (w_spec, B_spec)}`` at the requested snapshot times.
    """
    config: SimConfig
    series: NormSeries
    state: MhdState
    C0: float
    background: object
    snapshots: dict = dc_field(default_factory=dict)
    ns_path: bool = False
    steps: int = 0


def initial_state(config, grid):
    w0 = random_solenoidal_Lq(grid, config.w0.seed, config.w0.q_target, config.w0.profile,
                              alpha=config.w0.alpha, amplitude=config.w0.amplitude,
                              smoothing=config.w0.smoothing)
    if config.B0.amplitude > 0:
        B0 = random_solenoidal_Lq(grid, config.B0.seed, config.B0.q_target, config.B0.profile,
                                  alpha=config.B0.alpha, amplitude=config.B0.amplitude,
                                  smoothing=config.B0.smoothing)
    else:
        B0 = SpectralVectorField.zeros(grid)
    return MhdState(0.0, w0, B0)


def build(config):
    """Grid, background (``None`` for ``b = 0``), initial state and measured ``C0``."""
    grid = Grid(config.N, config.L, config.threads)
    bg = make_background(config.b, grid, config.eps_core, config.box_window)
    C0 = 0.0 if bg is None else measured_C0(bg.params)
    return grid, bg, initial_state(config, grid), C0


def diagnostics(grid, u, phys, background):
    """Norms and background couplings of the stacked state ``(w, B)``.

    The couplings ``<(w.grad)U, w>`` are node sums; for dealiased factors the
    integrand has no wavenumber that aliases onto zero, so the sum is exact.
    """
    out = {}
    for name, sl in (("w", slice(0, 3)), ("B", slice(3, 6))):
        s = u[sl]
        out[f"l2_{name}"] = np.sqrt(grid.inner_spec(s, s))
        out[f"grad_{name}"] = np.sqrt(grid.L ** 3 * np.sum(grid.hweight * grid.k2 * np.abs(s) ** 2))
        if background is None:
            out[f"couple_{name}"] = 0.0
        else:
            f = phys[sl]
            out[f"couple_{name}"] = grid.dV * float(
                np.einsum("ixyz,ijxyz,jxyz->", f, background.grad, f, optimize=True))
    return out


def run(config, background=None, grid=None, snapshot_times=(), initial=None, progress=None):
    """Integrate the perturbed system to ``config.t_final``.

    Parameters
    ----------
    config : SimConfig
    background, grid : optional
        Reuse a prebuilt grid/background (both or neither).
    snapshot_times : iterable of float
        Times at which ``(w, B)`` spectra are stored; steps land on them.
    initial : MhdState, optional
        Overrides the configured initial data.
    progress : callable, optional
        Called as ``progress(t)`` after every step.

    Returns
    -------
    RunResult
        With ``ns_path`` set when ``B0 = 0`` and the Navier-Stokes reduction
        was integrated instead of the full system.
    """
    if grid is None:
        grid, background, state, C0 = build(config)
    else:
        state = initial_state(config, grid)
        C0 = 0.0 if background is None else measured_C0(background.params)
    if initial is not None:
        state = initial
    ns_path = not np.any(state.B.spec)
    integ = Integrator(grid, background, ns_path=ns_path)
    u = state.w.spec.copy() if ns_path else np.concatenate((state.w.spec, state.B.spec))
    zeros_B = np.zeros(grid.spec_shape(3), dtype=complex)
    marks = sorted(set(float(t) for t in snapshot_times if 0 <= t <= config.t_final))
    series = NormSeries()
    snaps = {}

    def full(v):
        return np.concatenate((v, zeros_B)) if ns_path else v

    def record(t, v, dt):
        phys = grid.ifft(full(v))
        series.append(t, dt=dt, **diagnostics(grid, full(v), phys, background))
        return phys

    t = 0.0
    phys = record(t, u, 0.0)
    if marks and marks[0] == 0.0:
        snaps[0.0] = (u[:3].copy(), full(u)[3:].copy())
    nxt = [m for m in marks if m > 0]
    n = 0
    e_prev = grid.inner_spec(u, u)
    while t < config.t_final - 1e-12:
        vmax = integ.max_speed(phys)
        dt = config.dt if vmax == 0 else min(config.dt, config.cfl * grid.h / vmax)
        target = min(config.t_final, nxt[0]) if nxt else config.t_final
        dt = min(dt, target - t)
        u = integ.step(u, dt)
        n += 1
        t = target if abs(t + dt - target) < 1e-12 else t + dt
        e = grid.inner_spec(u, u) if np.all(np.isfinite(u)) else np.inf
        if not np.isfinite(e) or e > 100 * max(e_prev, 1e-300):
            raise BlowUpError("nonlinear run blew up", {"t": t, "step": n, "dt": dt,
                                                        "energy_before": e_prev, "energy": e,
                                                        "b_mag": config.b_mag})
        e_prev = e
        _check_state(grid, u, t)
        if n % config.cadence == 0 or t >= config.t_final - 1e-12 or (nxt and t == nxt[0]):
            phys = record(t, u, dt)
        else:
            phys = grid.ifft(full(u))
        if nxt and t == nxt[0]:
            snaps[t] = (u[:3].copy(), full(u)[3:].copy())
            nxt.pop(0)
        if progress is not None:
            progress(t)
    v = full(u)
    final = MhdState(t, SpectralVectorField(grid, spec=v[:3].copy(), solenoidal=True),
                     SpectralVectorField(grid, spec=v[3:].copy(), solenoidal=True))
    return RunResult(config, series, final, C0, background, snaps, ns_path, n)


# ---------------------------------------------------------------- audits

def _cumulative(t, f):
    """Cumulative integral of samples ``f`` at times ``t`` by a cubic spline."""
    if len(t) < 4:
        return np.concatenate(([0.0], np.cumsum(0.5 * np.diff(t) * (f[1:] + f[:-1]))))
    cs = CubicSpline(t, f)
    return np.array([cs.integrate(t[0], x) for x in t])


@dataclass
class EnergyReport:
    """Energy audit of a norm series.

    Attributes
    ----------
    monotone_worst : largest ``E(t) - E(s)`` over recorded ``s < t`` (should be <= 0)
    sei_defect : largest ``|slack|/E(s)`` of the strong energy balance
    sei_violation : largest ``max(0, -slack)/E(s)``
    coercive_worst : largest violation of the coercive form, relative to ``E(s)``
    averaged_worst : largest violation of the time-averaged bound, relative
    flagged : whether ``sei_violation`` exceeds ``tol``
    """
    monotone_worst: float
    sei_defect: float
    sei_violation: float
    coercive_worst: float
    averaged_worst: float
    flagged: bool
    tol: float = 1e-3

    def as_record(self):
        return asdict(self)


def energy_inequality_report(series, C0, b_mag, tol=1e-3):
    """Audit a :class:`NormSeries` from :func:`run` against the energy inequalities.

    For every recorded pair ``s < t`` it evaluates

    * the monotonicity ``E(t) <= E(s)`` with ``E = ||w||^2 + ||B||^2``;
    * the slack of ``E(t) + 2 int_s^t D <= E(s) - 2 int_s^t (cw - cB)``, where
      ``D = ||grad w||^2 + ||grad B||^2`` and ``cw, cB`` are the recorded
      background couplings (the balance is an equality for smooth solutions,
      so both the signed violation and the absolute defect are reported);
    * ``E(t) + 2 (1 - 4 C0 |b|) int_s^t D <= E(s)``;
    * ``(||w(t)|| + ||B(t)||)/sqrt 2 <= (2/t) int_{t/2}^t (||w|| + ||B||)``.
    """
    t = series.t
    E = series["l2_w"] ** 2 + series["l2_B"] ** 2
    D = series["grad_w"] ** 2 + series["grad_B"] ** 2
    C = series["couple_w"] - series["couple_B"]
    ID = _cumulative(t, D)
    IC = _cumulative(t, C)
    dE = E[None, :] - E[:, None]            # [s, t] -> E(t) - E(s)
    upper = np.triu(np.ones_like(dE, dtype=bool), 1)
    Es = np.broadcast_to(E[:, None], dE.shape)
    mono = float(np.max(np.where(upper, dE / Es, -np.inf))) if len(t) > 1 else 0.0
    dID = ID[None, :] - ID[:, None]
    dIC = IC[None, :] - IC[:, None]
    slack = -dE - 2 * dID - 2 * dIC
    rel = np.where(upper, slack / Es, 0.0)
    sei_defect = float(np.max(np.abs(rel)))
    sei_violation = float(max(0.0, -np.min(rel)))
    coer = dE + 2 * (1 - 4 * C0 * b_mag) * dID
    coercive = float(max(0.0, np.max(np.where(upper, coer / Es, -np.inf)))) if len(t) > 1 else 0.0
    S = series["l2_w"] + series["l2_B"]
    IS = _cumulative(t, S)
    worst_avg = 0.0
    for k in range(1, len(t)):
        if t[k] / 2 < t[0]:
            continue
        half = np.interp(t[k] / 2, t, IS)
        avg = 2.0 / t[k] * (IS[k] - half)
        worst_avg = max(worst_avg, (S[k] / np.sqrt(2) - avg) / max(avg, 1e-300))
    return EnergyReport(mono, sei_defect, sei_violation, coercive, worst_avg,
                        sei_violation > tol, tol)


def flux_w(grid, w, B):
    """``P div(w⊗w - B⊗B)`` from spectra."""
    wp, Bp = grid.ifft(w), grid.ifft(B)
    S = _kernels.stress(wp, Bp, _zeros_like_phys(grid), 1.0, 1.0, 0.0,
                        np.empty((6,) + wp.shape[1:]))
    return _kernels.div_sym(grid.fft(S), grid.kx, grid.ky, grid.kz, grid.inv_k2, grid.dealias,
                            np.empty_like(w))


def flux_B(grid, w, B):
    """``P div(w⊗B - B⊗w)`` from spectra."""
    wp, Bp = grid.ifft(w), grid.ifft(B)
    A = _kernels.induction(wp, Bp, _zeros_like_phys(grid), 1.0, 0.0,
                           np.empty((3,) + wp.shape[1:]))
    return _kernels.div_anti(grid.fft(A), grid.kx, grid.ky, grid.kz, grid.inv_k2, grid.dealias,
                             np.empty_like(w))


def duhamel_snapshot_times(s_max, count=32, t_min=None):
    """``0`` plus ``count`` log-spaced times ending at ``s_max``."""
    t_min = s_max / 200 if t_min is None else t_min
    return np.concatenate(([0.0], np.geomspace(t_min, s_max, count)))


@dataclass
class DuhamelReport:
    """Per-sample Duhamel bounds: ``slack = rhs - ||field(s)||`` for ``w`` and ``B``."""
    s: np.ndarray
    lhs_w: np.ndarray
    rhs_w: np.ndarray
    lhs_B: np.ndarray
    rhs_B: np.ndarray
    w0_norm: float
    B_flux_max: float = 0.0

    @property
    def slack_w(self):
        return self.rhs_w - self.lhs_w

    @property
    def slack_B(self):
        return self.rhs_B - self.lhs_B

    @property
    def min_slack(self):
        return float(min(np.min(self.slack_w), np.min(self.slack_B)))


def duhamel_residual(result, background=None, n_samples=10, dt=None):
    """Check the Duhamel bounds on stored snapshots of a run.

    For each sample ``s`` (the last ``n_samples`` snapshot times) this forms

        ||exp(-s L1) w0|| + int_0^s ||exp(-(s - tau) L1) P div(w⊗w - B⊗B)(tau)|| dtau

    and the analogue for ``B`` with ``L2`` and ``P div(w⊗B - B⊗w)``. Each
    flux is evolved once to every later sample; the tau-integral is a
    trapezoid rule over the snapshot times.

    Parameters
    ----------
    result : RunResult
        Must hold snapshots at ``0`` and at least ``n_samples`` later times.
    background : optional
        Defaults to ``result.background``.
    dt : float, optional
        Step of the linear evolutions (defaults to the run's ``dt``).

    Returns
    -------
    DuhamelReport
    """
    snaps = result.snapshots
    times = np.array(sorted(snaps))
    if len(times) < n_samples + 1 or times[0] != 0.0:
        raise ValueError("need a snapshot at 0 and at least n_samples later snapshots")
    bg = result.background if background is None else background
    grid = result.state.w.grid
    dt = result.config.dt if dt is None else dt
    samples = times[-n_samples:]
    h1 = LinearOperatorHandle("L1", bg, grid)
    h2 = LinearOperatorHandle("L2", bg, grid)
    # integrand[m, j]: norm of the evolved flux from times[m] at samples[j]
    Iw = np.full((len(times), n_samples), np.nan)
    IB = np.full((len(times), n_samples), np.nan)
    lin_w = np.zeros(n_samples)
    lin_B = np.zeros(n_samples)
    b_flux_max = 0.0
    for m, tau in enumerate(times):
        w, B = snaps[tau]
        later = samples[samples >= tau]
        if later.size == 0:
            continue
        fw = flux_w(grid, w, B)
        fb = flux_B(grid, w, B)
        b_flux_max = max(b_flux_max, float(np.max(np.abs(fb))) if np.any(B) else 0.0)
        for src, handle, table in ((fw, h1, Iw), (fb, h2, IB)):
            _fill(handle, src, tau, later, samples, dt, table, m)
        if tau == 0.0:
            for src, handle, lin in ((w, h1, lin_w), (B, h2, lin_B)):
                _fill_linear(handle, src, samples, dt, lin)
    rhs_w, rhs_B, lhs_w, lhs_B = (np.zeros(n_samples) for _ in range(4))
    for j, s in enumerate(samples):
        nodes = times <= s
        tau = times[nodes]
        rhs_w[j] = lin_w[j] + np.trapezoid(Iw[nodes, j], tau)
        rhs_B[j] = lin_B[j] + np.trapezoid(IB[nodes, j], tau)
        w, B = snaps[s]
        lhs_w[j] = np.sqrt(grid.inner_spec(w, w))
        lhs_B[j] = np.sqrt(grid.inner_spec(B, B))
    w0 = snaps[0.0][0]
    return DuhamelReport(samples, lhs_w, rhs_w, lhs_B, rhs_B,
                         float(np.sqrt(grid.inner_spec(w0, w0))), b_flux_max)


def _norms_at(handle, spec, offsets, dt):
    grid = handle.grid
    if not np.any(spec):
        return np.zeros(len(offsets))
    out = np.empty(len(offsets))
    positive = offsets > 0
    out[~positive] = np.sqrt(grid.inner_spec(spec, spec))
    if np.any(positive):
        traj = evolve_linear(handle, spec, float(np.max(offsets)), dt,
                             record_times=offsets[positive], check=False)
        tt, yy = traj.series.t, traj.series["l2"]
        for i in np.nonzero(positive)[0]:
            k = int(np.argmin(np.abs(tt - offsets[i])))
            out[i] = yy[k]
    return out


def _fill(handle, spec, tau, later, samples, dt, table, m):
    vals = _norms_at(handle, spec, later - tau, dt)
    idx = np.searchsorted(samples, later)
    table[m, idx] = vals


def _fill_linear(handle, spec, samples, dt, out):
    out[:] = _norms_at(handle, spec, samples.astype(float), dt)


def fit_run_decay(result, window=None, shift=None):
    """Fit the decay exponent of ``||w|| + ||B||`` from a run's series.

    The default time shift is half the squared smoothing length of ``w0``,
    matching the linear fits; the unshifted slope is stored in ``extra``.
    """
    cfg = result.config
    grid = result.state.w.grid
    window = window or cfg.fit_window or (0.5, min(cfg.t_final, 0.1 * grid.t_wrap))
    shift = cfg.w0.smoothing ** 2 / 2 if shift is None else shift
    y = result.series["l2_w"] + result.series["l2_B"]
    fit = fit_decay(result.series.t, y, window, shift, t_wrap=grid.t_wrap)
    plain = fit_decay(result.series.t, y, window, 0.0, t_wrap=grid.t_wrap)
    fit.extra.update(unshifted_exponent=plain.exponent, q=cfg.w0.q_target,
                     theory=-1.5 * (1 / cfg.w0.q_target - 0.5), b_mag=cfg.b_mag)
    return fit
