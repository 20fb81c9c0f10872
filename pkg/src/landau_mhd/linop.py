"""Linearised operators around a background jet, their semigroups and decay fits.

With a solenoidal background ``U`` the four operators are, in divergence form,

    L1 w  = P[-Lap w + d_i(U_i w_j + w_i U_j)]
    L2 B  = P[-Lap B + d_i(U_i B_j - B_i U_j)]
    L1* v = P[-Lap v - (U.grad) v - sum_j U_j grad v_j]
    L2* v = P[-Lap v - (U.grad) v + sum_j U_j grad v_j]

All products are formed on the grid from dealiased factors and dealiased
again, so every inner product below is the exact integral of trigonometric
polynomials and the adjoint identities hold to rounding.
"""
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import integrate, stats

from . import _kernels
from .errors import BlowUpError, ConfigurationError, ContractError, InsufficientRangeError
from .specfield import (NormSeries, SpectralVectorField, gradient_spec, project_spec,
                        random_solenoidal_Lq, random_unit_vector, tail_spectrum)

OPERATORS = ("L1", "L2", "L1_adjoint", "L2_adjoint")
SOLENOIDAL_TOL = 1e-9


class LinearOperatorHandle:
    """One of ``L1``, ``L2`` or their adjoints around a fixed background.

    Parameters
    ----------
    which : {"L1", "L2", "L1_adjoint", "L2_adjoint"}
    background : landau.Background or None
        ``None`` means ``b = 0`` and the operator is ``-Lap``.
    grid : Grid
    """

    def __init__(self, which, background, grid):
        if which not in OPERATORS:
            raise ValueError(f"unknown operator {which!r}")
        if background is not None:
            if background.grid is not grid and background.grid.N != grid.N:
                raise ConfigurationError("background lives on a different grid")
            div = np.max(np.abs(grid.kx * background.field.spec[0] + grid.ky * background.field.spec[1]
                                + grid.kz * background.field.spec[2]))
            if div > 1e-12 * max(1.0, background.umax):
                raise ContractError(f"background divergence {div:.2e} is not negligible")
        self.which = which
        self.background = background
        self.grid = grid

    @property
    def U(self):
        return None if self.background is None else self.background.phys

    @property
    def b_mag(self):
        return 0.0 if self.background is None else self.background.b_mag

    def with_operator(self, which):
        return LinearOperatorHandle(which, self.background, self.grid)


def _check_solenoidal(grid, u):
    div = np.abs(grid.kx * u[0] + grid.ky * u[1] + grid.kz * u[2])
    scale = np.max(np.sqrt(grid.k2) * np.sqrt(np.sum(np.abs(u) ** 2, axis=0)))
    if scale > 0 and np.max(div) > SOLENOIDAL_TOL * scale:
        raise ContractError(f"input is not solenoidal (relative divergence {np.max(div) / scale:.2e})")


def background_part(handle, u, out=None):
    """``L u + Lap u``: the background contribution, as a dealiased projected spectrum."""
    g = handle.grid
    if out is None:
        out = np.empty_like(u)
    if handle.background is None:
        out[...] = 0.0
        return out
    U = handle.U
    which = handle.which
    if which in ("L1", "L2"):
        phys = g.ifft(u)
        if which == "L1":
            S = _kernels.stress(phys, phys, U, 0.0, 0.0, 1.0, np.empty((6,) + phys.shape[1:]))
            return _kernels.div_sym(g.fft(S), g.kx, g.ky, g.kz, g.inv_k2, g.dealias, out)
        A = _kernels.induction(phys, phys, U, 0.0, 1.0, np.empty((3,) + phys.shape[1:]))
        return _kernels.div_anti(g.fft(A), g.kx, g.ky, g.kz, g.inv_k2, g.dealias, out)
    G = gradient_spec(g, u)
    Gp = g.ifft(G.reshape((9,) + G.shape[2:])).reshape((3, 3) + g.phys_shape())
    sign = -1.0 if which == "L1_adjoint" else 1.0
    # -(U.grad)v_i -/+ sum_j U_j d_i v_j, with Gp[i, j] = d_j v_i
    adv = np.einsum("jxyz,ijxyz->ixyz", U, Gp)
    swap = np.einsum("jxyz,jixyz->ixyz", U, Gp)
    return project_spec(g, g.fft(-adv + sign * swap), dealias=True, out=out)


def apply_spec(handle, u, check=True):
    g = handle.grid
    if check:
        _check_solenoidal(g, u)
    out = background_part(handle, u)
    out += project_spec(g, g.k2 * u, dealias=True)
    return out


def apply(handle, field, check=True):
    """Apply the handle's operator to a solenoidal field.

    Raises
    ------
    ContractError
        If ``field`` has a non-negligible divergence.
    """
    return SpectralVectorField(handle.grid, spec=apply_spec(handle, field.spec, check),
                               solenoidal=True)


def inner(u, v):
    return u.inner(v)


def bilinear_form(which, u, v, background):
    """``a1`` or ``a2`` assembled pointwise from spectral gradients.

    ``a(u, v) = <grad u, grad v> + <(U.grad) u, v> +/- <(u.grad) U, v>``
    with the plus sign for ``a1``.
    """
    if which not in ("a1", "a2"):
        raise ValueError(f"unknown form {which!r}")
    g = u.grid
    dirichlet = g.L ** 3 * float(np.sum(g.hweight * g.k2 * np.real(np.conj(u.spec) * v.spec)))
    if background is None:
        return dirichlet
    U = background.phys
    Gu = gradient_spec(g, u.spec)
    Gu = g.ifft(Gu.reshape((9,) + Gu.shape[2:])).reshape((3, 3) + g.phys_shape())
    adv = np.einsum("jxyz,ijxyz->ixyz", U, Gu)
    stretch = np.einsum("jxyz,ijxyz->ixyz", u.phys, background.grad)
    sign = 1.0 if which == "a1" else -1.0
    return dirichlet + g.inner_spec(g.fft(adv + sign * stretch), v.spec)


def advection_form(u, background):
    """``<(U.grad) u, u>``, which vanishes for a solenoidal background."""
    g = u.grid
    Gu = gradient_spec(g, u.spec)
    Gu = g.ifft(Gu.reshape((9,) + Gu.shape[2:])).reshape((3, 3) + g.phys_shape())
    adv = np.einsum("jxyz,ijxyz->ixyz", background.phys, Gu)
    return g.inner_spec(g.fft(adv), u.spec)


def stretching_form(u, background):
    """``<(u.grad) U, u>`` computed from the background gradient."""
    g = u.grid
    s = np.einsum("jxyz,ijxyz->ixyz", u.phys, background.grad)
    return g.inner_spec(g.fft(s), u.spec)


def coercivity_margin(w, background, C0, b_mag, tol=0.02, which="a1"):
    """Check ``1 - 6 C0 |b| - tol <= a(w, w)/||grad w||^2 <= 1 + 6 C0 |b| + tol``.

    Returns
    -------
    tuple
        ``(lower_ok, upper_ok, ratio)``.
    """
    gn2 = w.grad_l2() ** 2
    if not gn2 > 0:
        raise ValueError("grad w vanishes, ratio undefined")
    ratio = bilinear_form(which, w, w, background) / gn2
    band = 6 * C0 * b_mag
    return ratio >= 1 - band - tol, ratio <= 1 + band + tol, ratio


# ---------------------------------------------------------------- time stepping

class LawsonRK3:
    """Integrating-factor (Lawson) form of Kutta's third-order scheme.

    Advances ``du/dt = -|k|^2 u + F(u)`` with the heat factor applied exactly;
    every factor in the update is a decaying exponential.
    """

    def __init__(self, grid, rhs):
        self.grid = grid
        self.rhs = rhs
        self._dt = None

    def _factors(self, dt):
        if dt != self._dt:
            self._dt = dt
            self.E = np.exp(-self.grid.k2 * dt)
            self.E2 = np.exp(-self.grid.k2 * (0.5 * dt))
        return self.E, self.E2

    def step(self, u, dt):
        E, E2 = self._factors(dt)
        n1 = self.rhs(u)
        u2 = E2 * (u + (0.5 * dt) * n1)
        n2 = self.rhs(u2)
        u3 = E * (u - dt * n1) + (2.0 * dt) * (E2 * n2)
        n3 = self.rhs(u3)
        return E * (u + (dt / 6.0) * n1) + (4.0 * dt / 6.0) * (E2 * n2) + (dt / 6.0) * n3


@dataclass
class LinearTrajectory:
    """Norm series of a linear evolution plus any stored snapshots (``{t: spectrum}``)."""
    series: NormSeries
    snapshots: dict = dc_field(default_factory=dict)
    final: object = None


def _segments(times, dt):
    prev = 0.0
    for t in times:
        span = t - prev
        if span <= 0:
            continue
        n = max(1, int(np.ceil(span / dt - 1e-9)))
        yield t, n, span / n
        prev = t


def evolve_linear(handle, f0, t_final, dt, record_times=None, store_times=(), check=True):
    """Evolve ``du/dt + L u = 0`` from ``f0``.

    Parameters
    ----------
    handle : LinearOperatorHandle
        Only ``L1`` and ``L2`` generate forward evolutions here.
    f0 : SpectralVectorField or ndarray
        Solenoidal, mean-zero initial datum (spectrum if an array).
    t_final : float
    dt : float
        Largest step; segments between recording times are split evenly.
    record_times : array_like, optional
        Times at which norms are recorded, in addition to every step. With
        ``b = 0`` the exact heat factor is used and norms are recorded only at
        these times (default: 64 log-spaced times).
    store_times : iterable of float
        Times whose spectra are kept in ``snapshots``.

    Returns
    -------
    LinearTrajectory
    """
    g = handle.grid
    u = f0.spec.copy() if isinstance(f0, SpectralVectorField) else np.array(f0, dtype=complex)
    if check:
        _check_solenoidal(g, u)
    u[:, 0, 0, 0] = 0.0
    store = sorted(float(t) for t in store_times)
    if record_times is None:
        record_times = np.concatenate(([0.0], np.geomspace(min(dt, t_final) / 4, t_final, 64)))
    marks = sorted(set([float(t) for t in record_times if 0 < t <= t_final] + store + [float(t_final)]))
    series = NormSeries()
    traj = LinearTrajectory(series)

    def record(t, spec):
        series.append(t, l2=np.sqrt(g.inner_spec(spec, spec)),
                      grad_l2=np.sqrt(g.L ** 3 * np.sum(g.hweight * g.k2 * np.abs(spec) ** 2)))

    record(0.0, u)
    if 0.0 in store:
        traj.snapshots[0.0] = u.copy()
    if handle.background is None:
        for t in marks:
            v = np.exp(-g.k2 * t) * u
            record(t, v)
            if t in store:
                traj.snapshots[t] = v
        traj.final = np.exp(-g.k2 * t_final) * u
        return traj
    if handle.which not in ("L1", "L2"):
        raise ValueError("forward evolution is defined for L1 and L2")
    scratch = np.empty_like(u)
    stepper = LawsonRK3(g, lambda v: -background_part(handle, v, scratch))
    t = 0.0
    n_done = 0
    ref = np.sqrt(g.inner_spec(u, u))
    for t_mark, n, h in _segments(marks, dt):
        for _ in range(n):
            u = stepper.step(u, h)
            t = t + h
            n_done += 1
            if not np.all(np.isfinite(u)):
                raise BlowUpError("non-finite values in linear evolution",
                                  {"t": t, "step": n_done, "dt": h})
            if abs(t - t_mark) < 1e-9 * max(1.0, t_mark):
                t = t_mark
            record(t, u)
            if series["l2"][-1] > 10 * ref:
                raise BlowUpError("linear evolution grew tenfold", {"t": t, "step": n_done})
        if t_mark in store:
            traj.snapshots[t_mark] = u.copy()
    traj.final = u
    return traj


# ---------------------------------------------------------------- decay fits

@dataclass
class DecayFit:
    """Least-squares slope of ``log ||u||`` against ``log(t + t_shift)``.

    Attributes
    ----------
    exponent : fitted slope
    half_width : 95% half-width of the slope
    window : ``(t_min, t_max)`` in unshifted time
    n_points : samples inside the window
    t_shift : time origin offset used in the regression
    residual : RMS residual of the regression in log space
    extra : free-form diagnostics (unshifted slope, oracle slope, ...)
    """
    exponent: float
    half_width: float
    window: tuple
    n_points: int
    t_shift: float = 0.0
    residual: float = 0.0
    extra: dict = dc_field(default_factory=dict)

    def as_record(self):
        return {"exponent": self.exponent, "half_width": self.half_width,
                "window": list(self.window), "n_points": self.n_points,
                "t_shift": self.t_shift, "residual": self.residual, **self.extra}


def fit_decay(t, y, window, t_shift=0.0, t_wrap=None):
    """Ordinary least squares of ``log y`` on ``log(t + t_shift)`` inside ``window``.

    Raises
    ------
    InsufficientRangeError
        If the window spans less than half a decade or holds under 4 samples.
    ConfigurationError
        If the window extends past ``t_wrap``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    t0, t1 = window
    if not (t0 > 0 and t1 / t0 >= np.sqrt(10.0) * (1 - 1e-12)):
        raise InsufficientRangeError(f"window {window} spans less than half a decade")
    if t_wrap is not None and t1 > t_wrap:
        raise ConfigurationError(f"window end {t1} exceeds the wrap-around time {t_wrap:.3g}")
    m = (t >= t0 * (1 - 1e-12)) & (t <= t1 * (1 + 1e-12)) & (y > 0)
    if m.sum() < 4:
        raise InsufficientRangeError("fewer than 4 samples in the fit window")
    res = stats.linregress(np.log(t[m] + t_shift), np.log(y[m]))
    n = int(m.sum())
    half = float(stats.t.ppf(0.975, n - 2) * res.stderr)
    pred = res.intercept + res.slope * np.log(t[m] + t_shift)
    rms = float(np.sqrt(np.mean((np.log(y[m]) - pred) ** 2)))
    return DecayFit(float(res.slope), half, (float(t0), float(t1)), n, float(t_shift), rms)


def free_space_norm(times, alpha, smoothing, div_form=False):
    """L2 norm (up to a constant) of the free-space heat flow of the tail profile.

    Radial quadrature of ``k^2 |f_hat(k)|^2 exp(-2 t k^2)`` with
    ``|f_hat| = k^(alpha-3) exp(-smoothing^2 k^2/2)``; the divergence form
    carries an extra ``k^2``. The angular factors (2/3 and 2/15 of the full
    solid angle) only rescale the result.
    """
    extra = 2 if div_form else 0
    ang = 4 * np.pi * (2.0 / 15.0 if div_form else 2.0 / 3.0)
    out = []
    for t in np.atleast_1d(times):
        s = smoothing ** 2 + 2 * t
        f = lambda k: k ** (2 * alpha - 4 + extra) * np.exp(-s * k * k)
        val = integrate.quad(f, 0, np.inf, limit=200)[0]
        out.append(np.sqrt(ang * val / (2 * np.pi) ** 3))
    return np.array(out)


def free_space_exponent(alpha, div_form=False):
    """Exact slope of :func:`free_space_norm` against ``log(t + smoothing^2/2)``."""
    return -(2 * alpha - 3) / 4 - (0.5 if div_form else 0.0)


@dataclass
class DataFamily:
    """Initial-data recipe handed to the decay measurements."""
    profile: str = "algebraic-tail"
    seed: int = 0
    alpha: float = None
    smoothing: float = 3.0
    amplitude: float = 1.0


def _decay_run(handle, spec, fit_window, dt, n_records, alpha, smoothing, div_form,
               shift_time=True):
    g = handle.grid
    t0, t1 = fit_window
    times = np.concatenate((np.geomspace(t0 / 8, t0, 8, endpoint=False),
                            np.geomspace(t0, t1, n_records)))
    traj = evolve_linear(handle, spec, t1, dt, record_times=times)
    tt, yy = traj.series.t, traj.series["l2"]
    shift = smoothing ** 2 / 2 if shift_time else 0.0
    fit = fit_decay(tt, yy, fit_window, shift, t_wrap=g.t_wrap)
    plain = fit_decay(tt, yy, fit_window, 0.0, t_wrap=g.t_wrap)
    oracle_t = np.geomspace(t0, t1, n_records)
    oracle = fit_decay(oracle_t, free_space_norm(oracle_t, alpha, smoothing, div_form),
                       fit_window, shift)
    fit.extra.update(unshifted_exponent=plain.exponent, oracle_exponent=oracle.exponent,
                     alpha=alpha, smoothing=smoothing, div_form=div_form,
                     b_mag=handle.b_mag, N=g.N, L=g.L)
    fit.extra["series"] = traj.series
    return fit


def default_window(grid):
    """``[0.5, 0.1 T_wrap]``."""
    return (0.5, 0.1 * grid.t_wrap)


def measure_semigroup_decay(handle, q, data_family=None, fit_window=None, dt=0.25,
                            n_records=48, shift_time=True):
    """Fitted L2 decay exponent of ``exp(-t L) f`` for ``f`` in an L^q class.

    The datum is the algebraic-tail profile with ``alpha`` just above ``3/q``
    (see :func:`specfield.random_solenoidal_Lq`). The regression uses
    ``log(t + smoothing^2/2)`` (the virtual time origin of the heat-smoothed
    profile) unless ``shift_time`` is false; both slopes are reported, along
    with the free-space slope fitted on the same window.
    """
    fam = data_family or DataFamily()
    g = handle.grid
    window = fit_window or default_window(g)
    f0 = random_solenoidal_Lq(g, fam.seed, q, fam.profile, alpha=fam.alpha,
                              amplitude=fam.amplitude, smoothing=fam.smoothing)
    alpha = f0.meta.get("alpha", 3.0 / q + 0.05)
    fit = _decay_run(handle, f0.spec, window, dt, n_records, alpha, fam.smoothing, False,
                     shift_time)
    fit.extra.update(q=q, theory=-1.5 * (1 / q - 0.5), seed=fam.seed)
    return fit


def div_form_datum(grid, q, family):
    """``P div(f e⊗e)`` with ``f`` the scalar tail profile, ``alpha = 3/q + 0.05`` by default."""
    rng = np.random.default_rng(family.seed)
    alpha = family.alpha if family.alpha is not None else 3.0 / q + 0.05
    e = random_unit_vector(rng)
    shift = rng.uniform(-1.0, 1.0, 3) * grid.h
    spec = tail_spectrum(grid, alpha, family.smoothing, e, shift, div_form=True)
    n = np.sqrt(grid.inner_spec(spec, spec))
    return spec * (family.amplitude / n), alpha


def measure_div_decay(handle, q, tensor_family=None, fit_window=None, dt=0.25, n_records=48,
                      shift_time=True):
    """Fitted decay exponent of ``exp(-t L) P div F`` for ``F`` in L^q, ``6/5 < q <= 2``."""
    if not 1.2 < q <= 2:
        raise ValueError(f"q must lie in (6/5, 2], got {q}")
    fam = tensor_family or DataFamily()
    g = handle.grid
    window = fit_window or default_window(g)
    spec, alpha = div_form_datum(g, q, fam)
    fit = _decay_run(handle, spec, window, dt, n_records, alpha, fam.smoothing, True, shift_time)
    fit.extra.update(q=q, theory=-1.5 * (1 / q - 0.5) - 0.5, seed=fam.seed)
    return fit
