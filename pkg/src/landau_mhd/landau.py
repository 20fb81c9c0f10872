"""Closed-form Landau jets, the strength/axis-parameter map and grid surrogates.

For a forcing vector ``b = |b| e`` the jet is obtained from the axisymmetric
profile along ``+z`` with axis parameter ``A > 1`` by the rotation taking
``+z`` to ``e``. With ``rho = |x|``, ``c = x_3/rho`` and ``D = A - c`` the
``+z`` profile reads

    U = (2 g(c)/rho^2) x + (2/(rho D)) e_z,   g(c) = (A^2-1)/D^2 - 1 - c/D,
    P = 4 (A c - 1) / (rho^2 D^2).
"""
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .errors import ConfigurationError, DomainError, SingularPointError
from .specfield import (Grid, SpectralVectorField, gradient, project_spec, smoothstep5,
                        smoothstep5_deriv)

_SERIES_SWITCH = 3.0
A_MIN = 1.0 + 1e-9
A_MAX = 1e9


def _beta_series(A, derivative=False):
    # beta/16pi = sum_{n>=1} (4/3 - 1/(2n+1)) A^(1-2n); every term is positive
    inv2 = 1.0 / (A * A)
    term = A * inv2
    total = 0.0
    for n in range(1, 400):
        coef = 4.0 / 3.0 - 1.0 / (2 * n + 1)
        if derivative:
            piece = coef * (1 - 2 * n) * term / A
        else:
            piece = coef * term
        total += piece
        if abs(piece) < 1e-18 * abs(total):
            break
        term *= inv2
    return total


def beta_of_A(A):
    """Forcing strength ``|b|`` of the Landau jet with axis parameter ``A``.

    Evaluates ``16 pi [A + A^2/2 log((A-1)/(A+1)) + 4A/(3(A^2-1))]``. For
    ``A > 3`` the equivalent odd power series in ``1/A`` is summed instead,
    since the closed form loses digits to cancellation as ``A`` grows.

    Raises
    ------
    DomainError
        If ``A <= 1``.
    """
    A = float(A)
    if not A > 1.0:
        raise DomainError(f"A must exceed 1, got {A}")
    if A > _SERIES_SWITCH:
        return 16 * np.pi * _beta_series(A)
    return 16 * np.pi * (A + 0.5 * A * A * np.log((A - 1) / (A + 1)) + 4 * A / (3 * (A * A - 1)))


def dbeta_dA(A):
    A = float(A)
    if not A > 1.0:
        raise DomainError(f"A must exceed 1, got {A}")
    if A > _SERIES_SWITCH:
        return 16 * np.pi * _beta_series(A, derivative=True)
    a2 = A * A
    return 16 * np.pi * (1 + A * np.log((A - 1) / (A + 1)) + a2 / (a2 - 1)
                         - 4 * (a2 + 1) / (3 * (a2 - 1) ** 2))


def A_of_beta(beta):
    """Invert :func:`beta_of_A` by bracketing in ``log(A - 1)`` plus a Newton polish.

    Raises
    ------
    DomainError
        If ``beta`` is not attained for ``A`` in ``(1 + 1e-9, 1e9)``.
    """
    beta = float(beta)
    lo, hi = beta_of_A(A_MAX), beta_of_A(A_MIN)
    if not lo <= beta <= hi:
        raise DomainError(f"beta={beta} outside attainable range [{lo:.3e}, {hi:.3e}]")
    f = lambda s: np.log(beta_of_A(1.0 + np.exp(s))) - np.log(beta)
    s = optimize.brentq(f, np.log(A_MIN - 1.0), np.log(A_MAX - 1.0), xtol=1e-14, rtol=1e-15)
    A = 1.0 + np.exp(s)
    for _ in range(2):
        step = (beta_of_A(A) - beta) / dbeta_dA(A)
        if not A - step > 1.0:
            break
        A -= step
    return A


def rotation_to(direction):
    """Proper rotation matrix taking ``+z`` to the unit vector along ``direction``."""
    e = np.asarray(direction, dtype=float)
    n = np.linalg.norm(e)
    if not n > 0:
        raise DomainError("direction must be nonzero")
    e = e / n
    z = np.array([0.0, 0.0, 1.0])
    c = float(e @ z)
    if c < -1 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(z, e)
    K = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + K + K @ K / (1 + c)


@dataclass
class LandauParams:
    """Forcing vector, axis parameter and grid-regularisation radii.

    ``eps_core`` and the outer taper are in physical length units; the outer
    taper starts at ``box_window * L/2`` and ends at ``L/2``.
    """
    b: np.ndarray
    A: float
    rotation: np.ndarray
    eps_core: float = 1.0
    box_window: float = 0.75

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        self.rotation = np.asarray(self.rotation, dtype=float)
        if not self.A > 1:
            raise DomainError("A must exceed 1")
        if not np.linalg.norm(self.b) > 0:
            raise DomainError("|b| must be positive")
        R = self.rotation
        if not (np.allclose(R @ R.T, np.eye(3), atol=1e-12) and abs(np.linalg.det(R) - 1) < 1e-12):
            raise DomainError("rotation must be proper orthogonal")
        if not np.allclose(R[:, 2], self.b / np.linalg.norm(self.b), atol=1e-12):
            raise DomainError("rotation must map +z onto b/|b|")
        if abs(beta_of_A(self.A) / self.b_mag - 1) > 1e-10:
            raise DomainError("beta_of_A(A) disagrees with |b|")
        if not self.eps_core > 0 or not 0 < self.box_window < 1:
            raise ConfigurationError("need eps_core > 0 and 0 < box_window < 1")

    @classmethod
    def from_b(cls, b, eps_core=1.0, box_window=0.75):
        b = np.asarray(b, dtype=float)
        return cls(b=b, A=A_of_beta(np.linalg.norm(b)), rotation=rotation_to(b),
                   eps_core=eps_core, box_window=box_window)

    @classmethod
    def from_A(cls, A, direction=(0.0, 0.0, 1.0), eps_core=1.0, box_window=0.75):
        R = rotation_to(direction)
        return cls(b=beta_of_A(A) * R[:, 2], A=A, rotation=R, eps_core=eps_core,
                   box_window=box_window)

    @property
    def b_mag(self):
        return float(np.linalg.norm(self.b))


@dataclass
class PointEval:
    """Velocity ``(n, 3)``, pressure ``(n,)`` and gradient ``(n, 3, 3)``, ``G[i, j] = d_j U_i``."""
    velocity: np.ndarray
    pressure: np.ndarray
    velocity_gradient: np.ndarray


def _local_frame(A, y, need_grad=True):
    rho = np.linalg.norm(y, axis=1)
    c = y[:, 2] / rho
    D = A - c
    g = (A * A - 1) / D ** 2 - 1 - c / D
    U = 2 * g[:, None] * y / rho[:, None] ** 2
    U[:, 2] += 2 / (rho * D)
    P = 4 * (A * c - 1) / (rho ** 2 * D ** 2)
    if not need_grad:
        return U, P, None, None
    ez = np.array([0.0, 0.0, 1.0])
    dc = (ez[None, :] - c[:, None] * y / rho[:, None]) / rho[:, None]
    gp = 2 * (A * A - 1) / D ** 3 - 1 / D - c / D ** 2
    r2 = rho ** 2
    G = (2 * (gp / r2)[:, None, None] * y[:, :, None] * dc[:, None, :]
         + 2 * (g / r2)[:, None, None] * np.eye(3)[None]
         - 4 * (g / r2 ** 2)[:, None, None] * y[:, :, None] * y[:, None, :])
    G[:, 2, :] += 2 * (-y / (rho ** 3 * D)[:, None] + dc / (rho * D ** 2)[:, None])
    gradP = 4 * ((A / (r2 * D ** 2))[:, None] * dc
                 + ((A * c - 1))[:, None] * (-2 * y / (r2 ** 2 * D ** 2)[:, None]
                                             + 2 * dc / (r2 * D ** 3)[:, None]))
    return U, P, G, gradP


def _points(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != 3:
        raise ValueError("points must have three coordinates")
    if np.any(np.linalg.norm(x, axis=1) == 0):
        raise SingularPointError("the jet is singular at the origin")
    return x, single


def _eval(params, x, need_grad=True):
    R = params.rotation
    y = x @ R  # rows of R^T x
    U, P, G, gP = _local_frame(params.A, y, need_grad)
    U = U @ R.T
    if need_grad:
        G = np.einsum("ab,nbc,dc->nad", R, G, R)
        gP = gP @ R.T
    return U, P, G, gP


def eval_landau(params, x):
    """Velocity, pressure and velocity gradient of the jet at ``x``.

    Parameters
    ----------
    params : LandauParams
    x : array_like, shape (3,) or (n, 3)
        Evaluation points, none at the origin.

    Returns
    -------
    PointEval
        Arrays lose the leading axis when a single point is given.
    """
    x, single = _points(x)
    U, P, G, _ = _eval(params, x)
    if single:
        return PointEval(U[0], P[0], G[0])
    return PointEval(U, P, G)


def pressure_gradient(params, x):
    x, single = _points(x)
    gP = _eval(params, x)[3]
    return gP[0] if single else gP


def _laplacian(params, x, rel_step, richardson):
    h = rel_step * np.linalg.norm(x, axis=1)

    def central(step):
        lap = np.zeros_like(x)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            Gp = _eval(params, x + step[:, None] * e, True)[2]
            Gm = _eval(params, x - step[:, None] * e, True)[2]
            lap += (Gp[:, :, j] - Gm[:, :, j]) / (2 * step[:, None])
        return lap

    if not richardson:
        return central(h)
    return (4 * central(h / 2) - central(h)) / 3


def stationary_ns_residual(params, x, rel_step=1e-4, richardson=True, return_scale=False):
    """``U.grad U + grad P - Lap U`` at ``x``.

    The Laplacian differentiates the closed-form gradient by central
    differences with step ``rel_step * |x|`` (Richardson-extrapolated unless
    ``richardson`` is false).

    Returns
    -------
    ndarray
        Residual vectors, ``(3,)`` or ``(n, 3)``. With ``return_scale`` a
        second array holds the largest of the three term magnitudes per point.
    """
    x, single = _points(x)
    U, _, G, gP = _eval(params, x)
    adv = np.einsum("nij,nj->ni", G, U)
    lap = _laplacian(params, x, rel_step, richardson)
    res = adv + gP - lap
    scale = np.max(np.stack([np.linalg.norm(t, axis=1) for t in (adv, gP, lap)]), axis=0)
    if single:
        res, scale = res[0], scale[0]
    return (res, scale) if return_scale else res


def vector_potential(params, x):
    """Azimuthal potential ``Psi`` with ``curl Psi = U`` away from the axis singularity.

    Along ``+z`` it is ``2 (-x_2, x_1, 0) / (A rho - x_3)``.
    """
    x, single = _points(x)
    R = params.rotation
    y = x @ R
    rho = np.linalg.norm(y, axis=1)
    den = params.A * rho - y[:, 2]
    psi = np.stack([-2 * y[:, 1] / den, 2 * y[:, 0] / den, np.zeros_like(den)], axis=1)
    psi = psi @ R.T
    return psi[0] if single else psi


def shell_points(n, r_min=0.5, r_max=2.0, seed=0):
    """Quasi-random points filling the shell ``r_min <= |x| <= r_max`` uniformly in volume."""
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    r = (r_min ** 3 + u[:, 0] * (r_max ** 3 - r_min ** 3)) ** (1.0 / 3.0)
    cz = 2 * u[:, 1] - 1
    ph = 2 * np.pi * u[:, 2]
    s = np.sqrt(1 - cz * cz)
    return r[:, None] * np.stack([s * np.cos(ph), s * np.sin(ph), cz], axis=1)


def bound_constants(params, shell_samples):
    """Measured constants ``sup |x||U|/|b|`` and ``sup |x|^2 |grad U|/|b|``.

    The gradient uses the Frobenius norm, which dominates the operator norm.
    The operational constant downstream is the larger of the two.

    Returns
    -------
    tuple of float
        ``(C_vel, C_grad)``.
    """
    x = np.asarray(shell_samples, dtype=float)
    if x.size == 0:
        raise ValueError("no sample points given")
    x, _ = _points(x)
    U, _, G, _ = _eval(params, x)
    r = np.linalg.norm(x, axis=1)
    bm = params.b_mag
    c_vel = float(np.max(r * np.linalg.norm(U, axis=1)) / bm)
    c_grad = float(np.max(r ** 2 * np.sqrt(np.sum(G * G, axis=(1, 2)))) / bm)
    return c_vel, c_grad


def measured_C0(params, n=4000, seed=0):
    """Operational ``C0 = max(C_vel, C_grad)`` on a unit-shell sample."""
    pts = shell_points(n, 1.0, 1.0, seed=seed)
    return max(bound_constants(params, pts))


class Background:
    """Regularised, dealiased, solenoidal grid surrogate of a Landau jet.

    Attributes
    ----------
    field : SpectralVectorField
    raw : ndarray
        Sampled field before dealiasing and projection.
    grad : ndarray
        Physical gradient ``(3, 3, N, N, N)`` of ``field``.
    divergence_sup : float
        Sup norm of the divergence removed by the projection.
    umax : float
        Sup norm of ``field``.
    """

    def __init__(self, params, grid, field, raw, divergence_sup):
        self.params = params
        self.grid = grid
        self.field = field
        self.raw = raw
        self.divergence_sup = divergence_sup
        self.grad = gradient(field)
        self.umax = float(np.max(np.sqrt(np.sum(field.phys ** 2, axis=0))))

    @property
    def phys(self):
        return self.field.phys

    @property
    def b_mag(self):
        return self.params.b_mag


def taper(params, r, L):
    """Radial cutoff ``chi(r)`` and its derivative used by the grid surrogate."""
    eps = params.eps_core
    s_in = (r - eps / 2) / (eps / 2)
    chi_in, dchi_in = smoothstep5(s_in), smoothstep5_deriv(s_in) / (eps / 2)
    r0, r1 = params.box_window * L / 2, L / 2
    s_out = (r - r0) / (r1 - r0)
    chi_out, dchi_out = 1 - smoothstep5(s_out), -smoothstep5_deriv(s_out) / (r1 - r0)
    return chi_in * chi_out, dchi_in * chi_out + chi_in * dchi_out


def regularized_background(params, grid, out=None):
    """Grid surrogate ``curl(chi Psi) = chi U + grad chi x Psi`` of the jet.

    ``chi`` vanishes for ``|x| < eps_core/2`` and for ``|x| >= L/2`` and equals
    one on ``eps_core <= |x| <= box_window L/2``. Building the cutoff into the
    potential keeps the sampled field divergence-free up to sampling error,
    which the final Leray projection removes; its sup norm is recorded.

    Parameters
    ----------
    params : LandauParams
    grid : Grid
    out : SpectralVectorField, optional
        Buffer that receives the spectral data.

    Returns
    -------
    Background

    Raises
    ------
    ConfigurationError
        If ``eps_core`` spans fewer than four cells or exceeds the taper start.
    """
    if params.eps_core < 4 * grid.h * (1 - 1e-12):
        raise ConfigurationError(
            f"eps_core={params.eps_core} resolves fewer than 4 cells of width {grid.h}")
    if not params.eps_core < params.box_window * grid.L / 2:
        raise ConfigurationError("eps_core must lie inside the outer taper start")
    X, Y, Z = grid.coords()
    r = np.sqrt(X * X + Y * Y + Z * Z)
    live = (r >= params.eps_core / 2) & (r < grid.L / 2)
    pts = np.stack([X[live], Y[live], Z[live]], axis=1)
    U = _eval(params, pts, need_grad=False)[0]
    psi = vector_potential(params, pts)
    chi, dchi = taper(params, r[live], grid.L)
    radial = pts / r[live][:, None]
    vals = chi[:, None] * U + dchi[:, None] * np.cross(radial, psi)
    raw = np.zeros(grid.phys_shape(3))
    for i in range(3):
        raw[i][live] = vals[:, i]
    spec = grid.fft(raw) * grid.dealias
    div = 1j * (grid.kx * spec[0] + grid.ky * spec[1] + grid.kz * spec[2])
    divergence_sup = float(np.max(np.abs(grid.ifft(div))))
    spec = project_spec(grid, spec, dealias=True)
    spec[:, 0, 0, 0] = 0.0
    if out is None:
        out = SpectralVectorField(grid, spec=spec, solenoidal=True)
    else:
        out.spec = spec
        out.solenoidal = True
    return Background(params, grid, out, raw, divergence_sup)


def make_background(b, grid, eps_core=None, box_window=0.75):
    """Background for forcing ``b`` on ``grid``; ``None`` when ``b = 0``."""
    b = np.asarray(b, dtype=float)
    if not np.linalg.norm(b) > 0:
        return None
    eps = 4 * grid.h if eps_core is None else eps_core
    return regularized_background(LandauParams.from_b(b, eps, box_window), grid)


def b_for_coupling(target, factor=6.0, direction=(0.0, 0.0, 1.0), n=4000):
    """Force ``b`` along ``direction`` with ``factor * C0 * |b| = target``.

    ``C0`` depends weakly on ``|b|`` through ``A``, so the magnitude is found
    with a bracketing root search.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)

    def gap(m):
        return factor * measured_C0(LandauParams.from_b(m * d), n=n) * m - target

    hi = 1.0
    while gap(hi) < 0:
        hi *= 4
    return optimize.brentq(gap, 1e-6, hi, xtol=1e-12) * d
