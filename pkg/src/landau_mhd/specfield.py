"""Periodic grids, spectral vector fields, norms and initial-data generators.

Spectral coefficients are Fourier-series coefficients (``rfftn`` with
``norm="forward"``), so a field is ``f(x) = sum_k c_k exp(i k.x)`` and

    ||f||_2^2 = L^3 sum_k |c_k|^2

holds exactly with the half-spectrum Hermitian weights in ``Grid.hweight``.
Grid nodes sit at ``x_j = -L/2 + j h`` so the origin is the node ``N/2``.
"""
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft
from scipy import integrate
from scipy.special import sici

from . import _kernels

# integral of 1/|x|^2 over the unit cube centred at the origin
UNIT_CUBE_INV_R2 = 7.674124222443731


class Grid:
    """Cubic periodic grid of edge ``L`` with ``N`` nodes per axis.

    Parameters
    ----------
    N : int
        Nodes per axis, a power of two no smaller than 16.
    L : float
        Box edge length.
    threads : int
        Worker count handed to ``scipy.fft``.
    """

    def __init__(self, N, L, threads=1):
        N = int(N)
        if N < 16 or N & (N - 1):
            raise ValueError(f"N must be a power of two >= 16, got {N}")
        if not L > 0:
            raise ValueError("L must be positive")
        self.N = N
        self.L = float(L)
        self.h = self.L / N
        self.threads = int(threads)
        self.dV = self.h ** 3
        self.nz = N // 2 + 1

        n1 = np.fft.fftfreq(N, 1.0 / N)
        nz = np.arange(self.nz, dtype=float)
        scale = 2 * np.pi / self.L
        self.kx = (scale * n1).reshape(N, 1, 1)
        self.ky = (scale * n1).reshape(1, N, 1)
        self.kz = (scale * nz).reshape(1, 1, self.nz)
        self.k2 = self.kx ** 2 + self.ky ** 2 + self.kz ** 2
        self.inv_k2 = np.zeros_like(self.k2)
        nzero = self.k2 > 0
        self.inv_k2[nzero] = 1.0 / self.k2[nzero]

        # 2/3 rule: keep integer wavenumbers with |n_i| < N/3 on every axis
        keep = np.abs(n1) < N / 3
        keepz = nz < N / 3
        self.dealias = (keep.reshape(N, 1, 1) & keep.reshape(1, N, 1)
                        & keepz.reshape(1, 1, self.nz)).astype(float)
        self.ones = np.ones_like(self.k2)

        hw = np.full(self.nz, 2.0)
        hw[0] = 1.0
        if N % 2 == 0:
            hw[-1] = 1.0
        self.hweight = np.broadcast_to(hw.reshape(1, 1, self.nz), self.k2.shape)
        # (-1)^(nx+ny+nz): moves coefficients between node 0 and the origin
        sx = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
        sz = np.where(np.arange(self.nz) % 2 == 0, 1.0, -1.0)
        self.origin_phase = sx.reshape(N, 1, 1) * sx.reshape(1, N, 1) * sz.reshape(1, 1, self.nz)

    def __repr__(self):
        return f"Grid(N={self.N}, L={self.L})"

    @property
    def nodes(self):
        return -self.L / 2 + self.h * np.arange(self.N)

    @property
    def t_wrap(self):
        """Diffusive time after which the box stops emulating free space."""
        return (self.L / (2 * np.pi)) ** 2

    def coords(self):
        x = self.nodes
        return np.meshgrid(x, x, x, indexing="ij")

    def radius(self):
        x = self.nodes
        return np.sqrt(x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2)

    def fft(self, f):
        return sfft.rfftn(f, axes=(-3, -2, -1), norm="forward", workers=self.threads)

    def ifft(self, F):
        return sfft.irfftn(F, s=(self.N,) * 3, axes=(-3, -2, -1), norm="forward",
                           workers=self.threads)

    def inner_spec(self, a, b):
        """L2 inner product of two real fields from their half spectra."""
        return self.L ** 3 * float(np.sum(self.hweight * np.real(np.conj(a) * b)))

    def spec_shape(self, ncomp=None):
        shape = (self.N, self.N, self.nz)
        return shape if ncomp is None else (ncomp,) + shape

    def phys_shape(self, ncomp=None):
        shape = (self.N,) * 3
        return shape if ncomp is None else (ncomp,) + shape


class SpectralVectorField:
    """Three-component field with lazily synchronised physical and spectral data.

    Exactly one representation may be stale at a time. Reading ``phys`` or
    ``spec`` refreshes the stale side; assigning either marks the other one
    stale.
    """

    def __init__(self, grid, phys=None, spec=None, solenoidal=False):
        if (phys is None) == (spec is None):
            raise ValueError("give exactly one of phys or spec")
        self.grid = grid
        self._phys = None
        self._spec = None
        self.meta = {}
        if phys is not None:
            self.phys = phys
        else:
            self.spec = spec
        self.solenoidal = solenoidal

    @classmethod
    def zeros(cls, grid):
        return cls(grid, spec=np.zeros(grid.spec_shape(3), dtype=complex), solenoidal=True)

    @property
    def phys(self):
        if self._phys is None:
            self._phys = self.grid.ifft(self._spec)
        return self._phys

    @phys.setter
    def phys(self, value):
        value = np.asarray(value, dtype=float)
        if value.shape != self.grid.phys_shape(3):
            raise ValueError(f"physical data shape {value.shape} does not match {self.grid}")
        self._phys = value
        self._spec = None

    @property
    def spec(self):
        if self._spec is None:
            self._spec = self.grid.fft(self._phys)
        return self._spec

    @spec.setter
    def spec(self, value):
        value = np.asarray(value, dtype=complex)
        if value.shape != self.grid.spec_shape(3):
            raise ValueError(f"spectral data shape {value.shape} does not match {self.grid}")
        self._spec = value
        self._phys = None

    @property
    def phys_current(self):
        return self._phys is not None

    @property
    def spec_current(self):
        return self._spec is not None

    def copy(self):
        out = SpectralVectorField(self.grid, spec=self.spec.copy(), solenoidal=self.solenoidal)
        out.meta = dict(self.meta)
        return out

    def inner(self, other):
        return self.grid.inner_spec(self.spec, other.spec)

    def l2(self):
        return np.sqrt(max(self.inner(self), 0.0))

    def grad_l2(self):
        g = self.grid
        return np.sqrt(g.L ** 3 * float(np.sum(g.hweight * g.k2 * np.abs(self.spec) ** 2)))

    def max_divergence(self):
        """Largest spectral divergence coefficient ``|k.u_k|``."""
        return float(np.max(np.abs(divergence(self))))

    def __mul__(self, c):
        return SpectralVectorField(self.grid, spec=self.spec * c, solenoidal=self.solenoidal)

    __rmul__ = __mul__

    def __add__(self, other):
        return SpectralVectorField(self.grid, spec=self.spec + other.spec,
                                   solenoidal=self.solenoidal and other.solenoidal)

    def __sub__(self, other):
        return SpectralVectorField(self.grid, spec=self.spec - other.spec,
                                   solenoidal=self.solenoidal and other.solenoidal)


def transform(field, direction):
    """Bring ``field`` up to date in the requested representation.

    Parameters
    ----------
    field : SpectralVectorField
    direction : {"forward", "inverse"}
        ``forward`` computes spectral data from physical data and ``inverse``
        the other way round.

    Returns
    -------
    SpectralVectorField
        The same object, with both representations current.
    """
    if direction == "forward":
        if field._phys is None:
            raise ValueError("forward transform needs physical data")
        field._spec = field.grid.fft(field._phys)
    elif direction == "inverse":
        if field._spec is None:
            raise ValueError("inverse transform needs spectral data")
        field._phys = field.grid.ifft(field._spec)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return field


def project_spec(grid, u, dealias=True, out=None):
    """Leray projection of a ``(3, ...)`` half spectrum, optionally dealiased."""
    if out is None:
        out = np.empty_like(u)
    mask = grid.dealias if dealias else grid.ones
    return _kernels.leray(u, grid.kx, grid.ky, grid.kz, grid.inv_k2, mask, out)


def leray_project(field, dealias=False):
    """Project onto divergence-free fields, ``u_k - k (k.u_k)/|k|^2``.

    The ``k = 0`` coefficient passes through untouched. With ``dealias`` the
    2/3-rule mask is applied as well.
    """
    spec = project_spec(field.grid, field.spec, dealias=dealias)
    return SpectralVectorField(field.grid, spec=spec, solenoidal=True)


def gradient_spec(grid, u):
    """Spectral gradient ``i k_j u_i`` of a ``(3, ...)`` spectrum, shape ``(3, 3, ...)``.

    Index order is ``[i, j] = d_j u_i``.
    """
    k = (grid.kx, grid.ky, grid.kz)
    return np.stack([np.stack([1j * k[j] * u[i] for j in range(3)]) for i in range(3)])


def gradient(field):
    """Physical gradient tensor ``G[i, j] = d_j u_i``."""
    g = field.grid
    G = gradient_spec(g, field.spec)
    return g.ifft(G.reshape((9,) + G.shape[2:])).reshape((3, 3) + g.phys_shape())


def divergence(field):
    g = field.grid
    u = field.spec
    return 1j * (g.kx * u[0] + g.ky * u[1] + g.kz * u[2])


def laplacian(field):
    return SpectralVectorField(field.grid, spec=-field.grid.k2 * field.spec,
                               solenoidal=field.solenoidal)


def curl_spec(grid, a):
    kx, ky, kz = grid.kx, grid.ky, grid.kz
    return 1j * np.stack([ky * a[2] - kz * a[1], kz * a[0] - kx * a[2], kx * a[1] - ky * a[0]])


def _magnitude(f):
    f = np.asarray(f, dtype=float)
    if f.ndim == 4:
        return np.sqrt(np.sum(f * f, axis=0))
    return np.abs(f)


def lq_norm(f, q, grid):
    """Quadrature L^q norm ``(dV sum |f|^q)^(1/q)``.

    Parameters
    ----------
    f : SpectralVectorField or ndarray
        Vector fields use the pointwise Euclidean magnitude.
    q : float
        Exponent, at least 1.
    grid : Grid
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    data = f.phys if isinstance(f, SpectralVectorField) else f
    a = _magnitude(data)
    return float((grid.dV * np.sum(a ** q)) ** (1.0 / q))


def _as_components(w, grid):
    if isinstance(w, SpectralVectorField):
        return w.spec
    w = np.asarray(w)
    if np.iscomplexobj(w):
        return w if w.ndim == 4 else w[None]
    w = w if w.ndim == 4 else w[None]
    return grid.fft(w)


def _square_magnitude(grid, spec):
    """``sum_i |w_i|^2`` on a grid fine enough to hold it without aliasing.

    Returns the physical samples together with the grid they live on.
    """
    N = grid.N
    n = np.fft.fftfreq(N, 1.0 / N)
    occupied = np.any(np.abs(spec) > 0, axis=0)
    nx = np.abs(n)[:, None, None] * occupied
    ny = np.abs(n)[None, :, None] * occupied
    nz = np.arange(grid.nz)[None, None, :] * occupied
    band = max(nx.max(), ny.max(), nz.max())
    if band < N / 4:
        phys = grid.ifft(spec)
        return np.sum(phys * phys, axis=0), grid
    fine = getattr(grid, "_fine", None)
    if fine is None:
        fine = grid._fine = Grid(2 * N, grid.L, grid.threads)
    padded = np.zeros((spec.shape[0],) + fine.spec_shape(), dtype=complex)
    # Nyquist planes are ambiguous between +N/2 and -N/2 and are dropped
    h = N // 2
    lo, hi = slice(0, h), slice(-(h - 1), None)
    for sx in (lo, hi):
        for sy in (lo, hi):
            padded[:, sx, sy, :h] = spec[:, sx, sy, :h]
    phys = fine.ifft(padded)
    return np.sum(phys * phys, axis=0), fine


def _hardy_kernel(g):
    """``4 pi hweight Si(|k| R)/|k|`` with the origin phase folded in, cached on the grid."""
    ker = getattr(g, "_hardy_kernel", None)
    if ker is None:
        R = g.L / 2
        k = np.sqrt(g.k2)
        safe = np.where(k > 0, k, 1.0)
        ker = 4 * np.pi * g.hweight * g.origin_phase * np.where(k > 0, sici(safe * R)[0] / safe, R)
        g._hardy_kernel = ker
    return ker


def hardy_ratio(w, grid, method="spectral"):
    """Ratio of the weighted integral of |w|^2/|x|^2 to the Dirichlet integral.

    Parameters
    ----------
    w : SpectralVectorField or ndarray
        Scalar (``(N, N, N)``) or vector (``(3, N, N, N)``) samples, or a half
        spectrum. ``w`` should be negligible near the box boundary.
    grid : Grid
    method : {"spectral", "cell"}
        ``spectral`` integrates the trigonometric interpolant of ``|w|^2``
        against ``1/|x|^2`` over the ball of radius ``L/2`` exactly, using
        ``int_{|x|<R} exp(ik.x)/|x|^2 dx = 4 pi Si(|k|R)/|k|``. ``cell`` is a
        node sum that weights the origin cell by the exact cube average of
        ``1/|x|^2``.

    Returns
    -------
    float
    """
    spec = _as_components(w, grid)
    dirichlet = grid.L ** 3 * float(np.sum(grid.hweight * grid.k2 * np.abs(spec) ** 2))
    if not dirichlet > 0:
        raise ValueError("gradient vanishes identically, ratio undefined")
    if method == "spectral":
        f, g = _square_magnitude(grid, spec)
        c = g.fft(f)
        weighted = float(np.sum(_hardy_kernel(g) * np.real(c)))
    elif method == "cell":
        phys = grid.ifft(spec)
        f = np.sum(phys * phys, axis=0)
        r2 = grid.radius() ** 2
        o = grid.N // 2
        r2[o, o, o] = 1.0
        inv = 1.0 / r2
        inv[o, o, o] = UNIT_CUBE_INV_R2 / grid.h ** 2
        weighted = grid.dV * float(np.sum(f * inv))
    else:
        raise ValueError(f"unknown method {method!r}")
    return weighted / dirichlet


def random_bump_field(grid, rng, n_blobs=4, band=None, vector=True):
    """Random sum of Gaussian blobs truncated to a wavenumber band.

    Blob centres lie within ``L/8`` of the origin and widths are chosen so
    the Gaussians are resolved by the band, so the result is an admissible
    Hardy test field (smooth, negligible at the box boundary).

    Parameters
    ----------
    grid : Grid
    rng : numpy.random.Generator
    n_blobs : int
    band : int, optional
        Keep modes with ``|n_i| < band``; defaults to ``N/4`` so that ``|w|^2``
        is resolved on the same grid.
    vector : bool
        Three independent components if True, else a scalar.

    Returns
    -------
    ndarray
        Half spectrum, shape ``(3, ...)`` or ``(1, ...)``.
    """
    band = grid.N // 4 if band is None else band
    ncomp = 3 if vector else 1
    kcut = 2 * np.pi * band / grid.L
    # only the retained band is evaluated
    ix = np.nonzero(np.abs(np.fft.fftfreq(grid.N, 1.0 / grid.N)) < band)[0]
    iz = np.arange(min(band, grid.nz))
    kx, ky, kz = grid.kx[ix], grid.ky[:, ix], grid.kz[..., iz]
    phase = grid.origin_phase[np.ix_(ix, ix, iz)]
    s_lo, s_hi = 6.0 / kcut, grid.L / 12
    if s_lo >= s_hi:
        raise ValueError(f"band {band} cannot resolve blobs narrower than L/12; use a finer grid")
    sub = np.zeros((ncomp, len(ix), len(ix), len(iz)), dtype=complex)
    for _ in range(n_blobs):
        c = rng.uniform(-1, 1, 3) * grid.L / 8
        s = rng.uniform(s_lo, s_hi)
        gx, gy, gz = (np.exp(-0.5 * s * s * k * k - 1j * k * ci)
                      for k, ci in ((kx, c[0]), (ky, c[1]), (kz, c[2])))
        g = ((2 * np.pi * s * s) ** 1.5 / grid.L ** 3) * (gx * gy * gz)
        sub += rng.standard_normal(ncomp)[:, None, None, None] * g
    spec = np.zeros((ncomp,) + grid.spec_shape(), dtype=complex)
    spec[(slice(None),) + np.ix_(ix, ix, iz)] = sub * phase
    return spec


def near_extremal_profile(delta, R1=1.0, R2=8.0):
    """``r^(-1/2 + delta)`` cut off smoothly in ``log r`` between ``R1`` and ``R2``.

    Returns the profile and its radial derivative as callables.
    """
    span = np.log(R2 / R1)

    def chi(r):
        return 1.0 - smoothstep5(np.log(r / R1) / span)

    def dchi(r):
        return -smoothstep5_deriv(np.log(r / R1) / span) / (r * span)

    p = -0.5 + delta

    def w(r):
        return r ** p * chi(r)

    def dw(r):
        return p * r ** (p - 1) * chi(r) + r ** p * dchi(r)

    return w, dw


def radial_hardy_ratio(w, dw, r_max, breakpoints=()):
    """Hardy ratio of a radial profile by 1-D quadrature.

    ``int w^2 dr / int w'(r)^2 r^2 dr``, the common factor ``4 pi`` cancelled.
    """
    pts = sorted(p for p in breakpoints if 0 < p < r_max)
    edges = [0.0] + pts + [r_max]
    num = den = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        num += integrate.quad(lambda r: w(r) ** 2, a, b, limit=200)[0]
        den += integrate.quad(lambda r: dw(r) ** 2 * r * r, a, b, limit=200)[0]
    return num / den


def smoothstep5(s):
    """Quintic C2 step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)


def smoothstep5_deriv(s):
    inside = (s > 0) & (s < 1)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30.0 * s * s * (1.0 - s) ** 2, 0.0)


def random_unit_vector(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def tail_spectrum(grid, alpha, smoothing, direction, shift=(0.0, 0.0, 0.0), div_form=False):
    """Half spectrum of the heat-smoothed algebraic-tail field.

    The field is ``P(e f)`` where ``f`` has Fourier transform
    ``|k|^(alpha-3) exp(-smoothing^2 |k|^2 / 2)``; in physical space ``f``
    decays like ``|x|^(-alpha)``. With ``div_form`` the datum is instead
    ``P div(f e⊗e)``. The result is centred on the origin (shifted by
    ``shift``), dealiased and mean-free.
    """
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    k = np.sqrt(grid.k2)
    safe = np.where(k > 0, k, 1.0)
    amp = np.where(k > 0, safe ** (alpha - 3.0), 0.0) * np.exp(-0.5 * smoothing ** 2 * grid.k2)
    sx, sy, sz = shift
    phase = grid.origin_phase * np.exp(-1j * (grid.kx * sx + grid.ky * sy + grid.kz * sz))
    coef = amp * phase
    if div_form:
        coef = coef * 1j * (grid.kx * e[0] + grid.ky * e[1] + grid.kz * e[2])
    u = np.stack([coef * e[0], coef * e[1], coef * e[2]])
    u = project_spec(grid, u, dealias=True)
    u[:, 0, 0, 0] = 0.0
    return u


def _bump_potential(grid, rng, radius, n_blobs, blob_width):
    X, Y, Z = grid.coords()
    r = np.sqrt(X * X + Y * Y + Z * Z)
    env = 1.0 - smoothstep5((r - 0.5 * radius) / (0.5 * radius))
    pot = np.zeros(grid.phys_shape(3))
    for _ in range(n_blobs):
        centre = rng.uniform(-0.5, 0.5, 3) * radius
        amp = rng.standard_normal(3)
        g = np.exp(-((X - centre[0]) ** 2 + (Y - centre[1]) ** 2 + (Z - centre[2]) ** 2)
                   / (2 * blob_width ** 2))
        pot += amp[:, None, None, None] * g
    return pot * env


def random_solenoidal_Lq(grid, seed, q_target, profile="algebraic-tail", alpha=None,
                         amplitude=1.0, smoothing=2.0, bump_radius=None, div_form=False):
    """Reproducible divergence-free initial datum in a chosen L^q class.

    Parameters
    ----------
    grid : Grid
    seed : int
    q_target : float
        Integrability target in ``[1, 2]``.
    profile : {"algebraic-tail", "compact-bump"}
        ``algebraic-tail`` is the heat-smoothed power-law field of
        :func:`tail_spectrum` with a random orientation and a small random
        offset. ``compact-bump`` is the curl of a random Gaussian-blob potential
        cut off smoothly at ``bump_radius`` (default ``L/4``).
    alpha : float, optional
        Tail exponent, must exceed ``3/q_target``. Defaults to ``3/q + 0.05``.
    amplitude : float
        Target L2 norm of the output.
    smoothing : float
        Heat-smoothing length of the tail profile.
    div_form : bool
        Return ``P div(f e⊗e)`` instead of ``P(e f)`` for the tail profile.

    Returns
    -------
    SpectralVectorField
        ``meta`` holds the measured L1, Lq and L2 norms and the profile settings.
    """
    if not 1.0 <= q_target <= 2.0:
        raise ValueError(f"q_target must lie in [1, 2], got {q_target}")
    rng = np.random.default_rng(seed)
    if profile == "algebraic-tail":
        if alpha is None:
            alpha = 3.0 / q_target + 0.05
        if alpha <= 3.0 / q_target:
            raise ValueError(f"alpha={alpha} <= 3/q={3.0 / q_target}: tail is not q-integrable")
        e = random_unit_vector(rng)
        shift = rng.uniform(-1.0, 1.0, 3) * grid.h
        spec = tail_spectrum(grid, alpha, smoothing, e, shift, div_form=div_form)
        meta = {"profile": profile, "alpha": alpha, "smoothing": smoothing,
                "direction": e.tolist(), "shift": shift.tolist(), "div_form": div_form}
    elif profile == "compact-bump":
        radius = grid.L / 4 if bump_radius is None else bump_radius
        pot = _bump_potential(grid, rng, radius, n_blobs=6, blob_width=max(radius / 6, 2 * grid.h))
        spec = curl_spec(grid, grid.fft(pot))
        spec = project_spec(grid, spec, dealias=True)
        spec[:, 0, 0, 0] = 0.0
        meta = {"profile": profile, "radius": radius}
    else:
        raise ValueError(f"unknown profile {profile!r}")
    norm = np.sqrt(grid.inner_spec(spec, spec))
    if norm > 0:
        spec *= amplitude / norm
    field = SpectralVectorField(grid, spec=spec, solenoidal=True)
    meta.update(seed=seed, q_target=q_target, amplitude=amplitude,
                l1=lq_norm(field, 1.0, grid), lq=lq_norm(field, q_target, grid),
                l2=field.l2())
    field.meta = meta
    return field


@dataclass
class ScalarSeriesSample:
    """One row of a norm series: a time and its named functionals."""
    t: float
    values: dict = dc_field(default_factory=dict)


class NormSeries:
    """Time-indexed record of named scalar functionals.

    Times must increase strictly. Columns missing from a sample are stored
    as NaN.
    """

    def __init__(self, names=None):
        self.samples = []
        self.names = list(names) if names else []

    def append(self, t, **values):
        t = float(t)
        if self.samples and not t > self.samples[-1].t:
            raise ValueError(f"time {t} does not increase past {self.samples[-1].t}")
        for name in values:
            if name not in self.names:
                self.names.append(name)
        self.samples.append(ScalarSeriesSample(t, {k: float(v) for k, v in values.items()}))

    def __len__(self):
        return len(self.samples)

    @property
    def t(self):
        return np.array([s.t for s in self.samples])

    def __getitem__(self, name):
        return np.array([s.values.get(name, np.nan) for s in self.samples])

    def __contains__(self, name):
        return name in self.names

    def rows_long(self):
        """Yield ``(t, name, value)`` triples."""
        for s in self.samples:
            for name in self.names:
                if name in s.values:
                    yield s.t, name, s.values[name]
