"""Hot field kernels with a numba path and a pure numpy fallback.

The numba versions are used when numba imports cleanly and the environment
variable ``LANDAU_MHD_NO_NUMBA`` is unset (or ``0``). Both implementations are
always importable as ``NUMPY_KERNELS`` and ``NUMBA_KERNELS`` (the latter is
``None`` without numba) so tests and benchmarks can compare them directly.

Layout conventions
------------------
Physical vector fields are ``(3, N, N, N)`` float64. Symmetric tensors are
stored as six components in the order ``xx, xy, xz, yy, yz, zz`` and
antisymmetric tensors as three components ``xy, xz, yz``. Spectral arrays are
half-spectra from ``rfftn`` with shape ``(..., N, N, N//2 + 1)``.
"""
import os

import numpy as np

SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
ANTI_PAIRS = ((0, 1), (0, 2), (1, 2))
# index of the symmetric component holding (i, j)
SYM_INDEX = np.array([[0, 1, 2], [1, 3, 4], [2, 4, 5]])


def _numba_disabled():
    return os.environ.get("LANDAU_MHD_NO_NUMBA", "0").strip() not in ("", "0")


# ---------------------------------------------------------------- numpy path

def stress_np(w, B, U, cw, cb, cu, out):
    """Symmetric flux ``cw w⊗w - cb B⊗B + cu (U⊗w + w⊗U)``."""
    for m, (i, j) in enumerate(SYM_PAIRS):
        out[m] = cw * (w[i] * w[j]) - cb * (B[i] * B[j]) + cu * (U[i] * w[j]) + cu * (w[i] * U[j])
    return out


def induction_np(w, B, U, cw, cu, out):
    """Antisymmetric flux ``v⊗B - B⊗v`` with ``v = cw w + cu U``."""
    for m, (i, j) in enumerate(ANTI_PAIRS):
        vi = cw * w[i] + cu * U[i]
        vj = cw * w[j] + cu * U[j]
        out[m] = vi * B[j] - B[i] * vj
    return out


def _project_np(d, kx, ky, kz, inv_k2, mask):
    kd = kx * d[0] + ky * d[1] + kz * d[2]
    kd *= inv_k2
    d[0] -= kx * kd
    d[1] -= ky * kd
    d[2] -= kz * kd
    d *= mask
    return d


def leray_np(u, kx, ky, kz, inv_k2, mask, out):
    """Masked Leray projection ``M (u - k (k.u)/|k|^2)`` of a half spectrum."""
    out[...] = u
    return _project_np(out, kx, ky, kz, inv_k2, mask)


def div_sym_np(S, kx, ky, kz, inv_k2, mask, out):
    """``M P (i k_i S_ij)`` for a six-component symmetric spectral tensor."""
    k = (kx, ky, kz)
    for j in range(3):
        acc = k[0] * S[SYM_INDEX[0, j]]
        acc = acc + k[1] * S[SYM_INDEX[1, j]]
        acc = acc + k[2] * S[SYM_INDEX[2, j]]
        out[j] = 1j * acc
    return _project_np(out, kx, ky, kz, inv_k2, mask)


def div_anti_np(A, kx, ky, kz, inv_k2, mask, out):
    """``M P (i k_i A_ij)`` for a three-component antisymmetric spectral tensor."""
    axy, axz, ayz = A[0], A[1], A[2]
    # column j of A: A_xj, A_yj, A_zj with A_ji = -A_ij
    out[0] = 1j * (-(ky * axy) - kz * axz)
    out[1] = 1j * (kx * axy - kz * ayz)
    out[2] = 1j * (kx * axz + ky * ayz)
    return _project_np(out, kx, ky, kz, inv_k2, mask)


NUMPY_KERNELS = {
    "stress": stress_np,
    "induction": induction_np,
    "leray": leray_np,
    "div_sym": div_sym_np,
    "div_anti": div_anti_np,
}


# ---------------------------------------------------------------- numba path

def _build_numba():
    try:
        import numba as nb
    except ImportError:
        return None

    jit = nb.njit(cache=True, nogil=True)

    @jit
    def stress_nb(w, B, U, cw, cb, cu, out):
        n0, n1, n2 = w.shape[1], w.shape[2], w.shape[3]
        for a in range(n0):
            for b in range(n1):
                for c in range(n2):
                    for m in range(6):
                        i = (0, 0, 0, 1, 1, 2)[m]
                        j = (0, 1, 2, 1, 2, 2)[m]
                        out[m, a, b, c] = (cw * (w[i, a, b, c] * w[j, a, b, c])
                                           - cb * (B[i, a, b, c] * B[j, a, b, c])
                                           + cu * (U[i, a, b, c] * w[j, a, b, c])
                                           + cu * (w[i, a, b, c] * U[j, a, b, c]))
        return out

    @jit
    def induction_nb(w, B, U, cw, cu, out):
        n0, n1, n2 = w.shape[1], w.shape[2], w.shape[3]
        for a in range(n0):
            for b in range(n1):
                for c in range(n2):
                    for m in range(3):
                        i = (0, 0, 1)[m]
                        j = (1, 2, 2)[m]
                        vi = cw * w[i, a, b, c] + cu * U[i, a, b, c]
                        vj = cw * w[j, a, b, c] + cu * U[j, a, b, c]
                        out[m, a, b, c] = vi * B[j, a, b, c] - B[i, a, b, c] * vj
        return out

    @jit
    def _proj_point(d0, d1, d2, kx, ky, kz, ik2, msk):
        kd = (kx * d0 + ky * d1 + kz * d2) * ik2
        return (msk * (d0 - kx * kd), msk * (d1 - ky * kd), msk * (d2 - kz * kd))

    @jit
    def leray_nb(u, kx, ky, kz, inv_k2, mask, out):
        n0, n1, n2 = u.shape[1], u.shape[2], u.shape[3]
        for a in range(n0):
            for b in range(n1):
                for c in range(n2):
                    p = _proj_point(u[0, a, b, c], u[1, a, b, c], u[2, a, b, c],
                                    kx[a, 0, 0], ky[0, b, 0], kz[0, 0, c],
                                    inv_k2[a, b, c], mask[a, b, c])
                    out[0, a, b, c] = p[0]
                    out[1, a, b, c] = p[1]
                    out[2, a, b, c] = p[2]
        return out

    @jit
    def div_sym_nb(S, kx, ky, kz, inv_k2, mask, out):
        n0, n1, n2 = S.shape[1], S.shape[2], S.shape[3]
        for a in range(n0):
            for b in range(n1):
                for c in range(n2):
                    qx = kx[a, 0, 0]
                    qy = ky[0, b, 0]
                    qz = kz[0, 0, c]
                    d0 = 1j * ((qx * S[0, a, b, c] + qy * S[1, a, b, c]) + qz * S[2, a, b, c])
                    d1 = 1j * ((qx * S[1, a, b, c] + qy * S[3, a, b, c]) + qz * S[4, a, b, c])
                    d2 = 1j * ((qx * S[2, a, b, c] + qy * S[4, a, b, c]) + qz * S[5, a, b, c])
                    p = _proj_point(d0, d1, d2, qx, qy, qz, inv_k2[a, b, c], mask[a, b, c])
                    out[0, a, b, c] = p[0]
                    out[1, a, b, c] = p[1]
                    out[2, a, b, c] = p[2]
        return out

    @jit
    def div_anti_nb(A, kx, ky, kz, inv_k2, mask, out):
        n0, n1, n2 = A.shape[1], A.shape[2], A.shape[3]
        for a in range(n0):
            for b in range(n1):
                for c in range(n2):
                    qx = kx[a, 0, 0]
                    qy = ky[0, b, 0]
                    qz = kz[0, 0, c]
                    axy = A[0, a, b, c]
                    axz = A[1, a, b, c]
                    ayz = A[2, a, b, c]
                    d0 = 1j * (-(qy * axy) - qz * axz)
                    d1 = 1j * (qx * axy - qz * ayz)
                    d2 = 1j * (qx * axz + qy * ayz)
                    p = _proj_point(d0, d1, d2, qx, qy, qz, inv_k2[a, b, c], mask[a, b, c])
                    out[0, a, b, c] = p[0]
                    out[1, a, b, c] = p[1]
                    out[2, a, b, c] = p[2]
        return out

    return {
        "stress": stress_nb,
        "induction": induction_nb,
        "leray": leray_nb,
        "div_sym": div_sym_nb,
        "div_anti": div_anti_nb,
    }


NUMBA_KERNELS = _build_numba()
USING_NUMBA = NUMBA_KERNELS is not None and not _numba_disabled()
KERNELS = NUMBA_KERNELS if USING_NUMBA else NUMPY_KERNELS

stress = KERNELS["stress"]
induction = KERNELS["induction"]
leray = KERNELS["leray"]
div_sym = KERNELS["div_sym"]
div_anti = KERNELS["div_anti"]
