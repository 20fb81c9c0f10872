import os
import subprocess
import sys

import numpy as np
import pytest

from landau_mhd import _kernels as K
from landau_mhd.specfield import Grid

needs_numba = pytest.mark.skipif(K.NUMBA_KERNELS is None, reason="numba not importable")


@pytest.fixture(scope="module")
def data():
    g = Grid(16, 6.0)
    rng = np.random.default_rng(0)
    w, B, U = (rng.standard_normal(g.phys_shape(3)) for _ in range(3))
    spec6 = rng.standard_normal((6,) + g.spec_shape()) + 1j * rng.standard_normal((6,) + g.spec_shape())
    return g, w, B, U, spec6


@needs_numba
@pytest.mark.parametrize("coef", [(1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (0.0, 0.0, 1.0)])
def test_stress_backends_agree(data, coef):
    g, w, B, U, _ = data
    a = K.NUMPY_KERNELS["stress"](w, B, U, *coef, np.empty((6,) + w.shape[1:]))
    b = K.NUMBA_KERNELS["stress"](w, B, U, *coef, np.empty((6,) + w.shape[1:]))
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


@needs_numba
def test_induction_backends_agree(data):
    g, w, B, U, _ = data
    a = K.NUMPY_KERNELS["induction"](w, B, U, 1.0, 1.0, np.empty((3,) + w.shape[1:]))
    b = K.NUMBA_KERNELS["induction"](w, B, U, 1.0, 1.0, np.empty((3,) + w.shape[1:]))
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


@needs_numba
@pytest.mark.parametrize("name, ncomp", [("leray", 3), ("div_sym", 6), ("div_anti", 3)])
def test_spectral_backends_agree(data, name, ncomp):
    g, *_, spec6 = data
    src = spec6[:ncomp].copy()
    args = (g.kx, g.ky, g.kz, g.inv_k2, g.dealias)
    a = K.NUMPY_KERNELS[name](src.copy(), *args, np.empty((3,) + g.spec_shape(), complex))
    b = K.NUMBA_KERNELS[name](src.copy(), *args, np.empty((3,) + g.spec_shape(), complex))
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


def test_projected_output_is_solenoidal(data):
    g, *_, spec6 = data
    for name, n in (("div_sym", 6), ("div_anti", 3), ("leray", 3)):
        out = K.KERNELS[name](spec6[:n].copy(), g.kx, g.ky, g.kz, g.inv_k2, g.dealias,
                              np.empty((3,) + g.spec_shape(), complex))
        div = g.kx * out[0] + g.ky * out[1] + g.kz * out[2]
        assert np.max(np.abs(div)) < 1e-12 * np.max(np.abs(out))
        assert not np.any(out[:, ~g.dealias.astype(bool)])


def test_antisymmetric_flux_vanishes_for_parallel_fields(data):
    g, w, *_ = data
    out = K.induction(w, 2.0 * w, np.zeros_like(w), 1.0, 0.0, np.empty((3,) + w.shape[1:]))
    assert np.max(np.abs(out)) < 1e-14


def test_env_flag_selects_numpy():
    env = dict(os.environ, LANDAU_MHD_NO_NUMBA="1")
    code = "from landau_mhd import _kernels as K; print(K.USING_NUMBA, K.stress is K.stress_np)"
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert r.stdout.split() == ["False", "True"]
