import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landau_mhd import specfield as sf


@pytest.fixture(scope="module")
def grid():
    return sf.Grid(32, 2 * np.pi)


def random_field(grid, seed, smooth=0.5, solenoidal=False):
    rng = np.random.default_rng(seed)
    s = grid.fft(rng.standard_normal(grid.phys_shape(3))) * np.exp(-smooth * grid.k2 / grid.k2.max() * 40)
    s *= grid.dealias
    if solenoidal:
        s = sf.project_spec(grid, s)
        s[:, 0, 0, 0] = 0
    return sf.SpectralVectorField(grid, spec=s, solenoidal=solenoidal)


def test_grid_validation():
    with pytest.raises(ValueError):
        sf.Grid(24, 1.0)
    with pytest.raises(ValueError):
        sf.Grid(32, -1.0)


def test_origin_is_a_node(grid):
    r = grid.radius()
    assert r[grid.N // 2, grid.N // 2, grid.N // 2] == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_parseval(seed):
    g = sf.Grid(16, 3.0)
    f = np.random.default_rng(seed).standard_normal(g.phys_shape(3))
    spec = g.fft(f)
    direct = g.dV * np.sum(f * f)
    assert g.inner_spec(spec, spec) == pytest.approx(direct, rel=1e-12)
    np.testing.assert_allclose(g.ifft(spec), f, atol=1e-12)


def test_lazy_representations(grid):
    u = random_field(grid, 0)
    v = sf.SpectralVectorField(grid, phys=u.phys.copy())
    assert not v.spec_current
    sf.transform(v, "forward")
    assert v.spec_current and v.phys_current
    np.testing.assert_allclose(v.spec, u.spec, atol=1e-14)
    with pytest.raises(ValueError):
        sf.SpectralVectorField(grid)
    with pytest.raises(ValueError):
        sf.transform(v, "sideways")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 2 ** 32 - 1))
def test_leray_idempotent_and_self_adjoint(s1, s2):
    g = sf.Grid(16, 5.0)
    u, v = random_field(g, s1), random_field(g, s2)
    Pu, Pv = sf.leray_project(u), sf.leray_project(v)
    np.testing.assert_allclose(sf.leray_project(Pu).spec, Pu.spec, atol=1e-14)
    assert Pu.inner(v) == pytest.approx(u.inner(Pv), rel=1e-12, abs=1e-14)
    assert Pu.max_divergence() < 1e-12 * np.max(np.abs(u.spec))


def test_derivatives_of_trig_field(grid):
    X, Y, Z = grid.coords()
    phys = np.stack([np.sin(2 * Y) * np.cos(Z), np.zeros_like(X), np.cos(3 * X)])
    u = sf.SpectralVectorField(grid, phys=phys)
    G = sf.gradient(u)
    np.testing.assert_allclose(G[0, 1], 2 * np.cos(2 * Y) * np.cos(Z), atol=1e-12)
    np.testing.assert_allclose(G[0, 2], -np.sin(2 * Y) * np.sin(Z), atol=1e-12)
    np.testing.assert_allclose(G[2, 0], -3 * np.sin(3 * X), atol=1e-12)
    assert np.max(np.abs(sf.divergence(u))) < 1e-13
    np.testing.assert_allclose(sf.laplacian(u).phys[2], -9 * np.cos(3 * X), atol=1e-11)


def test_lq_norm_gaussian():
    g = sf.Grid(64, 16.0)
    r = g.radius()
    f = np.exp(-r * r / 2)
    assert sf.lq_norm(f, 2, g) == pytest.approx(np.pi ** 0.75, abs=1e-6)
    assert sf.lq_norm(2 * f, 1.5, g) == pytest.approx(2 * sf.lq_norm(f, 1.5, g), rel=1e-14)
    with pytest.raises(ValueError):
        sf.lq_norm(f, 0.5, g)


def test_norms_translation_invariant(grid):
    u = random_field(grid, 3)
    shifted = np.roll(u.phys, (3, -5, 7), axis=(1, 2, 3))
    v = sf.SpectralVectorField(grid, phys=shifted)
    for q in (1.0, 1.5, 2.0):
        assert sf.lq_norm(v, q, grid) == pytest.approx(sf.lq_norm(u, q, grid), rel=1e-12)
    assert v.grad_l2() == pytest.approx(u.grad_l2(), rel=1e-12)


def test_hardy_gaussian():
    g = sf.Grid(64, 16.0)
    r = g.radius()
    assert sf.hardy_ratio(np.exp(-r * r / 2), g) == pytest.approx(4 / 3, abs=1e-3)
    # the node rule with the exact origin-cell average is first order only
    assert sf.hardy_ratio(np.exp(-r * r / 2), g, "cell") == pytest.approx(4 / 3, abs=0.05)


def test_hardy_bound_on_random_bumps():
    g = sf.Grid(64, 64.0)
    rng = np.random.default_rng(7)
    ratios = [sf.hardy_ratio(sf.random_bump_field(g, rng, vector=bool(i % 2)), g)
              for i in range(40)]
    assert max(ratios) <= 4.05
    assert min(ratios) > 0
    with pytest.raises(ValueError):
        sf.random_bump_field(sf.Grid(32, 32.0), rng)


def test_hardy_padding_path_agrees():
    # a field with modes beyond N/4 goes through the padded square
    g = sf.Grid(32, 12.0)
    r = g.radius()
    f = np.exp(-r * r / 0.8)
    full = sf.hardy_ratio(f, g)
    fine = sf.Grid(64, 12.0)
    rf = fine.radius()
    assert full == pytest.approx(sf.hardy_ratio(np.exp(-rf * rf / 0.8), fine), rel=1e-3)


def test_hardy_zero_gradient(grid):
    with pytest.raises(ValueError):
        sf.hardy_ratio(np.ones(grid.phys_shape()), grid)
    with pytest.raises(ValueError):
        sf.hardy_ratio(np.exp(-grid.radius() ** 2), grid, method="other")


def test_near_extremal_family_climbs():
    vals = []
    for d in (0.3, 0.1, 0.05):
        w, dw = sf.near_extremal_profile(d)
        vals.append(sf.radial_hardy_ratio(w, dw, 8.0, breakpoints=(1.0,)))
    assert vals[0] < vals[1] < vals[2]
    assert vals[2] > 3.0


def test_radial_oracle_gaussian():
    ratio = sf.radial_hardy_ratio(lambda r: np.exp(-r * r / 2), lambda r: -r * np.exp(-r * r / 2), 20.0)
    assert ratio == pytest.approx(4 / 3, rel=1e-10)


@pytest.mark.parametrize("profile", ["algebraic-tail", "compact-bump"])
def test_random_solenoidal_properties(profile):
    g = sf.Grid(32, 32.0)
    a = sf.random_solenoidal_Lq(g, 11, 1.5, profile, amplitude=2.0)
    b = sf.random_solenoidal_Lq(g, 11, 1.5, profile, amplitude=2.0)
    np.testing.assert_array_equal(a.spec, b.spec)
    assert a.max_divergence() < 1e-12
    assert a.l2() == pytest.approx(2.0, rel=1e-12)
    assert np.all(a.spec[:, 0, 0, 0] == 0)
    for key in ("l1", "lq", "l2"):
        assert np.isfinite(a.meta[key])


def test_tail_requires_integrability():
    g = sf.Grid(16, 16.0)
    with pytest.raises(ValueError):
        sf.random_solenoidal_Lq(g, 0, 1.5, alpha=2.0)
    with pytest.raises(ValueError):
        sf.random_solenoidal_Lq(g, 0, 2.5)


def test_compact_bump_l1_converges():
    # radius 12 keeps the blob width at 2 on both grids
    l1 = [sf.random_solenoidal_Lq(sf.Grid(N, 32.0), 5, 1.0, "compact-bump", bump_radius=12.0).meta["l1"]
          for N in (32, 64)]
    assert l1[0] == pytest.approx(l1[1], rel=0.01)


def test_norm_series():
    s = sf.NormSeries()
    s.append(0.0, a=1.0)
    s.append(1.0, a=0.5, b=2.0)
    with pytest.raises(ValueError):
        s.append(1.0, a=0.1)
    assert np.isnan(s["b"][0]) and s["b"][1] == 2.0
    assert list(s.rows_long()) == [(0.0, "a", 1.0), (1.0, "a", 0.5), (1.0, "b", 2.0)]
