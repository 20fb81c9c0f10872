import numpy as np
import pytest

from landau_mhd import landau, linop
from landau_mhd.errors import ConfigurationError, ContractError, InsufficientRangeError
from landau_mhd.specfield import Grid, SpectralVectorField, project_spec, random_solenoidal_Lq


@pytest.fixture(scope="module")
def setup():
    g = Grid(16, 16.0)
    b = landau.b_for_coupling(0.1, 6.0, (0.0, 0.6, 0.8))
    bg = landau.make_background(b, g)
    return g, bg, landau.measured_C0(bg.params)


def smooth_field(g, seed):
    rng = np.random.default_rng(seed)
    s = project_spec(g, g.fft(rng.standard_normal(g.phys_shape(3))) * np.exp(-g.k2), dealias=True)
    s[:, 0, 0, 0] = 0
    return SpectralVectorField(g, spec=s, solenoidal=True)


def test_handle_validation(setup):
    g, bg, _ = setup
    with pytest.raises(ValueError):
        linop.LinearOperatorHandle("L3", bg, g)
    with pytest.raises(ConfigurationError):
        linop.LinearOperatorHandle("L1", bg, Grid(32, 16.0))
    h = linop.LinearOperatorHandle("L1", bg, g)
    bad = SpectralVectorField(g, phys=np.random.default_rng(0).standard_normal(g.phys_shape(3)))
    with pytest.raises(ContractError):
        linop.apply(h, bad)
    assert h.with_operator("L2").which == "L2"


@pytest.mark.parametrize("which", ["L1", "L2"])
def test_adjoint_identity(setup, which):
    g, bg, _ = setup
    L = linop.LinearOperatorHandle(which, bg, g)
    Ls = L.with_operator(which + "_adjoint")
    for seed in range(4):
        u, v = smooth_field(g, seed), smooth_field(g, 100 + seed)
        lhs = linop.apply(L, u).inner(v)
        rhs = u.inner(linop.apply(Ls, v))
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_zero_background_is_stokes():
    g = Grid(16, 8.0)
    u = smooth_field(g, 1)
    out = linop.apply(linop.LinearOperatorHandle("L2", None, g), u)
    np.testing.assert_allclose(out.spec, g.k2 * u.spec, atol=1e-15)


def test_forms_match_operators(setup):
    g, bg, _ = setup
    u = smooth_field(g, 2)
    for which, form in (("L1", "a1"), ("L2", "a2")):
        h = linop.LinearOperatorHandle(which, bg, g)
        assert linop.apply(h, u).inner(u) == pytest.approx(linop.bilinear_form(form, u, u, bg), rel=1e-10)
    # advection is skew on solenoidal fields
    assert abs(linop.advection_form(u, bg)) < 1e-12 * u.grad_l2() ** 2
    with pytest.raises(ValueError):
        linop.bilinear_form("a3", u, u, bg)


def test_coercivity_margin(setup):
    g, bg, C0 = setup
    for seed in range(5):
        lo, hi, ratio = linop.coercivity_margin(smooth_field(g, seed), bg, C0, bg.b_mag)
        assert lo and hi
        assert abs(ratio - 1) <= 6 * C0 * bg.b_mag


def test_contraction_along_trajectory(setup):
    g, bg, _ = setup
    f = random_solenoidal_Lq(g, 3, 1.5, smoothing=1.5)
    for which in ("L1", "L2"):
        tr = linop.evolve_linear(linop.LinearOperatorHandle(which, bg, g), f, 4.0, 0.1)
        assert np.all(np.diff(tr.series["l2"]) <= 1e-14 * tr.series["l2"][0])


def test_heat_path_exact():
    g = Grid(16, 8.0)
    f = smooth_field(g, 4)
    tr = linop.evolve_linear(linop.LinearOperatorHandle("L1", None, g), f, 2.0, 0.5,
                             record_times=[1.0, 2.0], store_times=[1.0])
    np.testing.assert_allclose(tr.snapshots[1.0], np.exp(-g.k2) * f.spec, atol=1e-15)
    assert list(tr.series.t) == [0.0, 1.0, 2.0]


def test_lawson_exact_for_linear_part():
    # with F = 0 the scheme reproduces the heat factor
    g = Grid(16, 4.0)
    u = smooth_field(g, 5).spec
    step = linop.LawsonRK3(g, lambda v: np.zeros_like(v))
    np.testing.assert_allclose(step.step(u, 0.3), np.exp(-0.3 * g.k2) * u, atol=1e-15)


def test_lawson_third_order(setup):
    g, bg, _ = setup
    h = linop.LinearOperatorHandle("L1", bg, g)
    f = smooth_field(g, 6)
    ref = linop.evolve_linear(h, f, 1.0, 1 / 64, record_times=[1.0]).final
    errs = []
    for dt in (1 / 4, 1 / 8):
        u = linop.evolve_linear(h, f, 1.0, dt, record_times=[1.0]).final
        errs.append(np.sqrt(g.inner_spec(u - ref, u - ref)))
    assert errs[0] / errs[1] > 6.0


def test_fit_decay_recovers_power():
    t = np.geomspace(0.1, 10, 40)
    fit = linop.fit_decay(t, 3 * (t + 2) ** -0.7, (0.5, 10), t_shift=2.0)
    assert fit.exponent == pytest.approx(-0.7, abs=1e-12)
    assert fit.residual < 1e-12 and fit.n_points > 4
    rec = fit.as_record()
    assert rec["window"] == [0.5, 10.0]
    with pytest.raises(InsufficientRangeError):
        linop.fit_decay(t, t ** -1, (1.0, 2.0))
    with pytest.raises(ConfigurationError):
        linop.fit_decay(t, t ** -1, (0.5, 10.0), t_wrap=5.0)


@pytest.mark.parametrize("alpha, div", [(3.05, False), (2.05, False), (2.05, True)])
def test_free_space_oracle_exponent(alpha, div):
    t = np.geomspace(0.5, 10, 20)
    y = linop.free_space_norm(t, alpha, 3.0, div)
    fit = linop.fit_decay(t, y, (0.5, 10), t_shift=4.5)
    assert fit.exponent == pytest.approx(linop.free_space_exponent(alpha, div), abs=1e-6)


def test_div_decay_domain():
    g = Grid(16, 8.0)
    with pytest.raises(ValueError):
        linop.measure_div_decay(linop.LinearOperatorHandle("L1", None, g), 1.1)


@pytest.mark.xfail(strict=True, reason="at q = 2 the plain semigroup has no algebraic rate; "
                   "the slow o(1) decay of the smoothed tail datum reads as about -0.16 on the "
                   "largest affordable window, outside the 0.15 band around 0")
def test_plain_q2_exponent_near_zero():
    g = Grid(64, 128.0)
    h = linop.LinearOperatorHandle("L1", None, g)
    fit = linop.measure_semigroup_decay(h, 2.0, linop.DataFamily(smoothing=3.0), (0.5, 10.0))
    assert abs(fit.exponent) <= 0.15
