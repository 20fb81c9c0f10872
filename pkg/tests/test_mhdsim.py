import numpy as np
import pytest

from landau_mhd import landau, mhdsim
from landau_mhd.errors import BlowUpError, ConfigurationError, ContractError
from landau_mhd.specfield import SpectralVectorField
from landau_mhd.suites import ns_path_identical


def small_config(**kw):
    base = dict(N=16, L=16.0, dt=0.05, t_final=2.0,
                w0=mhdsim.InitialSpec(seed=0, q_target=1.5, amplitude=1.0, smoothing=1.5),
                B0=mhdsim.InitialSpec(seed=1, q_target=1.5, amplitude=0.5, smoothing=1.5))
    base.update(kw)
    return mhdsim.SimConfig(**base)


@pytest.fixture(scope="module")
def coupled_run():
    b = landau.b_for_coupling(0.1, 4.0, (0.0, 0.6, 0.8))
    cfg = small_config(b=tuple(b))
    return mhdsim.run(cfg, snapshot_times=mhdsim.duhamel_snapshot_times(2.0, 12))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        small_config(dt=0.0)
    with pytest.raises(ConfigurationError):
        small_config(w0=mhdsim.InitialSpec(q_target=2.5))
    with pytest.raises(ConfigurationError):
        small_config(B0=mhdsim.InitialSpec(amplitude=-1.0))
    cfg = small_config(w0={"seed": 3, "q_target": 2.0})
    assert isinstance(cfg.w0, mhdsim.InitialSpec) and cfg.w0.seed == 3


def test_config_hash():
    assert small_config().config_hash() == small_config().config_hash()
    assert small_config().config_hash() != small_config(dt=0.04).config_hash()


def test_energy_audit(coupled_run):
    r = coupled_run
    rep = mhdsim.energy_inequality_report(r.series, r.C0, r.config.b_mag)
    assert rep.monotone_worst <= 0
    assert rep.sei_defect < 1e-3
    assert not rep.flagged
    assert rep.coercive_worst == 0.0
    assert rep.averaged_worst == 0.0


def test_state_stays_solenoidal(coupled_run):
    st = coupled_run.state
    assert st.t == pytest.approx(2.0)
    assert st.w.max_divergence() < 1e-10 and st.B.max_divergence() < 1e-10
    assert set(coupled_run.series.names) >= {"l2_w", "l2_B", "grad_w", "grad_B",
                                             "couple_w", "couple_B", "dt"}


def test_snapshots_land_on_marks(coupled_run):
    want = mhdsim.duhamel_snapshot_times(2.0, 12)
    assert np.allclose(sorted(coupled_run.snapshots), want)
    assert set(want) <= set(np.round(coupled_run.series.t, 12)) | set(want)


def test_duhamel_bounds(coupled_run):
    rep = mhdsim.duhamel_residual(coupled_run, n_samples=6, dt=0.1)
    assert len(rep.s) == 6
    assert rep.min_slack >= -1e-3 * rep.w0_norm
    with pytest.raises(ValueError):
        mhdsim.duhamel_residual(coupled_run, n_samples=50)


def test_zero_background_energy_balance():
    r = mhdsim.run(small_config(t_final=1.0))
    assert r.C0 == 0.0 and r.background is None
    rep = mhdsim.energy_inequality_report(r.series, 0.0, 0.0)
    assert rep.sei_defect < 1e-6


def test_ns_reduction_path():
    cfg = small_config(B0=mhdsim.InitialSpec(amplitude=0.0), t_final=0.5)
    r = mhdsim.run(cfg)
    assert r.ns_path and not np.any(r.state.B.spec)
    grid, bg, _, _ = mhdsim.build(small_config(b=(0.0, 0.0, 0.3)))
    assert ns_path_identical(grid, bg, cfg, 3)


def test_runs_are_deterministic():
    cfg = small_config(t_final=0.3)
    a, b = mhdsim.run(cfg), mhdsim.run(cfg)
    for name in a.series.names:
        np.testing.assert_array_equal(a.series[name], b.series[name])


def test_step_contracts():
    cfg = small_config()
    grid, bg, state, _ = mhdsim.build(cfg)
    new = mhdsim.step(state, 0.05, bg)
    assert new.t == pytest.approx(0.05)
    assert new.energy() < state.energy()
    bad = np.random.default_rng(0).standard_normal(grid.phys_shape(3))
    broken = mhdsim.MhdState(0.0, SpectralVectorField(grid, phys=bad), state.B)
    with pytest.raises(ContractError):
        mhdsim.step(broken, 0.05, bg)
    huge = mhdsim.MhdState(0.0, SpectralVectorField(grid, spec=state.w.spec * 1e8, solenoidal=True),
                           state.B)
    with pytest.raises(BlowUpError) as exc:
        mhdsim.step(huge, 0.5, bg)
    assert "energy_after" in exc.value.record


def test_fluxes_vanish_without_fields():
    grid, _, state, _ = mhdsim.build(small_config())
    z = np.zeros_like(state.w.spec)
    assert not np.any(mhdsim.flux_w(grid, z, z))
    assert not np.any(mhdsim.flux_B(grid, state.w.spec, z))
    # w⊗B - B⊗w vanishes for B = w
    assert np.max(np.abs(mhdsim.flux_B(grid, state.w.spec, state.w.spec))) < 1e-16


def test_fit_run_decay(coupled_run):
    fit = mhdsim.fit_run_decay(coupled_run, window=(0.2, 2.0), shift=1.125)
    assert np.isfinite(fit.exponent) and fit.exponent < 0
    assert fit.extra["theory"] == pytest.approx(-0.25)
