from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landau_mhd import ratecalc as rc
from landau_mhd.errors import DomainError


@pytest.mark.parametrize("d, r, want", [(F(0), F(3, 2), F(1, 4)),
                                        (F(1, 4), F(15, 8), F(2, 5)),
                                        (F(2, 5), F(4, 3), F(3, 4))])
def test_exact_triples(d, r, want):
    got = rc.bootstrap_alpha(d, r)
    assert isinstance(got, F) and got == want


@pytest.mark.parametrize("r, theta", [(F(2), F(3, 4)), (F(3, 2), F(1, 2))])
def test_gn_theta(r, theta):
    assert rc.gn_theta(r) == theta


def test_theta_domain():
    with pytest.raises(DomainError):
        rc.gn_theta(F(6, 5))
    with pytest.raises(DomainError):
        rc.gn_theta(2.5)
    assert rc.gn_theta(1.2000001) == pytest.approx(0.25, abs=1e-6)


@pytest.mark.parametrize("r, e", [(F(3, 2), F(3, 4)), (F(2), F(1, 2)), (F(15, 8), F(11, 20))])
def test_kernel_exponent(r, e):
    assert rc.nonlinear_kernel_exponent(r) == e


def test_regime_boundaries():
    b = rc.regime_boundaries()
    assert [x[2] for x in b] == [F(3, 2), F(30, 23), F(1)]
    assert rc.heat_rate(F(30, 23)) == F(2, 5)


@pytest.mark.parametrize("q, rate, step", [(F(3, 2), F(1, 4), 1), (F(30, 23), F(2, 5), 2),
                                           (F(1), F(3, 4), 3)])
def test_pinned_chain(q, rate, step):
    ch = rc.decay_chain(q, "pinned")
    assert ch.rate == rate and ch.binds_at == step


def test_pinned_chain_between_boundaries():
    # 30/23 < q < 3/2: the heat rate binds at the second step
    ch = rc.decay_chain(F(7, 5), "pinned")
    assert ch.rate == rc.heat_rate(F(7, 5)) == F(9, 28) and ch.binds_at == 2


def test_free_chain_exceeds_point_nine():
    ch = rc.decay_chain(1.0, "free", rounds=20)
    assert ch.peak > 0.9 and len(ch.steps) <= 20
    assert ch.rate == pytest.approx(0.75)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 1.99))
def test_chain_ceilings(q):
    ch = rc.decay_chain(q, "free", rounds=20, n_grid=200)
    for e, _ in ch.steps:
        assert e <= 1 + 1e-12
        assert e <= rc.heat_rate(q) + 1 + 1e-12
    assert ch.rate <= rc.heat_rate(q) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.0, 0.1), st.floats(1.21, 2.0))
def test_alpha_monotone_in_decay(d, dd, r):
    try:
        a0 = rc.bootstrap_alpha(d, r)
        a1 = rc.bootstrap_alpha(d + dd, r)
    except rc.InadmissiblePairError:
        return
    assert a1 >= a0 - 1e-15


def test_gate_rejects():
    with pytest.raises(rc.InadmissiblePairError):
        rc.bootstrap_alpha(F(1), F(6, 5) + F(1, 1000))
    with pytest.raises(DomainError):
        rc.bootstrap_alpha(-0.1, 1.5)
    with pytest.raises(DomainError):
        rc.decay_chain(2.0)


def test_float_and_fraction_agree():
    for d, r in [(0.0, 1.5), (0.25, 1.875), (0.4, 4 / 3)]:
        assert rc.bootstrap_alpha(d, r) == pytest.approx(float(rc.bootstrap_alpha(F(d).limit_denominator(100), F(r).limit_denominator(100))))
    assert np.isfinite(rc.heat_rate(1.0))
