import numpy as np
import pytest
from hypothesis import given, strategies as st

from cumulant_qed.moments import (
    Layout,
    MomentState,
    Order,
    PARITY_ODD,
    UnsupportedPattern,
    blocks_for,
    cumulant,
    displaced_field,
    expand_cumulants,
    from_expectations,
    init,
    mode_occupations,
    observables,
    photon_total,
    population,
    random_state,
    symmetry_residual,
    to_expectations,
)
from cumulant_qed.spectral import custom_modes

orders = st.sampled_from(list(Order))


@pytest.mark.parametrize("order", list(Order))
def test_init(order):
    modes = custom_modes([1.0, 2.0, 3.0], [0.1, 0.2, 0.3])
    g = init("ground", modes, order)
    e = init("excited", modes, order)
    assert population(g) == 0.0 and population(e) == 1.0
    assert photon_total(g) == 0.0 and photon_total(e) == 0.0
    assert symmetry_residual(e) == 0.0


def test_population_values():
    st_ = MomentState.zeros(2, Order.MF)
    for sz, p in ((1.0, 1.0), (-1.0, 0.0), (-1.1, -0.05)):
        st_.pauli[2] = sz
        assert population(st_) == pytest.approx(p, abs=1e-15)


def test_photon_total_diagonal():
    st_ = MomentState.zeros(2, Order.ORDER2)
    st_.ada[:] = np.diag([0.3, 0.7])
    assert photon_total(st_) == pytest.approx(1.0)
    st_.a[:] = [0.5, 0.0]
    np.testing.assert_allclose(mode_occupations(st_), [0.55, 0.7])


def test_displaced_field():
    st_ = MomentState.zeros(2, Order.MF)
    alpha = np.array([0.1 + 0.2j, -0.3])
    np.testing.assert_array_equal(displaced_field(st_, np.zeros(2)), 0)
    np.testing.assert_array_equal(displaced_field(st_, alpha), alpha)
    st_.a[:] = [1j, 2.0]
    np.testing.assert_array_equal(displaced_field(st_, alpha), st_.a + alpha)
    with pytest.raises(ValueError):
        displaced_field(st_, np.zeros(3))
    obs = observables(st_, alpha)
    assert obs.population == 0.5 and obs.field.shape == (2,)


def test_layout_round_trip(rng):
    for order in Order:
        st_ = random_state(3, order, rng)
        vec = st_.to_vector()
        assert vec.size == Layout(3, order).size
        back = MomentState.from_vector(vec, 3, order)
        np.testing.assert_array_equal(back.to_vector(), vec)
    with pytest.raises(ValueError):
        MomentState.from_vector(np.zeros(5), 3, Order.ORDER2)


def test_even_layout_drops_odd_blocks():
    names = blocks_for(Order.ORDER3, even_only=True)
    assert not set(names) & set(PARITY_ODD)
    assert "adds_z" in names and "adas_z" in names
    assert Layout(4, Order.ORDER3, even_only=True).size < Layout(4, Order.ORDER3).size


def test_expand_pair_cumulant():
    st_ = MomentState.zeros(2, Order.ORDER2)
    st_.ada[0, 1] = 0.25 + 0.5j
    st_.ada[1, 0] = 0.25 - 0.5j
    assert expand_cumulants(st_, [("+", 0), ("-", 1)]) == pytest.approx(0.25 + 0.5j)
    st_.ads[1, 1] = 0.3j
    assert expand_cumulants(st_, [("-", 1), "y"]) == pytest.approx(-0.3j)


def test_expand_rejects_bad_patterns():
    st_ = MomentState.zeros(2, Order.ORDER2)
    with pytest.raises(UnsupportedPattern):
        expand_cumulants(st_, [("+", 0)] * 5)
    with pytest.raises(UnsupportedPattern):
        expand_cumulants(st_, [("-", 0), ("+", 1)])
    with pytest.raises(UnsupportedPattern):
        expand_cumulants(st_, ["x", "y"])


def test_expand_three_products():
    rng = np.random.default_rng(3)
    st_ = random_state(2, Order.ORDER3, rng)
    ops = [("+", 0), ("-", 1), "z"]
    s, a = st_.pauli, st_.a
    expected = (
        np.conj(a[0]) * a[1] * s[2]
        + np.conj(a[0]) * np.conj(st_.ads[2, 1])
        + a[1] * st_.ads[2, 0]
        + s[2] * st_.ada[0, 1]
        + st_.adas_z[0, 1]
    )
    assert expand_cumulants(st_, ops) == pytest.approx(expected, rel=1e-14)
    assert cumulant(st_, ops) == pytest.approx(st_.adas_z[0, 1])


@given(orders, st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_cumulant_round_trip(order, n, seed):
    st_ = random_state(n, order, np.random.default_rng(seed))
    if order is Order.MF:
        return
    raw = to_expectations(st_)
    back = from_expectations(raw)
    assert np.max(np.abs(back.to_vector() - st_.to_vector())) < 1e-12
    assert back.kind == "cumulant"


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_to_expectations_matches_generic_expansion(n, seed):
    st_ = random_state(n, Order.ORDER3, np.random.default_rng(seed))
    raw = to_expectations(st_)
    for k in range(n):
        for m in range(n):
            assert raw.adas_x[k, m] == pytest.approx(expand_cumulants(st_, [("+", k), ("-", m), "x"]), abs=1e-12)
            assert raw.adds_y[k, m] == pytest.approx(expand_cumulants(st_, [("+", k), ("+", m), "y"]), abs=1e-12)
            for l in range(n):
                assert raw.adda[k, m, l] == pytest.approx(
                    expand_cumulants(st_, [("+", k), ("+", m), ("-", l)]), abs=1e-12)
                assert raw.addd[k, m, l] == pytest.approx(
                    expand_cumulants(st_, [("+", k), ("+", m), ("+", l)]), abs=1e-12)


@given(orders, st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_random_states_are_symmetric(order, n, seed):
    st_ = random_state(n, order, np.random.default_rng(seed))
    assert symmetry_residual(st_) < 1e-14


def test_symmetry_residual_detects_violation(rng):
    st_ = random_state(3, Order.ORDER2, rng)
    st_.ada[0, 1] += 1e-6
    assert symmetry_residual(st_) == pytest.approx(1e-6, rel=1e-6)


def test_conversion_kind_checks(rng):
    st_ = random_state(2, Order.ORDER2, rng)
    with pytest.raises(ValueError):
        from_expectations(st_)
    with pytest.raises(ValueError):
        to_expectations(to_expectations(st_))


def test_arithmetic_checks_compatibility(rng):
    a = random_state(2, Order.ORDER2, rng)
    b = random_state(3, Order.ORDER2, rng)
    with pytest.raises(ValueError):
        a + b
    np.testing.assert_allclose((a + a - 2 * a).to_vector(), 0, atol=1e-15)
