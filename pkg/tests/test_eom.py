import numpy as np
import pytest
from hypothesis import given, strategies as st

from cumulant_qed.drive import Gaussian, NoDrive
from cumulant_qed.eom import (
    Closure,
    Method,
    NonFiniteInput,
    RhsKernel,
    ShapeMismatch,
    SystemParams,
    drive_scalar,
    expectation_rates,
    raw_rhs_zero_expectation,
    rhs,
)
from cumulant_qed.moments import (
    MomentState,
    Order,
    from_expectations,
    init,
    random_state,
    symmetry_residual,
    to_expectations,
)
from cumulant_qed.spectral import custom_modes
from reference import reference_rhs

METHODS = [Method(o) for o in Order] + [Method(Order.ORDER2, Closure.ZERO_EXPECTATION)]
IDS = [m.label for m in METHODS]


def _params(n, pulse=NoDrive(), seed=0):
    rng = np.random.default_rng(seed)
    modes = custom_modes(np.sort(rng.uniform(2.3, 3.1, n)), rng.uniform(0.02, 0.08, n))
    return SystemParams(2.72, modes, pulse)


DRIVE = Gaussian(0.15, 1.0, 2.0, 2.72)


def _diff(a, b):
    return float(np.max(np.abs(a.to_vector() - b.to_vector())))


def test_mean_field_fixed_point():
    p = _params(4)
    d = rhs(init("excited", p.modes, Order.MF), p, Method(Order.MF), 0.0)
    assert np.all(d.to_vector() == 0)


def test_order2_excited_vacuum_initial_rates():
    p = _params(4)
    d = rhs(init("excited", p.modes, Order.ORDER2), p, Method(), 0.0)
    np.testing.assert_allclose(d.ads[0], 1j * p.modes.g, rtol=1e-14)
    assert np.all(d.pauli == 0)
    np.testing.assert_allclose(d.ads[1], -np.asarray(p.modes.g), rtol=1e-14)
    assert np.all(d.ads[2] == 0)


def test_third_order_x_source_terms(rng):
    n = 3
    p = _params(n)
    omega, g = np.asarray(p.modes.omega), np.asarray(p.modes.g)
    raw = to_expectations(random_state(n, Order.ORDER3, rng))
    blocks = ("adas_x",)
    d = expectation_rates(
        {"s": raw.pauli, "a": raw.a, "adas": [raw.adas_x, raw.adas_y, raw.adas_z]},
        {}, 2.72, omega, g, 0.0, blocks,
    )["adas_x"]
    W = 1j * (omega[:, None] - omega[None, :])
    expected = W * raw.adas_x - 2.72 * raw.adas_y + 1j * (g[:, None] * raw.a[None, :]
                                                           - raw.a.conj()[:, None] * g[None, :])
    np.testing.assert_allclose(d, expected, atol=1e-14)


@pytest.mark.parametrize("method", METHODS, ids=IDS)
@pytest.mark.parametrize("pulse", [NoDrive(), DRIVE], ids=["undriven", "driven"])
def test_against_reference(method, pulse, rng):
    n = 3
    p = _params(n, pulse)
    st_ = random_state(n, method.order, rng, scale=0.2)
    t = 1.3
    fast = rhs(st_, p, method, t)
    ref = reference_rhs(st_, p, method, t)
    scale = max(1.0, ref.max_abs())
    assert _diff(fast, ref) < 1e-8 * scale


@pytest.mark.parametrize("method", METHODS, ids=IDS)
def test_backends_agree(method, rng):
    n = 5
    p = _params(n, DRIVE)
    st_ = random_state(n, method.order, rng, scale=0.2)
    y = st_.to_vector()
    out = {}
    for backend in ("numba", "numpy"):
        k = RhsKernel(p, method, n, backend=backend)
        dy = np.zeros_like(y)
        k(0.7, y, dy)
        out[backend] = dy
    assert np.max(np.abs(out["numba"] - out["numpy"])) < 1e-13 * max(1, np.max(np.abs(out["numpy"])))


@pytest.mark.parametrize("method", METHODS, ids=IDS)
def test_rhs_is_deterministic(method, rng):
    p = _params(6, DRIVE)
    st_ = random_state(6, method.order, rng, scale=0.2)
    d1 = rhs(st_, p, method, 0.4).to_vector()
    d2 = rhs(st_, p, method, 0.4).to_vector()
    assert np.array_equal(d1, d2)


@given(st.sampled_from(METHODS), st.integers(1, 5), st.integers(0, 2**32 - 1), st.booleans())
def test_derivative_symmetries(method, n, seed, driven):
    rng = np.random.default_rng(seed)
    p = _params(n, DRIVE if driven else NoDrive(), seed)
    st_ = random_state(n, method.order, rng, scale=0.3)
    d = rhs(st_, p, method, 0.9)
    assert symmetry_residual(d) < 1e-12
    # real quantities stay real
    assert d.pauli.dtype == np.float64 and np.all(np.isfinite(d.pauli))


@given(st.integers(0, 2**32 - 1))
def test_pauli_rates_real(seed):
    rng = np.random.default_rng(seed)
    n = 3
    p = _params(n, DRIVE)
    raw = to_expectations(random_state(n, Order.ORDER2, rng))
    r = expectation_rates(
        {"s": raw.pauli, "ads": raw.ads}, {}, 2.72, p.modes.omega, p.modes.g, 0.1, ("pauli",)
    )["pauli"]
    assert np.max(np.abs(np.imag(r))) < 1e-14


@given(st.integers(0, 2**32 - 1))
def test_zero_expectation_rhs_is_linear(seed):
    rng = np.random.default_rng(seed)
    n = 4
    p = _params(n, DRIVE)
    s1 = to_expectations(random_state(n, Order.ORDER2, rng))
    s2 = to_expectations(random_state(n, Order.ORDER2, rng))
    lhs = raw_rhs_zero_expectation(s1 + s2, p, 0.5)
    rsum = raw_rhs_zero_expectation(s1, p, 0.5) + raw_rhs_zero_expectation(s2, p, 0.5)
    # the s-independent source i g_n in <a^+ s^x> is counted twice on the right
    zero = raw_rhs_zero_expectation(MomentState.zeros(n, Order.ORDER2, "expectation"), p, 0.5)
    assert _diff(lhs + zero, rsum) < 1e-12
    assert _diff(raw_rhs_zero_expectation(2.0 * s1, p, 0.5) + zero,
                 2.0 * raw_rhs_zero_expectation(s1, p, 0.5)) < 1e-12


def test_zero_expectation_cumulant_form_matches_raw_form(rng):
    n = 4
    p = _params(n, DRIVE)
    st_ = random_state(n, Order.ORDER2, rng, 0.2)
    d = rhs(st_, p, Method(Order.ORDER2, Closure.ZERO_EXPECTATION), 0.5)
    raw = to_expectations(st_)
    draw = raw_rhs_zero_expectation(raw, p, 0.5)
    eps = 1e-6
    fd = (1 / (2 * eps)) * (from_expectations(raw + eps * draw) - from_expectations(raw - eps * draw))
    assert _diff(d, fd) < 1e-8


def test_zero_cumulant_rhs_is_nonlinear(rng):
    n = 4
    p = _params(n, DRIVE)
    m = Method()
    s1 = random_state(n, Order.ORDER2, rng)
    s2 = random_state(n, Order.ORDER2, rng)
    zero = MomentState.zeros(n, Order.ORDER2)
    lhs = rhs(s1 + s2, p, m, 0.5) + rhs(zero, p, m, 0.5)
    rsum = rhs(s1, p, m, 0.5) + rhs(s2, p, m, 0.5)
    assert _diff(lhs, rsum) > 1e-3


def test_order3_reduces_to_order2(rng):
    n = 5
    p = _params(n, DRIVE)
    s2 = random_state(n, Order.ORDER2, rng)
    s3 = MomentState.zeros(n, Order.ORDER3)
    for name, arr in s2.blocks():
        getattr(s3, name)[...] = arr
    d2 = rhs(s2, p, Method(Order.ORDER2), 0.3)
    d3 = rhs(s3, p, Method(Order.ORDER3), 0.3)
    for name, arr in d2.blocks():
        np.testing.assert_allclose(getattr(d3, name), arr, atol=1e-13, err_msg=name)


def _printed_second_order(st_, p, F):
    """Correlation equations for <a^+ s^i>_c, <a^+ a>_c, <a^+ a^+>_c as printed
    (with the sign of the <s^x><s^y> term in the s^y equation corrected)."""
    w, g, W0 = np.asarray(p.modes.omega), np.asarray(p.modes.g), p.omega0
    sx, sy, sz = st_.pauli
    a = st_.a
    cx, cy, cz = st_.ads
    bath = np.sum(g * (a.conj() + a))
    dx = 1j * w * cx - W0 * cy + 1j * g * (1 - sx * sx)
    dy = (1j * w * cy + W0 * cx - g * (sz + 1j * sx * sy) + 2 * F * cz
          - 2 * (bath * cz + sz * (st_.add @ g + st_.ada @ g)))
    dz = (1j * w * cz + g * (sy - 1j * sx * sz) - 2 * F * cy
          + 2 * (bath * cy + sy * (st_.add @ g + st_.ada @ g)))
    dada = 1j * (w[:, None] - w[None, :]) * st_.ada + 1j * (g[:, None] * cx.conj()[None, :]
                                                            - cx[:, None] * g[None, :])
    dadd = 1j * (w[:, None] + w[None, :]) * st_.add + 1j * (g[:, None] * cx[None, :]
                                                            + cx[:, None] * g[None, :])
    return np.array([dx, dy, dz]), dada, dadd


@pytest.mark.parametrize("pulse", [NoDrive(), DRIVE], ids=["undriven", "driven"])
def test_printed_second_order_correlation_equations(pulse, rng):
    n = 4
    p = _params(n, pulse)
    st_ = random_state(n, Order.ORDER2, rng)
    t = 1.1
    d = rhs(st_, p, Method(), t)
    dads, dada, dadd = _printed_second_order(st_, p, drive_scalar(p, t))
    np.testing.assert_allclose(d.ads, dads, atol=1e-12)
    np.testing.assert_allclose(d.ada, dada, atol=1e-12)
    np.testing.assert_allclose(d.add, dadd, atol=1e-12)


def test_printed_sy_sign_is_wrong(rng):
    # guards the sign correction: the literal printed sign disagrees
    n = 3
    p = _params(n)
    st_ = random_state(n, Order.ORDER2, rng)
    d = rhs(st_, p, Method(), 0.0)
    sx, sy, _ = st_.pauli
    literal = _printed_second_order(st_, p, 0.0)[0][1] + 2j * np.asarray(p.modes.g) * sx * sy
    assert np.max(np.abs(d.ads[1] - literal)) > 1e-3


def test_printed_2plus1a_equation(rng):
    n = 4
    p = _params(n)
    st_ = random_state(n, Order.ORDER2_1A, rng)
    st_.a[:] = 0
    d = rhs(st_, p, Method(Order.ORDER2_1A), 0.0)
    w, g = np.asarray(p.modes.omega), np.asarray(p.modes.g)
    sx, _, sz = st_.pauli
    cx, cy, cz = st_.ads
    cyc = cy.conj()
    gn, gm = g[:, None], g[None, :]
    expected = (
        gn * (cyc - 1j * sx * cz.conj() - 1j * sz * cx.conj())[None, :]
        + gm * (cy + 1j * sx * cz + 1j * sz * cx)[:, None]
        + 1j * (w[:, None] - w[None, :]) * st_.adas_z
        + 2 * (
            (g @ st_.add)[:, None] * cyc[None, :]
            + (g @ st_.ada)[None, :] * cy[:, None]
            + (st_.ada @ g)[:, None] * cyc[None, :]
            + (st_.add.conj() @ g)[None, :] * cy[:, None]
        )
    )
    np.testing.assert_allclose(d.adas_z, expected, atol=1e-12)


def test_2plus1b_differs_from_2plus1a(rng):
    n = 4
    p = _params(n)
    st_ = random_state(n, Order.ORDER2_1A, rng)
    da = rhs(st_, p, Method(Order.ORDER2_1A), 0.0)
    st_.order = Order.ORDER2_1B
    db = rhs(st_, p, Method(Order.ORDER2_1B), 0.0)
    np.testing.assert_array_equal(da.ada, db.ada)
    assert np.max(np.abs(da.adas_z - db.adas_z)) > 1e-3


def test_input_validation(rng):
    p = _params(3)
    st_ = random_state(3, Order.ORDER2, rng)
    with pytest.raises(ShapeMismatch):
        rhs(st_, p, Method(Order.ORDER3), 0.0)
    with pytest.raises(ShapeMismatch):
        rhs(random_state(2, Order.ORDER2, rng), p, Method(), 0.0)
    st_.ada[0, 0] = np.nan
    with pytest.raises(NonFiniteInput):
        rhs(st_, p, Method(), 0.0)
    with pytest.raises(ValueError):
        Method(Order.ORDER3, Closure.ZERO_EXPECTATION)
    with pytest.raises(ValueError):
        SystemParams(-1.0, p.modes)
    with pytest.raises(ValueError):
        RhsKernel(_params(3, DRIVE), Method(Order.ORDER3), 3, even_only=True)


def test_method_labels():
    assert [m.label for m in METHODS] == ["MF", "2", "2+1a", "2+1b", "3", "2e"]
    assert Method("2+1a").order is Order.ORDER2_1A


def test_drive_scalar():
    p = _params(2, DRIVE)
    assert drive_scalar(p, 1.0) == pytest.approx(0.15 * np.sin(2.72))
    assert drive_scalar(_params(2), 1.0) == 0.0
