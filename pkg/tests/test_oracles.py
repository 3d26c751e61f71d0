import numpy as np
import pytest

from cumulant_qed import oracles
from cumulant_qed.drive import Gaussian, NoDrive
from cumulant_qed.eom import expectation_rates
from cumulant_qed.spectral import FreeSpace, Lorentzian, custom_modes, discretize
from cumulant_qed.units import time_to_natural


def test_single_excitation_uncoupled():
    modes = custom_modes([2.0, 3.0], [0.0, 0.0])
    r = oracles.single_excitation_exact(modes, 2.72, 50.0, 1.0)
    np.testing.assert_allclose(r.population, 1.0, atol=1e-14)


def test_single_excitation_norm():
    modes = discretize(Lorentzian(0.024, 0.027, 2.72), 2.04, 3.40, 300)
    r = oracles.single_excitation_exact(modes, 2.72, 1000.0, 1.0)
    assert np.max(np.abs(r.extra["norm"] - 1)) < 1e-8
    np.testing.assert_allclose(r.population + r.photon_number, 1.0, atol=1e-8)


def test_ww_exponential():
    J = 2.277e-3
    tau = 1 / (2 * np.pi * J)
    r = oracles.ww_exponential(J, 2 * tau, tau)
    assert r.population[0] == 1.0
    assert r.population[1] == pytest.approx(np.exp(-1), rel=1e-12)


def test_ww_matches_free_space_single_excitation():
    modes = discretize(FreeSpace(2565), 0.0, 5.44, 400)
    t_rec = modes.recurrence_time()
    t_end = 0.9 * t_rec
    se = oracles.single_excitation_exact(modes, 2.72, t_end, 1.0)
    ww = oracles.ww_exponential(FreeSpace(2565)(2.72), t_end, 1.0)
    assert np.max(np.abs(se.population - ww.population)) < 0.02


def test_semiclassical_without_field():
    r = oracles.semiclassical_tls(2.72, Gaussian(0.0, 10.0, 3.0, 2.72), 50.0, 1.0)
    np.testing.assert_array_equal(r.population, 0.0)


def test_semiclassical_pi_pulse_inverts():
    T = 40.0
    # the resonant Rabi frequency of -F(t) s^x is muE0 * envelope
    muE0 = np.pi / (T * np.sqrt(2 * np.pi))
    r = oracles.semiclassical_tls(2.72, Gaussian(muE0, 200.0, T, 2.72), 400.0, 1.0)
    assert r.population[-1] > 0.99
    assert np.max(np.abs(r.extra["norm"] - 1)) < 1e-9
    # twice that area returns the emitter to the ground state
    r2 = oracles.semiclassical_tls(2.72, Gaussian(2 * muE0, 200.0, T, 2.72), 400.0, 1.0)
    assert r2.population[-1] < 0.01


def test_lindblad_invariants():
    r = oracles.lindblad_rabi(0.086, 0.027, 2.72, 2.72, t_end=200.0, dt_out=1.0, n_max=4)
    assert np.max(np.abs(r.extra["trace"] - 1)) < 1e-8
    assert np.max(r.extra["hermiticity"]) < 1e-8
    assert np.min(r.extra["min_population"]) > -1e-8
    assert r.population[0] == 1.0


def test_lindblad_decoupled_matches_semiclassical():
    pulse = Gaussian(0.1, 40.0, 10.0, 2.72)
    lr = oracles.lindblad_rabi(0.0, 0.0, 2.72, 2.72, pulse, initial="ground", t_end=100.0, dt_out=1.0)
    tls = oracles.semiclassical_tls(2.72, pulse, 100.0, 1.0)
    assert np.max(np.abs(lr.population - tls.population)) < 1e-8
    assert lr.population.max() > 0.1


@pytest.mark.parametrize("g, lo, hi, n", [(0.008, 2.04, 3.40, 400), (0.002, 1.36, 4.08, 1600)])
def test_lindblad_agrees_with_single_excitation_for_weak_coupling(g, lo, hi, n):
    gamma = 0.027
    modes = discretize(Lorentzian(g, gamma, 2.72), lo, hi, n)
    t_end = 0.9 * modes.recurrence_time()
    se = oracles.single_excitation_exact(modes, 2.72, t_end, 2.0)
    lr = oracles.lindblad_rabi(g, gamma, 2.72, 2.72, t_end=t_end, dt_out=2.0)
    assert np.max(np.abs(se.population - lr.population)) < 1e-3


def test_lindblad_cutoff_check():
    with pytest.raises(oracles.FockCutoffNotConverged):
        oracles.lindblad_rabi(0.086, 0.027, 2.72, 2.72, Gaussian(0.5, 30.0, 10.0, 2.72),
                              n_max=1, initial="ground", t_end=60.0, dt_out=1.0)
    with pytest.raises(ValueError):
        oracles.lindblad_rabi(0.01, 0.01, 2.72, 2.72, initial="sideways")


def test_residual_uncoupled_is_zero():
    modes = custom_modes([2.5, 2.9], [0.0, 0.0])
    res = oracles.rhs_residual(modes, 2.72, 3, [0.5, 1.0])
    # five-point stencil error for the fastest (W0) oscillation: h^4 W0^5 / 30
    assert max(res.values()) < 1e-2**4 * 2.72**5 / 30


def test_residual_gate():
    modes = custom_modes([2.5, 2.9], [0.05, 0.05])
    res = oracles.rhs_residual(modes, 2.72, 3, [0.5, 1.0, 2.0])
    assert set(res) == set(oracles.RESIDUAL_FAMILIES)
    for name, value in res.items():
        assert value < 1e-6, name


def test_residual_gate_driven_with_photons():
    modes = custom_modes([2.5, 2.9], [0.05, 0.04])
    system = oracles.DenseSystem(modes, 2.72, 4)
    psi0 = system.product_state((0.3, 0.5, -0.4), [0.12 - 0.05j, 0.04 + 0.1j])
    res = oracles.rhs_residual(modes, 2.72, 4, [0.6, 1.2], pulse=Gaussian(0.05, 1.0, 0.8, 2.72),
                               psi0=psi0)
    assert max(res.values()) < 1e-6


def test_dropping_conjugate_partner_is_detected():
    def broken(raw, contr, omega0, omega, g, F, blocks):
        out = expectation_rates(raw, contr, omega0, omega, g, F, blocks)
        # keep only <a^+ s^z> in the s^y equation, as printed
        out["pauli"][1] += 2 * np.real(g @ raw["ads"][2])
        return out

    modes = custom_modes([2.5, 2.9], [0.05, 0.05])
    res = oracles.rhs_residual(modes, 2.72, 3, [0.5, 1.0, 2.0], rates=broken)
    assert res["pauli"] > 1e-3


def test_residual_detects_small_cutoff():
    modes = custom_modes([2.5, 2.9], [0.05, 0.05])
    system = oracles.DenseSystem(modes, 2.72, 1)
    psi0 = system.product_state((0.0, 0.0, 1.0), [0.3, 0.3])
    with pytest.raises(oracles.CutoffTooSmall):
        oracles.rhs_residual(modes, 2.72, 1, [0.5], psi0=psi0)


def test_residual_limits():
    with pytest.raises(ValueError):
        oracles.rhs_residual(custom_modes([1, 2, 3, 4], [0.1] * 4), 2.72, 2, [0.5])
