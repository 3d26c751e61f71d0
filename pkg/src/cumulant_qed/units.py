"""Physical constants and unit conversions.

Dynamics run with hbar = 1, energies in eV and times in 1/eV.  Only the
front end speaks femtoseconds, Debye and V/Angstrom.
"""

import numpy as np
from scipy import constants as _c

HBAR_EVFS = 0.6582119569  # eV fs
DEBYE_TO_E_ANGSTROM = 0.2081943  # e Angstrom per Debye
EPSILON0 = _c.epsilon_0  # F/m
C_LIGHT = _c.c  # m/s
HBAR_SI = _c.hbar  # J s
ELEMENTARY_CHARGE = _c.e  # C
DEBYE_SI = 1e-21 / _c.c  # C m


def dipole_energy(mu, field):
    """Coupling energy mu*E in eV for a dipole in Debye and a field in V/Angstrom."""
    if mu < 0:
        raise ValueError("dipole moment must be non-negative")
    if not np.isfinite(field):
        raise ValueError("field must be finite")
    return mu * DEBYE_TO_E_ANGSTROM * field


def time_to_natural(t_fs):
    """fs -> 1/eV."""
    return t_fs / HBAR_EVFS


def time_to_fs(t_nat):
    """1/eV -> fs."""
    return t_nat * HBAR_EVFS


def free_space_coefficient(mu):
    """Prefactor C with J(omega) = C * omega**3 (omega and J in eV) for a dipole in Debye.

    Fixed so that the golden-rule rate 2*pi*J(omega0) equals the textbook
    free-space Einstein A coefficient omega^3 mu^2 / (3 pi eps0 hbar c^3).
    """
    mu_si = mu * DEBYE_SI
    omega_per_ev = ELEMENTARY_CHARGE / HBAR_SI  # rad/s per eV
    # rate(omega_eV) in 1/s, then J = hbar*rate/(2 pi) in eV
    rate_coeff = omega_per_ev**3 * mu_si**2 / (3 * np.pi * EPSILON0 * HBAR_SI * C_LIGHT**3)
    return HBAR_EVFS * 1e-15 * rate_coeff / (2 * np.pi)


def free_space_lifetime(mu, omega0):
    """Markovian spontaneous-emission lifetime in fs."""
    if mu <= 0 or omega0 <= 0:
        raise ValueError("mu and omega0 must be positive")
    j0 = free_space_coefficient(mu) * omega0**3
    return HBAR_EVFS / (2 * np.pi * j0)
