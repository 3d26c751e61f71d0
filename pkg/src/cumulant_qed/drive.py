"""Classical driving field at the emitter, entering only as mu*E(t)."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoDrive:
    def mu_field(self, t):
        return 0.0


@dataclass(frozen=True)
class _Pulse:
    muE0: float
    t0: float
    T: float
    omega_L: float

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("pulse width T must be positive")
        if self.muE0 < 0:
            raise ValueError("muE0 must be non-negative")


@dataclass(frozen=True)
class Gaussian(_Pulse):
    """muE0 * exp(-(t-t0)^2 / 2T^2) * sin(omega_L t)."""

    def envelope(self, t):
        return np.exp(-((t - self.t0) ** 2) / (2 * self.T**2))

    def mu_field(self, t):
        return self.muE0 * self.envelope(t) * np.sin(self.omega_L * t)


@dataclass(frozen=True)
class TurnOn(_Pulse):
    """Gaussian rise up to t0, constant amplitude afterwards."""

    def envelope(self, t):
        if np.ndim(t):
            t = np.asarray(t, dtype=float)
            return np.where(t < self.t0, np.exp(-((t - self.t0) ** 2) / (2 * self.T**2)), 1.0)
        if t < self.t0:
            return np.exp(-((t - self.t0) ** 2) / (2 * self.T**2))
        return 1.0

    def mu_field(self, t):
        return self.muE0 * self.envelope(t) * np.sin(self.omega_L * t)


def mu_field(pulse, t):
    return pulse.mu_field(t)


def displaced_amplitudes(modes, alpha0, t):
    """Free evolution alpha_n(t) = alpha_n(0) exp(-i omega_n t) of the classical field."""
    alpha0 = np.asarray(alpha0, dtype=complex)
    if alpha0.shape != modes.omega.shape:
        raise ValueError(
            f"alpha0 has length {alpha0.size}, expected {modes.omega.size}"
        )
    return alpha0 * np.exp(-1j * modes.omega * t)
