"""Spectral densities and their discretization into bosonic modes."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .units import free_space_coefficient


class OutOfRange(ValueError):
    """Frequency outside the domain of a tabulated spectral density."""


@dataclass(frozen=True)
class FreeSpace:
    """Emitter with dipole ``mu`` (Debye) in vacuum; J grows as omega**3."""

    mu: float

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < 0):
            raise OutOfRange("omega must be non-negative")
        return free_space_coefficient(self.mu) * omega**3


@dataclass(frozen=True)
class Lorentzian:
    """Single lossy cavity mode: coupling ``g``, FWHM ``gamma``, centre ``omega_c`` (all eV).

    Integrates to g**2 over the real line.
    """

    g: float
    gamma: float
    omega_c: float

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < 0):
            raise OutOfRange("omega must be non-negative")
        hw = self.gamma / 2
        return self.g**2 / np.pi * hw / ((omega - self.omega_c) ** 2 + hw**2)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear spectral density through (omega, J) samples."""

    omega: tuple
    values: tuple

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        j = np.asarray(self.values, dtype=float)
        if w.ndim != 1 or w.shape != j.shape or w.size < 2:
            raise ValueError("need at least two (omega, J) pairs")
        if np.any(np.diff(w) <= 0):
            raise ValueError("tabulated frequencies must be strictly increasing")
        if np.any(j < 0) or np.any(w < 0):
            raise ValueError("tabulated omega and J must be non-negative")

    @classmethod
    def from_points(cls, points):
        pts = np.asarray(points, dtype=float)
        return cls(tuple(pts[:, 0]), tuple(pts[:, 1]))

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        w = np.asarray(self.omega)
        # small slack so midpoints computed from the table bounds still pass
        slack = 1e-12 * max(1.0, abs(w[-1]))
        if np.any(omega < w[0] - slack) or np.any(omega > w[-1] + slack):
            raise OutOfRange(
                f"omega outside tabulated range [{w[0]}, {w[-1]}] eV"
            )
        return np.interp(omega, w, np.asarray(self.values))


def load_table(path):
    """Read a two-column ``omega_eV J_eV`` text file ('#' comments allowed)."""
    rows = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
        rows.append((float(parts[0]), float(parts[1])))
    return Tabulated.from_points(rows)


def evaluate(sd, omega):
    """J(omega) in eV for any of the spectral-density models."""
    return sd(omega)


@dataclass(frozen=True)
class DiscreteModes:
    """Midpoint discretization of a spectral density on a regular grid."""

    omega: np.ndarray
    g: np.ndarray
    delta_omega: float
    omega_min: float
    omega_max: float

    @property
    def n_modes(self):
        return self.omega.size

    def recurrence_time(self):
        return recurrence_time(self)


def discretize(sd, omega_min, omega_max, n_modes):
    """Split [omega_min, omega_max] into ``n_modes`` bins and couple each at its midpoint."""
    if not omega_max > omega_min >= 0:
        raise ValueError("need omega_max > omega_min >= 0")
    if n_modes < 1:
        raise ValueError("need at least one mode")
    dw = (omega_max - omega_min) / n_modes
    omega = omega_min + (np.arange(n_modes) + 0.5) * dw
    g = np.sqrt(sd(omega) * dw)
    omega.setflags(write=False)
    g.setflags(write=False)
    return DiscreteModes(omega, g, dw, omega_min, omega_max)


def custom_modes(omega, g):
    """Modes with arbitrary frequencies/couplings (tests and tiny benchmark systems)."""
    omega = np.array(omega, dtype=float)
    g = np.array(g, dtype=float)
    if omega.shape != g.shape or omega.ndim != 1:
        raise ValueError("omega and g must be 1-d arrays of equal length")
    dw = float(np.min(np.diff(np.sort(omega)))) if omega.size > 1 else np.inf
    omega.setflags(write=False)
    g.setflags(write=False)
    return DiscreteModes(omega, g, dw, float(omega.min()), float(omega.max()))


def recurrence_time(modes):
    """Time 2*pi/delta_omega after which the discretized bath re-emits into the emitter."""
    return 2 * np.pi / modes.delta_omega
