"""Ready-made run configurations for the standard benchmark systems.

Each function returns a plain config dict in the format read by the command
line tool (see :mod:`cumulant_qed.cli`), so a scenario can be dumped to JSON,
edited and rerun.
"""

import copy

OMEGA0 = 2.72  # eV, emitter and cavity resonance
FREE_SPACE_MU = 2565.0  # Debye, gives a 46 fs lifetime
WEAK_MU = 2.56  # Debye, molecular dipole used with the driving pulses
DRIVE_AMPLITUDES = (0.026, 0.132, 0.263)  # muE0 in eV
PULSE_T0_FS = 77.76
PULSE_T_FS = 24.20
CAVITY_GAMMA = 0.027  # eV
CAVITY_COUPLINGS = (0.008, 0.024, 0.086)  # eV

DEFAULTS = {
    "system": {"omega0_eV": OMEGA0, "mu_debye": None, "initial": "excited"},
    "spectral": {
        "type": "lorentzian",
        "params": {"g_eV": 0.008, "gamma_eV": CAVITY_GAMMA, "omega_c_eV": OMEGA0},
        "omega_min_eV": 2.04,
        "omega_max_eV": 3.40,
        "n_modes": 400,
    },
    "drive": {
        "type": "none",
        "muE0_eV": None,
        "mu_debye": None,
        "E0_V_per_A": None,
        "t0_fs": PULSE_T0_FS,
        "T_fs": PULSE_T_FS,
        "omega_L_eV": OMEGA0,
    },
    "method": {"order": "2", "closure": "zero_cumulant"},
    "integrator": {
        "rtol": 1e-8,
        "atol": 1e-10,
        "t_end_fs": 600.0,
        "dt_out_fs": 1.0,
        "max_steps": 100_000_000,
        "blowup_threshold": 1e3,
        "scheme": "dop853",
    },
    "oracle": {"enabled": [], "n_max": 2},
    "output": {"path": "trajectory.csv", "per_mode": False},
}


def defaults():
    return copy.deepcopy(DEFAULTS)


def _with(cfg, **sections):
    for name, values in sections.items():
        cfg[name].update(values)
    return cfg


def free_space(order="2", n_modes=400, t_end_fs=150.0):
    """Spontaneous emission into free space (tau about 46 fs)."""
    return _with(
        defaults(),
        spectral={
            "type": "free_space",
            "params": {"mu_debye": FREE_SPACE_MU},
            "omega_min_eV": 0.0,
            "omega_max_eV": 5.44,
            "n_modes": n_modes,
        },
        method={"order": order},
        integrator={"t_end_fs": t_end_fs},
        oracle={"enabled": ["ww", "single_excitation"]},
    )


def driven_free_space(muE0, order="2", n_modes=400, t_end_fs=150.0):
    """Weak molecular dipole in free space driven by a resonant Gaussian pulse."""
    return _with(
        defaults(),
        system={"initial": "ground"},
        spectral={
            "type": "free_space",
            "params": {"mu_debye": WEAK_MU},
            "omega_min_eV": 0.0,
            "omega_max_eV": 5.44,
            "n_modes": n_modes,
        },
        drive={"type": "gaussian", "muE0_eV": muE0},
        method={"order": order},
        integrator={"t_end_fs": t_end_fs},
        oracle={"enabled": ["semiclassical"]},
    )


def cavity(g, order="2", n_modes=400, t_end_fs=600.0, half_width_eV=0.68):
    """Spontaneous emission into a Lorentzian cavity mode centred on the emitter."""
    return _with(
        defaults(),
        spectral={
            "params": {"g_eV": g, "gamma_eV": CAVITY_GAMMA, "omega_c_eV": OMEGA0},
            "omega_min_eV": OMEGA0 - half_width_eV,
            "omega_max_eV": OMEGA0 + half_width_eV,
            "n_modes": n_modes,
        },
        method={"order": order},
        integrator={"t_end_fs": t_end_fs},
        oracle={"enabled": ["lindblad"]},
    )


def driven_cavity(g, muE0, pulse="gaussian", order="2", n_modes=400, t_end_fs=600.0,
                  half_width_eV=0.68, n_max=4):
    """Emitter in a Lorentzian cavity, starting in the ground state, driven resonantly.

    ``pulse`` is "gaussian" (short pulse) or "turn_on" (semi-infinite pulse).
    """
    cfg = cavity(g, order, n_modes, t_end_fs, half_width_eV)
    return _with(
        cfg,
        system={"initial": "ground"},
        drive={"type": pulse, "muE0_eV": muE0},
        oracle={"enabled": ["lindblad"], "n_max": n_max},
    )
