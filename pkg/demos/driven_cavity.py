"""Emitter in a weakly coupled cavity (g = 8 meV) driven by a resonant laser.

Compares second and third order with the Rabi model for a short Gaussian
pulse and for a pulse that stays on.  Third order needs N^3 storage, so the
grid here is narrowed around the cavity line (see the README).
Usage: python driven_cavity.py [muE0_eV]
"""

import sys

import numpy as np

from cumulant_qed import (Gaussian, IntegratorConfig, Lorentzian, Method, SystemParams, TurnOn,
                          discretize, init, integrate)
from cumulant_qed.oracles import FockCutoffNotConverged, lindblad_rabi
from cumulant_qed.units import time_to_natural as fs

OMEGA0, G, GAMMA = 2.72, 0.008, 0.027
muE0 = float(sys.argv[1]) if len(sys.argv) > 1 else 0.132

for name, cls, t_end, n in (("short pulse", Gaussian, 300.0, 30), ("semi-infinite", TurnOn, 400.0, 40)):
    pulse = cls(muE0, fs(77.76), fs(24.20), OMEGA0)
    cfg = IntegratorConfig(t_end=fs(t_end), dt_out=fs(2.0), rtol=1e-6, atol=1e-7)
    for n_max in (4, 6, 8):  # strong driving needs more Fock levels
        try:
            rabi = lindblad_rabi(G, GAMMA, OMEGA0, OMEGA0, pulse, n_max=n_max, initial="ground",
                                 t_end=cfg.t_end, dt_out=cfg.dt_out, rtol=1e-8, atol=1e-10)
            break
        except FockCutoffNotConverged:
            continue
    print(f"{name}, muE0 = {muE0} eV")
    for label, modes in (("2", discretize(Lorentzian(G, GAMMA, OMEGA0), 2.04, 3.40, 400)),
                         ("3", discretize(Lorentzian(G, GAMMA, OMEGA0), 2.52, 2.92, n))):
        m = Method(label)
        traj = integrate(init("ground", modes, m.order), SystemParams(OMEGA0, modes, pulse), m, cfg)
        err = np.max(np.abs(traj.population - rabi.population))
        print(f"  order {label}: max |p - rabi| = {err:.4f}, final p = {traj.population[-1]:.4f} "
              f"(rabi {rabi.population[-1]:.4f})")
