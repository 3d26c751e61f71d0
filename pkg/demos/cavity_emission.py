"""Excited emitter in a lossy cavity: truncation levels against the Rabi model.

For each coupling the second-order, 2+1a and 2+1b truncations are compared
with the dissipative Rabi model.  Second order undershoots to negative
populations, 2+1a overshoots, 2+1b follows the exact curve.
Usage: python cavity_emission.py [g_eV ...]
"""

import sys
from pathlib import Path

import numpy as np

from cumulant_qed import IntegratorConfig, Lorentzian, Method, SystemParams, discretize, init, integrate
from cumulant_qed.oracles import lindblad_rabi
from cumulant_qed.units import time_to_fs, time_to_natural

OMEGA0, GAMMA = 2.72, 0.027
couplings = [float(x) for x in sys.argv[1:]] or [0.008, 0.024, 0.086]

for g in couplings:
    modes = discretize(Lorentzian(g, GAMMA, OMEGA0), 2.04, 3.40, 400)
    params = SystemParams(OMEGA0, modes)
    cfg = IntegratorConfig(t_end=time_to_natural(600.0), dt_out=time_to_natural(1.0), rtol=1e-6, atol=1e-7)
    cols = {}
    for label in ("2", "2+1a", "2+1b"):
        m = Method(label)
        traj = integrate(init("excited", modes, m.order), params, m, cfg)
        cols[label] = traj.population
    rabi = lindblad_rabi(g, GAMMA, OMEGA0, OMEGA0, n_max=3, t_end=cfg.t_end, dt_out=cfg.dt_out)
    cols["rabi"] = rabi.population
    print(f"g = {g} eV")
    for label, pop in cols.items():
        err = np.max(np.abs(pop - rabi.population))
        print(f"  {label:5s} min {pop.min():+.4f}  max |p - rabi| {err:.4f}")
    out = Path(__file__).with_name(f"cavity_emission_g{g:g}.csv")
    np.savetxt(out, np.column_stack([time_to_fs(traj.times)] + list(cols.values())),
               delimiter=",", header="t_fs," + ",".join(cols), comments="")
