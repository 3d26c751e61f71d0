"""Spontaneous emission of a strongly dipolar emitter into free space.

Mean field predicts no decay at all; second order gives the exponential
decay with the Wigner-Weisskopf lifetime (about 46 fs).  Writes
free_space_emission.csv next to this script.
"""

from pathlib import Path

import numpy as np

from cumulant_qed import FreeSpace, IntegratorConfig, Method, Order, SystemParams, discretize, init, integrate
from cumulant_qed.oracles import single_excitation_exact, ww_exponential
from cumulant_qed.units import free_space_lifetime, time_to_fs, time_to_natural

MU, OMEGA0 = 2565.0, 2.72

sd = FreeSpace(MU)
modes = discretize(sd, 0.0, 5.44, 400)
params = SystemParams(OMEGA0, modes)
cfg = IntegratorConfig(t_end=time_to_natural(150.0), dt_out=time_to_natural(1.0))

columns = {}
for order in (Order.MF, Order.ORDER2):
    traj = integrate(init("excited", modes, order), params, Method(order), cfg)
    columns[order.value] = traj.population
times = traj.times
columns["ww"] = ww_exponential(sd(OMEGA0), cfg.t_end, cfg.dt_out).population
columns["single_excitation"] = single_excitation_exact(modes, OMEGA0, cfg.t_end, cfg.dt_out).population

pop = columns["2"]
fit = np.polyfit(times, np.log(pop), 1)
print(f"Markovian lifetime   {free_space_lifetime(MU, OMEGA0):6.2f} fs")
print(f"fitted (2nd order)   {time_to_fs(-1 / fit[0]):6.2f} fs")
print(f"mean field at 150 fs {columns['MF'][-1]:.12f}")

out = Path(__file__).with_suffix(".csv")
header = "t_fs," + ",".join(columns)
np.savetxt(out, np.column_stack([time_to_fs(times)] + list(columns.values())),
           delimiter=",", header=header, comments="")
print(f"wrote {out}")
