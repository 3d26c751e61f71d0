"""Strong coupling plus strong driving: the truncated hierarchies blow up.

With g = 86 meV and the strongest semi-infinite drive, 2+1a diverges shortly
after the pulse turns on; the run stops with a Diverged termination instead
of raising.
"""

from cumulant_qed import IntegratorConfig, Lorentzian, Method, SystemParams, TurnOn, discretize, init, integrate
from cumulant_qed.units import time_to_fs, time_to_natural as fs

modes = discretize(Lorentzian(0.086, 0.027, 2.72), 2.04, 3.40, 120)
params = SystemParams(2.72, modes, TurnOn(0.263, fs(77.76), fs(24.20), 2.72))
cfg = IntegratorConfig(t_end=fs(300.0), dt_out=fs(1.0), rtol=1e-6, atol=1e-7)
for label in ("2", "2+1a"):
    m = Method(label)
    traj = integrate(init("ground", modes, m.order), params, m, cfg)
    print(f"{label:5s} {traj.termination.value:10s} stopped at {time_to_fs(traj.t_stop):7.2f} fs, "
          f"last population {traj.population[-1]:+.3f}")
