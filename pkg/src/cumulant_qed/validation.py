"""Built-in consistency suites (``cumulant-qed validate``).

residual   equations of motion against finite differences of an exact state
oracles    reference solvers: norm and trace conservation, mutual agreement
symmetry   block Hermiticity/symmetry along short runs of every method
"""

from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .drive import Gaussian, NoDrive
from .eom import Closure, Method, SystemParams, expectation_rates
from .integrator import IntegratorConfig, integrate
from .moments import Order, init, random_state, symmetry_residual
from .spectral import Lorentzian, custom_modes, discretize


@dataclass
class Check:
    suite: str
    name: str
    value: float
    limit: float

    @property
    def passed(self):
        return bool(self.value < self.limit)


@dataclass
class Report:
    checks: list = field(default_factory=list)

    def add(self, suite, name, value, limit):
        self.checks.append(Check(suite, name, float(value), float(limit)))

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def lines(self):
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            yield f"{status} [{c.suite}] {c.name}: {c.value:.3g} (limit {c.limit:g})"
        yield f"{'PASS' if self.passed else 'FAIL'}: {sum(c.passed for c in self.checks)}/{len(self.checks)} checks"


def residual_suite(report, rates=expectation_rates):
    """Every equation family against the exact two-mode dynamics (cutoff 3 and 4)."""
    modes = custom_modes([2.5, 2.9], [0.05, 0.04])
    res = oracles.rhs_residual(modes, 2.72, 3, [0.5, 1.0, 2.0], rates=rates)
    for name, value in res.items():
        report.add("residual", f"{name}, undriven, cutoff 3", value, 1e-6)
    system = oracles.DenseSystem(modes, 2.72, 4)
    psi0 = system.product_state((0.3, 0.5, -0.4), [0.12 - 0.05j, 0.04 + 0.1j])
    pulse = Gaussian(0.05, 1.0, 0.8, 2.72)
    res = oracles.rhs_residual(modes, 2.72, 4, [0.6, 1.2], pulse=pulse, psi0=psi0, rates=rates)
    report.add("residual", "all families, driven, photons, cutoff 4", max(res.values()), 1e-6)


def oracle_suite(report):
    t_end, dt = 60.0, 1.0
    lr = oracles.lindblad_rabi(0.024, 0.027, 2.72, 2.72, t_end=t_end, dt_out=dt)
    report.add("oracles", "lindblad trace drift", np.max(np.abs(lr.extra["trace"] - 1)), 1e-8)
    report.add("oracles", "lindblad hermiticity", np.max(lr.extra["hermiticity"]), 1e-8)
    report.add("oracles", "lindblad negative populations", max(0.0, -np.min(lr.extra["min_population"])), 1e-8)
    modes = discretize(Lorentzian(0.008, 0.027, 2.72), 2.04, 3.40, 200)
    se = oracles.single_excitation_exact(modes, 2.72, t_end, dt)
    report.add("oracles", "single-excitation norm drift", np.max(np.abs(se.extra["norm"] - 1)), 1e-8)
    pulse = Gaussian(0.05, 30.0, 8.0, 2.72)
    free = oracles.lindblad_rabi(0.0, 0.0, 2.72, 2.72, pulse, initial="ground", t_end=t_end, dt_out=dt)
    tls = oracles.semiclassical_tls(2.72, pulse, t_end, dt)
    report.add("oracles", "decoupled lindblad vs semiclassical", np.max(np.abs(free.population - tls.population)), 1e-8)
    report.add("oracles", "semiclassical norm drift", np.max(np.abs(tls.extra["norm"] - 1)), 1e-10)


def symmetry_suite(report):
    rng = np.random.default_rng(7)
    modes = custom_modes(np.linspace(2.4, 3.0, 5), rng.uniform(0.01, 0.03, 5))
    params = SystemParams(2.72, modes, Gaussian(0.05, 10.0, 4.0, 2.72))
    cfg = IntegratorConfig(t_end=20.0, dt_out=1.0)
    methods = [Method(o) for o in Order] + [Method(Order.ORDER2, Closure.ZERO_EXPECTATION)]
    for m in methods:
        traj = integrate(init("ground", modes, m.order), params, m, cfg)
        report.add("symmetry", f"method {m.label}, final block symmetry", symmetry_residual(traj.final_state), 1e-10)
    for m in methods:
        if m.order is Order.MF:
            continue
        st = random_state(5, m.order, rng, 0.1)
        traj = integrate(st, SystemParams(2.72, modes, NoDrive()), m, IntegratorConfig(t_end=5.0, dt_out=1.0))
        report.add("symmetry", f"method {m.label}, random start", symmetry_residual(traj.final_state), 1e-10)


SUITES = {"residual": residual_suite, "oracles": oracle_suite, "symmetry": symmetry_suite}


def run_suites(names, rates=expectation_rates):
    report = Report()
    for name in names:
        if name == "residual":
            residual_suite(report, rates)
        else:
            SUITES[name](report)
    return report
