"""Command-line front end: single runs, method comparisons, sweeps and self-checks.

Configurations are JSON files whose sections mirror ``config print-defaults``;
every key is optional, unknown keys are rejected.  Times are in fs and
energies in eV on this side; the library works in natural units.

Exit codes: 0 completed, 1 configuration error, 2 I/O error, 3 diverged,
4 step limit.
"""

import argparse
import copy
import datetime
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import oracles, scenarios, units
from .drive import Gaussian, NoDrive, TurnOn
from .eom import Closure, Method, SystemParams
from .integrator import SCHEMES, IntegratorConfig, Termination, integrate
from .moments import Order, init
from .spectral import FreeSpace, Lorentzian, discretize, evaluate, load_table

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGED, EXIT_STEP_LIMIT = 0, 1, 2, 3, 4

_SPECTRAL_PARAMS = {
    "free_space": {"mu_debye"},
    "lorentzian": {"g_eV", "gamma_eV", "omega_c_eV"},
    "tabulated": {"path"},
}
_DRIVES = ("none", "gaussian", "turn_on")
_ORACLES = ("lindblad", "semiclassical", "single_excitation", "ww")
_ORDER_ALIASES = {
    "mf": "MF", "2": "2", "order2": "2", "2+1a": "2+1a", "order2plus1a": "2+1a",
    "2+1b": "2+1b", "order2plus1b": "2+1b", "3": "3", "order3": "3",
}
_CLOSURE_ALIASES = {
    "zero_cumulant": "zero_cumulant", "zerocumulant": "zero_cumulant",
    "zero_expectation": "zero_expectation", "zeroexpectation": "zero_expectation",
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def merge_config(user, base=None):
    """Overlay ``user`` on the defaults; unknown keys raise ConfigError."""
    cfg = scenarios.defaults() if base is None else copy.deepcopy(base)
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    for section, values in user.items():
        if section not in cfg:
            raise ConfigError(f"unknown config section '{section}'")
        if not isinstance(values, dict):
            raise ConfigError(f"config section '{section}' must be an object")
        if section == "spectral" and values.get("type", cfg[section]["type"]) != cfg[section]["type"]:
            cfg[section]["params"] = {}  # defaults belong to the other spectral type
        for key, value in values.items():
            if key not in cfg[section]:
                raise ConfigError(f"unknown config key '{section}.{key}'")
            if section == "spectral" and key == "params":
                if not isinstance(value, dict):
                    raise ConfigError("'spectral.params' must be an object")
                cfg[section][key] = {**cfg[section][key], **value}
            else:
                cfg[section][key] = value
    check_config(cfg)
    return cfg


def load_config(path):
    """Read a JSON config file; relative table paths resolve against its directory."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")  # OSError propagates (exit 2)
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    cfg = merge_config(user)
    table = cfg["spectral"]["params"].get("path")
    if cfg["spectral"]["type"] == "tabulated" and table and not Path(table).is_absolute():
        cfg["spectral"]["params"]["path"] = str(path.parent / table)
    return cfg


def _number(cfg, dotted, positive=False, allow_none=False, minimum=None):
    section, key = dotted.split(".", 1)
    value = cfg[section]
    for part in key.split("."):
        value = value.get(part) if isinstance(value, dict) else None
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"'{dotted}' must be a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"'{dotted}' must be positive, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{dotted}' must be at least {minimum}, got {value!r}")
    return value


def parse_method(order, closure="zero_cumulant"):
    """Method from config strings; the label "2e" selects the zero-expectation closure."""
    if isinstance(order, str) and order.lower() == "2e":
        order, closure = "2", "zero_expectation"
    o = _ORDER_ALIASES.get(str(order).lower())
    if o is None:
        raise ConfigError(f"'method.order' must be one of MF, 2, 2+1a, 2+1b, 3; got {order!r}")
    c = _CLOSURE_ALIASES.get(str(closure).lower())
    if c is None:
        raise ConfigError(f"'method.closure' must be zero_cumulant or zero_expectation; got {closure!r}")
    try:
        return Method(Order(o), Closure(c))
    except ValueError as exc:
        raise ConfigError(f"'method.closure': {exc}") from None


def check_config(cfg):
    """Validate value types and ranges (keys are checked by merge_config)."""
    _number(cfg, "system.omega0_eV", positive=True)
    _number(cfg, "system.mu_debye", allow_none=True, minimum=0)
    if cfg["system"]["initial"] not in ("excited", "ground"):
        raise ConfigError("'system.initial' must be 'excited' or 'ground'")
    sp = cfg["spectral"]
    if sp["type"] not in _SPECTRAL_PARAMS:
        raise ConfigError(
            f"'spectral.type' must be one of {', '.join(_SPECTRAL_PARAMS)}; got {sp['type']!r}"
        )
    extra = set(sp["params"]) - _SPECTRAL_PARAMS[sp["type"]]
    if extra:
        raise ConfigError(f"unknown config key 'spectral.params.{sorted(extra)[0]}' for type {sp['type']}")
    if sp["type"] == "lorentzian":
        for k in ("g_eV", "gamma_eV", "omega_c_eV"):
            _number(cfg, f"spectral.params.{k}", minimum=0)
        _number(cfg, "spectral.params.gamma_eV", positive=True)
    elif sp["type"] == "free_space":
        if sp["params"].get("mu_debye") is None and cfg["system"]["mu_debye"] is None:
            raise ConfigError("'spectral.params.mu_debye' (or 'system.mu_debye') is required for free_space")
        _number(cfg, "spectral.params.mu_debye", allow_none=True, positive=True)
    elif not isinstance(sp["params"].get("path"), str):
        raise ConfigError("'spectral.params.path' must name a table file")
    lo = _number(cfg, "spectral.omega_min_eV", minimum=0)
    hi = _number(cfg, "spectral.omega_max_eV")
    if not hi > lo:
        raise ConfigError("'spectral.omega_max_eV' must exceed 'spectral.omega_min_eV'")
    n = sp["n_modes"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"'spectral.n_modes' must be a positive integer, got {n!r}")

    dr = cfg["drive"]
    if dr["type"] not in _DRIVES:
        raise ConfigError(f"'drive.type' must be one of {', '.join(_DRIVES)}; got {dr['type']!r}")
    if dr["type"] != "none":
        if dr["muE0_eV"] is None and dr["E0_V_per_A"] is None:
            raise ConfigError("'drive.muE0_eV' or 'drive.E0_V_per_A' is required for a pulse")
        if dr["muE0_eV"] is not None and dr["E0_V_per_A"] is not None:
            raise ConfigError("give either 'drive.muE0_eV' or 'drive.E0_V_per_A', not both")
        _number(cfg, "drive.muE0_eV", allow_none=True, minimum=0)
        _number(cfg, "drive.E0_V_per_A", allow_none=True)
        if dr["E0_V_per_A"] is not None and dr["mu_debye"] is None and cfg["system"]["mu_debye"] is None:
            raise ConfigError("'drive.E0_V_per_A' needs 'drive.mu_debye' or 'system.mu_debye'")
        _number(cfg, "drive.mu_debye", allow_none=True, minimum=0)
        _number(cfg, "drive.t0_fs")
        _number(cfg, "drive.T_fs", positive=True)
        _number(cfg, "drive.omega_L_eV", minimum=0)

    parse_method(cfg["method"]["order"], cfg["method"]["closure"])
    for k in ("rtol", "atol", "t_end_fs", "dt_out_fs", "blowup_threshold"):
        _number(cfg, f"integrator.{k}", positive=True)
    if cfg["integrator"]["scheme"] not in SCHEMES:
        raise ConfigError(f"'integrator.scheme' must be one of {', '.join(SCHEMES)}")
    steps = cfg["integrator"]["max_steps"]
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
        raise ConfigError(f"'integrator.max_steps' must be a positive integer, got {steps!r}")

    orc = cfg["oracle"]
    if not isinstance(orc["enabled"], list) or any(o not in _ORACLES for o in orc["enabled"]):
        raise ConfigError(f"'oracle.enabled' must be a list drawn from {', '.join(_ORACLES)}")
    if isinstance(orc["n_max"], bool) or not isinstance(orc["n_max"], int) or orc["n_max"] < 1:
        raise ConfigError("'oracle.n_max' must be a positive integer")
    if not isinstance(cfg["output"]["path"], str) or not cfg["output"]["path"]:
        raise ConfigError("'output.path' must be a file name")
    if not isinstance(cfg["output"]["per_mode"], bool):
        raise ConfigError("'output.per_mode' must be true or false")


@dataclass
class Setup:
    params: SystemParams
    method: Method
    integrator: IntegratorConfig
    initial: str
    spectral: object


def spectral_density(cfg):
    sp = cfg["spectral"]
    p = sp["params"]
    if sp["type"] == "free_space":
        mu = p.get("mu_debye")
        return FreeSpace(cfg["system"]["mu_debye"] if mu is None else mu)
    if sp["type"] == "lorentzian":
        return Lorentzian(p["g_eV"], p["gamma_eV"], p["omega_c_eV"])
    return load_table(p["path"])


def drive_pulse(cfg):
    dr = cfg["drive"]
    if dr["type"] == "none":
        return NoDrive()
    muE0 = dr["muE0_eV"]
    if muE0 is None:
        mu = dr["mu_debye"] if dr["mu_debye"] is not None else cfg["system"]["mu_debye"]
        muE0 = units.dipole_energy(mu, dr["E0_V_per_A"])
    cls = Gaussian if dr["type"] == "gaussian" else TurnOn
    return cls(muE0, units.time_to_natural(dr["t0_fs"]), units.time_to_natural(dr["T_fs"]), dr["omega_L_eV"])


def build(cfg, method=None):
    """Turn a validated config into the library objects of one run."""
    sd = spectral_density(cfg)
    sp = cfg["spectral"]
    try:
        modes = discretize(sd, sp["omega_min_eV"], sp["omega_max_eV"], sp["n_modes"])
    except ValueError as exc:
        raise ConfigError(f"'spectral': {exc}") from None
    params = SystemParams(cfg["system"]["omega0_eV"], modes, drive_pulse(cfg))
    if method is None:
        method = parse_method(cfg["method"]["order"], cfg["method"]["closure"])
    it = cfg["integrator"]
    icfg = IntegratorConfig(
        t_end=units.time_to_natural(it["t_end_fs"]),
        dt_out=units.time_to_natural(it["dt_out_fs"]),
        rtol=it["rtol"],
        atol=it["atol"],
        max_steps=it["max_steps"],
        blowup_threshold=it["blowup_threshold"],
        scheme=it["scheme"],
    )
    return Setup(params, method, icfg, cfg["system"]["initial"], sd)


def simulate(cfg, method=None):
    """Run the configured system; returns a Trajectory."""
    s = build(cfg, method)
    state0 = init(s.initial, s.params.modes, s.method.order)
    return integrate(state0, s.params, s.method, s.integrator, record_modes=cfg["output"]["per_mode"])


def run_oracle(name, cfg):
    """Reference solution on the run's sample grid; returns an OracleResult."""
    s = build(cfg)
    t_end, dt = s.integrator.t_end, s.integrator.dt_out
    omega0 = s.params.omega0
    if name == "semiclassical":
        if s.initial != "ground":
            raise ConfigError("the semiclassical oracle starts in the ground state ('system.initial')")
        return oracles.semiclassical_tls(omega0, s.params.pulse, t_end, dt)
    if name == "ww":
        return oracles.ww_exponential(float(evaluate(s.spectral, omega0)), t_end, dt)
    if name == "single_excitation":
        if s.initial != "excited" or not isinstance(s.params.pulse, NoDrive):
            raise ConfigError("the single-excitation oracle needs an excited, undriven emitter")
        return oracles.single_excitation_exact(s.params.modes, omega0, t_end, dt)
    if cfg["spectral"]["type"] != "lorentzian":
        raise ConfigError("the lindblad oracle needs 'spectral.type' = lorentzian")
    p = cfg["spectral"]["params"]
    return oracles.lindblad_rabi(
        p["g_eV"], p["gamma_eV"], p["omega_c_eV"], omega0, s.params.pulse,
        n_max=cfg["oracle"]["n_max"], initial=s.initial, t_end=t_end, dt_out=dt,
    )


# ---------------------------------------------------------------------------
# output


def _fmt(x):
    return repr(float(x))


def trajectory_rows(traj, per_mode=False):
    header = ["t_fs", "population", "sx", "sy", "sz", "photon_total"]
    occ = traj.mode_occupations if per_mode else None
    if occ is not None:
        header += [f"n{i}" for i in range(occ.shape[1])]
    rows = []
    for k, t in enumerate(traj.times):
        row = [units.time_to_fs(t), traj.population[k], *traj.pauli[k], traj.photon_total[k]]
        if occ is not None:
            row += list(occ[k])
        rows.append(row)
    return header, rows


def write_csv(path, header, rows):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def exit_code(termination):
    return {
        Termination.COMPLETED: EXIT_OK,
        Termination.DIVERGED: EXIT_DIVERGED,
        Termination.STEP_LIMIT: EXIT_STEP_LIMIT,
    }[termination]


def _oracle_path(path, name):
    p = Path(path)
    return p.with_name(f"{p.stem}.{name}{p.suffix or '.csv'}")


def _run_one(cfg, path):
    traj = simulate(cfg)
    write_csv(path, *trajectory_rows(traj, cfg["output"]["per_mode"]))
    return traj.termination, traj.t_stop


def cmd_run(cfg, out=None):
    path = out or cfg["output"]["path"]
    termination, t_stop = _run_one(cfg, path)
    for name in cfg["oracle"]["enabled"]:
        res = run_oracle(name, cfg)
        header = ["t_fs", "population"]
        cols = [units.time_to_fs(res.times), res.population]
        if res.photon_number is not None:
            header.append("photon_total")
            cols.append(res.photon_number)
        write_csv(_oracle_path(path, name), header, list(zip(*cols)))
    if termination is not Termination.COMPLETED:
        print(f"run stopped at t = {units.time_to_fs(t_stop):.3f} fs ({termination.value})", file=sys.stderr)
    return exit_code(termination)


def _population_series(cfg, label):
    traj = simulate(cfg, parse_method(label))
    return label, traj.population, traj.termination


def _map(fn, args, jobs):
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
        futures = [pool.submit(fn, *a) for a in args]
        return [f.result() for f in futures]


def cmd_compare(cfg, methods, oracle=None, out=None, jobs=1):
    """One population column per method (plus the oracle); prints max deviations."""
    if not methods:
        raise ConfigError("compare needs at least one method")
    labels = []
    for m in methods:
        parse_method(m)  # validate early
        labels.append(m)
    icfg = build(cfg).integrator
    times = icfg.sample_times()
    results = _map(_population_series, [(cfg, m) for m in labels], jobs)
    columns, worst = {}, EXIT_OK
    for label, pop, term in results:
        col = np.full(times.size, np.nan)
        col[: pop.size] = pop
        columns[label] = col
        worst = max(worst, exit_code(term))
    if oracle:
        if oracle not in _ORACLES:
            raise ConfigError(f"unknown oracle {oracle!r}; choose from {', '.join(_ORACLES)}")
        res = run_oracle(oracle, cfg)
        columns[oracle] = np.interp(times, res.times, res.population)
    header = ["t_fs"] + list(columns)
    rows = [[units.time_to_fs(t)] + [columns[c][k] for c in columns] for k, t in enumerate(times)]
    write_csv(out or cfg["output"]["path"], header, rows)
    names = list(columns)
    summary = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            both = np.isfinite(columns[a]) & np.isfinite(columns[b])
            dev = float(np.max(np.abs(columns[a][both] - columns[b][both]))) if both.any() else float("nan")
            summary[f"{a} vs {b}"] = dev
            print(f"max |{a} - {b}| = {dev:.6g}")
    return worst, summary


def _set_path(cfg, dotted, value):
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"unknown sweep axis '{dotted}'")
        node = node[p]
    if parts[-1] not in node and not (len(parts) == 3 and parts[:2] == ["spectral", "params"]):
        raise ConfigError(f"unknown sweep axis '{dotted}'")
    node[parts[-1]] = value


def _sweep_point(cfg, path):
    termination, t_stop = _run_one(cfg, path)
    return termination.value, units.time_to_fs(t_stop)


def cmd_sweep(cfg, axis, values, out_dir, jobs=1):
    if not values:
        raise ConfigError("sweep needs at least one value")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    configs, files = [], []
    for i, v in enumerate(values):
        c = copy.deepcopy(cfg)
        _set_path(c, axis, v)
        check_config(c)
        configs.append(c)
        files.append(f"run_{i:03d}.csv")
    results = _map(_sweep_point, [(c, out_dir / f) for c, f in zip(configs, files)], jobs)
    manifest = {
        "axis": axis,
        "runs": [
            {"value": v, "file": f, "termination": term, "t_stop_fs": t}
            for v, f, (term, t) in zip(values, files, results)
        ],
        "base_config": cfg,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    codes = [exit_code(Termination(term)) for term, _ in results]
    return max(codes)


def default_jobs():
    raw = os.environ.get("CUMULANT_QED_JOBS")
    if raw is None:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ConfigError(f"CUMULANT_QED_JOBS must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise ConfigError("CUMULANT_QED_JOBS must be at least 1")
    return jobs


# ---------------------------------------------------------------------------
# entry point


def _parser():
    p = argparse.ArgumentParser(prog="cumulant-qed", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one configuration and write a CSV")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="CSV path (overrides output.path)")

    c = sub.add_parser("compare", help="population of several methods (and an oracle) side by side")
    c.add_argument("config")
    c.add_argument("--methods", nargs="*", default=None, help="labels: MF 2 2e 2+1a 2+1b 3")
    c.add_argument("--oracle", choices=_ORACLES)
    c.add_argument("-o", "--output")
    c.add_argument("--jobs", type=int)

    s = sub.add_parser("sweep", help="rerun a configuration over values of one parameter")
    s.add_argument("config")
    s.add_argument("--axis", required=True, help="dotted key, e.g. spectral.params.g_eV")
    s.add_argument("--values", nargs="*", required=True, help="JSON values")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--jobs", type=int)

    v = sub.add_parser("validate", help="run the built-in consistency suites")
    v.add_argument("--suites", nargs="*", default=None, help="residual, oracles, symmetry (default: all)")

    g = sub.add_parser("config", help="configuration helpers")
    gsub = g.add_subparsers(dest="config_command", required=True)
    gsub.add_parser("print-defaults", help="print the default configuration as JSON")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "config":
            print(json.dumps(scenarios.defaults(), indent=2))
            return EXIT_OK
        if args.command == "validate":
            from .validation import SUITES, run_suites

            names = list(SUITES) if args.suites is None else args.suites
            if not names:
                raise ConfigError("no validation suites selected")
            unknown = [n for n in names if n not in SUITES]
            if unknown:
                raise ConfigError(f"unknown suite '{unknown[0]}'; choose from {', '.join(SUITES)}")
            report = run_suites(names)
            for line in report.lines():
                print(line)
            return EXIT_OK if report.passed else EXIT_CONFIG
        cfg = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg, args.output)
        jobs = args.jobs if args.jobs is not None else default_jobs()
        if jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.command == "compare":
            methods = args.methods
            if methods is None:
                methods = [cfg["method"]["order"]]
            code, _ = cmd_compare(cfg, methods, args.oracle, args.output, jobs)
            return code
        values = []
        for raw in args.values:
            try:
                values.append(json.loads(raw))
            except json.JSONDecodeError:
                values.append(raw)
        return cmd_sweep(cfg, args.axis, values, args.out_dir, jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except oracles.FockCutoffNotConverged as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
