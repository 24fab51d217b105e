"""Batch runner: ``roughdelay <subcommand> --config FILE --out DIR``.

The config is an INI file with sections ``[noise]``, ``[exponents]``,
``[field]`` and ``[run]``; see the README for every key. Unknown keys are
rejected. The seed is taken from ``--seed``, then ``ROUGHDELAY_SEED``, then
``[noise] seed``. Runs over several seeds execute in a thread pool and are
merged in seed order, so outputs do not depend on ``--threads``.

Exit codes: 0 success, 1 usage or configuration error, 2 failed checks (a
``failure.json`` report is written).
"""
from __future__ import annotations

import argparse
import configparser
import inspect
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fields
from .controlled import constant_segment
from .errors import ConfigError, RoughDelayError
from .ergodic import (System, find_stationary, lyapunov_spectrum, stable_rate_probe,
                      stationarity_defect, stationary_zero_check, unstable_rate_probe,
                      unstable_subspace_pullback)
from .io import atomic_output, json_text, trajectory_csv, write_rough_path, csv_text
from .noise import make_rng, sample_brownian
from .roughpath import (DEFAULT_REFINEMENT, ITO, chen_residual, lift_ito, to_stratonovich,
                        validate_exponents)
from .solve import semiflow, solution_norm_diagnostic

SEED_ENV = "ROUGHDELAY_SEED"

SCHEMA = {
    "noise": {"seed": (int, 0), "r": (float, 1.0), "steps_per_delay": (int, 32),
              "refinement": (int, DEFAULT_REFINEMENT), "convention": (str, ITO)},
    "exponents": {"alpha": (float, 0.34), "beta": (float, 0.49), "gamma": (float, 0.495)},
    "run": {
        "n_seeds": (int, 1), "x0": (float, 0.0),
        # solve
        "n_segments": (int, 10),
        # lyapunov
        "k": (int, 1), "n_steps": (int, 200), "transient": (int, -1),
        "reorth_every": (int, 1), "tol": (float, 0.02),
        # stationary
        "window": (float, 200.0), "truncation": (float, -1.0),
        "picard_tol": (float, 1e-10), "max_iter": (int, 200),
        # probes
        "upsilon": (float, 0.1), "epsilon": (float, 1e-3), "delta": (float, 1e-6),
        "n_probe": (int, 20), "mode": (str, "unstable"), "k0": (int, 1),
        "n_pullback": (int, 20),
        # lift-check
        "n_lifts": (int, 10), "n_triples": (int, 100), "lift_window": (float, 4.0),
    },
}


class Config:
    def __init__(self, noise, exponents, field_name, field_params, run):
        self.noise, self.exponents, self.run = noise, exponents, run
        self.field_name, self.field_params = field_name, field_params

    def vf(self):
        return fields.from_registry(self.field_name, **self.field_params)

    def system(self, vf=None):
        n, e = self.noise, self.exponents
        return System(vf=vf or self.vf(), r=n["r"], refinement=n["refinement"],
                      convention=n["convention"], alpha=e["alpha"], beta=e["beta"],
                      gamma=e["gamma"], x0=self.run["x0"])

    def seeds(self):
        return [self.noise["seed"] + i for i in range(self.run["n_seeds"])]


def _convert(section, key, raw, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None


def load_config(path, seed_override=None):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file {str(path)!r} not found")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    parser.read_string(path.read_text())
    unknown = [f"[{s}]" for s in parser.sections() if s not in (*SCHEMA, "field")]
    values = {}
    for section, keys in SCHEMA.items():
        got = dict(parser[section]) if parser.has_section(section) else {}
        unknown += [f"[{section}] {k}" for k in got if k not in keys]
        values[section] = {k: _convert(section, k, got[k], kind) if k in got else default
                           for k, (kind, default) in keys.items()}
    field = dict(parser["field"]) if parser.has_section("field") else {}
    name = field.pop("name", "linear")
    if name not in fields.REGISTRY:
        raise ConfigError(f"unknown field {name!r}; choose from {sorted(fields.REGISTRY)}")
    allowed = inspect.signature(fields.REGISTRY[name]).parameters
    unknown += [f"[field] {k}" for k in field if k not in allowed]
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))
    params = {k: _convert("field", k, v, float) for k, v in field.items()}
    env = os.environ.get(SEED_ENV)
    if seed_override is not None:
        values["noise"]["seed"] = int(seed_override)
    elif env:
        values["noise"]["seed"] = _convert("env", SEED_ENV, env, int)
    return Config(values["noise"], values["exponents"], name, params, values["run"])


def _map_seeds(fn, seeds, threads):
    if threads <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


class CheckFailed(Exception):
    def __init__(self, report):
        super().__init__("checks failed")
        self.report = report


# -- subcommands -----------------------------------------------------------------

def cmd_validate(cfg, out, fmt, threads):
    a, b, g = (cfg.exponents[k] for k in ("alpha", "beta", "gamma"))
    lhs = (1 - a) * (0.5 - b) / ((1 - b) * (1 - 2 * a)) if a != 0.5 and b != 1 else None
    ok = validate_exponents(a, b, g)
    report = {"alpha": a, "beta": b, "gamma": g, "lhs": lhs, "rhs": b - a, "valid": ok}
    if not ok:
        raise CheckFailed({"command": "validate", "failures": [report]})
    return {"validate.json": json_text(report)}


def _lift_checks(cfg, seed):
    n, run = cfg.noise, cfg.run
    r, N, R = n["r"], n["steps_per_delay"], n["refinement"]
    h = r / N
    d = cfg.vf().d
    path = sample_brownian(d, 0.0, r + run["lift_window"], h / R, seed)
    ito = lift_ito(path, h, r, gamma=cfg.exponents["gamma"])
    strat = to_stratonovich(ito)
    rng = make_rng(seed, 7)
    triples = np.sort(rng.integers(0, ito.n_intervals + 1, size=(run["n_triples"], 3)), axis=1)
    chen = max(chen_residual(ito, *t) for t in triples)
    chen_s = max(chen_residual(strat, *t) for t in triples)
    shift = float(np.abs(strat.area - ito.area - 0.5 * h * np.eye(d)).max())
    delayed_same = bool(np.array_equal(strat.delayed_area, ito.delayed_area))
    diag = np.einsum("kii->ki", strat.area) - 0.5 * ito.increments[ito.delay_steps:] ** 2
    z = float(np.abs(diag.mean(axis=0)).max() / (h / np.sqrt(2 * R) / np.sqrt(len(diag))))
    checks = [("chen_ito", chen, 1e-10), ("chen_stratonovich", chen_s, 1e-10),
              ("ito_stratonovich_shift", shift, 1e-14),
              ("delayed_area_shared", 0.0 if delayed_same else 1.0, 0.0),
              ("geometric_symmetry_z", z, 5.0)]
    rows = [{"seed": seed, "name": name, "value": val, "threshold": thr,
             "passed": bool(val <= thr)} for name, val, thr in checks]
    return rows, ito


def cmd_lift_check(cfg, out, fmt, threads):
    seeds = [cfg.noise["seed"] + i for i in range(cfg.run["n_lifts"])]
    results = _map_seeds(lambda s: _lift_checks(cfg, s), seeds, threads)
    rows = [row for res, _ in results for row in res]
    report = {"checks": rows, "passed": all(r["passed"] for r in rows), "seeds": seeds}
    files = {"roughpath.txt": results[0][1]}
    if fmt == "csv":
        files["lift_check.csv"] = csv_text(
            ["seed", "name", "value", "threshold", "passed"],
            [[r["seed"], r["name"], r["value"], r["threshold"], str(r["passed"])] for r in rows])
    else:
        files["lift_check.json"] = json_text(report)
    if not report["passed"]:
        raise CheckFailed({"command": "lift-check",
                           "failures": [r for r in rows if not r["passed"]]})
    return files


def cmd_solve(cfg, out, fmt, threads):
    system = cfg.system()
    n_seg, r, N = cfg.run["n_segments"], cfg.noise["r"], cfg.noise["steps_per_delay"]

    def one(seed):
        rp = system.rough_path(seed, N, 0.0, n_seg * r)
        segs = semiflow(system.initial_segment(rp, 0.0), rp, system.vf, n_seg)
        norms = solution_norm_diagnostic(segs, rp, cfg.exponents["beta"])
        return segs, norms

    results = _map_seeds(one, cfg.seeds(), threads)
    files, summary = {}, []
    for seed, (segs, norms) in zip(cfg.seeds(), results):
        if fmt == "csv":
            files[f"trajectory_seed{seed}.csv"] = trajectory_csv(segs)
        else:
            files[f"trajectory_seed{seed}.json"] = json_text({
                "seed": seed, "segments": [{"t": s.times, "y": s.values, "dy": s.zeta0}
                                           for s in segs[1:]]})
        summary.append({"seed": seed, "final": segs[-1].values[-1],
                        "norms": [{"y_norm": y, "A": a} for y, a in norms]})
    files["solve.json"] = json_text({"runs": summary})
    return files


def cmd_lyapunov(cfg, out, fmt, threads):
    system = cfg.system()
    run, N = cfg.run, cfg.noise["steps_per_delay"]
    transient = None if run["transient"] < 0 else run["transient"]
    reports = _map_seeds(
        lambda s: lyapunov_spectrum(system, s, run["k"], run["n_steps"], N,
                                    transient=transient, reorth_every=run["reorth_every"],
                                    tol=run["tol"]),
        cfg.seeds(), threads)
    mean = np.mean([rep.exponents for rep in reports], axis=0)
    if fmt == "csv":
        rows = [[rep.seed, i, float(e), str(rep.converged[i])]
                for rep in reports for i, e in enumerate(rep.exponents)]
        return {"lyapunov.csv": csv_text(["seed", "index", "exponent", "converged"], rows),
                "lyapunov_mean.json": json_text({"mean_exponents": mean, "r": system.r})}
    return {"lyapunov.json": json_text({"runs": [rep.to_dict() for rep in reports],
                                        "mean_exponents": mean, "r": system.r})}


def cmd_stationary(cfg, out, fmt, threads):
    vf = cfg.vf()
    if vf.drift_x is None or (vf.drift_y is not None and np.any(vf.drift_y)) or vf.f is not None:
        raise ConfigError("stationary needs a field whose drift is C y (no delayed drift)")
    C, noise_vf = vf.drift_x, replace(vf, drift_x=None)
    n, run = cfg.noise, cfg.run
    r, N = n["r"], n["steps_per_delay"]
    T = None if run["truncation"] < 0 else run["truncation"]
    system = cfg.system(noise_vf)

    def one(seed):
        rp = system.rough_path(seed, N, 0.0, run["window"])
        Y = find_stationary(C, noise_vf, rp, T=T, tol=run["picard_tol"],
                            max_iter=run["max_iter"])
        K = rp.delay_steps
        first = -(-Y.valid_start // K) * K
        starts = list(range(first, rp.n_intervals - 2 * K + 1, K))
        defect = max((stationarity_defect(Y, s) for s in starts), default=0.0)
        return Y, defect

    files, summary = {}, []
    for seed, (Y, defect) in zip(cfg.seeds(), _map_seeds(one, cfg.seeds(), threads)):
        i0, i1 = Y.valid_start, Y.rp.n_intervals
        vals = Y.node_values(i0, i1)
        summary.append({"seed": seed, "iterations": Y.iterations, "residuals": Y.residuals,
                        "ratios": Y.ratios, "factor": Y.factor, "T": Y.T,
                        "converged": Y.converged, "variance": vals.var(axis=0),
                        "mean": vals.mean(axis=0), "stationarity_defect": defect,
                        "truncation_bound": Y.truncation_bound})
        times = Y.rp.t0 + Y.rp.h * np.arange(i0, i1 + 1)
        der = Y.derivative(i0, i1).reshape(len(times), -1)
        if fmt == "csv":
            w = vals.shape[1]
            files[f"stationary_seed{seed}.csv"] = csv_text(
                ["t"] + [f"y{a}" for a in range(w)] + [f"dy{j}" for j in range(der.shape[1])],
                [[t, *v, *dv] for t, v, dv in zip(times, vals, der)])
        else:
            files[f"stationary_seed{seed}.json"] = json_text(
                {"t": times, "y": vals, "dy": der})
    files["stationary.json"] = json_text({"runs": summary})
    return files


def _probe_files(name, reports, fmt):
    if fmt == "csv":
        rows = [[seed, m, float(d)] for seed, rep in reports for m, d in enumerate(rep.distances)]
        return {f"{name}.csv": csv_text(["seed", "step", "distance"], rows),
                f"{name}_summary.json": json_text(
                    {"runs": [dict(seed=s, **{k: v for k, v in rep.to_dict().items()
                                              if k != "distances"}) for s, rep in reports]})}
    return {f"{name}.json": json_text({"runs": [dict(seed=s, **rep.to_dict())
                                                for s, rep in reports]})}


def _zero_fixed_point(system):
    if not stationary_zero_check(system.vf):
        raise ConfigError("probes need a field with sigma, sigma_x, sigma_y vanishing at 0")


def cmd_probe_stable(cfg, out, fmt, threads):
    system = cfg.system()
    _zero_fixed_point(system)
    run, r, N = cfg.run, cfg.noise["r"], cfg.noise["steps_per_delay"]
    n = run["n_probe"]

    def one(seed):
        rp = system.rough_path(seed, N, 0.0, n * r)
        Y = constant_segment(rp, -r, np.zeros(system.vf.w))
        return stable_rate_probe(Y, rp, system.vf, run["upsilon"], None, run["epsilon"], n)

    return _probe_files("probe_stable", list(zip(cfg.seeds(),
                                                 _map_seeds(one, cfg.seeds(), threads))), fmt)


def cmd_probe_unstable(cfg, out, fmt, threads):
    system = cfg.system()
    _zero_fixed_point(system)
    run, r, N = cfg.run, cfg.noise["r"], cfg.noise["steps_per_delay"]
    n = run["n_probe"]

    def one(seed):
        rp = system.rough_path(seed, N, -2 * n * r, 0.0)
        Y = constant_segment(rp, -(2 * n + 1) * r, np.zeros(system.vf.w))
        rep = unstable_rate_probe(Y, rp, system.vf, run["upsilon"], n, delta=run["delta"],
                                  k0=max(run["k0"], 1), mode=run["mode"], seed=seed)
        ub = unstable_subspace_pullback(system, seed, run["n_pullback"], run["k0"], N)
        return rep, ub

    results = _map_seeds(one, cfg.seeds(), threads)
    files = _probe_files("probe_unstable", [(s, rep) for s, (rep, _) in
                                            zip(cfg.seeds(), results)], fmt)
    files["unstable_subspace.json"] = json_text({"runs": [
        {"seed": s, "angle": ub.angle, "rates": ub.rates, "converged": ub.converged,
         "n_pullback": ub.n_pullback, "k0": ub.basis.shape[1]}
        for s, (_, ub) in zip(cfg.seeds(), results)]})
    return files


COMMANDS = {
    "lift-check": cmd_lift_check,
    "solve": cmd_solve,
    "lyapunov": cmd_lyapunov,
    "stationary": cmd_stationary,
    "probe-stable": cmd_probe_stable,
    "probe-unstable": cmd_probe_unstable,
    "validate": cmd_validate,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI configuration file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--format", choices=("csv", "json"), default="json",
                        help="encoding of the main data file")
    common.add_argument("--threads", type=int, default=1, help="worker threads over seeds")
    parser = argparse.ArgumentParser(prog="roughdelay", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _write(out, files):
    with atomic_output(out) as scratch:
        for name, content in files.items():
            target = scratch / name
            if hasattr(content, "increments"):
                write_rough_path(content, target)
            else:
                target.write_text(content)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        files = COMMANDS[args.command](cfg, args.out, args.format, max(1, args.threads))
    except CheckFailed as exc:
        text = json_text(exc.report)
        _write(args.out, {"failure.json": text})
        sys.stdout.write(text)
        return 2
    except (FileNotFoundError, ConfigError, configparser.Error) as exc:
        print(f"roughdelay: error: {exc}", file=sys.stderr)
        return 1
    except RoughDelayError as exc:
        print(f"roughdelay: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _write(args.out, files)
    for name in sorted(files):
        print(Path(args.out) / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
