"""Configuration parsing, run orchestration and serialization.

Config files are flat INI-style text with five sections::

    [engine]    J, omega_a, omega_b, T_h, T_c, Gamma_h, Gamma_c,
                gamma_h, gamma_c, Lambda_ab, Lambda_ba
    [schedule]  tau_h, tau_ba, tau_c, tau_ab
    [noise]     n_segments, sigma_ab, sigma_ba, distribution,
                n_cycles, n_batches, mode
    [sweep]     variable, grid, objective, mode, ratio_ab_ba
    [run]       seed, n_seg, ladder, resolution, threads, n_starts

Unknown sections or keys are hard errors with the offending line number.
Every run writes ``manifest.json`` (all resolved parameters, applied
defaults, seed, backend, version) plus mode-specific CSV files; numeric
CSV fields carry 17 significant digits so doubles round-trip exactly.

Command line::

    engine <cycle|sweep|optimize|montecarlo|control> --config FILE
           --out DIR [--seed N] [--threads N]

Exit codes: 0 success, 1 configuration/validation failure, 2 numerical
failure (the error class name is printed).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, backend
from .cycle import EngineParams, Schedule, run_cycle
from .errors import EngineError, ParseError, ValidationError
from .noise import NoiseConfig, monte_carlo_cycle
from .optimize import (
    expansion_work_trace,
    lambda_sigma_sweep,
    optimize_allocations,
    power_vs_cycle_time,
)

MODES = ("cycle", "sweep", "optimize", "montecarlo", "control")

_ENGINE_KEYS = {
    "J": (float, None), "omega_a": (float, None), "omega_b": (float, None),
    "T_h": (float, None), "T_c": (float, None),
    "Gamma_h": (float, None), "Gamma_c": (float, None),
    "gamma_h": (float, 0.0), "gamma_c": (float, 0.0),
    "Lambda_ab": (float, 0.0), "Lambda_ba": (float, 0.0),
}
_SCHEDULE_KEYS = {
    "tau_h": (float, None), "tau_ba": (float, None),
    "tau_c": (float, None), "tau_ab": (float, None),
}
_NOISE_KEYS = {
    "n_segments": (int, 200), "sigma_ab": (float, 0.0),
    "sigma_ba": (float, 0.0), "distribution": (str, "uniform"),
    "n_cycles": (int, 2000), "n_batches": (int, 20),
    "mode": (str, "restart"),
}
_SWEEP_KEYS = {
    "variable": (str, None), "grid": (str, None),
    "objective": (str, "power"), "mode": (str, "lindblad"),
    "ratio_ab_ba": (float, 0.5),
}
_RUN_KEYS = {
    "seed": (int, 0), "n_seg": (int, 512), "ladder": (str, "midpoint"),
    "resolution": (int, 200), "threads": (int, 0), "n_starts": (int, 8),
}
_SECTIONS = {
    "engine": _ENGINE_KEYS, "schedule": _SCHEDULE_KEYS,
    "noise": _NOISE_KEYS, "sweep": _SWEEP_KEYS, "run": _RUN_KEYS,
}


@dataclass(frozen=True)
class SweepSettings:
    variable: str
    grid: tuple
    objective: str = "power"
    mode: str = "lindblad"
    ratio_ab_ba: float = 0.5


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    n_seg: int = 512
    ladder: str = "midpoint"
    resolution: int = 200
    threads: int = 0
    n_starts: int = 8


@dataclass(frozen=True)
class RunConfig:
    engine: EngineParams
    schedule: Schedule
    noise: NoiseConfig
    sweep: SweepSettings | None
    run: RunSettings
    defaults_applied: tuple = ()


def _parse_grid(text: str) -> tuple:
    """Grid syntax: 'a:b:n' for n linearly spaced points, or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid range must be start:stop:num, got {text!r}")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        return tuple(float(x) for x in np.linspace(a, b, n))
    return tuple(float(x) for x in text.split(","))


def _raw_sections(text: str):
    """Split config text into {(section, key): (value, line)} with checks."""
    entries = {}
    seen_sections = set()
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ParseError(f"unknown section [{section}]", ln)
            if section in seen_sections:
                raise ParseError(f"duplicate section [{section}]", ln)
            seen_sections.add(section)
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", ln)
        if section is None:
            raise ParseError("key outside of any [section]", ln)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTIONS[section]:
            raise ParseError(f"unknown key {key!r} in [{section}]", ln)
        if (section, key) in entries:
            raise ParseError(f"duplicate key {key!r} in [{section}]", ln)
        entries[(section, key)] = (value, ln)
    return entries, seen_sections


def _build_section(name, entries, defaults_applied):
    out = {}
    for key, (typ, default) in _SECTIONS[name].items():
        if (name, key) in entries:
            value, ln = entries[(name, key)]
            try:
                out[key] = typ(value)
            except ValueError:
                raise ParseError(
                    f"key {key!r} expects {typ.__name__}, got {value!r}", ln
                ) from None
        else:
            if default is None:
                raise ValidationError(f"missing required key {key!r} in [{name}]")
            out[key] = default
            defaults_applied.append(f"{name}.{key}")
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config file; all defaults are recorded."""
    entries, seen = _raw_sections(text)
    for required in ("engine", "schedule"):
        if required not in seen:
            raise ValidationError(f"missing required section [{required}]")
    defaults = []
    eng = _build_section("engine", entries, defaults)
    sch = _build_section("schedule", entries, defaults)
    noi = _build_section("noise", entries, defaults)
    run_ = _build_section("run", entries, defaults)

    if eng["T_c"] > eng["T_h"]:
        raise ValidationError("cold bath hotter than hot bath")
    try:
        engine = EngineParams(**eng)
        schedule = Schedule(**sch)
        noise = NoiseConfig(seed=run_["seed"], **noi)
    except (ValueError, EngineError) as exc:
        raise ValidationError(str(exc)) from None

    sweep = None
    if "sweep" in seen:
        sw = _build_section("sweep", entries, defaults)
        if sw["variable"] not in ("cycle_time", "Lambda", "sigma", "J"):
            raise ValidationError(f"unknown sweep variable {sw['variable']!r}")
        if sw["mode"] not in ("lindblad", "noise", "both"):
            raise ValidationError(f"unknown sweep mode {sw['mode']!r}")
        sweep = SweepSettings(sw["variable"], _parse_grid(sw["grid"]),
                              sw["objective"], sw["mode"], sw["ratio_ab_ba"])
    if run_["ladder"] not in ("midpoint", "endpoint"):
        raise ValidationError(f"unknown ladder {run_['ladder']!r}")
    return RunConfig(engine, schedule, noise, sweep, RunSettings(**run_),
                     tuple(defaults))


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Manifest round trip
# ---------------------------------------------------------------------------

def config_as_dict(config: RunConfig) -> dict:
    d = {
        "engine": dataclasses.asdict(config.engine),
        "schedule": dataclasses.asdict(config.schedule),
        "noise": {k: getattr(config.noise, k) for k in _NOISE_KEYS},
        "run": dataclasses.asdict(config.run),
    }
    if config.sweep is not None:
        d["sweep"] = dataclasses.asdict(config.sweep)
        d["sweep"]["grid"] = list(config.sweep.grid)
    return d


def config_from_manifest(manifest: dict) -> RunConfig:
    """Rebuild the exact RunConfig a manifest was written from."""
    d = manifest["config"]
    sweep = None
    if "sweep" in d:
        sw = dict(d["sweep"])
        sw["grid"] = tuple(sw["grid"])
        sweep = SweepSettings(**sw)
    run_ = RunSettings(**d["run"])
    return RunConfig(
        EngineParams(**d["engine"]),
        Schedule(**d["schedule"]),
        NoiseConfig(seed=run_.seed, **d["noise"]),
        sweep,
        run_,
        tuple(manifest.get("defaults_applied", ())),
    )


def write_manifest(out_dir: Path, mode: str, config: RunConfig,
                   extra: dict | None = None) -> None:
    manifest = {
        "mode": mode,
        "version": __version__,
        "backend": backend.BACKEND,
        "seed": config.run.seed,
        "gamma_sign_note": {
            "gamma_h_raw": config.engine.gamma_h,
            "gamma_c_raw": config.engine.gamma_c,
            "applied": "absolute values (dephasing rates are non-negative)",
        },
        "defaults_applied": list(config.defaults_applied),
        "config": config_as_dict(config),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# Mode runners
# ---------------------------------------------------------------------------

_CYCLE_HEADER = ["t", "omega", "b1", "b2", "b3", "b4", "b5", "E", "S_E",
                 "S_vn", "P_field", "P_friction", "Qdot", "branch"]

_SUMMARY_HEADER = ["W_net", "W_friction", "W_field", "Q_h", "Q_c", "P_avg",
                   "dS_ext", "tau"]


def _summary_row(s):
    return [s.W_net, s.W_friction, s.W_field, s.Q_h, s.Q_c, s.P_avg,
            s.dS_ext, s.tau]


def _run_cycle_mode(config: RunConfig, out: Path) -> dict:
    rec = run_cycle(config.engine, config.schedule,
                    resolution=config.run.resolution,
                    n_seg=config.run.n_seg, ladder=config.run.ladder)
    rows = [
        [rec.t[i], rec.omega[i], *rec.b[i], rec.E[i], rec.S_E[i],
         rec.S_vn[i], rec.P_field[i], rec.P_friction[i], rec.Qdot[i],
         rec.branch[i]]
        for i in range(len(rec.t))
    ]
    write_csv(out / "cycle.csv", _CYCLE_HEADER, rows)
    write_csv(out / "summary.csv", _SUMMARY_HEADER,
              [_summary_row(rec.summary)])
    return {"summary": dict(zip(_SUMMARY_HEADER, _summary_row(rec.summary)))}


def _run_optimize_mode(config: RunConfig, out: Path) -> dict:
    res = optimize_allocations(config.engine, config.schedule.tau_total,
                               n_starts=config.run.n_starts,
                               seed=config.run.seed,
                               n_seg=config.run.n_seg,
                               ladder=config.run.ladder)
    write_csv(out / "optimize.csv",
              ["start", "n_eval", "tau_h", "tau_ba", "tau_c", "tau_ab",
               "power"],
              [[i, ne, *alloc, p] for i, ne, alloc, p in res.trace])
    sched = res.schedule
    write_csv(out / "optimized_schedule.csv",
              ["tau_h", "tau_ba", "tau_c", "tau_ab", "power"],
              [[sched.tau_h, sched.tau_ba, sched.tau_c, sched.tau_ab,
                res.power]])
    return {"optimized_schedule": dataclasses.asdict(sched),
            "optimized_power": res.power,
            "n_evaluations": res.n_evaluations}


def _threads(config: RunConfig) -> int:
    n = config.run.threads
    if n <= 0:
        n = int(os.environ.get("ENGINE_THREADS", "1"))
    return max(1, n)


def _run_sweep_mode(config: RunConfig, out: Path) -> dict:
    if config.sweep is None:
        raise ValidationError("sweep mode requires a [sweep] section")
    sw = config.sweep
    extra = {"sweep_variable": sw.variable}
    if sw.variable == "cycle_time":
        rows = power_vs_cycle_time(config.engine, sw.grid,
                                   n_starts=config.run.n_starts,
                                   seed=config.run.seed,
                                   n_seg=config.run.n_seg,
                                   ladder=config.run.ladder)
        write_csv(out / "sweep.csv",
                  ["tau", "tau_h", "tau_ba", "tau_c", "tau_ab", "P_ref",
                   "P_lub"],
                  [[tau, s.tau_h, s.tau_ba, s.tau_c, s.tau_ab, pr, pl]
                   for tau, s, pr, pl in rows])
        return extra
    if sw.variable == "J":
        rows = []
        for j in sw.grid:
            params = replace(config.engine, J=float(j))
            rec = run_cycle(params, config.schedule, n_seg=config.run.n_seg,
                            ladder=config.run.ladder)
            rows.append([j, rec.summary.P_avg, rec.summary.dS_ext,
                         rec.summary.W_friction])
        write_csv(out / "sweep.csv", ["J", "P", "dS_ext", "W_friction"], rows)
        return extra

    # Lambda / sigma sweeps: lindblad and/or noise curves
    if sw.variable == "sigma":
        n = config.noise.n_segments
        lam_grid = tuple(n * s * s / (2.0 * config.schedule.tau_ab)
                         for s in sw.grid)
    else:
        lam_grid = sw.grid
    modes = ("lindblad", "noise") if sw.mode == "both" else (sw.mode,)
    nthreads = _threads(config)
    for m in modes:
        if nthreads > 1:
            with ThreadPoolExecutor(nthreads) as pool:
                futures = [
                    pool.submit(lambda lam: lambda_sigma_sweep(
                        config.engine, config.schedule, [lam], mode=m,
                        ratio_ab_ba=sw.ratio_ab_ba,
                        noise_cfg=config.noise), lam)
                    for lam in lam_grid
                ]
                rows = [f.result()[0] for f in futures]
        else:
            rows = lambda_sigma_sweep(config.engine, config.schedule,
                                      lam_grid, mode=m,
                                      ratio_ab_ba=sw.ratio_ab_ba,
                                      noise_cfg=config.noise)
        header = list(rows[0].keys())
        write_csv(out / f"sweep_{m}.csv", header,
                  [[r[k] for k in header] for r in rows])
    if "lindblad" in modes and sw.variable == "Lambda":
        for i, lam in enumerate(lam_grid):
            point = replace(config.engine, Lambda_ab=float(lam),
                            Lambda_ba=float(lam) / sw.ratio_ab_ba)
            t, Om, wf, we, _ = expansion_work_trace(
                point, config.schedule, n_seg=config.run.n_seg,
                ladder=config.run.ladder)
            stride = max(1, len(t) // 256)
            write_csv(out / f"friction_trace_{i:02d}.csv",
                      ["t", "Omega", "W_friction_cum", "W_field_cum"],
                      [[t[k], Om[k], wf[k], we[k]]
                       for k in range(0, len(t), stride)])
    return extra


_MC_BATCH_HEADER = ["batch", "P", "dS", "dS_rate", "W_net", "Q_h", "Q_c",
                    "W_friction"]


def _write_mc(out: Path, stem: str, mc) -> dict:
    write_csv(out / f"{stem}.csv", _MC_BATCH_HEADER,
              [[i, *row] for i, row in enumerate(mc.batch_table)])
    write_csv(out / f"{stem}_summary.csv",
              ["P", "P_se", "dS", "dS_se", "dS_rate", "dS_rate_se",
               "W_net", "W_net_se", "Q_h", "Q_h_se", "Q_c", "Q_c_se",
               "W_friction", "W_friction_se", "tau_avg", "tau_se",
               "n_cycles"],
              [[mc.mean.P_avg, mc.se.P_avg, mc.mean.dS_ext, mc.se.dS_ext,
                mc.ds_rate_mean, mc.ds_rate_se, mc.mean.W_net, mc.se.W_net,
                mc.mean.Q_h, mc.se.Q_h, mc.mean.Q_c, mc.se.Q_c,
                mc.mean.W_friction, mc.se.W_friction, mc.mean.tau,
                mc.se.tau, mc.n_cycles]])
    return {"P": mc.mean.P_avg, "P_se": mc.se.P_avg}


def _run_montecarlo_mode(config: RunConfig, out: Path) -> dict:
    mc = monte_carlo_cycle(config.engine, config.schedule, config.noise,
                           kind="time")
    return {"montecarlo": _write_mc(out, "montecarlo", mc)}


def _run_control_mode(config: RunConfig, out: Path) -> dict:
    from .cycle import cycle_power

    mc = monte_carlo_cycle(config.engine, config.schedule, config.noise,
                           kind="frequency")
    reference, _ = cycle_power(
        replace(config.engine, Lambda_ab=0.0, Lambda_ba=0.0),
        config.schedule, n_seg=config.noise.n_segments, ladder="endpoint")
    info = _write_mc(out, "control", mc)
    write_csv(out / "control_comparison.csv",
              ["P_noise", "P_noise_se", "P_reference", "delta"],
              [[mc.mean.P_avg, mc.se.P_avg, reference.P_avg,
                mc.mean.P_avg - reference.P_avg]])
    return {"control": {**info, "P_reference": reference.P_avg}}


_RUNNERS = {
    "cycle": _run_cycle_mode,
    "sweep": _run_sweep_mode,
    "optimize": _run_optimize_mode,
    "montecarlo": _run_montecarlo_mode,
    "control": _run_control_mode,
}


def run(mode: str, config: RunConfig, out_dir) -> int:
    """Execute one mode; returns the process exit code and writes files."""
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    extra = _RUNNERS[mode](config, out)
    write_manifest(out, mode, config, extra)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="engine",
        description="Two-spin four-stroke engine simulator",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="config file path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override [run] seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="override [run] threads (or ENGINE_THREADS)")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = replace(config, run=replace(config.run, seed=args.seed),
                             noise=replace(config.noise, seed=args.seed))
        if args.threads is not None:
            config = replace(config,
                             run=replace(config.run, threads=args.threads))
        return run(args.mode, config, args.out)
    except (ParseError, ValidationError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (EngineError, ValueError, ZeroDivisionError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
