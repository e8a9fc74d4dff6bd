"""Command-line driver: JSON configs in, CSV/JSON artifacts out.

Commands: simulate, fixed-points, sweep, basin, heatmap, doe, glm, presets.
Every run echoes its resolved config (with hash) into the output directory
so any artifact can be reproduced exactly from the echo plus the master
seed.  Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import __version__, analysis, basin, doe, stats
from .models import MODEL_VARIANTS, CentroidCoupling, ModelConfig, build_system
from .presets import build_network, get_preset, preset_names
from .solver import IntegratorSettings, StiffnessError, ensemble, run_scenario

TASK_TYPES = ("simulate", "fixed-points", "sweep", "basin", "heatmap",
              "doe", "glm")

_PARAM_FIELDS = [f.name for f in fields(ModelConfig)]

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {"enum": list(MODEL_VARIANTS)},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {name: {"type": ["number", "integer"]}
                           for name in _PARAM_FIELDS},
        },
        "network": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"type": "string"},
                "populations": {"type": "array"},
                "interlinks": {"type": "object"},
                "sigma": {"type": "array", "items": {"type": "number"}},
                "xi": {"type": ["object", "string"]},
                "phi": {"type": "number"},
                "psi": {"type": "number"},
                "mu": {"type": "number"},
                "nu": {"type": "number"},
                "strategic": {"type": "array"},
                "omega": {"type": ["string", "array"]},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["rk45", "rk4"]},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "dt_init": {"type": "number", "exclusiveMinimum": 0},
                "dt_max": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "recon_T": {"type": "number", "minimum": 0},
            },
        },
        "task": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": list(TASK_TYPES)},
                "initial": {"type": "object"},
                "n_sim": {"type": "integer", "minimum": 1},
                "param": {"type": "string"},
                "range": {"type": "array"},
                "n_points": {"type": "integer", "minimum": 1},
                "x_param": {"type": "string"},
                "x_range": {"type": "array"},
                "x_points": {"type": "integer", "minimum": 2},
                "y_param": {"type": "string"},
                "y_range": {"type": "array"},
                "y_points": {"type": "integer", "minimum": 2},
                "grid": {"type": "array"},
                "phase_policy": {"enum": ["auto", "ensemble",
                                           "delta-star", "delta-grid"]},
                "delta_resolution": {"type": "integer", "minimum": 1},
                "factors": {"type": "array"},
                "k_init": {"type": "integer", "minimum": 1},
                "n_total": {"type": "integer", "minimum": 1},
                "input": {"type": "string"},
                "n_repeats": {"type": "integer", "minimum": 1},
                "p3_init": {"type": "number"},
            },
        },
    },
}


class ValidationFailure(ValueError):
    pass


def load_config(path_or_name: str) -> dict:
    """Load a config from a JSON file path or a shipped preset name."""
    name = path_or_name[:-5] if path_or_name.endswith(".json") else path_or_name
    path = Path(path_or_name)
    if path.exists():
        try:
            with open(path) as fh:
                return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"malformed JSON in {path}: {exc}") from exc
    if name in preset_names():
        return get_preset(name)
    raise ValidationFailure(f"no such config file or preset: {path_or_name}")


def validate_config(config: dict) -> dict:
    import jsonschema

    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValidationFailure(f"config invalid: {exc.message}") from exc
    return config


def apply_overrides(config: dict, overrides) -> dict:
    """Apply dotted-path key=value overrides (values parsed as JSON)."""
    for item in overrides or ():
        if "=" not in item:
            raise ValidationFailure(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        if len(parts) == 1 and parts[0] in _PARAM_FIELDS:
            parts = ["params", parts[0]]       # bare model parameter names
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationFailure(f"override path {key!r} not an object")
        node[parts[-1]] = value
    return config


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _build(config: dict):
    """(system, cfg, net, settings, recon_T) from a validated config."""
    params = dict(config.get("params", {}))
    cfg = ModelConfig(**params).validate()
    seed = int(config.get("seed", 0))
    net = None
    if "network" in config:
        section = dict(config["network"])
        section.setdefault("mu", cfg.mu)
        section.setdefault("nu", cfg.nu)
        section.setdefault("phi", cfg.phi)
        section.setdefault("psi", cfg.psi)
        net = build_network(section, seed)
    sv = dict(config.get("solver", {}))
    recon_T = sv.pop("recon_T", 50.0)
    settings = IntegratorSettings(**sv)
    system = build_system(config["model"], cfg, net=net)
    return system, cfg, net, settings, recon_T, seed


def _initial_state(system, cfg, task):
    init = task.get("initial", {})
    m = system.n_pops
    if "P" in init:
        P = np.asarray(init["P"], dtype=float)
    else:
        caps = [cfg.K1, cfg.K2, cfg.K3][:m] if system.name.startswith("eco3") \
            else [1.0] * m
        P = 0.5 * np.asarray(caps)
    if system.reduced:
        n_delta = system.dim - m
        if "delta" in init:
            delta = np.atleast_1d(np.asarray(init["delta"], dtype=float))
        else:
            delta = np.zeros(n_delta)
        return np.concatenate([P, delta])
    if "delta" in init:
        d = float(np.atleast_1d(init["delta"])[0])
        theta = np.zeros(system.net.n_total)
        theta[system.net.nodes_of(1)] = -d
        return np.concatenate([P, theta])
    if "theta" in init:
        return np.concatenate([P, np.asarray(init["theta"], dtype=float)])
    theta = np.zeros(system.net.n_total)
    return np.concatenate([P, theta])


# ---------------------------------------------------------------------------
# task runners
# ---------------------------------------------------------------------------

def _task_simulate(config, system, cfg, net, settings, recon_T, seed, outdir):
    task = config["task"]
    if "n_sim" in task:
        res = ensemble(system, _initial_state(system, cfg, task)[:system.n_pops],
                       task["n_sim"], seed, settings, recon_T, cfg.P_D)
        _write_json(outdir / "ensemble.json",
                    {"fractions": res.fractions, "counts": res.counts,
                     "n_sim": res.n_sim})
        return {"fractions": res.fractions}
    y0 = _initial_state(system, cfg, task)
    outcome = run_scenario(system, y0, settings, recon_T=recon_T,
                           p_death=cfg.P_D)
    outcome.trajectory.to_csv(outdir / "trajectory.csv", system.labels)
    _write_json(outdir / "outcome.json",
                {"winner": outcome.winner, "t_event": outcome.t_event})
    return {"winner": outcome.winner, "t_event": outcome.t_event}


def _task_fixed_points(config, system, cfg, net, settings, recon_T, seed, outdir):
    coupling = system.coupling or CentroidCoupling.from_config(cfg)
    diags = []
    if config["model"].startswith("eco2"):
        records = analysis.eco2_fixed_points(cfg, coupling, diagnostics=diags)
    elif config["model"].startswith("simple"):
        records = analysis.simple_fixed_points(cfg, coupling, diagnostics=diags)
    else:
        raise ValidationFailure(
            "fixed-points supports the simple/eco2 variants")
    rows = ["label,P1,P2,Delta1,max_real_eig,class,residual,status"]
    for rec in records:
        rows.append(",".join(
            [rec.label] + [f"{v:.12g}" for v in rec.state]
            + [f"{rec.max_real_eig:.12g}", rec.classification,
               f"{rec.residual:.3g}", rec.status]))
    (outdir / "fixed_points.csv").write_text("\n".join(rows) + "\n")
    if diags:
        _write_json(outdir / "diagnostics.json", {"notes": diags})
    return {"n_fixed_points": len(records)}


def _task_sweep(config, system, cfg, net, settings, recon_T, seed, outdir):
    task = config["task"]
    lo, hi = task["range"]
    values = np.linspace(lo, hi, task.get("n_points", 21))
    rows = analysis.sweep_bifurcation(config["model"], cfg, task["param"],
                                      values, coupling=system.coupling,
                                      settings=settings, p_death=cfg.P_D)
    analysis.sweep_to_csv(rows, outdir / "sweep.csv", n_pops=system.n_pops,
                          n_delta=system.dim - system.n_pops)
    return {"n_rows": len(rows)}


def _basin_spec(task, settings, seed, recon_T=50.0):
    grid = tuple(task.get("grid", (51, 51)))
    return basin.BasinSpec(grid=grid, n_sim=task.get("n_sim", 100),
                           phase_policy=task.get("phase_policy", "auto"),
                           delta_resolution=task.get("delta_resolution", 8),
                           seed=seed, settings=settings,
                           p3_init=task.get("p3_init"), recon_T=recon_T)


def _task_basin(config, system, cfg, net, settings, recon_T, seed, outdir):
    task = config["task"]
    spec = _basin_spec(task, settings, seed, recon_T)
    result = basin.estimate_basin(config["model"], cfg, spec, net=net)
    np.savetxt(outdir / "basin_cells.csv", result.per_cell, delimiter=",",
               fmt="%.12g")
    _write_json(outdir / "basin.json",
                {"value": result.value, "n_evaluated": result.n_evaluated,
                 "n_failed": result.n_failed})
    return {"basin": result.value}


def _task_heatmap(config, system, cfg, net, settings, recon_T, seed, outdir,
                  jobs=1, svg=False):
    task = config["task"]
    spec = _basin_spec(task, settings, seed, recon_T)
    xs = np.linspace(task["x_range"][0], task["x_range"][1],
                     task.get("x_points", 21))
    ys = np.linspace(task["y_range"][0], task["y_range"][1],
                     task.get("y_points", 21))
    started = time.time()
    matrix, xv, yv = basin.basin_heatmap(
        config["model"], cfg, task["x_param"], xs, task["y_param"], ys,
        spec, net=net, jobs=jobs)
    meta = {"model": config["model"], "config_hash": config_hash(config),
            "seed": seed, "x_param": task["x_param"],
            "y_param": task["y_param"],
            "resolutions": [int(xs.size), int(ys.size), list(spec.grid)]}
    basin.heatmap_to_csv(matrix, xv, yv, outdir / "heatmap.csv", meta=meta,
                         started=started)
    if svg:
        _write_svg_heatmap(matrix, outdir / "heatmap.svg")
    return {"min": float(matrix.min()), "max": float(matrix.max())}


def _task_doe(config, system, cfg, net, settings, recon_T, seed, outdir):
    task = config["task"]
    factors = [(f["name"], float(f["lo"]), float(f["hi"]))
               for f in task["factors"]]
    for name, lo, hi in factors:
        if not hasattr(cfg, name):
            raise ValidationFailure(f"unknown factor {name!r}")
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValidationFailure(f"factor {name!r} needs a finite range")
    spec = _basin_spec(task, settings, seed, recon_T)
    model = config["model"]

    def g(x):
        c = replace(cfg, **{name: float(v)
                            for (name, _, _), v in zip(factors, x)})
        return basin.estimate_basin(model, c, spec, net=net).value

    records = doe.run_doe(g, [(lo, hi) for _, lo, hi in factors],
                          task["k_init"], task["n_total"], seed)
    doe.write_doe_log(records, outdir / "doe_log.csv",
                      [name for name, _, _ in factors])
    return {"n_records": len(records)}


def _task_glm(config, system, cfg, net, settings, recon_T, seed, outdir):
    task = config["task"]
    X, y, names = stats.read_doe_csv(task["input"])
    fit = stats.fit_quasibinomial(X, y, feature_names=names)
    table = stats.deviance_anova(X, y, term_order=names)
    stats.write_coefficient_table(fit, table, outdir / "glm_coefficients.csv")
    imp = stats.permutation_importance(fit, X, y,
                                       n_repeats=task.get("n_repeats", 10),
                                       seed=seed)
    _write_json(outdir / "permutation_importance.json", imp)
    return {"converged": fit.converged,
            "dispersion": float(fit.dispersion)}


_TASKS = {
    "simulate": _task_simulate,
    "fixed-points": _task_fixed_points,
    "sweep": _task_sweep,
    "basin": _task_basin,
    "heatmap": _task_heatmap,
    "doe": _task_doe,
    "glm": _task_glm,
}


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)


_SVG_STOPS = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140],
                       [94, 201, 98], [253, 231, 37]], dtype=float)


def _write_svg_heatmap(matrix, path, cell: int = 14):
    ny, nx = matrix.shape
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{nx * cell}" height="{ny * cell}">']
    for i in range(ny):
        for j in range(nx):
            v = float(np.clip(matrix[i, j], 0.0, 1.0))
            pos = v * (len(_SVG_STOPS) - 1)
            k = min(int(pos), len(_SVG_STOPS) - 2)
            frac = pos - k
            rgb = (1 - frac) * _SVG_STOPS[k] + frac * _SVG_STOPS[k + 1]
            colour = "#%02x%02x%02x" % tuple(int(c) for c in rgb)
            lines.append(f'<rect x="{j * cell}" y="{(ny - 1 - i) * cell}" '
                         f'width="{cell}" height="{cell}" fill="{colour}"/>')
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines))


def run(config_path: str, overrides=(), out_dir=None, seed=None, jobs: int = 1,
        svg: bool = False) -> dict:
    """Validate, execute, and write artifacts; returns a result summary."""
    config = load_config(config_path)
    config = apply_overrides(config, overrides)
    return run_config(config, out_dir=out_dir, seed=seed, jobs=jobs, svg=svg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kuracomp",
        description="coupled decision/competition dynamics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    run_parsers = {}
    for name in TASK_TYPES:
        p = sub.add_parser(name, help=f"run a {name} task")
        p.add_argument("--config", "-c", required=True,
                       help="config JSON path or preset name")
        p.add_argument("--override", "-o", action="append", default=[],
                       metavar="K=V", help="dotted-path config override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--jobs", "-j", type=int, default=None,
                       help="worker processes for grid tasks "
                            "(default: logical cores)")
        p.add_argument("--svg", action="store_true",
                       help="emit a minimal SVG heatmap rendering")
        run_parsers[name] = p
    sub.add_parser("presets", help="list shipped configuration presets")

    args = parser.parse_args(argv)
    if getattr(args, "jobs", None) is None and args.command != "presets":
        import os

        args.jobs = os.cpu_count() or 1
    if args.command == "presets":
        for name in preset_names():
            print(name)
        return 0
    try:
        config = load_config(args.config)
        config = apply_overrides(config, args.override)
        config.setdefault("task", {})["type"] = args.command
        summary = run_config(config, out_dir=args.out, seed=args.seed,
                             jobs=args.jobs, svg=args.svg)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StiffnessError, analysis.NumericalError, np.linalg.LinAlgError,
            RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, default=float))
    return 0


def run_config(config: dict, out_dir=None, seed=None, jobs: int = 1,
               svg: bool = False) -> dict:
    """Like run(), but starting from an in-memory config dict."""
    if seed is not None:
        config["seed"] = int(seed)
    if out_dir is not None:
        config["output"] = str(out_dir)
    config = validate_config(config)
    if "task" not in config or "type" not in config.get("task", {}):
        raise ValidationFailure("config needs task.type")
    outdir = Path(config.get("output", "out"))
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    system, cfg, net, settings, recon_T, master_seed = _build(config)
    with open(outdir / "resolved_config.json", "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True, default=float)
    task_type = config["task"]["type"]
    runner = _TASKS[task_type]
    if task_type == "heatmap":
        summary = runner(config, system, cfg, net, settings, recon_T,
                         master_seed, outdir, jobs=jobs, svg=svg)
    else:
        summary = runner(config, system, cfg, net, settings, recon_T,
                         master_seed, outdir)
    meta = {
        "config_hash": config_hash(config),
        "seed": master_seed,
        "task": task_type,
        "versions": {"kuracomp": __version__, "numpy": np.__version__},
        "wall_time_s": time.time() - started,
    }
    _write_json(outdir / "metadata.json", meta)
    return summary


if __name__ == "__main__":
    sys.exit(main())
