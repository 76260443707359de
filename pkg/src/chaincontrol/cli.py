"""
Command-line front end.

Every subcommand reads one JSON config (validated against ``CONFIG_SCHEMA``
before anything is computed), writes its outputs atomically into ``--out``
and embeds the fully resolved config and seed in a JSON report, so a run can
be repeated from its own report.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .controllability import ClosureIncompleteError, full_controllability_check
from .core import ChainSpec, DomainError, GateTarget
from .filtering import (
    GaussianFilter,
    IdealLowPass,
    amplitude_statistics,
    filtered_fidelity,
    iterate_filter_optimize,
    power_spectrum,
)
from .optima import load_optimum
from .optimizer import (
    OptimizerConfig,
    UndefinedGradientError,
    minimal_time_scan,
    objective,
    optimize_gate,
)
from .propagation import ControlSequence
from .sensitivity import NoiseModel, default_delta_grid, sensitivity_sweep

log = logging.getLogger("chaincontrol")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_number = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_grid = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


CONFIG_SCHEMA = _obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "seed": {"type": "integer", "minimum": 0},
    "chain": _obj({"n_spins": {"type": "integer", "minimum": 1, "maximum": 4},
                   "coupling": _pos}, ["n_spins"]),
    "gate": _obj({
        "kind": {"enum": ["X_end", "CNOT_end", "SQRT_SWAP_end", "Custom"]},
        # custom unitary as [[[re, im], ...], ...]
        "matrix": {"type": "array", "items": {"type": "array", "items": {
            "type": "array", "items": _number, "minItems": 2, "maxItems": 2}}},
    }, ["kind"]),
    "control": {
        **_obj({"mode": {"enum": ["alternating_xy", "x_only"]},
                "n_pulses": {"type": "integer", "minimum": 1},
                "total_time": _pos,
                "pulse_duration": _pos}, ["mode", "n_pulses"]),
        "not": {"required": ["total_time", "pulse_duration"]},
    },
    "optimizer": _obj({
        "max_iterations": {"type": "integer", "minimum": 1},
        "gradient_tolerance": _pos,
        "fidelity_goal": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "n_restarts": {"type": "integer", "minimum": 1},
        "initial_amplitude_halfwidth": {"type": "number", "minimum": 0},
    }),
    "pulses": {
        **_obj({"report": {"type": "string"},
                "stored": {"type": "string"},
                "amplitudes": {"type": "array", "items": _number, "minItems": 1}}),
        "oneOf": [{"required": ["report"]}, {"required": ["stored"]},
                  {"required": ["amplitudes"]}],
    },
    "noise": _obj({"n_samples": {"type": "integer", "minimum": 1},
                   "delta_grid": _grid}),
    "spectrum": _obj({"omega_max": _pos,
                      "n_points": {"type": "integer", "minimum": 2}}, ["omega_max"]),
    "filter": _obj({"kind": {"enum": ["lowpass", "gaussian"]},
                    "cutoffs": _grid,
                    "fwhms": {"type": "array", "items": _pos, "minItems": 1}}, ["kind"]),
    "min_time": _obj({"total_times": {"type": "array", "items": _pos, "minItems": 1}},
                     ["total_times"]),
    "iterate": _obj({"rounds": {"type": "integer", "minimum": 1}}, ["rounds"]),
    "lie": _obj({"controls": {"enum": ["xy", "x"]},
                 "max_dim": {"type": "integer", "minimum": 1}}),
}, ["schema_version"])

# sections each subcommand needs on top of the schema
REQUIRED_SECTIONS = {
    "optimize": ["chain", "gate", "control"],
    "min-time": ["chain", "gate", "control", "min_time"],
    "sensitivity": ["gate", "pulses"],
    "spectrum": ["pulses", "spectrum"],
    "filter": ["gate", "pulses", "filter"],
    "iterate-filter": ["gate", "pulses", "filter", "iterate"],
    "lie-dim": ["chain"],
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- config

def load_config(path, command: str, seed: int | None = None) -> dict:
    """Read, validate and resolve a config (defaults filled in)."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
                 for e in errors]
        raise ConfigError("config failed schema validation:\n" + "\n".join(lines))
    missing = [s for s in REQUIRED_SECTIONS[command] if s not in raw]
    if missing:
        raise ConfigError(f"'{command}' needs config sections: {', '.join(missing)}")
    return resolve_config(raw, seed)


def resolve_config(raw: dict, seed: int | None = None) -> dict:
    cfg = copy.deepcopy(raw)
    cfg["seed"] = int(seed if seed is not None else cfg.get("seed", 0))
    if "chain" in cfg:
        cfg["chain"].setdefault("coupling", 1.0)
    defaults = OptimizerConfig()
    opt = cfg.setdefault("optimizer", {})
    for key in ("max_iterations", "gradient_tolerance", "fidelity_goal", "n_restarts",
                "initial_amplitude_halfwidth"):
        opt.setdefault(key, getattr(defaults, key))
    noise = cfg.setdefault("noise", {})
    noise.setdefault("n_samples", NoiseModel(0.0).n_samples)
    noise.setdefault("delta_grid", default_delta_grid().tolist())
    if "spectrum" in cfg:
        cfg["spectrum"].setdefault("n_points", 2001)
    if "lie" in cfg or "chain" in cfg:
        cfg.setdefault("lie", {}).setdefault("controls", "xy")
    return cfg


def _chain(cfg) -> ChainSpec:
    c = cfg["chain"]
    return ChainSpec(c["n_spins"], c["coupling"])


def _optimizer(cfg) -> OptimizerConfig:
    return OptimizerConfig(seed=cfg["seed"], **cfg["optimizer"])


def _gate(cfg, n_spins: int) -> GateTarget:
    g = cfg["gate"]
    if g["kind"] == "Custom":
        if "matrix" not in g:
            raise ConfigError("gate kind 'Custom' needs 'matrix'")
        m = np.array(g["matrix"], dtype=float)
        return GateTarget.custom(m[..., 0] + 1j * m[..., 1])
    return GateTarget(g["kind"], n_spins)


def _control_timing(c) -> tuple[int, float]:
    n = c["n_pulses"]
    if "pulse_duration" in c:
        return n, c["pulse_duration"]
    if "total_time" in c:
        return n, c["total_time"] / n
    raise ConfigError("control needs 'total_time' or 'pulse_duration'")


def _pulses(cfg, base: Path) -> tuple[ControlSequence, GateTarget | None]:
    """Control sequence from a previous report, a stored optimum or inline amplitudes."""
    p = cfg["pulses"]
    if "stored" in p:
        seq, target, _ = load_optimum(p["stored"])
        return seq, target
    if "report" in p:
        path = Path(p["report"])
        if not path.is_absolute():
            path = base / path
        try:
            rep = json.loads(path.read_text())
            res = rep["results"]
            seq = ControlSequence(ChainSpec(res["n_spins"], res["coupling"]), res["mode"],
                                  res["pulse_duration"], res["amplitudes"])
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"cannot use pulse report {path}: {exc}") from exc
        return seq, None
    if "chain" not in cfg or "control" not in cfg:
        raise ConfigError("inline amplitudes need 'chain' and 'control' sections")
    n, T = _control_timing(cfg["control"])
    if len(p["amplitudes"]) != n:
        raise ConfigError(f"got {len(p['amplitudes'])} amplitudes for n_pulses={n}")
    return ControlSequence(_chain(cfg), cfg["control"]["mode"], T, p["amplitudes"]), None


def _filters(cfg):
    f = cfg["filter"]
    if f["kind"] == "lowpass":
        if "cutoffs" not in f:
            raise ConfigError("low-pass filter needs 'cutoffs'")
        return "cutoff", [(c, IdealLowPass(c)) for c in f["cutoffs"]]
    if "fwhms" not in f:
        raise ConfigError("Gaussian filter needs 'fwhms'")
    return "fwhm", [(w, GaussianFilter.from_fwhm(w)) for w in f["fwhms"]]


# ---------------------------------------------------------------- output

def fmt(x) -> str:
    """Locale-independent, round-trip exact (17 significant digits)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".16e")


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def write_report(path: Path, command: str, cfg: dict, results: dict):
    payload = {"schema_version": SCHEMA_VERSION, "command": command, "seed": cfg["seed"],
               "config": cfg, "results": results}
    atomic_write(path, json.dumps(payload, indent=1, sort_keys=True, allow_nan=False) + "\n")


def _sequence_record(seq: ControlSequence) -> dict:
    return {"n_spins": seq.spec.n_spins, "coupling": seq.spec.coupling,
            "mode": seq.mode.value, "n_pulses": seq.n_pulses,
            "pulse_duration": seq.pulse_duration, "total_time": seq.total_time,
            "amplitudes": seq.amplitudes.tolist()}


def _pulse_rows(seq: ControlSequence):
    return [(k, ax, a) for k, (ax, a) in enumerate(zip(seq.axes(), seq.amplitudes))]


# ---------------------------------------------------------------- commands

def cmd_optimize(cfg, out: Path, threads: int, base: Path):
    spec = _chain(cfg)
    target = _gate(cfg, spec.n_spins)
    n, T = _control_timing(cfg["control"])
    report = optimize_gate(target, cfg["control"]["mode"], n, n * T, _optimizer(cfg),
                           spec.coupling, workers=threads)
    seq = report.best_sequence
    results = {**_sequence_record(seq), "gate": target.kind.value,
               "best_fidelity": report.best_fidelity,
               "per_restart": [{"fidelity": r.fidelity, "iterations": r.iterations,
                                "converged": r.converged} for r in report.per_restart]}
    write_csv(out / "pulses.csv", ["pulse", "axis", "amplitude"], _pulse_rows(seq))
    write_report(out / "optimize_report.json", "optimize", cfg, results)
    print(f"best fidelity {report.best_fidelity:.12f}")


def cmd_min_time(cfg, out, threads, base):
    spec = _chain(cfg)
    target = _gate(cfg, spec.n_spins)
    rows = minimal_time_scan(target, cfg["control"]["mode"], cfg["control"]["n_pulses"],
                             cfg["min_time"]["total_times"], _optimizer(cfg),
                             spec.coupling, workers=threads)
    write_csv(out / "min_time.csv", ["total_time", "best_fidelity"], rows)
    write_report(out / "min_time_report.json", "min-time", cfg,
                 {"rows": [{"total_time": t, "best_fidelity": f} for t, f in rows]})


def _target_for(cfg, seq, stored_target):
    if "gate" in cfg:
        return _gate(cfg, seq.spec.n_spins)
    if stored_target is None:
        raise ConfigError("a 'gate' section is required")
    return stored_target


def cmd_sensitivity(cfg, out, threads, base):
    seq, stored = _pulses(cfg, base)
    target = _target_for(cfg, seq, stored)
    noise = NoiseModel(0.0, cfg["noise"]["n_samples"], cfg["seed"])
    rep = sensitivity_sweep(seq, target, cfg["noise"]["delta_grid"], noise)
    rows = list(rep.rows())
    write_csv(out / "sensitivity.csv", ["delta", "mean_fidelity", "std_fidelity", "n_samples"],
              rows)
    write_report(out / "sensitivity_report.json", "sensitivity", cfg,
                 {"fingerprint": rep.fingerprint, "n_samples": rep.n_samples,
                  "rows": [dict(zip(("delta", "mean_fidelity", "std_fidelity", "n_samples"), r))
                           for r in rows]})


def cmd_spectrum(cfg, out, threads, base):
    seq, _ = _pulses(cfg, base)
    s = cfg["spectrum"]
    omega = np.linspace(0.0, s["omega_max"], s["n_points"])
    px, py = power_spectrum(seq, omega)
    write_csv(out / "spectrum.csv", ["omega", "power_x", "power_y"], zip(omega, px, py))
    mean, var = amplitude_statistics(seq)
    write_report(out / "spectrum_report.json", "spectrum", cfg,
                 {**_sequence_record(seq), "mean_abs_amplitude": mean,
                  "abs_amplitude_variance": var})


def cmd_filter(cfg, out, threads, base):
    seq, stored = _pulses(cfg, base)
    target = _target_for(cfg, seq, stored)
    param, filters = _filters(cfg)
    rows = []
    for value, filt in filters:
        fr = filtered_fidelity(seq, filt, target)
        rows.append((value, fr.filtered_fidelity, fr.step, int(fr.converged)))
    write_csv(out / "filter.csv", [param, "fidelity", "step", "converged"], rows)
    mean, var = amplitude_statistics(seq)
    write_report(out / "filter_report.json", "filter", cfg,
                 {"original_fidelity": objective(seq, target), "mean_abs_amplitude": mean,
                  "abs_amplitude_variance": var,
                  "rows": [dict(zip((param, "fidelity", "step", "converged"), r))
                           for r in rows]})


def cmd_iterate_filter(cfg, out, threads, base):
    seq, stored = _pulses(cfg, base)
    target = _target_for(cfg, seq, stored)
    param, filters = _filters(cfg)
    if len(filters) != 1:
        raise ConfigError("iterate-filter takes exactly one cut-off or FWHM")
    rounds = iterate_filter_optimize(seq, target, filters[0][1], cfg["iterate"]["rounds"],
                                     _optimizer(cfg))
    rows = [(r.round, r.resampled_fidelity, r.optimized_fidelity, r.filtered_fidelity,
             int(r.filter_converged)) for r in rounds]
    header = ["round", "resampled_fidelity", "optimized_fidelity", "filtered_fidelity",
              "filter_converged"]
    write_csv(out / "iterate_filter.csv", header, rows)
    write_csv(out / "pulses.csv", ["pulse", "axis", "amplitude"],
              _pulse_rows(rounds[-1].sequence))
    write_report(out / "iterate_filter_report.json", "iterate-filter", cfg,
                 {**_sequence_record(rounds[-1].sequence),
                  "rounds": [dict(zip(header, r)) for r in rows]})


def cmd_lie_dim(cfg, out, threads, base):
    spec = _chain(cfg)
    lie = cfg["lie"]
    v = full_controllability_check(spec, lie["controls"], lie.get("max_dim"))
    results = {"n_spins": v.n_spins, "controls": v.controls, "dimension": v.dimension,
               "hilbert_dim": v.hilbert_dim, "fully_controllable": v.fully_controllable,
               "algebra": v.algebra}
    write_report(out / "lie_dim_report.json", "lie-dim", cfg, results)
    print(f"dimension {v.dimension} ({v.algebra})")


COMMANDS = {
    "optimize": cmd_optimize,
    "min-time": cmd_min_time,
    "sensitivity": cmd_sensitivity,
    "spectrum": cmd_spectrum,
    "filter": cmd_filter,
    "iterate-filter": cmd_iterate_filter,
    "lie-dim": cmd_lie_dim,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaincontrol",
                                     description="Gate synthesis on Heisenberg spin chains.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON run config")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        cfg = load_config(args.config, args.command, args.seed)
        COMMANDS[args.command](cfg, args.out, args.threads, args.config.resolve().parent)
    except (ConfigError, DomainError) as exc:
        # domain errors here come from values the schema cannot check
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UndefinedGradientError, ClosureIncompleteError, np.linalg.LinAlgError,
            FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
