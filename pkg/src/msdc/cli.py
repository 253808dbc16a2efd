"""Command-line interface: model lifecycle, queries, experiments, benchmarks.

Subcommands: ``init``, ``store``, ``query``, ``experiment``, ``bench``.
Exit codes: 0 success, 2 usage error, 3 data error (bad pattern, geometry,
schedule, or snapshot content), 4 I/O error.  Snapshot writes are atomic;
a failed command never leaves a corrupt model behind.

Every command is deterministic given its inputs and ``--seed``.  A JSON
``--config`` file may supply geometry, params, ``w_max``, ``seed`` and
``ledger`` defaults; explicit flags win over the config file.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import experiments as exp_mod
from .core import CsaParams, InputPattern, ModelGeometry, W_MAX_DEFAULT
from .errors import MsdcError, PatternError
from .memory import MemoryModel
from .snapshot import encode_model, atomic_write_bytes, load_model

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4

_GEOMETRY_KEYS = ("input_width", "input_height", "num_active", "num_cms", "units_per_cm")
_PARAM_KEYS = ("eta_max", "steepness", "midpoint", "g_floor", "g_exponent")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise PatternError("config file must hold a JSON object")
    return data


def _resolved_config(args) -> dict:
    """Merge built-in defaults, --config file, and explicit flags."""
    file_cfg = _load_config_file(getattr(args, "config", None))
    geometry = {
        "input_width": 12,
        "input_height": 12,
        "num_active": 12,
        "num_cms": 24,
        "units_per_cm": 8,
    }
    geometry.update(file_cfg.get("geometry", {}))
    params = asdict(CsaParams())
    params.update(file_cfg.get("params", {}))
    cfg = {
        "geometry": geometry,
        "params": params,
        "w_max": file_cfg.get("w_max", W_MAX_DEFAULT),
        "seed": file_cfg.get("seed", 0),
        "ledger": file_cfg.get("ledger", True),
    }
    for key in _GEOMETRY_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg["geometry"][key] = value
    for key in _PARAM_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg["params"][key] = value
    if getattr(args, "w_max", None) is not None:
        cfg["w_max"] = args.w_max
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "ledger", None) is not None:
        cfg["ledger"] = args.ledger
    return cfg


def read_pattern_file(path: str | Path) -> InputPattern:
    """Grid of 0/1 characters, or JSON (a list of active pixel indices,
    optionally wrapped as {"active_pixels": [...]})."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PatternError(f"invalid JSON pattern file: {exc}") from exc
        if isinstance(data, dict):
            data = data.get("active_pixels")
        if not isinstance(data, list):
            raise PatternError("JSON pattern must be a list of active pixel indices")
        try:
            return InputPattern.from_indices(int(i) for i in data)
        except (TypeError, ValueError) as exc:
            raise PatternError(f"invalid pixel index in pattern file: {exc}") from exc
    return InputPattern.from_grid(text)


def _dump_trace(args, model, trace, extra: dict) -> None:
    if getattr(args, "trace", None) is None:
        return
    payload = dict(extra)
    # Echo the resolved model configuration for provenance.
    payload["model"] = {
        "geometry": asdict(model.geometry),
        "params": asdict(model.params),
        "w_max": model.w_max,
    }
    payload["trace"] = trace.to_json_dict()
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.trace == "-":
        sys.stdout.write(text)
    else:
        Path(args.trace).write_text(text)


def cmd_init(args) -> int:
    cfg = _resolved_config(args)
    geometry = ModelGeometry(**cfg["geometry"])
    params = CsaParams(**cfg["params"])
    model = MemoryModel(
        geometry,
        params,
        w_max=cfg["w_max"],
        seed=cfg["seed"],
        enable_ledger=cfg["ledger"],
    )
    atomic_write_bytes(args.model_path, encode_model(model))
    print(f"initialized {args.model_path}: {geometry.num_cms} CMs x "
          f"{geometry.units_per_cm} units, {geometry.input_width}x"
          f"{geometry.input_height} input, S={geometry.num_active}")
    return EXIT_OK


def cmd_store(args) -> int:
    model = load_model(args.model_path)
    pattern = read_pattern_file(args.pattern_path)
    if args.seed is not None:
        model.reseed(args.seed)
    label = args.label if args.label is not None else Path(args.pattern_path).stem
    code, trace = model.store(pattern, label)
    atomic_write_bytes(args.model_path, encode_model(model))
    print(f"stored {label}: G={trace.familiarity} code={' '.join(map(str, code))}")
    _dump_trace(args, model, trace, {"command": "store", "label": label,
                              "code": [int(c) for c in code]})
    return EXIT_OK


def cmd_query(args) -> int:
    model = load_model(args.model_path)
    pattern = read_pattern_file(args.pattern_path)
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    report = model.belief_update(pattern, mode=args.mode, rng=rng)
    print(f"code: {' '.join(str(int(c)) for c in report.code)}")
    print(f"G={report.familiarity}")
    q = model.geometry.num_cms
    for entry in report.entries:
        print(
            f"{entry.label}: similarity={entry.input_similarity:.4f} "
            f"intersection={entry.code_intersection}/{q} "
            f"likelihood={entry.likelihood:.4f}"
        )
    _dump_trace(args, model, report.trace, {"command": "query", "mode": args.mode,
                                     "code": [int(c) for c in report.code]})
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = exp_mod.load_scenario(args.spec_path)
    if args.seed is not None:
        # Shift the whole seed list so one flag re-randomizes a run.
        spec = exp_mod.scenario_from_dict(
            {**exp_mod.scenario_to_dict(spec),
             "seeds": [s + args.seed for s in spec.seeds]}
        )
    records = exp_mod.run_scenario(spec)
    formats = ("csv", "json") if args.format == "both" else (args.format,)
    written = exp_mod.emit_results(records, spec, args.out_dir, formats=formats)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _resolved_config(args)
    report = bench_mod.run_scaling_bench(
        geometry=ModelGeometry(**cfg["geometry"]),
        params=CsaParams(**cfg["params"]),
        w_max=cfg["w_max"],
        checkpoints=args.checkpoints,
        trials_per_checkpoint=args.trials,
        seed=cfg["seed"],
    )
    bench_mod.save_report(report, args.out_path)
    flag = "equal" if report.csa_ops_equal else "UNEQUAL"
    print(f"wrote {args.out_path}; CSA op counts {flag} across checkpoints")
    return EXIT_OK


def _checkpoint_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad checkpoint list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON config file with geometry/params/seed defaults")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the random seed")
    common.add_argument("--trace", nargs="?", const="-", metavar="PATH",
                        help="dump the selection trace as JSON (default stdout)")

    parser = argparse.ArgumentParser(
        prog="msdc",
        description="Fixed-time associative memory over modular sparse "
                    "distributed codes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="create an empty model snapshot")
    p.add_argument("model_path")
    p.add_argument("--width", dest="input_width", type=int)
    p.add_argument("--height", dest="input_height", type=int)
    p.add_argument("--active", dest="num_active", type=int,
                   help="active pixels per pattern (S)")
    p.add_argument("--cms", dest="num_cms", type=int, help="competitive modules (Q)")
    p.add_argument("--units", dest="units_per_cm", type=int, help="units per CM (K)")
    p.add_argument("--w-max", dest="w_max", type=int, help="weight quantum")
    p.add_argument("--eta-max", dest="eta_max", type=float)
    p.add_argument("--steepness", dest="steepness", type=float)
    p.add_argument("--midpoint", dest="midpoint", type=float)
    p.add_argument("--g-floor", dest="g_floor", type=float)
    p.add_argument("--g-exponent", dest="g_exponent", type=float)
    p.add_argument("--ledger", action=argparse.BooleanOptionalAction, default=None,
                   help="record (label, input, code) per store for belief readout "
                        "(default on)")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("store", parents=[common],
                       help="store a pattern into a model snapshot")
    p.add_argument("model_path")
    p.add_argument("pattern_path")
    p.add_argument("--label", help="ledger label (default: pattern file stem)")
    p.set_defaults(func=cmd_store)

    p = sub.add_parser("query", parents=[common],
                       help="retrieve a code and report stored-item likelihoods")
    p.add_argument("model_path")
    p.add_argument("pattern_path")
    p.add_argument("--mode", choices=("soft", "hard"), default="soft")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("experiment", parents=[common],
                       help="run a scenario config and emit result files "
                            "(--seed offsets the scenario's whole seed list)")
    p.add_argument("spec_path",
                   help="scenario JSON path, or the literal 'appendix' for the "
                        "bundled default")
    p.add_argument("out_dir")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bench", parents=[common],
                       help="verify fixed-time scaling and write a JSON report")
    p.add_argument("out_path")
    p.add_argument("--checkpoints", type=_checkpoint_list,
                   default=list(bench_mod.DEFAULT_CHECKPOINTS),
                   help="comma-separated stored-item counts")
    p.add_argument("--trials", type=int, default=50,
                   help="timing trials per checkpoint")
    for key, flag in (("input_width", "--width"), ("input_height", "--height"),
                      ("num_active", "--active"), ("num_cms", "--cms"),
                      ("units_per_cm", "--units")):
        p.add_argument(flag, dest=key, type=int)
    p.add_argument("--w-max", dest="w_max", type=int)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except IsADirectoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MsdcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
