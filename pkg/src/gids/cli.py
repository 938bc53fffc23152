"""Command-line harness.

Subcommands: preprocess, synth-data, run-sids, run-gids, experiment,
report. All knobs live in one key=value config file (dotted keys reach
the nested training configs); --set overrides individual keys. Exit
codes: 0 success, 1 config error, 2 data error, 3 runtime failure.
The GIDS_OUT environment variable overrides the output directory.
"""

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .controller import ControllerConfig
from .errors import ConfigError, DataError, GidsError
from .experiment import (
    ExperimentConfig,
    emit_report,
    gen_synthetic_dataset,
    load_class_specs,
    preprocess_dataset,
    run_experiment,
)
from .neural import TrainConfig
from .synthesizer import GanConfig

_TOP_KEYS = {
    "data": ("data_path", str),
    "schema": ("schema_path", str),
    "out": ("out_dir", str),
    "header": ("header", None),
    "train_size": ("train_size", int),
    "fractions": ("fractions", None),
    "seeds": ("seeds", None),
    "pca.dims": ("pca_dims", int),
    "pca.variance_floor": ("variance_floor", float),
    "ids.hidden_dims": ("hidden_dims", None),
}

_NESTED = {
    "ids": (
        "ids",
        {
            "epochs": int,
            "batch_size": int,
            "learning_rate": float,
            "momentum": float,
            "seed": int,
        },
    ),
    "gan": (
        "gan",
        {
            "noise_dim": int,
            "k": int,
            "batch_size": int,
            "epochs": int,
            "generator_loss": str,
            "learning_rate": float,
            "momentum": float,
            "seed": int,
        },
    ),
    "controller": (
        "controller",
        {
            "pm_threshold": float,
            "synthesis_fraction": float,
            "max_rounds": int,
            "validation_fraction": float,
            "seed": int,
        },
    ),
}


def parse_config_text(text):
    """key = value lines; '#' starts a comment; blank lines ignored."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_bool(value):
    lower = value.lower()
    if lower in ("1", "true", "yes", "on"):
        return True
    if lower in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _parse_list(value, cast):
    return tuple(cast(v.strip()) for v in value.split(",") if v.strip())


def build_experiment_config(pairs):
    """Assemble an ExperimentConfig from flat key=value pairs."""
    fields = {}
    nested = {"ids": {}, "gan": {}, "controller": {}}
    for key, value in pairs.items():
        if key in _TOP_KEYS:
            name, cast = _TOP_KEYS[key]
            if key == "header":
                fields[name] = _parse_bool(value)
            elif key == "fractions":
                fields[name] = _parse_list(value, float)
            elif key == "seeds":
                fields[name] = _parse_list(value, int)
            elif key == "ids.hidden_dims":
                fields[name] = _parse_list(value, int)
            else:
                fields[name] = cast(value)
            continue
        prefix, _, rest = key.partition(".")
        if prefix in _NESTED and rest in _NESTED[prefix][1]:
            cast = _NESTED[prefix][1][rest]
            try:
                nested[prefix][rest] = cast(value)
            except ValueError:
                raise ConfigError(f"config key {key}: cannot parse {value!r}") from None
            continue
        raise ConfigError(f"unknown config key {key!r}")
    for name in ("data_path", "schema_path", "out_dir"):
        if name not in fields:
            pretty = {"data_path": "data", "schema_path": "schema", "out_dir": "out"}[name]
            raise ConfigError(f"config is missing required key {pretty!r}")
    try:
        return ExperimentConfig(
            ids=TrainConfig(**nested["ids"]),
            gan=GanConfig(**nested["gan"]),
            controller=ControllerConfig(**nested["controller"]),
            **fields,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_experiment_config(config_path, overrides=(), flag_pairs=None):
    pairs = {}
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        pairs.update(parse_config_text(path.read_text()))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        pairs[key.strip()] = value.strip()
    for key, value in (flag_pairs or {}).items():
        if value is not None:
            pairs[key] = value
    if "GIDS_OUT" in os.environ:
        pairs["out"] = os.environ["GIDS_OUT"]
    cfg = build_experiment_config(pairs)
    _check_inputs(cfg)
    return cfg


def _check_inputs(cfg):
    for label, path in (("dataset", cfg.data_path), ("schema", cfg.schema_path)):
        if not Path(path).exists():
            raise DataError(f"{label} file not found: {path}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gids",
        description="Train an intrusion-detection classifier with "
        "controller-vetted GAN-synthesized samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--data", help="dataset CSV path")
        p.add_argument("--schema", help="schema file path")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("preprocess", help="fit the pipeline and save the model + summary")
    add_config_args(p)

    p = sub.add_parser("synth-data", help="generate a Gaussian-mixture dataset")
    p.add_argument("--spec", required=True, help="JSON class spec file")
    p.add_argument("--out-data", required=True, help="output CSV path")
    p.add_argument("--out-schema", required=True, help="output schema path")

    for name, help_text in (
        ("run-sids", "train and evaluate the standalone classifier"),
        ("run-gids", "run the synthesis controller loop and evaluate"),
        ("experiment", "run both arms across all fractions and seeds"),
    ):
        p = sub.add_parser(name, help=help_text)
        add_config_args(p)
        if name != "experiment":
            p.add_argument("--fraction", type=float, default=1.0,
                           help="training fraction for this single run")
            p.add_argument("--seed", type=int, default=0, help="run seed")

    p = sub.add_parser("report", help="consolidate run artifacts into a summary")
    p.add_argument("--run-dir", required=True, help="experiment output directory")
    p.add_argument("--report-dir", help="where to write the summary (default: run-dir/report)")
    return parser


def _flag_pairs(args):
    return {"data": args.data, "schema": args.schema, "out": args.out}


def cmd_preprocess(args):
    cfg = load_experiment_config(args.config, args.set, _flag_pairs(args))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix, pipeline, summary = preprocess_dataset(cfg)
    pipeline.save(out_dir / "pipeline_model.txt")
    with open(out_dir / "preprocess_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    with open(out_dir / "transformed.csv", "w") as fh:
        for row, label in zip(matrix.features, matrix.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")
    print(f"rows={summary['rows']} d_in={summary['d_in']} d_out={summary['d_out']} "
          f"explained_variance={summary['cumulative_explained_variance']:.4f} "
          f"sparsity={summary['sparsity_encoded']:.4f}")
    for warning in summary["warnings"]:
        print(f"warning: {warning}")
    return 0


def cmd_synth_data(args):
    specs, dim, seed = load_class_specs(args.spec)
    gen_synthetic_dataset(specs, dim, seed, args.out_data, args.out_schema)
    total = sum(s.count for s in specs)
    print(f"wrote {total} rows over {len(specs)} classes to {args.out_data}")
    return 0


def _run_one_arm(args, arms):
    cfg = load_experiment_config(args.config, args.set, _flag_pairs(args))
    cfg = replace(cfg, fractions=(args.fraction,), seeds=(args.seed,))
    out_dir = run_experiment(cfg, arms=arms)
    print(f"run complete: {out_dir}")
    return 0


def cmd_run_sids(args):
    return _run_one_arm(args, arms=("sids",))


def cmd_run_gids(args):
    return _run_one_arm(args, arms=("gids",))


def cmd_experiment(args):
    cfg = load_experiment_config(args.config, args.set, _flag_pairs(args))
    out_dir = run_experiment(cfg)
    print(f"experiment complete: {out_dir}")
    return 0


def cmd_report(args):
    report_dir = emit_report(args.run_dir, args.report_dir)
    print(f"report written: {report_dir}")
    return 0


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "synth-data": cmd_synth_data,
    "run-sids": cmd_run_sids,
    "run-gids": cmd_run_gids,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except GidsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
