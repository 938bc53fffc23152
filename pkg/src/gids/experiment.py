"""Experiment harness: standalone vs GAN-assisted runs across training
fractions and seeds, with reproducible artifacts.

Per (fraction, seed) the harness carves a validation slice out of the
training subsample and gives the remaining fit rows to BOTH arms, so
the only data difference between them is the controller-vetted
synthetic samples. The test partition is fixed per seed and never
enters any training or validation batch; partition indices are written
next to the results so that isolation can be re-checked from the
artifacts alone.
"""

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .controller import Controller, ControllerConfig, check_ledger_soundness
from .detector import IdsClassifier
from .errors import ConfigError, DataError, LedgerError, ReportError
from .neural import TrainConfig, save_mlp
from .pipeline import (
    PreprocessingPipeline,
    Schema,
    load_dataset_file,
    sparsity,
    stratified_split_indices,
)
from .store import Flag, FlaggedSample, SampleStore
from .synthesizer import GanConfig


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str
    schema_path: str
    out_dir: str
    header: bool = False
    train_size: int = 5000
    fractions: tuple = (0.2, 0.4, 0.6, 0.8, 1.0)
    seeds: tuple = (0,)
    pca_dims: int = 20
    variance_floor: float = 0.90
    hidden_dims: tuple = (50, 50)
    ids: TrainConfig = field(default_factory=TrainConfig)
    gan: GanConfig = field(default_factory=GanConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)

    def __post_init__(self):
        if not self.fractions or any(not (0.0 < f <= 1.0) for f in self.fractions):
            raise ConfigError("fractions must be a non-empty subset of (0, 1]")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.train_size < 1:
            raise ConfigError("train_size must be positive")


def _sub_seed(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _ids_for(cfg, seed):
    return IdsClassifier(
        hidden_dims=cfg.hidden_dims,
        epochs=cfg.ids.epochs,
        batch_size=cfg.ids.batch_size,
        learning_rate=cfg.ids.learning_rate,
        momentum=cfg.ids.momentum,
        seed=seed,
    )


def run_dir_name(fraction, seed):
    return f"f{int(round(fraction * 100)):03d}_s{seed}"


def preprocess_dataset(cfg):
    """Load the CSV, fit the pipeline, and return (matrix, pipeline, summary)."""
    schema = Schema.from_file(cfg.schema_path)
    table = load_dataset_file(cfg.data_path, schema, header=cfg.header)
    pipeline = PreprocessingPipeline(
        target_dims=cfg.pca_dims, variance_floor=cfg.variance_floor
    ).fit(table)
    encoded, _ = pipeline.encode(table)
    matrix = pipeline.transform(table)
    summary = {
        "rows": table.n_rows,
        "d_in": pipeline.d_in_,
        "d_out": pipeline.d_out_,
        "class_count": pipeline.class_count_,
        "classes": list(pipeline.label_classes_),
        "cumulative_explained_variance": pipeline.cumulative_variance_,
        "explained_variance_ratios": [float(v) for v in pipeline.explained_variance_ratio_],
        "sparsity_encoded": sparsity(encoded),
        "sparsity_projected": sparsity(matrix.features),
        "warnings": list(pipeline.warnings_),
    }
    return matrix, pipeline, summary


def run_single(matrix, fraction, seed, cfg, run_dir, arms=("sids", "gids")):
    """One (fraction, seed) cell: optional S-IDS and G-IDS arms plus artifacts."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    pool_idx, test_idx = stratified_split_indices(matrix.labels, cfg.train_size, seed)
    if fraction >= 1.0:
        frac_idx = pool_idx
    else:
        frac_n = int(round(fraction * cfg.train_size))
        rel_train, _ = stratified_split_indices(
            matrix.labels[pool_idx], frac_n, _sub_seed(seed, int(fraction * 1000), 1)
        )
        frac_idx = pool_idx[rel_train]
    val_n = max(1, int(round(cfg.controller.validation_fraction * len(frac_idx))))
    rel_fit, rel_val = stratified_split_indices(
        matrix.labels[frac_idx],
        len(frac_idx) - val_n,
        _sub_seed(seed, int(fraction * 1000), 2),
    )
    fit_idx = frac_idx[rel_fit]
    val_idx = frac_idx[rel_val]

    with open(run_dir / "partition.json", "w") as fh:
        json.dump(
            {
                "fraction": fraction,
                "seed": seed,
                "n_rows": int(matrix.n),
                "pool": [int(i) for i in pool_idx],
                "test": [int(i) for i in test_idx],
                "fit": [int(i) for i in fit_idx],
                "validation": [int(i) for i in val_idx],
            },
            fh,
        )

    fit = matrix.subset(fit_idx)
    val = matrix.subset(val_idx)
    test = matrix.subset(test_idx)
    row = {"fraction": fraction, "seed": seed}

    if "sids" in arms:
        s_model = _ids_for(cfg, cfg.ids.seed)
        s_model.class_count = matrix.class_count
        s_model.fit(fit.features, fit.labels, eval_set=(val.features, val.labels))
        s_report = s_model.evaluate(test.features, test.labels, role="s_ids_test")
        s_report.write_csv(run_dir / "s_ids_report.csv")
        s_report.write_json(run_dir / "s_ids_report.json")
        s_model.write_eval_log_csv(run_dir / "s_ids_eval_log.csv")
        row["s_ids"] = s_report

    if "gids" in arms:
        store = SampleStore(matrix.class_count, matrix.dim)
        store.insert(_originals(fit))
        controller = Controller(
            store,
            val,
            config=cfg.controller,
            ids_params={
                "hidden_dims": cfg.hidden_dims,
                "epochs": cfg.ids.epochs,
                "batch_size": cfg.ids.batch_size,
                "learning_rate": cfg.ids.learning_rate,
                "momentum": cfg.ids.momentum,
                "seed": cfg.ids.seed,
                "class_count": matrix.class_count,
            },
            gan_config=cfg.gan,
        )
        controller.run()
        controller.write_ledger_jsonl(run_dir / "g_ids_rounds.jsonl")
        controller.write_round_summary_csv(run_dir / "g_ids_round_summary.csv")
        store.save(run_dir / "store.txt")
        g_model = controller.final_model_
        g_report = g_model.evaluate(test.features, test.labels, role="g_ids_test")
        g_report.write_csv(run_dir / "g_ids_report.csv")
        g_report.write_json(run_dir / "g_ids_report.json")
        save_mlp(g_model.net_, run_dir / "g_ids_model.txt")
        # Stability trace for the final committed model.
        hybrid = store.hybrid_view()
        trace_model = _ids_for(cfg, cfg.ids.seed)
        trace_model.class_count = matrix.class_count
        trace_model.fit(
            hybrid.features, hybrid.labels, eval_set=(val.features, val.labels)
        )
        trace_model.write_eval_log_csv(run_dir / "g_ids_eval_log.csv")
        row["g_ids"] = g_report
    return row


def _originals(data):
    return [
        FlaggedSample(data.features[i], int(data.labels[i]), Flag.ORIGINAL, 0)
        for i in range(data.n)
    ]


def run_experiment(cfg, arms=("sids", "gids")):
    """Full protocol over fractions x seeds; returns the output directory."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix, pipeline, summary = preprocess_dataset(cfg)
    pipeline.save(out_dir / "pipeline_model.txt")
    with open(out_dir / "preprocess_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)

    rows = []
    for seed in cfg.seeds:
        for fraction in cfg.fractions:
            run_dir = out_dir / run_dir_name(fraction, seed)
            rows.append(run_single(matrix, fraction, seed, cfg, run_dir, arms=arms))

    _write_comparison(out_dir / "comparison.csv", rows, matrix.class_count, arms)
    with open(out_dir / "run_manifest.json", "w") as fh:
        json.dump(
            {
                "config": _config_json(cfg),
                "arms": list(arms),
                "class_count": matrix.class_count,
                "runs": [run_dir_name(f, s) for s in cfg.seeds for f in cfg.fractions],
            },
            fh,
            indent=2,
        )
    validate_run_ledger(out_dir)
    return out_dir


def _config_json(cfg):
    return asdict(cfg)  # json.dump turns the nested tuples into lists


def _write_comparison(path, rows, class_count, arms):
    cols = ["fraction", "seed"]
    if "sids" in arms:
        cols += ["s_ids_macro_f1"] + [f"s_f1_label{c}" for c in range(class_count)]
    if "gids" in arms:
        cols += ["g_ids_macro_f1"] + [f"g_f1_label{c}" for c in range(class_count)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            out = [row["fraction"], row["seed"]]
            for arm in ("s_ids", "g_ids"):
                if arm == "s_ids" and "sids" not in arms:
                    continue
                if arm == "g_ids" and "gids" not in arms:
                    continue
                report = row[arm]
                out.append(repr(report.macro_f1))
                out.extend(repr(float(v)) for v in report.f1)
            w.writerow(out)


# -- ledger validation -------------------------------------------------------


def validate_run_ledger(out_dir):
    """Re-check accept/reject soundness and partition isolation from artifacts.

    Raises LedgerError on any violation. Safe to call on S-IDS-only
    runs (no round ledgers to check).
    """
    out_dir = Path(out_dir)
    results = {}
    for partition_file in sorted(out_dir.glob("*/partition.json")):
        run_dir = partition_file.parent
        with open(partition_file) as fh:
            part = json.load(fh)
        pool = set(part["pool"])
        test = set(part["test"])
        fit = set(part["fit"])
        val = set(part["validation"])
        if pool & test:
            raise LedgerError(f"{run_dir.name}: pool and test overlap")
        if len(pool) + len(test) != part["n_rows"]:
            raise LedgerError(f"{run_dir.name}: pool+test do not cover the dataset")
        if fit & val:
            raise LedgerError(f"{run_dir.name}: fit and validation overlap")
        if not (fit | val) <= pool:
            raise LedgerError(f"{run_dir.name}: training rows outside the pool")
        if (fit | val) & test:
            raise LedgerError(f"{run_dir.name}: test indices leaked into training")
        rounds_file = run_dir / "g_ids_rounds.jsonl"
        if rounds_file.exists():
            with open(rounds_file) as fh:
                round_dicts = [json.loads(line) for line in fh if line.strip()]
            results[run_dir.name] = check_ledger_soundness(round_dicts)
        else:
            results[run_dir.name] = {"rounds": 0}
    if not results:
        raise LedgerError(f"{out_dir}: no run partitions found")
    return results


# -- synthetic dataset generation ---------------------------------------------


@dataclass(frozen=True)
class ClassSpec:
    label: str
    count: int
    mean: tuple
    cov: object = 1.0  # scalar sigma^2, diagonal vector, or full matrix


def gen_synthetic_dataset(class_specs, dim, seed, out_csv, out_schema):
    """Write a numeric Gaussian-mixture dataset plus its schema file."""
    if any(spec.count < 2 for spec in class_specs):
        raise ConfigError("every class needs at least 2 rows")
    rng = np.random.default_rng(seed)
    rows = []
    for spec in class_specs:
        mean = np.asarray(spec.mean, dtype=np.float64)
        if mean.shape != (dim,):
            raise ConfigError(
                f"class {spec.label!r}: mean must have length {dim}"
            )
        cov = np.asarray(spec.cov, dtype=np.float64)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(dim)
        elif cov.ndim == 1:
            if cov.shape != (dim,):
                raise ConfigError(f"class {spec.label!r}: diagonal length mismatch")
            cov = np.diag(cov)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise DataError(
                f"class {spec.label!r}: covariance is not positive definite"
            ) from None
        draws = rng.standard_normal((spec.count, dim)) @ chol.T + mean
        for row in draws:
            rows.append([repr(float(v)) for v in row] + [spec.label])
    order = rng.permutation(len(rows))
    with open(out_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        for i in order:
            w.writerow(rows[i])
    schema = Schema(tuple(["numeric"] * dim + ["label"]))
    with open(out_schema, "w") as fh:
        fh.write(schema.to_text())
    return out_csv, out_schema


def load_class_specs(spec_path):
    """Parse the synth-data JSON spec: {"dim": d, "seed": s, "classes": [...]}."""
    with open(spec_path) as fh:
        raw = json.load(fh)
    try:
        dim = int(raw["dim"])
        seed = int(raw.get("seed", 0))
        specs = []
        for entry in raw["classes"]:
            cov = entry.get("cov", entry.get("cov_diag", 1.0))
            specs.append(
                ClassSpec(
                    label=str(entry["label"]),
                    count=int(entry["count"]),
                    mean=tuple(entry["mean"]),
                    cov=cov,
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{spec_path}: invalid synth-data spec: {exc}") from None
    return specs, dim, seed


# -- report emission ----------------------------------------------------------


def emit_report(out_dir, report_dir=None):
    """Consolidate run artifacts into summary CSV/JSON files.

    Produces curves.csv (macro-F1 per fraction/seed/arm), labels.csv
    (per-label metrics for both arms), and summary.json. Raises
    ReportError listing any missing artifacts.
    """
    out_dir = Path(out_dir)
    report_dir = Path(report_dir) if report_dir else out_dir / "report"
    manifest_path = out_dir / "run_manifest.json"
    missing = []
    if not manifest_path.exists():
        raise ReportError(f"missing artifacts: {manifest_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    runs = manifest["runs"]
    arms = manifest.get("arms", ["sids", "gids"])

    per_run = {}
    for name in runs:
        run_dir = out_dir / name
        entry = {}
        for arm, key in (("sids", "s_ids"), ("gids", "g_ids")):
            if arm not in arms:
                continue
            path = run_dir / f"{key}_report.json"
            if not path.exists():
                missing.append(str(path))
                continue
            with open(path) as fh:
                entry[key] = json.load(fh)
        if "gids" in arms:
            rounds = run_dir / "g_ids_rounds.jsonl"
            if rounds.exists():
                with open(rounds) as fh:
                    entry["rounds"] = [json.loads(l) for l in fh if l.strip()]
            else:
                missing.append(str(rounds))
        per_run[name] = entry
    if missing:
        raise ReportError("missing artifacts: " + ", ".join(missing))

    report_dir.mkdir(parents=True, exist_ok=True)
    class_count = manifest["class_count"]

    with open(report_dir / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "fraction", "seed", "s_ids_macro_f1", "g_ids_macro_f1"])
        for name in runs:
            frac, seed = _parse_run_name(name)
            s = per_run[name].get("s_ids")
            g = per_run[name].get("g_ids")
            w.writerow([
                name,
                frac,
                seed,
                repr(s["macro_f1"]) if s else "",
                repr(g["macro_f1"]) if g else "",
            ])

    with open(report_dir / "labels.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([
            "run", "label",
            "s_precision", "s_recall", "s_f1",
            "g_precision", "g_recall", "g_f1", "support",
        ])
        for name in runs:
            s = per_run[name].get("s_ids")
            g = per_run[name].get("g_ids")
            for c in range(class_count):
                sl = s["labels"][c] if s else None
                gl = g["labels"][c] if g else None
                support = (sl or gl or {}).get("support", "")
                w.writerow([
                    name, c,
                    *(["", "", ""] if sl is None
                      else [repr(sl["precision"]), repr(sl["recall"]), repr(sl["f1"])]),
                    *(["", "", ""] if gl is None
                      else [repr(gl["precision"]), repr(gl["recall"]), repr(gl["f1"])]),
                    support,
                ])

    summary = {"runs": {}}
    for name in runs:
        entry = per_run[name]
        run_summary = {}
        if "s_ids" in entry:
            run_summary["s_ids_macro_f1"] = entry["s_ids"]["macro_f1"]
        if "g_ids" in entry:
            run_summary["g_ids_macro_f1"] = entry["g_ids"]["macro_f1"]
        if "rounds" in entry:
            run_summary["rounds"] = len(entry["rounds"])
            run_summary["validation_macro_sequence"] = [
                r["validation_macro_f1"] for r in entry["rounds"]
            ]
        summary["runs"][name] = run_summary
    with open(report_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return report_dir


def _parse_run_name(name):
    frac_part, seed_part = name.split("_s")
    return int(frac_part[1:]) / 100.0, int(seed_part)
