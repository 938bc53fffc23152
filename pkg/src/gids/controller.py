"""Outer synthesis loop: find weak labels, request synthetic samples,
and commit them only when measured performance improves.

Each round trains the classifier on the hybrid view to get the baseline
report (pm_h), then handles one weak label at a time: train a GAN on
that label's hybrid rows, insert freshly generated pending samples,
retrain including them (pm_p), and accept iff the label's F1 strictly
improves while the validation macro-F1 does not degrade. Rejected
pending samples are deleted, so the hybrid view only ever grows through
verified commits.

Both trainings of a round reuse the same classifier seed; the data
delta is the only difference between pm_h and pm_p.
"""

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .detector import IdsClassifier
from .errors import GidsError
from .store import ALL_FLAGS, HYBRID_FLAGS
from .synthesizer import GanConfig, generate, generation_count, train_gan


@dataclass(frozen=True)
class ControllerConfig:
    pm_threshold: float = 0.98
    synthesis_fraction: float = 0.25
    max_rounds: int = 10
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.pm_threshold <= 1.0):
            raise GidsError("pm_threshold must lie in (0, 1]")
        if self.synthesis_fraction <= 0.0:
            raise GidsError("synthesis_fraction must be positive")
        if self.max_rounds < 1:
            raise GidsError("max_rounds must be >= 1")
        if not (0.0 < self.validation_fraction < 1.0):
            raise GidsError("validation_fraction must lie in (0, 1)")


@dataclass
class LabelDecision:
    label: int
    pm_h_f1: float
    pm_p_f1: float
    pm_h_macro: float
    pm_p_macro: float
    verdict: str  # accept | reject | error
    samples_generated: int
    error: str | None = None


@dataclass
class RoundLog:
    round_index: int
    weak_labels: list
    decisions: list = field(default_factory=list)
    validation_macro_f1: float = math.nan

    def to_json_dict(self):
        d = asdict(self)
        d["weak_labels"] = [int(l) for l in d["weak_labels"]]
        return d


def weak_labels(pm_h, threshold):
    """Labels whose F1 falls strictly below the threshold, ascending order."""
    return [c for c in range(pm_h.class_count) if pm_h.f1[c] < threshold]


def decide(pm_p, pm_h, label):
    """Accept iff the label's F1 strictly improves and macro-F1 does not drop."""
    return bool(
        pm_p.f1[label] > pm_h.f1[label] and pm_p.macro_f1 >= pm_h.macro_f1
    )


def derive_gan_seed(base_seed, round_index, label):
    """Fresh deterministic GAN seed per (round, label), so a label rejected in
    one round gets a different draw in the next."""
    return int(np.random.SeedSequence([base_seed, round_index, label]).generate_state(1)[0])


class Controller:
    """Runs the synthesis rounds against a store and a fixed validation set.

    ids_factory and train_gan_fn exist for testing; defaults build the
    package classifier and GAN.
    """

    def __init__(self, store, validation, config=None, ids_params=None,
                 gan_config=None, ids_factory=None, train_gan_fn=None):
        self.store = store
        self.validation = validation
        self.config = config or ControllerConfig()
        self.gan_config = gan_config or GanConfig()
        ids_params = dict(ids_params or {})
        ids_params.setdefault("class_count", store.class_count)
        self.ids_factory = ids_factory or (lambda: IdsClassifier(**ids_params))
        self.train_gan_fn = train_gan_fn or train_gan
        self.round_logs_ = []
        self.final_model_ = None

    def _train_and_report(self, flags, role):
        data = self.store.view(flags)
        model = self.ids_factory()
        model.fit(data.features, data.labels)
        report = model.evaluate(
            self.validation.features, self.validation.labels, role=role
        )
        return model, report

    def run_round(self, round_index):
        _, pm_h = self._train_and_report(HYBRID_FLAGS, "pm_h")
        weak = weak_labels(pm_h, self.config.pm_threshold)
        log = RoundLog(round_index=round_index, weak_labels=weak)
        last_accept_macro = None
        for label in weak:
            count = 0
            try:
                positives = self.store.hybrid_view(labels={label})
                count = generation_count(self.config.synthesis_fraction, positives.n)
                gan_seed = derive_gan_seed(self.config.seed, round_index, label)
                gan_cfg = replace(self.gan_config, seed=gan_seed)
                pair = self.train_gan_fn(positives.features, gan_cfg)
                pending = generate(pair, label, count, round_index=round_index)
                self.store.insert(pending)
                _, pm_p = self._train_and_report(ALL_FLAGS, "pm_p")
            except GidsError as exc:
                self.store.reject_pending(label)
                log.decisions.append(LabelDecision(
                    label=label,
                    pm_h_f1=float(pm_h.f1[label]),
                    pm_p_f1=math.nan,
                    pm_h_macro=pm_h.macro_f1,
                    pm_p_macro=math.nan,
                    verdict="error",
                    samples_generated=count,
                    error=str(exc),
                ))
                continue
            if decide(pm_p, pm_h, label):
                self.store.commit_pending(label)
                verdict = "accept"
                last_accept_macro = pm_p.macro_f1
            else:
                self.store.reject_pending(label)
                verdict = "reject"
            log.decisions.append(LabelDecision(
                label=label,
                pm_h_f1=float(pm_h.f1[label]),
                pm_p_f1=float(pm_p.f1[label]),
                pm_h_macro=pm_h.macro_f1,
                pm_p_macro=pm_p.macro_f1,
                verdict=verdict,
                samples_generated=count,
            ))
        # After a commit the hybrid equals the data the accepted pm_p model was
        # trained on, so its macro carries over exactly; otherwise unchanged.
        log.validation_macro_f1 = (
            last_accept_macro if last_accept_macro is not None else pm_h.macro_f1
        )
        return log

    def run(self):
        """Rounds until no label is weak or max_rounds is hit; returns the ledger."""
        self.round_logs_ = []
        for round_index in range(1, self.config.max_rounds + 1):
            log = self.run_round(round_index)
            self.round_logs_.append(log)
            if not log.weak_labels:
                break
        self.final_model_, _ = self._train_and_report(HYBRID_FLAGS, "final")
        return self.round_logs_

    def write_ledger_jsonl(self, path):
        with open(path, "w") as fh:
            for log in self.round_logs_:
                fh.write(json.dumps(log.to_json_dict()) + "\n")

    def write_round_summary_csv(self, path):
        with open(path, "w") as fh:
            fh.write("round,n_weak,n_accepted,n_rejected,validation_macro_f1\n")
            for log in self.round_logs_:
                accepted = sum(1 for d in log.decisions if d.verdict == "accept")
                rejected = sum(1 for d in log.decisions if d.verdict != "accept")
                fh.write(
                    f"{log.round_index},{len(log.weak_labels)},{accepted},"
                    f"{rejected},{repr(log.validation_macro_f1)}\n"
                )


def check_ledger_soundness(round_dicts):
    """Validate accept/reject invariants on a parsed JSONL ledger.

    Raises LedgerError on the first violation; returns counts otherwise.
    """
    from .errors import LedgerError

    accepts = rejects = 0
    macro_sequence = []
    for rd in round_dicts:
        for dec in rd["decisions"]:
            if dec["verdict"] == "accept":
                accepts += 1
                if not (dec["pm_p_f1"] > dec["pm_h_f1"]):
                    raise LedgerError(
                        f"round {rd['round_index']} label {dec['label']}: accept "
                        f"without per-label F1 improvement"
                    )
                if not (dec["pm_p_macro"] >= dec["pm_h_macro"]):
                    raise LedgerError(
                        f"round {rd['round_index']} label {dec['label']}: accept "
                        f"with degraded macro-F1"
                    )
            else:
                rejects += 1
        macro_sequence.append(rd["validation_macro_f1"])
    for a, b in zip(macro_sequence, macro_sequence[1:]):
        if b < a:
            raise LedgerError(
                f"validation macro-F1 decreased across rounds: {a} -> {b}"
            )
    return {"accepts": accepts, "rejects": rejects, "rounds": len(round_dicts)}
