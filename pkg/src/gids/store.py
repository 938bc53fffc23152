"""Flagged-sample database with the original/pending/synthetic lifecycle.

Legal flag histories for a sample: original forever, pending then
committed to synthetic, or pending then deleted. The hybrid view
(original + synthetic) is the only data committed classifiers train on,
and it can grow only through inserts of originals or commits.
"""

import csv
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DataError, DimensionError
from .pipeline import LabeledMatrix


class Flag(str, Enum):
    ORIGINAL = "original"
    PENDING = "pending"
    SYNTHETIC = "synthetic"


HYBRID_FLAGS = frozenset({Flag.ORIGINAL, Flag.SYNTHETIC})
ALL_FLAGS = frozenset(Flag)


@dataclass(frozen=True)
class FlaggedSample:
    features: np.ndarray
    label: int
    flag: Flag
    round: int = 0  # controller round that produced it; 0 for originals


def _as_flags(flags):
    out = set()
    for f in flags:
        out.add(Flag(f))
    return out


class SampleStore:
    """Ordered collection of flagged samples for `class_count` classes."""

    def __init__(self, class_count, feature_dim=None):
        if class_count < 1:
            raise DataError("class_count must be >= 1")
        self.class_count = class_count
        self.feature_dim = feature_dim
        self._samples = []

    def __len__(self):
        return len(self._samples)

    @property
    def samples(self):
        return tuple(self._samples)

    def _validate(self, sample):
        features = np.asarray(sample.features, dtype=np.float64)
        if features.ndim != 1:
            raise DimensionError("sample features must be a 1-D vector")
        if self.feature_dim is None:
            self.feature_dim = features.shape[0]
        elif features.shape[0] != self.feature_dim:
            raise DimensionError(
                f"sample has {features.shape[0]} features, store holds {self.feature_dim}"
            )
        if not (0 <= sample.label < self.class_count):
            raise DataError(
                f"label {sample.label} outside [0, {self.class_count})"
            )
        flag = Flag(sample.flag)
        if flag is Flag.SYNTHETIC:
            raise DataError("synthetic samples arise only from commit_pending")
        if flag is Flag.ORIGINAL and sample.round != 0:
            raise DataError("original samples must carry round 0")
        return FlaggedSample(features.copy(), int(sample.label), flag, int(sample.round))

    def insert(self, samples):
        """Append samples (original or pending), preserving order."""
        validated = [self._validate(s) for s in samples]
        self._samples.extend(validated)
        return self

    def counts(self):
        """Mapping (label, flag) -> count."""
        out = {}
        for s in self._samples:
            key = (s.label, s.flag)
            out[key] = out.get(key, 0) + 1
        return out

    def count(self, flags=ALL_FLAGS, label=None):
        flags = _as_flags(flags)
        return sum(
            1
            for s in self._samples
            if s.flag in flags and (label is None or s.label == label)
        )

    def pending_count(self, label=None):
        return self.count({Flag.PENDING}, label)

    def hybrid_count(self, label=None):
        return self.count(HYBRID_FLAGS, label)

    def view(self, flags, labels=None):
        """Concatenated features/labels of matching samples, insertion order."""
        flags = _as_flags(flags)
        labels = None if labels is None else {int(l) for l in labels}
        picked = [
            s
            for s in self._samples
            if s.flag in flags and (labels is None or s.label in labels)
        ]
        dim = self.feature_dim or 0
        if not picked:
            return LabeledMatrix(
                np.empty((0, dim)), np.empty(0, dtype=np.int64), self.class_count
            )
        features = np.stack([s.features for s in picked])
        y = np.array([s.label for s in picked], dtype=np.int64)
        return LabeledMatrix(features, y, self.class_count)

    def hybrid_view(self, labels=None):
        return self.view(HYBRID_FLAGS, labels)

    def commit_pending(self, label):
        """Flip every pending sample of `label` to synthetic (in place)."""
        self._samples = [
            replace(s, flag=Flag.SYNTHETIC)
            if s.flag is Flag.PENDING and s.label == label
            else s
            for s in self._samples
        ]
        return self

    def reject_pending(self, label):
        """Delete every pending sample of `label`; the hybrid view is untouched."""
        self._samples = [
            s
            for s in self._samples
            if not (s.flag is Flag.PENDING and s.label == label)
        ]
        return self

    def binarize_for_label(self, label, flags=HYBRID_FLAGS):
        """Selected view with targets 1 for `label`, 0 otherwise; store untouched."""
        if not (0 <= label < self.class_count):
            raise DataError(f"label {label} outside [0, {self.class_count})")
        view = self.view(flags)
        targets = (view.labels == label).astype(np.int64)
        return LabeledMatrix(view.features, targets, 2)

    # -- persistence -----------------------------------------------------

    HEADER_PREFIX = "# sample-store v1"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(
                f"{self.HEADER_PREFIX} class_count={self.class_count} "
                f"feature_dim={self.feature_dim or 0}\n"
            )
            for s in self._samples:
                feats = " ".join(repr(float(v)) for v in s.features)
                fh.write(f"{s.label} {s.flag.value} {s.round} {feats}\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines or not lines[0].startswith(cls.HEADER_PREFIX):
            raise DataError(f"{path}: not a sample-store file")
        meta = dict(kv.split("=") for kv in lines[0][len(cls.HEADER_PREFIX):].split())
        store = cls(int(meta["class_count"]))
        dim = int(meta["feature_dim"])
        store.feature_dim = dim if dim > 0 else None
        for i, line in enumerate(lines[1:], start=1):
            if not line.strip():
                continue
            parts = line.split()
            label, flag, rnd = int(parts[0]), Flag(parts[1]), int(parts[2])
            features = np.array([float(v) for v in parts[3:]], dtype=np.float64)
            if store.feature_dim is not None and features.shape[0] != store.feature_dim:
                raise DataError(f"{path}: line {i}: feature width mismatch")
            # Bypass insert() so committed synthetic rows reload as-is.
            store._samples.append(FlaggedSample(features, label, flag, rnd))
        return store

    def export_hybrid_csv(self, path):
        """Hybrid view as CSV rows: features then the integer label."""
        view = self.hybrid_view()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row, label in zip(view.features, view.labels):
                w.writerow([repr(float(v)) for v in row] + [int(label)])
