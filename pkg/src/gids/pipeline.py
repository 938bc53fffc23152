"""CSV ingestion and the fitted preprocessing chain.

The chain mirrors a typical intrusion-detection feature pipeline:
ordinal label encoding for categorical columns, z-score scaling with
the population standard deviation, then PCA onto a smaller number of
components. Everything is deterministic: encoder codes follow
lexicographic category order and the PCA eigensolver fixes eigenvector
signs.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .eigen import symmetric_eig
from .errors import (
    ConfigError,
    DataError,
    IngestionError,
    SchemaError,
    SplitError,
    UnseenCategoryError,
)
from .validation import as_label_vector, check_matching_rows

NUMERIC = "numeric"
CATEGORICAL = "categorical"
LABEL = "label"
_KINDS = (NUMERIC, CATEGORICAL, LABEL)


@dataclass(frozen=True)
class Schema:
    """Per-column kinds; exactly one column must be the label."""

    kinds: tuple

    def __post_init__(self):
        for k in self.kinds:
            if k not in _KINDS:
                raise SchemaError(f"unknown column kind {k!r}")
        if sum(k == LABEL for k in self.kinds) != 1:
            raise SchemaError("schema must contain exactly one label column")

    def __len__(self):
        return len(self.kinds)

    @property
    def label_index(self):
        return self.kinds.index(LABEL)

    @property
    def feature_indices(self):
        return tuple(i for i, k in enumerate(self.kinds) if k != LABEL)

    @property
    def categorical_indices(self):
        return tuple(i for i, k in enumerate(self.kinds) if k == CATEGORICAL)

    @classmethod
    def from_text(cls, text):
        kinds = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                kinds.append(line)
        return cls(tuple(kinds))

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_text(self):
        return "".join(k + "\n" for k in self.kinds)


@dataclass
class RawTable:
    """Parsed rows: numeric cells as floats, categorical/label cells as strings."""

    schema: Schema
    rows: list

    @property
    def n_rows(self):
        return len(self.rows)

    def labels(self):
        li = self.schema.label_index
        return [row[li] for row in self.rows]


def load_dataset(csv_text, schema, header=False):
    """Parse comma-separated text into a RawTable, validating against the schema."""
    reader = csv.reader(io.StringIO(csv_text))
    rows = []
    for i, cells in enumerate(reader):
        if header and i == 0:
            continue
        row_index = len(rows)
        if len(cells) != len(schema):
            raise IngestionError(
                f"row {row_index}: expected {len(schema)} columns, got {len(cells)}"
            )
        parsed = []
        for j, (cell, kind) in enumerate(zip(cells, schema.kinds)):
            cell = cell.strip()
            if kind == NUMERIC:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise IngestionError(
                        f"row {row_index}: column {j}: could not parse {cell!r} as numeric"
                    ) from None
            else:
                if kind == LABEL and not cell:
                    raise IngestionError(f"row {row_index}: empty label")
                parsed.append(cell)
        rows.append(parsed)
    return RawTable(schema=schema, rows=rows)


def load_dataset_file(path, schema, header=False):
    with open(path) as fh:
        return load_dataset(fh.read(), schema, header=header)


@dataclass
class LabeledMatrix:
    """Feature matrix with integer class labels in {0, ..., class_count-1}."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        if f.ndim != 2:
            raise DataError(f"features must be 2-D, got ndim={f.ndim}")
        if f.size and not np.all(np.isfinite(f)):
            raise DataError("features contain non-finite values")
        self.features = f
        self.labels = as_label_vector(self.labels, "labels")
        check_matching_rows(self.features, self.labels)
        if self.labels.size and self.labels.max() >= self.class_count:
            raise DataError(
                f"label {int(self.labels.max())} >= class_count {self.class_count}"
            )

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledMatrix(self.features[indices], self.labels[indices], self.class_count)


@dataclass
class TransformReport:
    """Unseen categories observed while transforming (non-strict mode)."""

    unseen: list = field(default_factory=list)  # (row, column, value) triples

    @property
    def unseen_count(self):
        return len(self.unseen)


class PreprocessingPipeline(BaseEstimator):
    """Encode -> z-score -> PCA transformer over RawTable inputs.

    Parameters
    ----------
    target_dims : number of principal components kept.
    variance_floor : if the kept components explain less cumulative
        variance than this, a warning string is recorded on the model
        (fitting still succeeds).
    strict : reject unseen categories at transform time instead of
        mapping them to the reserved code n (the count of known
        categories for that column).
    """

    def __init__(self, target_dims=20, variance_floor=0.90, strict=False):
        self.target_dims = target_dims
        self.variance_floor = variance_floor
        self.strict = strict

    # -- fitting -------------------------------------------------------

    def fit(self, table, y=None):
        if table.n_rows == 0:
            raise DataError("cannot fit the pipeline on an empty table")
        if not (0.0 < self.variance_floor <= 1.0):
            raise ConfigError("variance_floor must lie in (0, 1]")
        schema = table.schema
        d_in = len(schema.feature_indices)
        if not (1 <= self.target_dims <= d_in):
            raise ConfigError(
                f"target_dims={self.target_dims} out of range for {d_in} features"
            )

        self.schema_ = schema
        self.encoders_ = {}
        for col in schema.categorical_indices:
            cats = sorted({row[col] for row in table.rows})
            self.encoders_[col] = {c: i for i, c in enumerate(cats)}
        self.label_classes_ = sorted(set(table.labels()))
        self.label_codes_ = {c: i for i, c in enumerate(self.label_classes_)}
        self.class_count_ = len(self.label_classes_)

        X = self._encode_features(table, TransformReport())
        self.means_ = X.mean(axis=0)
        self.stds_ = np.sqrt(np.mean((X - self.means_) ** 2, axis=0))
        Z = self._scale(X)

        centered = Z - Z.mean(axis=0)
        cov = (centered.T @ centered) / table.n_rows
        values, vectors = symmetric_eig(cov, tol=1e-10)
        values = np.clip(values, 0.0, None)
        total = float(values.sum())
        if total > 0.0:
            ratios = values / total
        else:
            ratios = np.zeros_like(values)
            ratios[0] = 1.0
        self.d_in_ = d_in
        self.d_out_ = self.target_dims
        self.components_ = vectors[:, : self.target_dims]
        self.explained_variance_ratio_ = ratios[: self.target_dims].copy()
        self.all_variance_ratios_ = ratios
        self.cumulative_variance_ = float(self.explained_variance_ratio_.sum())
        self.warnings_ = []
        if self.cumulative_variance_ < self.variance_floor:
            self.warnings_.append(
                f"cumulative explained variance {self.cumulative_variance_:.4f} "
                f"below floor {self.variance_floor}"
            )
        self.last_transform_report_ = None
        return self

    # -- transform steps ----------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "components_"):
            raise DataError("pipeline is not fitted")

    def _encode_features(self, table, report):
        if table.schema.kinds != self.schema_.kinds:
            raise SchemaError("table schema does not match the fitted schema")
        cols = self.schema_.feature_indices
        X = np.empty((table.n_rows, len(cols)), dtype=np.float64)
        for out_j, col in enumerate(cols):
            enc = self.encoders_.get(col)
            if enc is None:
                for i, row in enumerate(table.rows):
                    X[i, out_j] = row[col]
            else:
                reserved = len(enc)
                for i, row in enumerate(table.rows):
                    code = enc.get(row[col])
                    if code is None:
                        if self.strict:
                            raise UnseenCategoryError(
                                f"row {i}: column {col}: unseen category {row[col]!r}"
                            )
                        report.unseen.append((i, col, row[col]))
                        code = reserved
                    X[i, out_j] = code
        return X

    def _scale(self, X):
        # Zero-variance features carry no information; map them to 0.
        Z = np.zeros_like(X)
        nz = self.stds_ > 0.0
        Z[:, nz] = (X[:, nz] - self.means_[nz]) / self.stds_[nz]
        return Z

    def encode(self, table):
        """Encoded (pre-scaling) feature matrix and integer labels."""
        self._check_fitted()
        report = TransformReport()
        X = self._encode_features(table, report)
        y = self._encode_labels(table)
        self.last_transform_report_ = report
        return X, y

    def standardize(self, table):
        """Encoded and z-scored features (the pre-PCA representation)."""
        self._check_fitted()
        report = TransformReport()
        X = self._encode_features(table, report)
        self.last_transform_report_ = report
        return self._scale(X)

    def _encode_labels(self, table):
        y = np.empty(table.n_rows, dtype=np.int64)
        li = self.schema_.label_index
        for i, row in enumerate(table.rows):
            code = self.label_codes_.get(row[li])
            if code is None:
                raise UnseenCategoryError(f"row {i}: unseen label {row[li]!r}")
            y[i] = code
        return y

    def transform(self, table):
        """Project a table through the fitted chain to a LabeledMatrix."""
        self._check_fitted()
        report = TransformReport()
        X = self._encode_features(table, report)
        y = self._encode_labels(table)
        Z = self._scale(X)
        projected = Z @ self.components_
        self.last_transform_report_ = report
        return LabeledMatrix(projected, y, self.class_count_)

    def fit_transform(self, table, y=None):
        return self.fit(table).transform(table)

    # -- persistence ----------------------------------------------------

    def save(self, path):
        self._check_fitted()
        lines = ["pipeline v1"]
        lines.append("kinds " + " ".join(self.schema_.kinds))
        lines.append(f"target_dims {self.target_dims}")
        lines.append(f"variance_floor {repr(float(self.variance_floor))}")
        lines.append(f"strict {int(self.strict)}")
        lines.append("labels " + " ".join(self.label_classes_))
        for col in sorted(self.encoders_):
            enc = self.encoders_[col]
            cats = sorted(enc, key=enc.get)
            lines.append(f"encoder {col} " + " ".join(cats))
        lines.append("means " + _join_floats(self.means_))
        lines.append("stds " + _join_floats(self.stds_))
        lines.append(f"components {self.d_in_} {self.d_out_}")
        for i in range(self.d_in_):
            lines.append(_join_floats(self.components_[i]))
        lines.append("ratios " + _join_floats(self.explained_variance_ratio_))
        lines.append("all_ratios " + _join_floats(self.all_variance_ratios_))
        for w in self.warnings_:
            lines.append("warning " + w)
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != "pipeline v1":
            raise DataError(f"{path}: not a pipeline model file")
        fields = {}
        encoders = {}
        warnings = []
        components = None
        i = 1
        while i < len(lines):
            key, _, rest = lines[i].partition(" ")
            if key == "encoder":
                col, _, cats = rest.partition(" ")
                encoders[int(col)] = {c: k for k, c in enumerate(cats.split())}
            elif key == "components":
                d_in, d_out = (int(v) for v in rest.split())
                block = lines[i + 1 : i + 1 + d_in]
                components = np.array(
                    [[float(v) for v in row.split()] for row in block]
                )
                fields["d_in"], fields["d_out"] = d_in, d_out
                i += d_in
            elif key == "warning":
                warnings.append(rest)
            else:
                fields[key] = rest
            i += 1
        pipe = cls(
            target_dims=int(fields["target_dims"]),
            variance_floor=float(fields["variance_floor"]),
            strict=bool(int(fields["strict"])),
        )
        pipe.schema_ = Schema(tuple(fields["kinds"].split()))
        pipe.encoders_ = encoders
        pipe.label_classes_ = fields["labels"].split()
        pipe.label_codes_ = {c: i for i, c in enumerate(pipe.label_classes_)}
        pipe.class_count_ = len(pipe.label_classes_)
        pipe.means_ = _parse_floats(fields["means"])
        pipe.stds_ = _parse_floats(fields["stds"])
        pipe.d_in_, pipe.d_out_ = fields["d_in"], fields["d_out"]
        pipe.components_ = components
        pipe.explained_variance_ratio_ = _parse_floats(fields["ratios"])
        pipe.all_variance_ratios_ = _parse_floats(fields["all_ratios"])
        pipe.cumulative_variance_ = float(pipe.explained_variance_ratio_.sum())
        pipe.warnings_ = warnings
        pipe.last_transform_report_ = None
        return pipe


def _join_floats(values):
    return " ".join(repr(float(v)) for v in values)


def _parse_floats(text):
    return np.array([float(v) for v in text.split()], dtype=np.float64)


def sparsity(matrix):
    """Fraction of exactly-zero entries: 1 - nonzero / total."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        raise DataError("sparsity is undefined for an empty matrix")
    return 1.0 - np.count_nonzero(matrix) / matrix.size


def stratified_split_indices(labels, train_size, seed):
    """Seeded per-class proportional split of row indices.

    Both partitions keep at least one row of every class; the training
    side gets exactly `train_size` rows apportioned by largest
    remainder over the class counts.
    """
    labels = as_label_vector(labels, "labels")
    n = labels.shape[0]
    if not (0 < train_size < n):
        raise SplitError(f"train_size must be in (0, {n}), got {train_size}")
    classes, counts = np.unique(labels, return_counts=True)
    for c, cnt in zip(classes, counts):
        if cnt < 2:
            raise SplitError(f"class {int(c)} has {int(cnt)} sample(s); need >= 2")
    k = len(classes)
    if train_size < k:
        raise SplitError(f"train_size {train_size} cannot cover all {k} classes")
    if train_size > n - k:
        raise SplitError(
            f"train_size {train_size} leaves no test row for some class (n={n}, classes={k})"
        )

    quotas = train_size * counts / n
    take = np.clip(np.floor(quotas).astype(np.int64), 1, counts - 1)
    remainder = int(train_size - take.sum())
    fractions = quotas - np.floor(quotas)
    while remainder != 0:
        if remainder > 0:
            order = sorted(range(k), key=lambda i: (-fractions[i], classes[i]))
            moved = False
            for i in order:
                if take[i] < counts[i] - 1:
                    take[i] += 1
                    remainder -= 1
                    moved = True
                    if remainder == 0:
                        break
            if not moved:
                raise SplitError("split quota adjustment failed")  # unreachable by bounds
        else:
            order = sorted(range(k), key=lambda i: (fractions[i], classes[i]))
            moved = False
            for i in order:
                if take[i] > 1:
                    take[i] -= 1
                    remainder += 1
                    moved = True
                    if remainder == 0:
                        break
            if not moved:
                raise SplitError("split quota adjustment failed")

    rng = np.random.default_rng(seed)
    train_parts = []
    for i, c in enumerate(classes):
        idx = np.flatnonzero(labels == c)
        perm = rng.permutation(idx)
        train_parts.append(perm[: take[i]])
    train_idx = np.sort(np.concatenate(train_parts))
    mask = np.ones(n, dtype=bool)
    mask[train_idx] = False
    test_idx = np.flatnonzero(mask)
    return train_idx, test_idx


def stratified_split(data, train_size, seed):
    """Split a LabeledMatrix into disjoint (train, test) parts."""
    train_idx, test_idx = stratified_split_indices(data.labels, train_size, seed)
    return data.subset(train_idx), data.subset(test_idx)
