"""Multiclass intrusion-detection classifier on top of the MLP engine.

fit() always re-initializes the network from the configured seed, so
two fits on different data isolate the data change rather than
warm-start luck. That is what makes the controller's before/after
comparison meaningful.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DataError, DimensionError
from .metrics import evaluate_predictions
from .neural import SgdOptimizer, _loss_and_grads, init_mlp
from .validation import as_float_matrix, as_label_vector, check_matching_rows


class IdsClassifier(BaseEstimator):
    """Feed-forward softmax classifier trained with minibatch cross-entropy."""

    def __init__(self, hidden_dims=(50, 50), epochs=100, batch_size=64,
                 learning_rate=0.01, momentum=0.9, seed=0, class_count=None):
        self.hidden_dims = hidden_dims
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.seed = seed
        self.class_count = class_count

    def fit(self, X, y, eval_set=None):
        """Train from a fresh seed-determined initialization.

        eval_set, when given as (features, labels), adds a per-epoch
        validation entry to eval_log_: (epoch, macro_f1, per-label f1).
        """
        X = as_float_matrix(X)
        y = as_label_vector(y)
        check_matching_rows(X, y)
        if X.shape[0] == 0:
            raise DataError("cannot train on empty data")
        n_classes = self.class_count or int(y.max()) + 1
        if y.max() >= n_classes:
            raise DataError(f"label {int(y.max())} >= class_count {n_classes}")

        dims = [X.shape[1], *self.hidden_dims, n_classes]
        net = init_mlp(dims, output_activation="softmax", seed=self.seed)
        optimizer = SgdOptimizer(self.learning_rate, self.momentum)
        rng = np.random.default_rng([self.seed, 0xB7])

        self.classes_ = np.arange(n_classes)
        self.n_classes_ = n_classes
        self.loss_log_ = []
        self.eval_log_ = []
        n = X.shape[0]
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            batch_losses = []
            for start in range(0, n, self.batch_size):
                picks = order[start : start + self.batch_size]
                value, grads = _loss_and_grads(net, X[picks], y[picks], "cross_entropy")
                optimizer.step(net, grads, direction="descend")
                batch_losses.append(value)
            self.loss_log_.append(float(np.mean(batch_losses)))
            if eval_set is not None:
                self.net_ = net
                report = self.evaluate(eval_set[0], eval_set[1])
                self.eval_log_.append(
                    (epoch + 1, report.macro_f1, tuple(float(v) for v in report.f1))
                )
        self.net_ = net
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise DataError("classifier is not fitted")

    def predict_proba(self, X):
        self._check_fitted()
        X = as_float_matrix(X)
        if X.shape[1] != self.net_.input_dim:
            raise DimensionError(
                f"X has {X.shape[1]} features, model expects {self.net_.input_dim}"
            )
        return self.net_.forward(X)

    def predict(self, X):
        """Argmax class per row; ties break toward the lowest label index."""
        return np.argmax(self.predict_proba(X), axis=1)

    def evaluate(self, X, y, role=None):
        """Full per-label precision/recall/F1 report on (X, y)."""
        y = as_label_vector(y)
        preds = self.predict(X)
        return evaluate_predictions(preds, y, self.n_classes_, role=role)

    def write_eval_log_csv(self, path):
        """Per-epoch validation F1 trace captured during fit(eval_set=...)."""
        self._check_fitted()
        with open(path, "w") as fh:
            labels = ",".join(f"f1_label{c}" for c in range(self.n_classes_))
            fh.write(f"epoch,macro_f1,{labels}\n")
            for epoch, macro, f1s in self.eval_log_:
                row = ",".join(repr(v) for v in f1s)
                fh.write(f"{epoch},{repr(macro)},{row}\n")
