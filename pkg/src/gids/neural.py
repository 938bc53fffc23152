"""From-scratch feed-forward network engine.

One dense MLP implementation serves the multiclass classifier, the
generator, and the discriminator. Gradients are exact analytic
derivatives of the mean loss over the batch; the optimizer is plain
minibatch gradient ascent/descent with optional classical momentum.
All arithmetic is float64.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DimensionError, TrainingError

HIDDEN_ACTIVATIONS = ("relu",)
OUTPUT_ACTIVATIONS = ("softmax", "sigmoid", "linear")

# Probability clamp applied inside log terms of the adversarial losses.
PROB_EPS = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be positive")


class Mlp:
    """Dense network: weights[i] is (out, in) for layer i, biases[i] is (out,)."""

    def __init__(self, layer_dims, hidden_activation, output_activation, weights, biases):
        if hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"unsupported hidden activation {hidden_activation!r}")
        if output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"unsupported output activation {output_activation!r}")
        self.layer_dims = tuple(int(d) for d in layer_dims)
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation
        self.weights = weights
        self.biases = biases
        for i, (w, b) in enumerate(zip(weights, biases)):
            expect = (self.layer_dims[i + 1], self.layer_dims[i])
            if w.shape != expect or b.shape != (expect[0],):
                raise DimensionError(f"layer {i}: parameter shapes {w.shape}/{b.shape} "
                                     f"inconsistent with dims {expect}")

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    def parameter_count(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self):
        return Mlp(
            self.layer_dims,
            self.hidden_activation,
            self.output_activation,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def forward(self, batch):
        """Activations of the output layer for a (n, input_dim) batch."""
        hs, _ = _forward_cached(self, batch)
        return hs[-1]

    def flat_params(self):
        return np.concatenate(
            [w.ravel() for w in self.weights] + [b.ravel() for b in self.biases]
        )

    def set_flat_params(self, flat):
        offset = 0
        for w in self.weights:
            w[...] = flat[offset : offset + w.size].reshape(w.shape)
            offset += w.size
        for b in self.biases:
            b[...] = flat[offset : offset + b.size]
            offset += b.size


def init_mlp(layer_dims, hidden_activation="relu", output_activation="softmax", seed=0):
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    if len(layer_dims) < 2:
        raise ConfigError("an MLP needs at least input and output layers")
    if any(d < 1 for d in layer_dims):
        raise ConfigError("layer dims must be positive")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(layer_dims, hidden_activation, output_activation, weights, biases)


# -- forward / backward ----------------------------------------------------


def softmax(z):
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z):
    return np.logaddexp(0.0, z)


def _apply_output(activation, z):
    if activation == "softmax":
        return softmax(z)
    if activation == "sigmoid":
        return sigmoid(z)
    return z


def _forward_cached(mlp, batch):
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"batch must be 2-D, got ndim={x.ndim}")
    if x.shape[1] != mlp.input_dim:
        raise DimensionError(
            f"batch width {x.shape[1]} does not match input dim {mlp.input_dim}"
        )
    hs = [x]  # inputs to each layer; hs[-1] ends up as the network output
    zs = []
    h = x
    last = mlp.n_layers - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = h @ w.T + b
        zs.append(z)
        h = _apply_output(mlp.output_activation, z) if i == last else np.maximum(z, 0.0)
        hs.append(h)
    return hs, zs


@dataclass
class ParamGrads:
    """Gradient arrays matching an Mlp's weights/biases layer by layer."""

    weights: list
    biases: list

    def scaled(self, factor):
        return ParamGrads(
            [w * factor for w in self.weights], [b * factor for b in self.biases]
        )

    def added(self, other):
        return ParamGrads(
            [a + b for a, b in zip(self.weights, other.weights)],
            [a + b for a, b in zip(self.biases, other.biases)],
        )

    def flat(self):
        return np.concatenate(
            [w.ravel() for w in self.weights] + [b.ravel() for b in self.biases]
        )


def _backward(mlp, hs, zs, d_final_pre):
    """Backprop from dLoss/d(final pre-activation); also returns dLoss/d(input)."""
    n_layers = mlp.n_layers
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers
    d = d_final_pre
    for i in range(n_layers - 1, -1, -1):
        d_weights[i] = d.T @ hs[i]
        d_biases[i] = d.sum(axis=0)
        d = d @ mlp.weights[i]
        if i > 0:
            d = d * (zs[i - 1] > 0.0)  # ReLU: subgradient 0 at z == 0
    return ParamGrads(d_weights, d_biases), d


def _cross_entropy(mlp, hs, zs, targets):
    logits = zs[-1]
    n = logits.shape[0]
    labels = np.asarray(targets)
    if labels.ndim != 1 or labels.shape[0] != n:
        raise DimensionError("cross_entropy targets must be one label per row")
    labels = labels.astype(np.int64)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= mlp.output_dim:
        raise DataError("cross_entropy target outside the output range")
    zmax = logits.max(axis=1)
    lse = zmax + np.log(np.exp(logits - zmax[:, None]).sum(axis=1))
    value = float(np.mean(lse - logits[np.arange(n), labels]))
    probs = hs[-1]
    d_pre = probs.copy()
    d_pre[np.arange(n), labels] -= 1.0
    return value, d_pre / n


def _binary_cross_entropy(mlp, hs, zs, targets):
    logits = zs[-1]
    n = logits.shape[0]
    t = np.asarray(targets, dtype=np.float64).reshape(logits.shape)
    value = float(np.mean(_softplus(logits) - t * logits))
    return value, (hs[-1] - t) / n


_LOSSES = {
    "cross_entropy": ("softmax", _cross_entropy),
    "binary_cross_entropy": ("sigmoid", _binary_cross_entropy),
}


def _loss_and_grads(mlp, batch, targets, loss):
    try:
        required_head, fn = _LOSSES[loss]
    except KeyError:
        raise ConfigError(f"unknown loss {loss!r}") from None
    if mlp.output_activation != required_head:
        raise ConfigError(
            f"loss {loss!r} requires a {required_head} head, "
            f"model has {mlp.output_activation!r}"
        )
    hs, zs = _forward_cached(mlp, batch)
    value, d_pre = fn(mlp, hs, zs, targets)
    grads, _ = _backward(mlp, hs, zs, d_pre)
    return value, grads


def backprop_grads(mlp, batch, targets, loss):
    """Exact gradients of the mean loss over the batch, shaped like the parameters."""
    _, grads = _loss_and_grads(mlp, batch, targets, loss)
    return grads


def loss_value(mlp, batch, targets, loss):
    """The mean loss the gradients of `backprop_grads` belong to."""
    try:
        required_head, fn = _LOSSES[loss]
    except KeyError:
        raise ConfigError(f"unknown loss {loss!r}") from None
    if mlp.output_activation != required_head:
        raise ConfigError(
            f"loss {loss!r} requires a {required_head} head, "
            f"model has {mlp.output_activation!r}"
        )
    hs, zs = _forward_cached(mlp, batch)
    value, _ = fn(mlp, hs, zs, targets)
    return value


def clamp_probs(p):
    """Clamp probabilities away from {0, 1} before they enter a log."""
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def generator_loss_value(generator, discriminator, noise, saturating=True):
    """Adversarial generator loss at the current parameters.

    saturating=True gives mean log(1 - D(G(z))); False gives the
    non-saturating -mean log D(G(z)).
    """
    fake = generator.forward(noise)
    p = clamp_probs(discriminator.forward(fake))
    if saturating:
        return float(np.mean(np.log1p(-p)))
    return float(-np.mean(np.log(p)))


def generator_grads(generator, discriminator, noise, saturating=True):
    """Gradients of the adversarial generator loss w.r.t. generator parameters.

    The discriminator is treated as a frozen function; the chain rule
    runs through it without touching its parameters.
    """
    if generator.output_activation != "linear":
        raise ConfigError("generator gradients require a linear generator head")
    if discriminator.output_activation != "sigmoid":
        raise ConfigError("generator gradients require a sigmoid discriminator head")
    hs_g, zs_g = _forward_cached(generator, noise)
    fake = hs_g[-1]
    hs_d, zs_d = _forward_cached(discriminator, fake)
    p = hs_d[-1]
    m = noise.shape[0]
    p_c = clamp_probs(p)
    if saturating:
        value = float(np.mean(np.log1p(-p_c)))
        d_pre = -p / m  # d/dz log(1 - sigmoid(z)) = -sigmoid(z)
    else:
        value = float(-np.mean(np.log(p_c)))
        d_pre = (p - 1.0) / m  # d/dz -log sigmoid(z) = sigmoid(z) - 1
    _, d_fake = _backward(discriminator, hs_d, zs_d, d_pre)
    grads, _ = _backward(generator, hs_g, zs_g, d_fake)
    return grads, value


class SgdOptimizer:
    """Minibatch gradient steps with classical momentum: v <- mu*v + g, theta -/+= lr*v."""

    def __init__(self, learning_rate, momentum=0.0):
        if learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not (0.0 <= momentum < 1.0):
            raise ConfigError("momentum must lie in [0, 1)")
        self.learning_rate = learning_rate
        self.momentum = momentum
        self._velocity = None

    def step(self, mlp, grads, direction="descend"):
        if direction not in ("ascend", "descend"):
            raise ConfigError(f"direction must be ascend or descend, got {direction!r}")
        sign = -1.0 if direction == "descend" else 1.0
        if self._velocity is None:
            self._velocity = ParamGrads(
                [np.zeros_like(w) for w in mlp.weights],
                [np.zeros_like(b) for b in mlp.biases],
            )
        for i in range(mlp.n_layers):
            for grad, vel, param, kind in (
                (grads.weights[i], self._velocity.weights[i], mlp.weights[i], "weights"),
                (grads.biases[i], self._velocity.biases[i], mlp.biases[i], "biases"),
            ):
                if not np.all(np.isfinite(grad)):
                    raise TrainingError(f"non-finite gradient in layer {i} {kind}")
                vel *= self.momentum
                vel += grad
                param += sign * self.learning_rate * vel
        return mlp


def apply_update(mlp, grads, config, direction="descend", optimizer=None):
    """One parameter update; pass the same optimizer back in to keep momentum state."""
    if optimizer is None:
        optimizer = SgdOptimizer(config.learning_rate, config.momentum)
    optimizer.step(mlp, grads, direction)
    return mlp, optimizer


# -- checkpoint io -----------------------------------------------------------


def save_mlp(mlp, path):
    """Text checkpoint: header plus row-major parameters at full precision."""
    lines = ["mlp v1"]
    lines.append("dims " + " ".join(str(d) for d in mlp.layer_dims))
    lines.append(f"hidden {mlp.hidden_activation}")
    lines.append(f"output {mlp.output_activation}")
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        lines.append(f"layer {i} weight")
        for row in w:
            lines.append(" ".join(repr(float(v)) for v in row))
        lines.append(f"layer {i} bias")
        lines.append(" ".join(repr(float(v)) for v in b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mlp(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "mlp v1":
        raise DataError(f"{path}: not an mlp checkpoint")
    dims = tuple(int(v) for v in lines[1].split()[1:])
    hidden = lines[2].split()[1]
    output = lines[3].split()[1]
    weights, biases = [], []
    i = 4
    for layer in range(len(dims) - 1):
        assert lines[i] == f"layer {layer} weight"
        rows = dims[layer + 1]
        w = np.array(
            [[float(v) for v in lines[i + 1 + r].split()] for r in range(rows)]
        )
        i += 1 + rows
        assert lines[i] == f"layer {layer} bias"
        b = np.array([float(v) for v in lines[i + 1].split()])
        i += 2
        weights.append(w)
        biases.append(b)
    return Mlp(dims, hidden, output, weights, biases)
