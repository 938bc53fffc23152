"""Per-class GAN: a generator/discriminator pair trained adversarially
on the positive rows of one class, then asked for new feature vectors.

The discriminator maximizes mean[log D(x) + log(1 - D(G(z)))] over a
real batch and a generated batch; the generator minimizes
mean[log(1 - D(G(z)))] (saturating, the default) or the non-saturating
-mean[log D(G(z))] variant. Probabilities are clamped to
[1e-7, 1 - 1e-7] inside every log so objective values stay finite even
when the discriminator saturates.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ConfigError, DimensionError, TrainingError
from .neural import (
    Mlp,
    SgdOptimizer,
    backprop_grads,
    clamp_probs,
    generator_grads,
    init_mlp,
)
from .store import Flag, FlaggedSample

NOISE_DISTRIBUTIONS = ("standard_normal",)
GENERATOR_LOSSES = ("paper", "non_saturating")


@dataclass(frozen=True)
class GanConfig:
    noise_dim: int = 5
    k: int = 1  # discriminator steps per generator step
    batch_size: int = 64
    epochs: int = 500
    noise: str = "standard_normal"
    generator_loss: str = "paper"
    learning_rate: float = 0.001
    momentum: float = 0.9
    hidden_dims: tuple = (50, 50)
    seed: int = 0

    def __post_init__(self):
        if min(self.noise_dim, self.k, self.batch_size, self.epochs) < 1:
            raise ConfigError("noise_dim, k, batch_size, and epochs must be positive")
        if self.noise not in NOISE_DISTRIBUTIONS:
            raise ConfigError(f"unknown noise distribution {self.noise!r}")
        if self.generator_loss not in GENERATOR_LOSSES:
            raise ConfigError(f"unknown generator loss {self.generator_loss!r}")


@dataclass
class GanPair:
    generator: Mlp
    discriminator: Mlp
    config: GanConfig
    training_log: list = field(default_factory=list)  # (d_objective, g_loss) per epoch
    d_steps: int = 0
    g_steps: int = 0

    def __post_init__(self):
        if self.generator.output_dim != self.discriminator.input_dim:
            raise DimensionError(
                "generator output dim must equal discriminator input dim"
            )

    @property
    def data_dim(self):
        return self.generator.output_dim

    def write_log_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epoch,d_objective,g_loss\n")
            for epoch, (d_obj, g_loss) in enumerate(self.training_log, start=1):
                fh.write(f"{epoch},{repr(d_obj)},{repr(g_loss)}\n")


def new_gan_pair(data_dim, config):
    """Freshly initialized pair; halves get independent seeds derived from config.seed."""
    gen_seed, disc_seed = _derived_seeds(config.seed, 2)
    generator = init_mlp(
        [config.noise_dim, *config.hidden_dims, data_dim],
        output_activation="linear",
        seed=gen_seed,
    )
    discriminator = init_mlp(
        [data_dim, *config.hidden_dims, 1],
        output_activation="sigmoid",
        seed=disc_seed,
    )
    return GanPair(generator, discriminator, config)


def _derived_seeds(seed, count):
    state = np.random.SeedSequence(seed).generate_state(count)
    return [int(v) for v in state]


def sample_noise(rng, count, config):
    """i.i.d. noise draws, one row per requested sample."""
    if count < 1:
        raise ConfigError("noise sample count must be >= 1")
    return rng.standard_normal((count, config.noise_dim))


def discriminator_objective(real_probs, fake_probs):
    """mean[log D(x) + log(1 - D(G(z)))] with clamped probabilities; always <= 0."""
    real = clamp_probs(np.asarray(real_probs, dtype=np.float64))
    fake = clamp_probs(np.asarray(fake_probs, dtype=np.float64))
    return float(np.mean(np.log(real)) + np.mean(np.log1p(-fake)))


def d_step(pair, real_batch, noise_batch, optimizer):
    """Ascend the discriminator on one real batch + one generated batch.

    Returns the objective at the pre-update parameters. The generator is
    untouched.
    """
    real_batch = np.asarray(real_batch, dtype=np.float64)
    if real_batch.ndim != 2 or real_batch.shape[1] != pair.data_dim:
        raise DimensionError(
            f"real batch width must be {pair.data_dim}, got shape {real_batch.shape}"
        )
    fake_batch = pair.generator.forward(noise_batch)
    objective = discriminator_objective(
        pair.discriminator.forward(real_batch),
        pair.discriminator.forward(fake_batch),
    )
    if not math.isfinite(objective):
        raise TrainingError("discriminator objective is non-finite")
    # Ascending the objective == descending BCE with targets 1 (real), 0 (fake).
    grads_real = backprop_grads(
        pair.discriminator, real_batch, np.ones(len(real_batch)), "binary_cross_entropy"
    )
    grads_fake = backprop_grads(
        pair.discriminator, fake_batch, np.zeros(len(fake_batch)), "binary_cross_entropy"
    )
    ascent_grads = grads_real.added(grads_fake).scaled(-1.0)
    optimizer.step(pair.discriminator, ascent_grads, direction="ascend")
    pair.d_steps += 1
    return objective


def g_step(pair, noise_batch, optimizer):
    """Descend the generator on its configured loss; the discriminator is frozen.

    Returns the loss at the pre-update parameters.
    """
    saturating = pair.config.generator_loss == "paper"
    grads, value = generator_grads(
        pair.generator, pair.discriminator, noise_batch, saturating=saturating
    )
    if not math.isfinite(value):
        raise TrainingError("generator loss is non-finite")
    optimizer.step(pair.generator, grads, direction="descend")
    pair.g_steps += 1
    return value


def train_gan(positives, config, data_dim=None):
    """Adversarial training on the positive-class rows.

    Each epoch runs k discriminator steps on fresh real/noise batches,
    then one generator step. Real minibatches sample with replacement
    when fewer positives than batch_size exist.
    """
    positives = np.asarray(positives, dtype=np.float64)
    if positives.ndim != 2 or positives.shape[0] == 0:
        raise TrainingError("no samples for label: GAN needs at least one positive row")
    if data_dim is None:
        data_dim = positives.shape[1]
    elif positives.shape[1] != data_dim:
        raise DimensionError(
            f"positives have width {positives.shape[1]}, expected {data_dim}"
        )
    pair = new_gan_pair(data_dim, config)
    batch_seed = _derived_seeds(config.seed, 3)[2]
    rng = np.random.default_rng(batch_seed)
    n = positives.shape[0]
    m = config.batch_size
    opt_d = SgdOptimizer(config.learning_rate, config.momentum)
    opt_g = SgdOptimizer(config.learning_rate, config.momentum)
    replacement = n < m
    for _ in range(config.epochs):
        d_objective = math.nan
        for _ in range(config.k):
            picks = rng.choice(n, size=m, replace=replacement)
            noise = sample_noise(rng, m, config)
            d_objective = d_step(pair, positives[picks], noise, opt_d)
        noise = sample_noise(rng, m, config)
        g_loss = g_step(pair, noise, opt_g)
        pair.training_log.append((d_objective, g_loss))
    return pair


def generate(pair, label, count, round_index=1, seed=None):
    """Wrap `count` generator outputs as pending samples for `label`."""
    if count < 0:
        raise ConfigError("generation count must be >= 0")
    if count == 0:
        return []
    if seed is None:
        seed = _derived_seeds(pair.config.seed, 4)[3]
    rng = np.random.default_rng(seed)
    noise = sample_noise(rng, count, pair.config)
    outputs = pair.generator.forward(noise)
    return [
        FlaggedSample(row, int(label), Flag.PENDING, int(round_index))
        for row in outputs
    ]


def generation_count(fraction, current_count):
    """Samples to synthesize for a class: ceil(fraction * current hybrid count)."""
    if fraction <= 0:
        raise ConfigError("synthesis fraction must be positive")
    return int(math.ceil(fraction * current_count))


class GanSynthesizer(BaseEstimator):
    """Estimator facade: fit on one class's rows, then sample new ones."""

    def __init__(self, noise_dim=5, k=1, batch_size=64, epochs=500,
                 generator_loss="paper", learning_rate=0.001, momentum=0.9, seed=0):
        self.noise_dim = noise_dim
        self.k = k
        self.batch_size = batch_size
        self.epochs = epochs
        self.generator_loss = generator_loss
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.seed = seed

    def _config(self):
        return GanConfig(
            noise_dim=self.noise_dim,
            k=self.k,
            batch_size=self.batch_size,
            epochs=self.epochs,
            generator_loss=self.generator_loss,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        self.pair_ = train_gan(X, self._config())
        self._sample_calls = 0
        return self

    def sample(self, n):
        if not hasattr(self, "pair_"):
            raise TrainingError("synthesizer is not fitted")
        self._sample_calls += 1
        seed = _derived_seeds(self.seed, 4 + self._sample_calls)[-1]
        rng = np.random.default_rng(seed)
        noise = sample_noise(rng, n, self.pair_.config)
        return self.pair_.generator.forward(noise)
