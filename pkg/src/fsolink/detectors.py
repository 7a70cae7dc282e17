"""The two receivers under comparison: coherent maximum-likelihood detection
and a trained DNN detector, plus the DNN training pipeline."""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import neural
from .channel import equalize
from .modem import Constellation, encode_one_hot
from .pipeline import RunSpec, esn0_db_to_n0, simulate_link_frame


class SnrPolicy(str, enum.Enum):
    """How training data relates to the evaluated Es/N0 grid.

    MATCHED trains a fresh detector at each evaluated Es/N0; MIXED trains a
    single detector on samples spread uniformly over the sweep grid, so one
    model can be reused across operating points.
    """

    MATCHED = "matched"
    MIXED = "mixed"


@dataclass(frozen=True)
class TrainingHyperparams:
    hidden_layers: int = 2
    neurons_per_layer: int = 40
    iterations: int = 1000
    sample_to_batch_ratio: int = 4
    training_set_size: int = 100_000
    learning_rate: float = 1e-2
    snr_policy: SnrPolicy = SnrPolicy.MATCHED

    def __post_init__(self):
        for name in ("hidden_layers", "neurons_per_layer", "iterations",
                     "sample_to_batch_ratio", "training_set_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.training_set_size % self.sample_to_batch_ratio != 0:
            raise ValueError("training_set_size must be divisible by sample_to_batch_ratio")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    def layer_sizes(self, order: int) -> tuple:
        return (2, *([self.neurons_per_layer] * self.hidden_layers), order)


@dataclass
class TrainingSet:
    """Standardized (Re, Im) features with one-hot labels and the scaling constants."""

    features: np.ndarray      # (N, 2), zero mean / unit variance per column
    labels: np.ndarray        # (N, M) one-hot
    feature_mean: np.ndarray  # (2,)
    feature_std: np.ndarray   # (2,)


@dataclass
class TrainedDetector:
    """A trained DNN detector plus everything needed to run and reproduce it."""

    params: neural.MlpParams
    feature_mean: np.ndarray
    feature_std: np.ndarray
    constellation_order: int
    training_meta: dict = field(default_factory=dict)

    def to_payload(self) -> neural.ModelPayload:
        return neural.ModelPayload(
            layer_sizes=self.params.layer_sizes,
            weights=self.params.weights,
            biases=self.params.biases,
            feature_mean=self.feature_mean,
            feature_std=self.feature_std,
            meta=self.training_meta,
        )

    @classmethod
    def from_payload(cls, payload: neural.ModelPayload) -> "TrainedDetector":
        params = neural.MlpParams(
            layer_sizes=payload.layer_sizes,
            weights=payload.weights,
            biases=payload.biases,
        )
        return cls(
            params=params,
            feature_mean=payload.feature_mean,
            feature_std=payload.feature_std,
            constellation_order=payload.layer_sizes[-1],
            training_meta=payload.meta,
        )


def ml_detect(r, h_hat, constellation: Constellation) -> np.ndarray:
    """Minimum-distance detection: argmin_m |r - h_hat * point_m|^2.

    Ties break toward the lowest index.
    """
    r = np.asarray(r, dtype=np.complex128)
    h_hat = np.asarray(h_hat, dtype=np.float64)
    if r.shape != h_hat.shape:
        raise ValueError("r and h_hat must have the same length")
    if h_hat.size and h_hat.min() <= 0:
        raise ValueError("h_hat must be strictly positive")
    d2 = np.abs(r[:, None] - h_hat[:, None] * constellation.points[None, :]) ** 2
    return np.argmin(d2, axis=1)


def build_training_set(run: RunSpec, esn0_db, hp: TrainingHyperparams,
                       rng: np.random.Generator) -> TrainingSet:
    """Simulate the full front end and emit standardized training data.

    `esn0_db` is a single operating point for the matched policy, or a
    sequence of grid values for the mixed policy (the set is then split
    evenly over the grid and shuffled).
    """
    n = hp.training_set_size
    if np.isscalar(esn0_db):
        frame = simulate_link_frame(run, n, esn0_db_to_n0(float(esn0_db)), rng)
        indices, r, h_hat = frame.indices, frame.r, frame.h_hat
    else:
        grid = [float(v) for v in esn0_db]
        if not grid:
            raise ValueError("esn0_db grid must be nonempty")
        counts = np.full(len(grid), n // len(grid))
        counts[: n % len(grid)] += 1
        parts = [
            simulate_link_frame(run, int(c), esn0_db_to_n0(v), rng)
            for v, c in zip(grid, counts) if c > 0
        ]
        indices = np.concatenate([p.indices for p in parts])
        r = np.concatenate([p.r for p in parts])
        h_hat = np.concatenate([p.h_hat for p in parts])
        perm = rng.permutation(n)
        indices, r, h_hat = indices[perm], r[perm], h_hat[perm]

    eq = equalize(r, h_hat)
    raw = np.stack([eq.real, eq.imag], axis=1)
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    if (std <= 0).any():
        raise ValueError("degenerate training set: zero feature variance")
    return TrainingSet(
        features=(raw - mean) / std,
        labels=encode_one_hot(indices, run.constellation.order),
        feature_mean=mean,
        feature_std=std,
    )


def train_dnn(features, labels, hp: TrainingHyperparams, rng: np.random.Generator, *,
              feature_mean=None, feature_std=None, training_meta=None) -> TrainedDetector:
    """Train the detector network: Adam over round-robin batches.

    The data is split into `sample_to_batch_ratio` equal contiguous batches
    and the optimizer cycles over them for `iterations` steps. Deterministic
    for a fixed (data, hyperparams, rng state).
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels must have the same number of rows")
    n = features.shape[0]
    if n % hp.sample_to_batch_ratio != 0:
        raise ValueError("sample count must be divisible by sample_to_batch_ratio")
    order = labels.shape[1]
    batch = n // hp.sample_to_batch_ratio

    params = neural.init_params(hp.layer_sizes(order), rng)
    state = neural.AdamState.init(params, learning_rate=hp.learning_rate)
    for it in range(hp.iterations):
        start = (it % hp.sample_to_batch_ratio) * batch
        x = features[start:start + batch]
        y = labels[start:start + batch]
        logits, cache = neural.forward(params, x)
        probs = neural.softmax(logits)
        grads = neural.backward(params, cache, probs, y)
        params, state = neural.adam_step(params, grads, state)

    mean = np.zeros(2) if feature_mean is None else np.asarray(feature_mean, dtype=np.float64)
    std = np.ones(2) if feature_std is None else np.asarray(feature_std, dtype=np.float64)
    if (std <= 0).any():
        raise ValueError("feature_std entries must be > 0")
    return TrainedDetector(
        params=params,
        feature_mean=mean,
        feature_std=std,
        constellation_order=order,
        training_meta=dict(training_meta or {}),
    )


def dnn_detect(detector: TrainedDetector, equalized) -> np.ndarray:
    """Classify equalized samples: standardize (Re, Im), forward pass, argmax.

    Ties break toward the lowest index.
    """
    eq = np.asarray(equalized, dtype=np.complex128)
    x = (np.stack([eq.real, eq.imag], axis=1) - detector.feature_mean) / detector.feature_std
    logits, _ = neural.forward(detector.params, x)
    return np.argmax(logits, axis=1)


def train_detector_for_point(run: RunSpec, esn0_db, hp: TrainingHyperparams,
                             rng: np.random.Generator, training_meta=None) -> TrainedDetector:
    """Build the training set and train in one step (shared rng, deterministic)."""
    ts = build_training_set(run, esn0_db, hp, rng)
    return train_dnn(
        ts.features, ts.labels, hp, rng,
        feature_mean=ts.feature_mean, feature_std=ts.feature_std,
        training_meta=training_meta,
    )


class MlSymbolDetector:
    """Callable (r, h_hat) -> indices wrapper around ml_detect."""

    label = "ML"

    def __init__(self, constellation: Constellation):
        self.constellation = constellation

    def __call__(self, r, h_hat) -> np.ndarray:
        return ml_detect(r, h_hat, self.constellation)


class DnnSymbolDetector:
    """Callable (r, h_hat) -> indices: equalize by h_hat, then DNN classify."""

    label = "DNN"

    def __init__(self, trained: TrainedDetector):
        self.trained = trained

    def __call__(self, r, h_hat) -> np.ndarray:
        return dnn_detect(self.trained, equalize(r, h_hat))
