"""Self-contained multilayer perceptron: forward/backward passes, softmax
cross-entropy, Adam, a finite-difference gradient checker, and a textual
model container that round-trips bit-exactly.

Everything runs in 64-bit floats. Hidden layers use ReLU; the output layer is
affine and feeds a softmax classification head.
"""

import base64
import copy
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

LOG_CLAMP = 1e-12


class ModelFormatError(ValueError):
    """Raised when a model container is malformed or fails its checksum."""


@dataclass
class MlpParams:
    """Weight matrices and bias vectors; weights[i] has shape (fan_out, fan_in)."""

    layer_sizes: tuple
    weights: list  # of float64 arrays, shape (layer_sizes[i+1], layer_sizes[i])
    biases: list   # of float64 arrays, shape (layer_sizes[i+1],)

    @property
    def n_layers(self) -> int:
        return len(self.weights)


@dataclass
class Gradients:
    """Loss gradients, mirroring MlpParams shapes."""

    weights: list
    biases: list


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, consumed by backward()."""

    layer_sizes: tuple
    activations: list       # [input, hidden_1, ..., hidden_d] (post-ReLU)
    pre_activations: list   # [z_1, ..., z_d, z_out]


@dataclass
class AdamState:
    """Adam moment accumulators and step counter for one parameter set."""

    m_weights: list
    v_weights: list
    m_biases: list
    v_biases: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    learning_rate: float = 1e-3

    @classmethod
    def init(cls, params: MlpParams, learning_rate: float = 1e-3) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in params.weights],
            v_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_biases=[np.zeros_like(b) for b in params.biases],
            learning_rate=learning_rate,
        )


def init_params(layer_sizes, rng: np.random.Generator) -> MlpParams:
    """He-initialized weights (std sqrt(2/fan_in), matched to ReLU), zero biases."""
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if len(layer_sizes) < 3:
        raise ValueError("need at least one hidden layer")
    if layer_sizes[0] != 2:
        raise ValueError("input layer must have 2 neurons")
    if any(s < 1 for s in layer_sizes):
        raise ValueError("all layer sizes must be >= 1")
    weights = [
        rng.normal(0.0, np.sqrt(2.0 / layer_sizes[i]), size=(layer_sizes[i + 1], layer_sizes[i]))
        for i in range(len(layer_sizes) - 1)
    ]
    biases = [np.zeros(layer_sizes[i + 1]) for i in range(len(layer_sizes) - 1)]
    return MlpParams(layer_sizes=layer_sizes, weights=weights, biases=biases)


def forward(params: MlpParams, x) -> tuple:
    """Run the batch through the network; returns (logits, cache).

    Hidden layers apply ReLU, the output layer is affine.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.layer_sizes[0]:
        raise ValueError(f"input must have shape (N, {params.layer_sizes[0]})")
    activations = [x]
    pre_activations = []
    a = x
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        pre_activations.append(z)
        if i < last:
            a = np.maximum(z, 0.0)
            activations.append(a)
    logits = pre_activations[-1]
    cache = ForwardCache(
        layer_sizes=params.layer_sizes,
        activations=activations,
        pre_activations=pre_activations,
    )
    return logits, cache


def softmax(logits) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    logits = np.asarray(logits, dtype=np.float64)
    if np.isnan(logits).any():
        raise ValueError("logits contain NaN")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, one_hot) -> float:
    """Mean negative log-likelihood over the batch, log clamped at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    one_hot = np.asarray(one_hot, dtype=np.float64)
    if probs.shape != one_hot.shape:
        raise ValueError("probs and one_hot must have the same shape")
    k = probs.shape[0]
    return float(-(one_hot * np.log(np.maximum(probs, LOG_CLAMP))).sum() / k)


def backward(params: MlpParams, cache: ForwardCache, probs, one_hot) -> Gradients:
    """Exact gradient of cross_entropy(softmax(forward(x))) w.r.t. all parameters."""
    probs = np.asarray(probs, dtype=np.float64)
    one_hot = np.asarray(one_hot, dtype=np.float64)
    if cache.layer_sizes != params.layer_sizes:
        raise ValueError("cache does not match network architecture")
    if len(cache.pre_activations) != params.n_layers:
        raise ValueError("cache does not match network depth")
    k = probs.shape[0]
    if cache.activations[0].shape[0] != k or probs.shape != (k, params.layer_sizes[-1]):
        raise ValueError("cache/probs batch sizes do not match")

    g_w = [None] * params.n_layers
    g_b = [None] * params.n_layers
    delta = (probs - one_hot) / k
    for i in range(params.n_layers - 1, -1, -1):
        g_w[i] = delta.T @ cache.activations[i]
        g_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (cache.pre_activations[i - 1] > 0)
    return Gradients(weights=g_w, biases=g_b)


def adam_step(params: MlpParams, grads: Gradients, state: AdamState) -> tuple:
    """One bias-corrected Adam update; returns new (params, state), inputs untouched."""
    if len(grads.weights) != params.n_layers:
        raise ValueError("gradient/parameter layer counts differ")
    for gw, w in zip(grads.weights, params.weights):
        if gw.shape != w.shape:
            raise ValueError("gradient/parameter shapes differ")
    t = state.t + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    lr, b1, b2, eps = state.learning_rate, state.beta1, state.beta2, state.epsilon

    new_w, new_b, m_w, v_w, m_b, v_b = [], [], [], [], [], []
    for w, b, gw, gb, mw, vw, mb, vb in zip(
        params.weights, params.biases, grads.weights, grads.biases,
        state.m_weights, state.v_weights, state.m_biases, state.v_biases,
    ):
        mw = b1 * mw + (1 - b1) * gw
        vw = b2 * vw + (1 - b2) * gw**2
        new_w.append(w - lr * (mw / c1) / (np.sqrt(vw / c2) + eps))
        m_w.append(mw)
        v_w.append(vw)
        mb = b1 * mb + (1 - b1) * gb
        vb = b2 * vb + (1 - b2) * gb**2
        new_b.append(b - lr * (mb / c1) / (np.sqrt(vb / c2) + eps))
        m_b.append(mb)
        v_b.append(vb)

    new_params = MlpParams(layer_sizes=params.layer_sizes, weights=new_w, biases=new_b)
    new_state = AdamState(
        m_weights=m_w, v_weights=v_w, m_biases=m_b, v_biases=v_b,
        t=t, beta1=b1, beta2=b2, epsilon=state.epsilon, learning_rate=lr,
    )
    return new_params, new_state


def batch_loss(params: MlpParams, x, one_hot) -> float:
    """Cross-entropy of the batch under the current parameters."""
    logits, _ = forward(params, x)
    return cross_entropy(softmax(logits), one_hot)


def grad_check(params: MlpParams, batch, step: float = 1e-5) -> float:
    """Max relative error between analytic and central finite-difference gradients.

    The relative error per parameter is |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-10).
    Intended for small networks; cost is two forward passes per parameter.
    """
    x, one_hot = batch
    x = np.asarray(x, dtype=np.float64)
    one_hot = np.asarray(one_hot, dtype=np.float64)

    logits, cache = forward(params, x)
    probs = softmax(logits)
    analytic = backward(params, cache, probs, one_hot)

    p = copy.deepcopy(params)
    worst = 0.0
    for arrays, grads in ((p.weights, analytic.weights), (p.biases, analytic.biases)):
        for arr, g in zip(arrays, grads):
            flat = arr.reshape(-1)
            g_flat = g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                lo_hi = batch_loss(p, x, one_hot)
                flat[i] = orig - step
                lo_lo = batch_loss(p, x, one_hot)
                flat[i] = orig
                fd = (lo_hi - lo_lo) / (2.0 * step)
                denom = max(abs(g_flat[i]), abs(fd), 1e-10)
                worst = max(worst, abs(g_flat[i] - fd) / denom)
    return worst


# ---------------------------------------------------------------------------
# Model container: canonical JSON with base64-encoded float64 payloads.
# ---------------------------------------------------------------------------

def _encode_f64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode_f64(text: str, shape) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"))
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise ModelFormatError("array payload has wrong size")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(meta: dict) -> str:
    """Stable hex digest of a JSON-serializable configuration record."""
    return hashlib.sha256(_canonical(meta).encode("utf-8")).hexdigest()


@dataclass
class ModelPayload:
    """Everything a detector needs to run: network, feature scaling, provenance."""

    layer_sizes: tuple
    weights: list
    biases: list
    feature_mean: np.ndarray
    feature_std: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return config_digest(self.meta)


def model_to_text(payload: ModelPayload) -> str:
    """Serialize a model to its canonical textual container (one JSON document)."""
    body = {
        "format": "fsolink-mlp",
        "version": 1,
        "layer_sizes": [int(s) for s in payload.layer_sizes],
        "feature_mean": _encode_f64(payload.feature_mean),
        "feature_std": _encode_f64(payload.feature_std),
        "weights": [_encode_f64(w) for w in payload.weights],
        "biases": [_encode_f64(b) for b in payload.biases],
        "meta": payload.meta,
        "config_digest": payload.digest,
    }
    body["checksum"] = hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()
    return _canonical(body) + "\n"


def model_from_text(text: str) -> ModelPayload:
    """Parse and verify a textual model container."""
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model container is not valid JSON: {exc}") from exc
    if not isinstance(body, dict) or body.get("format") != "fsolink-mlp":
        raise ModelFormatError("not an fsolink model container")
    checksum = body.pop("checksum", None)
    if checksum != hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest():
        raise ModelFormatError("model container failed integrity check")
    sizes = tuple(int(s) for s in body["layer_sizes"])
    weights = [
        _decode_f64(w, (sizes[i + 1], sizes[i])) for i, w in enumerate(body["weights"])
    ]
    biases = [_decode_f64(b, (sizes[i + 1],)) for i, b in enumerate(body["biases"])]
    payload = ModelPayload(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        feature_mean=_decode_f64(body["feature_mean"], (sizes[0],)),
        feature_std=_decode_f64(body["feature_std"], (sizes[0],)),
        meta=body["meta"],
    )
    if body.get("config_digest") != payload.digest:
        raise ModelFormatError("model meta does not match its recorded digest")
    return payload


def save_model(path, payload: ModelPayload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(model_to_text(payload))


def load_model(path) -> ModelPayload:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())
