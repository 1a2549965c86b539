"""Small feed-forward Q-network with hand-written backprop and Adam.

Architecture: input -> [dense + ReLU] * len(hidden_dims) -> dense -> softmax.
The first dense layer stands in for the "embedding" layer: inputs are
already fixed-length binary vectors, so there is nothing to look up.
The two softmax outputs are read as Q(s, benign) and Q(s, phishing).

Loss per experience is (td_target - q[action])**2. Minibatch gradients are
summed by ``backward_batch`` and divided by the batch size in ``adam_step``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorruptFile, VersionMismatch
from .url_lexer import FEATURE_NAMES

FORMAT_MAGIC = "phishdqn-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int = 14
    hidden_dims: tuple[int, ...] = (32, 16)
    output_dim: int = 2
    output_activation: str = "softmax"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ValueError(f"all layer widths must be >= 1: {self}")
        if self.output_activation != "softmax":
            raise ValueError("only a softmax output head is supported")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) for each dense layer."""
        widths = [self.input_dim, *self.hidden_dims, self.output_dim]
        return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]


@dataclass
class NetworkParams:
    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def arrays(self) -> list[np.ndarray]:
        """Weights and biases interleaved: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def equals(self, other: "NetworkParams") -> bool:
        return self.spec == other.spec and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays())
        )


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


@dataclass
class ForwardTrace:
    """Per-layer inputs (post-activation) and pre-activations of one batch."""

    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    q: np.ndarray


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_stab: float = 1e-8

    @classmethod
    def zeros_like(cls, params: NetworkParams, **hyper) -> "AdamState":
        return cls(
            m=[np.zeros_like(a) for a in params.arrays()],
            v=[np.zeros_like(a) for a in params.arrays()],
            **hyper,
        )

    def copy(self) -> "AdamState":
        return AdamState(
            [a.copy() for a in self.m],
            [a.copy() for a in self.v],
            self.step_count,
            self.learning_rate,
            self.beta1,
            self.beta2,
            self.epsilon_stab,
        )


def init_network(spec: NetworkSpec, seed: int) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_out, fan_in in spec.layer_dims:
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(spec, weights, biases)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward_batch(params: NetworkParams, x: np.ndarray) -> ForwardTrace:
    """Forward pass for a (batch, input_dim) array."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    inputs, pre = [], []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w.T + b
        pre.append(z)
        h = softmax(z) if i == last else np.maximum(z, 0.0)
    return ForwardTrace(inputs, pre, h)


def forward(params: NetworkParams, x) -> tuple[np.ndarray, ForwardTrace]:
    if hasattr(x, "as_array"):
        x = x.as_array()
    trace = forward_batch(params, np.asarray(x, dtype=np.float64)[None, :])
    return trace.q[0], trace


def q_values(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    return forward_batch(params, x).q


def backward_batch(params: NetworkParams, trace: ForwardTrace, actions, td_targets) -> Gradients:
    """Gradients of sum_i (td_targets[i] - q[i, actions[i]])**2, summed over the batch."""
    q = trace.q
    n = q.shape[0]
    actions = np.asarray(actions, dtype=np.int64).reshape(n)
    targets = np.asarray(td_targets, dtype=np.float64).reshape(n)
    rows = np.arange(n)
    q_a = q[rows, actions]

    # dL/dq_a = -2 (y - q_a); softmax Jacobian dq_a/dz_j = q_a (1[j == a] - q_j)
    onehot = np.zeros_like(q)
    onehot[rows, actions] = 1.0
    delta = (-2.0 * (targets - q_a) * q_a)[:, None] * (onehot - q)

    gw = [None] * len(params.weights)
    gb = [None] * len(params.weights)
    for i in range(len(params.weights) - 1, -1, -1):
        gw[i] = delta.T @ trace.inputs[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (trace.pre_activations[i - 1] > 0.0)
    return Gradients(gw, gb)


def backward(params: NetworkParams, trace: ForwardTrace, action: int, td_target: float) -> Gradients:
    return backward_batch(params, trace, [action], [td_target])


def squared_loss(trace: ForwardTrace, actions, td_targets) -> np.ndarray:
    q = trace.q
    q_a = q[np.arange(q.shape[0]), np.asarray(actions, dtype=np.int64)]
    return (np.asarray(td_targets, dtype=np.float64) - q_a) ** 2


def adam_step(
    params: NetworkParams, grads: Gradients, state: AdamState, batch_size: int = 1
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update on the batch-mean gradient.

    Returns fresh params and state; the inputs are left untouched.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    new_arrays, new_m, new_v = [], [], []
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        g = g / batch_size
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_arrays.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon_stab))
        new_m.append(m)
        new_v.append(v)
    new_params = NetworkParams(params.spec, new_arrays[0::2], new_arrays[1::2])
    new_state = AdamState(
        new_m, new_v, t, state.learning_rate, state.beta1, state.beta2, state.epsilon_stab
    )
    return new_params, new_state


def params_to_dict(params: NetworkParams) -> dict:
    return {
        "spec": {
            "input_dim": params.spec.input_dim,
            "hidden_dims": list(params.spec.hidden_dims),
            "output_dim": params.spec.output_dim,
            "output_activation": params.spec.output_activation,
        },
        "layers": [
            {"weights": w.ravel().tolist(), "bias": b.tolist()}
            for w, b in zip(params.weights, params.biases)
        ],
    }


def save_params(params: NetworkParams, path, adam: AdamState | None = None, training_meta: dict | None = None) -> None:
    doc = {
        "format": FORMAT_MAGIC,
        "format_version": FORMAT_VERSION,
        "feature_order": list(FEATURE_NAMES),
        **params_to_dict(params),
        "adam": None,
        "training_meta": training_meta or {},
    }
    if adam is not None:
        doc["adam"] = {
            "step_count": adam.step_count,
            "learning_rate": adam.learning_rate,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "epsilon_stab": adam.epsilon_stab,
            "m": [a.ravel().tolist() for a in adam.m],
            "v": [a.ravel().tolist() for a in adam.v],
        }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


@dataclass
class ModelFile:
    params: NetworkParams
    adam: AdamState | None = None
    training_meta: dict = field(default_factory=dict)


def _array(values, shape, what) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise CorruptFile(f"{what}: expected {int(np.prod(shape))} values, found {arr.size}")
    arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise CorruptFile(f"{what}: non-finite values")
    return arr


def load_model(path) -> ModelFile:
    """Load a model file written by ``save_params``.

    Raises CorruptFile for unreadable or inconsistent content and
    VersionMismatch when the format version or feature order differs from
    this build.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: not a model file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_MAGIC:
        raise CorruptFile(f"{path}: missing {FORMAT_MAGIC!r} header")
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format_version {doc.get('format_version')!r}, expected {FORMAT_VERSION}")
    if doc.get("feature_order") != list(FEATURE_NAMES):
        raise VersionMismatch(f"{path}: feature order differs from this build")
    try:
        s = doc["spec"]
        spec = NetworkSpec(s["input_dim"], tuple(s["hidden_dims"]), s["output_dim"], s["output_activation"])
        layers = doc["layers"]
        if len(layers) != len(spec.layer_dims):
            raise CorruptFile(f"{path}: {len(layers)} layers, spec needs {len(spec.layer_dims)}")
        weights, biases = [], []
        for i, ((fan_out, fan_in), layer) in enumerate(zip(spec.layer_dims, layers)):
            weights.append(_array(layer["weights"], (fan_out, fan_in), f"layer {i} weights"))
            biases.append(_array(layer["bias"], (fan_out,), f"layer {i} bias"))
        params = NetworkParams(spec, weights, biases)
        adam = None
        if doc.get("adam") is not None:
            a = doc["adam"]
            shapes = [arr.shape for arr in params.arrays()]
            adam = AdamState(
                m=[_array(x, sh, "adam m") for x, sh in zip(a["m"], shapes)],
                v=[_array(x, sh, "adam v") for x, sh in zip(a["v"], shapes)],
                step_count=int(a["step_count"]),
                learning_rate=float(a["learning_rate"]),
                beta1=float(a["beta1"]),
                beta2=float(a["beta2"]),
                epsilon_stab=float(a["epsilon_stab"]),
            )
        return ModelFile(params, adam, doc.get("training_meta") or {})
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc!r}") from None


def load_params(path) -> NetworkParams:
    return load_model(path).params
