"""From-scratch feed-forward MLP: ReLU hidden layers, softmax output, dropout,
Adam optimizer, MAE or cross-entropy loss. Everything is deterministic under a
seed and operates on plain numpy arrays (float64)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

RELU = 0
SOFTMAX = 1

LOSS_MAE = "mae"
LOSS_XENT = "xent"

# clamp for log() in cross-entropy
_P_MIN = 1e-12


@dataclass
class ModelParams:
    """Dense MLP parameters. weights[k] has shape (out, in); biases[k] (out,)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[int] = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[0]

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.weights],
                           [b.copy() for b in self.biases],
                           list(self.activations))

    def check_finite(self):
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise FloatingPointError(f"non-finite parameters in layer {k}")


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, model: ModelParams) -> "AdamState":
        return cls(m_w=[np.zeros_like(w) for w in model.weights],
                   v_w=[np.zeros_like(w) for w in model.weights],
                   m_b=[np.zeros_like(b) for b in model.biases],
                   v_b=[np.zeros_like(b) for b in model.biases])


@dataclass
class TrainConfig:
    """Training hyperparameters. Defaults follow the simulation parameter table
    (note the unusual beta1=0.1; pass 0.9 for the conventional Adam)."""

    learning_rate: float = 0.001
    beta1: float = 0.1
    beta2: float = 0.99
    epsilon: float = 1e-7
    batch_size: int = 128
    epochs: int = 10
    dropout_rate: float = 0.4
    loss: str = LOSS_MAE
    seed: int = 0

    def validate(self):
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError(f"dropout_rate must be in [0,1), got {self.dropout_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        for name, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not (0.0 <= b < 1.0):
                raise ValueError(f"{name} must be in [0,1), got {b}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.loss not in (LOSS_MAE, LOSS_XENT):
            raise ValueError(f"unknown loss kind {self.loss!r}")


def init_model(input_dim: int, hidden: int = 256, classes: int = 5,
               seed: int = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases, two hidden layers of `hidden` units."""
    if input_dim < 1 or hidden < 1 or classes < 1:
        raise ValueError(f"dimensions must be positive, got "
                         f"input_dim={input_dim} hidden={hidden} classes={classes}")
    rng = np.random.default_rng(seed)
    dims = [input_dim, hidden, hidden, classes]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    acts = [RELU] * (len(weights) - 1) + [SOFTMAX]
    return ModelParams(weights, biases, acts)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cached(model, batch, dropout_rate, rng, training):
    """Forward pass keeping pre-activations and dropout masks for backprop."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ValueError(f"batch shape {batch.shape} does not match "
                         f"input_dim {model.input_dim}")
    a = batch
    pre, post, masks = [], [batch], []
    n_layers = len(model.weights)
    for k, (w, b, act) in enumerate(zip(model.weights, model.biases,
                                        model.activations)):
        z = a @ w.T + b
        pre.append(z)
        if act == SOFTMAX:
            a = softmax(z)
            masks.append(None)
        else:
            a = np.maximum(z, 0.0)
            if training and dropout_rate > 0.0:
                keep = 1.0 - dropout_rate
                # inverted dropout: scale kept units so inference needs no rescale
                mask = (rng.random(a.shape) < keep) / keep
                a = a * mask
                masks.append(mask)
            else:
                masks.append(None)
        post.append(a)
    return a, pre, post, masks


def forward(model: ModelParams, batch: np.ndarray, dropout_rate: float = 0.0,
            rng: np.random.Generator | None = None,
            training: bool = False) -> np.ndarray:
    """Class probabilities, shape (B, classes). Rows sum to 1."""
    if training and dropout_rate > 0.0 and rng is None:
        raise ValueError("training forward with dropout requires an rng")
    probs, _, _, _ = _forward_cached(model, batch, dropout_rate, rng, training)
    return probs


def loss(probs: np.ndarray, targets: np.ndarray, kind: str = LOSS_MAE) -> float:
    """MAE = mean|p - t| over all entries; xent = -mean log p[target]."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ValueError(f"probs shape {probs.shape} != targets shape {targets.shape}")
    if kind == LOSS_MAE:
        return float(np.abs(probs - targets).mean())
    if kind == LOSS_XENT:
        p = np.clip(probs, _P_MIN, 1.0)
        return float(-(targets * np.log(p)).sum(axis=1).mean())
    raise ValueError(f"unknown loss kind {kind!r}")


def _loss_grad_wrt_probs(probs, targets, kind):
    b = probs.shape[0]
    if kind == LOSS_MAE:
        return np.sign(probs - targets) / probs.size
    if kind == LOSS_XENT:
        p = np.clip(probs, _P_MIN, 1.0)
        g = -(targets / p) / b
        g[probs < _P_MIN] = 0.0  # the clamped region is flat
        return g
    raise ValueError(f"unknown loss kind {kind!r}")


@dataclass
class Gradients:
    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


def backward(model: ModelParams, batch: np.ndarray, targets: np.ndarray,
             config: TrainConfig, rng: np.random.Generator | None = None) -> Gradients:
    """Analytic gradients of the mean loss. Runs its own forward pass so the
    dropout masks used here are the ones differentiated."""
    targets = np.asarray(targets, dtype=np.float64)
    training = config.dropout_rate > 0.0 and rng is not None
    probs, pre, post, masks = _forward_cached(model, batch, config.dropout_rate,
                                              rng, training)
    if targets.shape != probs.shape:
        raise ValueError(f"targets shape {targets.shape} != probs shape {probs.shape}")

    g = _loss_grad_wrt_probs(probs, targets, config.loss)
    # softmax jacobian: dL/dz = p * (g - sum(g*p))
    delta = probs * (g - (g * probs).sum(axis=1, keepdims=True))

    d_weights = [None] * len(model.weights)
    d_biases = [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        d_weights[k] = delta.T @ post[k]
        d_biases[k] = delta.sum(axis=0)
        if k > 0:
            da = delta @ model.weights[k]
            if masks[k - 1] is not None:
                da = da * masks[k - 1]
            delta = da * (pre[k - 1] > 0.0)
    return Gradients(d_weights, d_biases)


def adam_step(model: ModelParams, grads: Gradients, state: AdamState,
              config: TrainConfig) -> tuple[ModelParams, AdamState]:
    """One Adam update with bias correction. Returns new model and state."""
    if len(grads.d_weights) != len(model.weights):
        raise ValueError("gradient layer count does not match model")
    lr, b1, b2, eps = (config.learning_rate, config.beta1, config.beta2,
                       config.epsilon)
    t = state.t + 1
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_w, new_b = [], []
    new_state = AdamState(m_w=[], v_w=[], m_b=[], v_b=[], t=t)
    for k in range(len(model.weights)):
        for p, g, m, v, out_p, out_m, out_v in (
            (model.weights[k], grads.d_weights[k], state.m_w[k], state.v_w[k],
             new_w, new_state.m_w, new_state.v_w),
            (model.biases[k], grads.d_biases[k], state.m_b[k], state.v_b[k],
             new_b, new_state.m_b, new_state.v_b),
        ):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != param shape {p.shape}"
                                 f" in layer {k}")
            m2 = b1 * m + (1.0 - b1) * g
            v2 = b2 * v + (1.0 - b2) * g * g
            step = lr * (m2 / c1) / (np.sqrt(v2 / c2) + eps)
            out_p.append(p - step)
            out_m.append(m2)
            out_v.append(v2)
    updated = ModelParams(new_w, new_b, list(model.activations))
    updated.check_finite()
    return updated, new_state


def to_one_hot(y: np.ndarray, classes: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    out = np.zeros((y.shape[0], classes))
    out[np.arange(y.shape[0]), y] = 1.0
    return out


def train_local(model: ModelParams, X: np.ndarray, y: np.ndarray,
                config: TrainConfig) -> tuple[ModelParams, list[float]]:
    """Mini-batch Adam training on one labeled shard.

    Runs config.epochs epochs of seeded shuffled mini-batches (final short
    batch included). Returns the updated parameters and the per-epoch mean
    training loss.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} feature rows vs {y.shape[0]} labels")
    model = model.copy()
    if config.epochs == 0:
        return model, []
    targets = to_one_hot(y, model.num_classes)
    rng = np.random.default_rng(config.seed)
    state = AdamState.zeros_like(model)
    n = X.shape[0]
    epoch_losses = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, tb = X[idx], targets[idx]
            grads = backward(model, xb, tb, config, rng)
            # loss is logged dropout-free so epochs are comparable
            total += loss(forward(model, xb), tb, config.loss) * len(idx)
            seen += len(idx)
            model, state = adam_step(model, grads, state, config)
        epoch_losses.append(total / seen)
    return model, epoch_losses


def predict(model: ModelParams, batch: np.ndarray) -> np.ndarray:
    """Argmax class per row, dropout off; ties resolve to the lowest index."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    probs = forward(model, batch, training=False)
    return probs.argmax(axis=1)
