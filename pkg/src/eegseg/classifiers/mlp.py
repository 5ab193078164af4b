"""Feed-forward ReLU network with a softmax output, trained by Adam on cross-entropy."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .base import LabeledSet, TrainedModel

# hidden layers per dataset; the output layer is sized from the data
STEW_HIDDEN = (200, 150, 100, 75)
ALPHA_HIDDEN = (200, 120, 70)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpConfig:
    hidden_sizes: tuple = STEW_HIDDEN
    epochs: int = 1000
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    # stop once the epoch-mean training loss falls below this value; None trains all epochs
    early_stop_loss: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("layer sizes must be >= 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")

    def layer_sizes(self, n_classes: int) -> tuple:
        return self.hidden_sizes + (n_classes,)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _views(flat: np.ndarray, sizes):
    """Split a flat parameter buffer into per-layer weight and bias views."""
    weights, biases = [], []
    pos = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out))
        pos += fan_in * fan_out
        biases.append(flat[pos:pos + fan_out])
        pos += fan_out
    return weights, biases


def n_params(sizes) -> int:
    return sum(i * o + o for i, o in zip(sizes[:-1], sizes[1:]))


def init_params(sizes, rng: np.random.Generator):
    """He-normal weights and zero biases for layer widths ``sizes`` (input first).

    Returns ``(flat, weights, biases)``; the per-layer arrays are views into ``flat``.
    """
    flat = np.zeros(n_params(sizes))
    weights, biases = _views(flat, sizes)
    for w in weights:
        w[...] = rng.standard_normal(w.shape) * np.sqrt(2.0 / w.shape[0])
    return flat, weights, biases


def forward(weights, biases, x):
    """Return the post-activation of every layer; the last entry holds softmax probabilities."""
    acts = [x]
    a = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w + b
        a = softmax(z) if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return acts


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(np.log(np.maximum(probs[np.arange(len(y)), y], 1e-300))))


def gradients(weights, biases, x, y, out=None):
    """Mean cross-entropy and its gradients with respect to every weight and bias.

    ``out``, if given, is a ``(grad_weights, grad_biases)`` pair of arrays to
    write into; otherwise new arrays are returned.
    """
    acts = forward(weights, biases, x)
    probs = acts[-1]
    delta = probs.copy()
    delta[np.arange(len(y)), y] -= 1.0
    delta /= len(y)
    if out is None:
        gw = [np.empty_like(w) for w in weights]
        gb = [np.empty_like(b) for b in biases]
    else:
        gw, gb = out
    for i in range(len(weights) - 1, -1, -1):
        np.matmul(acts[i].T, delta, out=gw[i])
        np.sum(delta, axis=0, out=gb[i])
        if i:
            delta = (delta @ weights[i].T) * (acts[i] > 0)
    return cross_entropy(probs, y), gw, gb


@dataclass(eq=False)
class MlpModel(TrainedModel):
    weights: list
    biases: list

    kind = "mlp"

    def predict_proba(self, x) -> np.ndarray:
        return forward(self.weights, self.biases, self._check_input(x))[-1]

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)

    def params_dict(self) -> dict:
        return {"weights": [w.tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_params(cls, n_classes, input_dim, p):
        return cls(n_classes=n_classes, input_dim=input_dim,
                   weights=[np.array(w, dtype=np.float64) for w in p["weights"]],
                   biases=[np.array(b, dtype=np.float64) for b in p["biases"]])


def train_mlp(train: LabeledSet, config: MlpConfig | None = None) -> MlpModel:
    config = config or MlpConfig()
    rng = np.random.default_rng(config.seed)
    x, y = train.vectors, train.labels
    sizes = (train.dim,) + config.layer_sizes(train.n_classes)
    flat, weights, biases = init_params(sizes, rng)
    grad = np.zeros_like(flat)
    grad_views = _views(grad, sizes)
    m = np.zeros_like(flat)
    v = np.zeros_like(flat)
    b1, b2 = config.beta1, config.beta2
    step = 0
    n = len(y)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):  # caught by the check below
                loss, _, _ = gradients(weights, biases, x[idx], y[idx], out=grad_views)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, step {step}")
            epoch_loss += loss * len(idx)
            step += 1
            # Adam with bias correction folded into the step size
            lr_t = config.lr * np.sqrt(1.0 - b2 ** step) / (1.0 - b1 ** step)
            m *= b1
            m += (1.0 - b1) * grad
            v *= b2
            v += (1.0 - b2) * grad * grad
            flat -= lr_t * m / (np.sqrt(v) + config.eps)
        if config.early_stop_loss is not None and epoch_loss / n < config.early_stop_loss:
            break
    return MlpModel(n_classes=train.n_classes, input_dim=train.dim,
                    weights=[w.copy() for w in weights], biases=[b.copy() for b in biases])


def mlp_gradient_check(layer_sizes, x, y, seed: int = 0, h: float = 1e-5) -> float:
    """Largest relative error between backprop and central-difference gradients.

    ``layer_sizes`` includes the input width, e.g. ``(2, 3, 2)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _, weights, biases = init_params(tuple(layer_sizes), np.random.default_rng(seed))
    for b in biases:
        b[:] = np.random.default_rng(seed + 1).standard_normal(b.shape) * 0.1
    _, gw, gb = gradients(weights, biases, x, y)
    worst = 0.0
    for p, g in zip(weights + biases, gw + gb):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = gradients(weights, biases, x, y)[0]
            flat[i] = orig - h
            down = gradients(weights, biases, x, y)[0]
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(numeric), abs(gflat[i]), 1e-8)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst
