"""Dense feed-forward binary classifier with manual backprop.

The network has ReLU hidden layers and exactly two linear output logits.
Its scalar margin (logit1 - logit0) is the classification function whose
zero set is the decision boundary everything else in this package probes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .rng import make_rng

CHECKPOINT_MAGIC = b"BLAB"
CHECKPOINT_VERSION = 1


class TrainingDivergence(RuntimeError):
    """Loss became non-finite during training."""


@dataclass
class MlpNetwork:
    layer_dims: list[int]
    weights: list[np.ndarray]  # weights[k] has shape (dims[k+1], dims[k])
    biases: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(list(self.layer_dims),
                          [w.copy() for w in self.weights],
                          [b.copy() for b in self.biases])

    def check_finite(self) -> None:
        for w, b in zip(self.weights, self.biases):
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise TrainingDivergence("network parameters are non-finite")


@dataclass
class TrainConfig:
    optimizer: str = "adam"  # adam | sgd_momentum
    learning_rate: float = 1e-2
    momentum: float = 0.9
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_epsilon: float = 1e-8
    max_epochs: int = 10000
    batch_size: int = 32
    accuracy_target: float = 0.90
    seed: int = 0

    def validate(self) -> None:
        if self.optimizer not in ("adam", "sgd_momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0 < self.accuracy_target <= 1:
            raise ValueError("accuracy_target must be in (0, 1]")


@dataclass
class TrainReport:
    epochs_run: int
    final_train_accuracy: float
    final_loss: float
    stopped_reason: str  # criterion_met | epoch_cap


def init_network(layer_dims, seed: int) -> MlpNetwork:
    """He-scaled normal weights, zero biases; bitwise deterministic per seed."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ValueError("need at least an input and an output layer")
    if any(d <= 0 for d in dims):
        raise ValueError("all layer dimensions must be positive")
    if dims[-1] != 2:
        raise ValueError("output layer must have exactly 2 logits")
    rng = make_rng(seed, stream=0x11717)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(scale * rng.standard_normal((fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(dims, weights, biases)


def _check_input(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_dim:
        raise ValueError(f"input dimension {x.shape[-1]} != network input {net.input_dim}")
    return x


def forward_batch(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    """Logits for a (batch, n) input array."""
    h = _check_input(net, x)
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if k != last:
            np.maximum(h, 0.0, out=h)
    return h


def forward(net: MlpNetwork, x) -> np.ndarray:
    """Logit pair for a single sample."""
    return forward_batch(net, np.asarray(x, dtype=np.float64)[None, :])[0]


def margin(net: MlpNetwork, x) -> float:
    """Scalar classifier value: logit1 - logit0. Sign is the predicted label, zero set is the boundary."""
    logits = forward(net, x)
    return float(logits[1] - logits[0])


def margin_batch(net: MlpNetwork, x: np.ndarray) -> np.ndarray:
    logits = forward_batch(net, x)
    return logits[:, 1] - logits[:, 0]


def grad_input(net: MlpNetwork, x) -> np.ndarray:
    """Gradient of the margin w.r.t. the input, by backprop."""
    x = _check_input(net, np.asarray(x, dtype=np.float64))
    h = x
    pre_acts = []
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ h + b
        if k != last:
            pre_acts.append(z)
            h = np.maximum(z, 0.0)
        else:
            h = z
    # d(margin)/d(logits) = (-1, +1)
    delta = net.weights[last][1] - net.weights[last][0]
    for k in range(last - 1, -1, -1):
        delta = delta * (pre_acts[k] > 0)
        delta = net.weights[k].T @ delta
    return delta


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def loss_nll(logits, label: int) -> float:
    """Negative log-likelihood of the true label under softmax."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(logits).all():
        raise ValueError("non-finite logits")
    return float(-log_softmax(logits)[label])


def accuracy(net: MlpNetwork, data: Dataset) -> float:
    """Fraction with sign(margin) matching the label; margin 0 counts as wrong."""
    m = margin_batch(net, data.samples)
    correct = np.where(data.labels == 1, m > 0, m < 0)
    return float(correct.mean())


def _mean_true_class_prob(net: MlpNetwork, data: Dataset) -> float:
    logp = log_softmax(forward_batch(net, data.samples))
    return float(np.exp(logp[np.arange(len(data)), data.labels]).mean())


def train(net: MlpNetwork, data: Dataset, cfg: TrainConfig) -> TrainReport:
    """Mini-batch NLL training until every sample is correct and mean
    true-class confidence reaches cfg.accuracy_target, or max_epochs.
    Mutates net in place; deterministic for a fixed cfg.seed.

    Inputs are standardized internally and the affine map is folded back
    into the first layer afterwards, so the returned network acts on raw
    inputs. Repeated boundary projection shrinks working sets into tiny
    off-center clouds; without this the optimization stalls long before
    every sample is correct."""
    cfg.validate()
    if not data.both_classes_present():
        raise ValueError("training data must contain both classes")
    _check_input(net, data.samples)
    batch_size = min(cfg.batch_size, len(data))
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    mu = data.samples.mean(axis=0)
    sd = data.samples.std(axis=0)
    sd = np.where(sd < 1e-12, 1.0, sd)
    data = Dataset((data.samples - mu) / sd, data.labels, data.name)

    def fold_whitening() -> None:
        net.biases[0] = net.biases[0] - net.weights[0] @ (mu / sd)
        net.weights[0] = net.weights[0] / sd

    n_layers = len(net.weights)
    if cfg.optimizer == "adam":
        m_w = [np.zeros_like(w) for w in net.weights]
        v_w = [np.zeros_like(w) for w in net.weights]
        m_b = [np.zeros_like(b) for b in net.biases]
        v_b = [np.zeros_like(b) for b in net.biases]
        step = 0
    else:
        vel_w = [np.zeros_like(w) for w in net.weights]
        vel_b = [np.zeros_like(b) for b in net.biases]

    labels_onehot = np.zeros((len(data), 2))
    labels_onehot[np.arange(len(data)), data.labels] = 1.0

    epoch_loss = float("nan")
    for epoch in range(cfg.max_epochs):
        order = make_rng(cfg.seed, stream=epoch).permutation(len(data))
        losses = []
        for start in range(0, len(data), batch_size):
            idx = order[start:start + batch_size]
            xb, yb = data.samples[idx], labels_onehot[idx]

            # forward, keeping activations for backprop
            acts = [xb]
            for k, (w, b) in enumerate(zip(net.weights, net.biases)):
                z = acts[-1] @ w.T + b
                acts.append(np.maximum(z, 0.0) if k != n_layers - 1 else z)
            logp = log_softmax(acts[-1])
            batch_loss = float(-(logp * yb).sum(axis=1).mean())
            if not np.isfinite(batch_loss):
                raise TrainingDivergence(f"non-finite loss at epoch {epoch}")
            losses.append(batch_loss)

            # backprop
            delta = (np.exp(logp) - yb) / len(idx)
            grads_w, grads_b = [None] * n_layers, [None] * n_layers
            for k in range(n_layers - 1, -1, -1):
                grads_w[k] = delta.T @ acts[k]
                grads_b[k] = delta.sum(axis=0)
                if k > 0:
                    delta = (delta @ net.weights[k]) * (acts[k] > 0)

            if cfg.optimizer == "adam":
                step += 1
                b1, b2 = cfg.adam_betas
                for k in range(n_layers):
                    for mom, vel, g, p in ((m_w, v_w, grads_w, net.weights),
                                           (m_b, v_b, grads_b, net.biases)):
                        mom[k] = b1 * mom[k] + (1 - b1) * g[k]
                        vel[k] = b2 * vel[k] + (1 - b2) * g[k] ** 2
                        m_hat = mom[k] / (1 - b1 ** step)
                        v_hat = vel[k] / (1 - b2 ** step)
                        p[k] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
            else:
                for k in range(n_layers):
                    vel_w[k] = cfg.momentum * vel_w[k] - cfg.learning_rate * grads_w[k]
                    vel_b[k] = cfg.momentum * vel_b[k] - cfg.learning_rate * grads_b[k]
                    net.weights[k] += vel_w[k]
                    net.biases[k] += vel_b[k]

        net.check_finite()
        epoch_loss = float(np.mean(losses))
        acc = accuracy(net, data)
        if acc == 1.0 and _mean_true_class_prob(net, data) >= cfg.accuracy_target:
            fold_whitening()
            return TrainReport(epoch + 1, acc, epoch_loss, "criterion_met")
    final_acc = accuracy(net, data)
    fold_whitening()
    return TrainReport(cfg.max_epochs, final_acc, epoch_loss, "epoch_cap")


def save_checkpoint(net: MlpNetwork, path) -> None:
    """Binary little-endian checkpoint; round-trips bit-exactly."""
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(net.weights)))
        for w, b in zip(net.weights, net.biases):
            rows, cols = w.shape
            f.write(struct.pack("<II", rows, cols))
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> MlpNetwork:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: bad checkpoint magic {magic!r}")
        version, n_layers = struct.unpack("<II", f.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        weights, biases = [], []
        for _ in range(n_layers):
            rows, cols = struct.unpack("<II", f.read(8))
            w = np.frombuffer(f.read(8 * rows * cols), dtype="<f8").reshape(rows, cols)
            b = np.frombuffer(f.read(8 * rows), dtype="<f8")
            weights.append(w.astype(np.float64))
            biases.append(b.astype(np.float64))
    dims = [weights[0].shape[1]] + [w.shape[0] for w in weights]
    return MlpNetwork(dims, weights, biases)
