"""Two-layer fully connected transfer network trained on pseudo-labels.

Forward pass: ``hidden = relu(X W1^T + b1)``, ``logits = hidden W2^T + b2``.
The loss is softmax cross-entropy over the k pseudo-classes, optimized with
mini-batch SGD (momentum + weight decay + step learning-rate decay). The
layer-2 pre-softmax outputs are the transferred features handed to the SVM.

Loss values are always accumulated in float64 regardless of parameter dtype;
gradients are exact analytic derivatives of ``loss(forward(X))``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .feature_store import FeatureDataset
from .pseudo_label import PseudoLabeling

MAGIC = b"UTNP"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


class DivergenceError(RuntimeError):
    """Loss became NaN/Inf during training."""


@dataclass
class TransferNetParams:
    """The four parameter tensors. Also reused as the container for
    gradients and momentum velocity, which share these shapes."""

    w1: np.ndarray  # (n1, d)
    b1: np.ndarray  # (n1,)
    w2: np.ndarray  # (n2, n1)
    b2: np.ndarray  # (n2,)

    @property
    def d(self) -> int:
        return self.w1.shape[1]

    @property
    def n1(self) -> int:
        return self.w1.shape[0]

    @property
    def n2(self) -> int:
        return self.w2.shape[0]

    def tensors(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def astype(self, dtype) -> "TransferNetParams":
        return TransferNetParams(*[t.astype(dtype) for t in self.tensors()])

    def copy(self) -> "TransferNetParams":
        return TransferNetParams(*[t.copy() for t in self.tensors()])

    def count(self) -> int:
        return sum(t.size for t in self.tensors())


@dataclass
class SgdHyper:
    """Optimizer settings. The defaults are the reference training recipe
    (lr 0.01 decayed x0.1 every 15k iterations, momentum 0.9, weight decay
    5e-4, batch 1000); ``total_iters`` must be chosen per experiment."""

    total_iters: int
    lr0: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0005
    batch_size: int = 1000
    step_size: int = 15000
    gamma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValueError("lr0 must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.batch_size < 1 or self.step_size < 1 or self.total_iters < 0:
            raise ValueError("batch_size/step_size must be >= 1, total_iters >= 0")


@dataclass
class TrainHistory:
    losses: list = field(default_factory=list)
    learning_rates: list = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def init_network(d: int, n1: int, n2: int, seed: int = 0, dtype=np.float32) -> TransferNetParams:
    """He/MSRA fan-in init: W ~ N(0, 2/fan_in), biases zero."""
    if min(d, n1, n2) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    w1 = (rng.standard_normal((n1, d)) * np.sqrt(2.0 / d)).astype(dtype)
    w2 = (rng.standard_normal((n2, n1)) * np.sqrt(2.0 / n1)).astype(dtype)
    return TransferNetParams(w1=w1, b1=np.zeros(n1, dtype=dtype),
                             w2=w2, b2=np.zeros(n2, dtype=dtype))


def forward(params: TransferNetParams, X):
    """Returns (hidden, logits) for a b x d batch."""
    X = np.asarray(X, dtype=params.w1.dtype)
    if X.ndim != 2 or X.shape[1] != params.d:
        raise ValueError(f"expected b x {params.d} batch, got {X.shape}")
    hidden = np.maximum(X @ params.w1.T + params.b1, 0)
    logits = hidden @ params.w2.T + params.b2
    return hidden, logits


def softmax(logits) -> np.ndarray:
    """Row-wise softmax with max subtraction, in float64."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_softmax_ce(logits, labels) -> float:
    """Mean over the batch of -log softmax(logits)[label]."""
    z = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != z.shape[0]:
        raise ValueError("labels must be a length-b vector")
    if labels.size and (labels.min() < 0 or labels.max() >= z.shape[1]):
        raise ValueError("label out of range")
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(z.shape[0]), labels]
    return float(np.mean(log_norm - picked))


def backward(params: TransferNetParams, X, labels) -> TransferNetParams:
    """Analytic gradients of loss_softmax_ce(forward(X), labels)."""
    X = np.asarray(X, dtype=params.w1.dtype)
    hidden, logits = forward(params, X)
    b = X.shape[0]
    labels = np.asarray(labels)

    d_logits = softmax(logits)
    d_logits[np.arange(b), labels] -= 1.0
    d_logits /= b
    d_logits = d_logits.astype(params.w1.dtype)

    gw2 = d_logits.T @ hidden
    gb2 = d_logits.sum(axis=0)
    d_hidden = d_logits @ params.w2
    d_hidden[hidden <= 0] = 0  # ReLU gate
    gw1 = d_hidden.T @ X
    gb1 = d_hidden.sum(axis=0)
    return TransferNetParams(w1=gw1, b1=gb1, w2=gw2, b2=gb2)


def zeros_like(params: TransferNetParams) -> TransferNetParams:
    return TransferNetParams(*[np.zeros_like(t) for t in params.tensors()])


def learning_rate(hyper: SgdHyper, iteration: int) -> float:
    return hyper.lr0 * hyper.gamma ** (iteration // hyper.step_size)


def sgd_step(params: TransferNetParams, grads: TransferNetParams,
             velocity: TransferNetParams, hyper: SgdHyper, iteration: int):
    """One momentum/weight-decay SGD update, in place:

        v <- momentum * v - lr(iter) * (grad + wd * param)
        param <- param + v

    Weight decay applies to weights and biases alike.
    """
    lr = learning_rate(hyper, iteration)
    mom = params.w1.dtype.type(hyper.momentum)
    lr_t = params.w1.dtype.type(lr)
    wd = params.w1.dtype.type(hyper.weight_decay)
    for p, g, v in zip(params.tensors(), grads.tensors(), velocity.tensors()):
        v *= mom
        v -= lr_t * (g + wd * p)
        p += v
    return params, velocity


def train(features: FeatureDataset, pseudo: PseudoLabeling,
          arch: tuple[int, int], hyper: SgdHyper):
    """Mini-batch SGD over the pseudo-labeled LR features.

    Shuffles once per epoch (seeded); the last incomplete batch of an epoch
    runs at its actual size. Aborts with :class:`DivergenceError` if the loss
    leaves the finite range. Returns (params, history).
    """
    n1, n2 = arch
    if n2 != pseudo.k:
        raise ValueError(f"output width {n2} must equal pseudo-class count {pseudo.k}")
    if pseudo.labels.shape[0] != features.n:
        raise ValueError("pseudo-label count does not match dataset")

    params = init_network(features.d, n1, n2, seed=hyper.seed)
    velocity = zeros_like(params)
    history = TrainHistory()
    if hyper.total_iters == 0:
        return params, history

    X = features.data
    y = pseudo.labels.astype(np.int64)
    shuffle_rng = np.random.default_rng([hyper.seed, 1])

    it = 0
    while it < hyper.total_iters:
        perm = shuffle_rng.permutation(features.n)
        for start in range(0, features.n, hyper.batch_size):
            if it >= hyper.total_iters:
                break
            idx = perm[start : start + hyper.batch_size]
            xb, yb = X[idx], y[idx]
            # blow-ups are detected right here, so silence numpy's interim
            # overflow chatter on the way to the explicit checks
            with np.errstate(over="ignore", invalid="ignore"):
                _, logits = forward(params, xb)
                if not np.all(np.isfinite(logits)):
                    raise DivergenceError(f"non-finite logits at iteration {it}")
                loss = loss_softmax_ce(logits, yb)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at iteration {it}")
            grads = backward(params, xb, yb)
            sgd_step(params, grads, velocity, hyper, it)
            history.losses.append(loss)
            history.learning_rates.append(learning_rate(hyper, it))
            it += 1
    return params, history


def transform(params: TransferNetParams, X) -> np.ndarray:
    """Transferred features: the layer-2 pre-softmax outputs."""
    _, logits = forward(params, X)
    return logits


def save_checkpoint(params: TransferNetParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, params.d, params.n1, params.n2))
        for t in params.tensors():
            fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def load_checkpoint(path) -> TransferNetParams:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError("file too short for checkpoint header")
        magic, version, d, n1, n2 = _HEADER.unpack(header)
        if magic != MAGIC or version != VERSION:
            raise ValueError(f"not a checkpoint file (magic {magic!r}, version {version})")
        shapes = [(n1, d), (n1,), (n2, n1), (n2,)]
        tensors = []
        for shape in shapes:
            count = int(np.prod(shape))
            buf = fh.read(count * 4)
            if len(buf) != count * 4:
                raise ValueError("checkpoint payload truncated")
            tensors.append(np.frombuffer(buf, dtype="<f4").reshape(shape).copy())
        if fh.read(1):
            raise ValueError("trailing bytes in checkpoint")
    params = TransferNetParams(*tensors)
    if not all(np.all(np.isfinite(t)) for t in params.tensors()):
        raise ValueError("checkpoint contains NaN or Inf")
    return params
