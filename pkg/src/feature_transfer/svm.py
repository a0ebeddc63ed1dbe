"""Linear SVMs trained one-vs-rest on transferred features.

Training solves the L1-hinge dual by coordinate descent over alpha in
[0, C]^n with w = sum_i alpha_i y_i x_i, sweeping a fresh random permutation
each epoch and stopping when the worst projected-gradient violation drops
below tol. The bias rides along as an augmented constant-1 feature, so it is
regularized like any weight and the dual needs no equality constraint.
Decision scores are real-valued and feed AP ranking directly.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

MAGIC = b"USVM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass
class SvmModel:
    w: np.ndarray  # (p,) float32
    b: float
    C: float
    n_sv_bounded: int = 0
    degenerate: bool = False
    converged: bool = True
    epochs: int = 0
    alpha: np.ndarray | None = None  # diagnostic, not serialized

    @property
    def p(self) -> int:
        return self.w.shape[0]


@dataclass
class OvrSvmModel:
    models: list  # one SvmModel per class

    @property
    def n_classes(self) -> int:
        return len(self.models)

    @property
    def p(self) -> int:
        return self.models[0].p


def svm_train_binary(X, y, C: float = 1.0, tol: float = 1e-3,
                     max_iter: int = 1000, seed: int = 0) -> SvmModel:
    """Train one binary linear SVM by dual coordinate descent.

    ``y`` entries must be -1/+1. If only one class is present the problem is
    degenerate and the model scores that class's sign everywhere (w = 0,
    b = sign), flagged via ``degenerate``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if y.shape != (n,):
        raise ValueError("y must be a length-n vector")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("y entries must be -1 or +1")
    if C <= 0:
        raise ValueError("C must be > 0")

    if np.all(y == y[0]):
        return SvmModel(w=np.zeros(X.shape[1], dtype=np.float32), b=float(y[0]),
                        C=C, degenerate=True)

    # augmented rows x~ = [x, 1] pre-multiplied by the label
    xy = np.hstack([X, np.ones((n, 1))]) * y[:, None]
    q_diag = np.einsum("ij,ij->i", xy, xy)  # >= 1 thanks to the bias feature
    alpha = np.zeros(n)
    w_aug = np.zeros(X.shape[1] + 1)

    rng = np.random.default_rng(seed)
    converged = False
    epoch = 0
    for epoch in range(1, max_iter + 1):
        max_violation = 0.0
        for i in rng.permutation(n):
            g = xy[i] @ w_aug - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                max_violation = max(max_violation, abs(pg))
                a_new = min(max(a - g / q_diag[i], 0.0), C)
                if a_new != a:
                    w_aug += (a_new - a) * xy[i]
                    alpha[i] = a_new
        if max_violation < tol:
            converged = True
            break

    return SvmModel(
        w=w_aug[:-1].astype(np.float32),
        b=float(np.float32(w_aug[-1])),
        C=C,
        n_sv_bounded=int(np.count_nonzero(alpha == C)),
        degenerate=False,
        converged=converged,
        epochs=epoch,
        alpha=alpha,
    )


def svm_train_ovr(X, class_labels, C: float = 1.0, tol: float = 1e-3,
                  max_iter: int = 1000, seed: int = 0, threads: int = 1) -> OvrSvmModel:
    """One binary SVM per class column: +1 where the label is set, else -1."""
    class_labels = np.asarray(class_labels)
    if class_labels.ndim != 2 or class_labels.shape[0] != np.shape(X)[0]:
        raise ValueError("class_labels must be n x n_classes")

    def train_one(c):
        yc = np.where(class_labels[:, c] == 1, 1.0, -1.0)
        return svm_train_binary(X, yc, C=C, tol=tol, max_iter=max_iter, seed=seed)

    n_classes = class_labels.shape[1]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            models = list(pool.map(train_one, range(n_classes)))
    else:
        models = [train_one(c) for c in range(n_classes)]
    return OvrSvmModel(models=models)


def svm_decision(model: SvmModel, X) -> np.ndarray:
    """Scores X w + b (float64 accumulation)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.p:
        raise ValueError(f"expected m x {model.p} matrix, got {X.shape}")
    return X @ model.w.astype(np.float64) + model.b


def ovr_decision(ovr: OvrSvmModel, X) -> np.ndarray:
    """m x n_classes score matrix."""
    return np.column_stack([svm_decision(m, X) for m in ovr.models])


def primal_objective(model: SvmModel, X, y) -> float:
    """0.5 |w~|^2 + C sum hinge, with the bias counted as a weight."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = model.w.astype(np.float64)
    margins = y * (X @ w + model.b)
    reg = 0.5 * (w @ w + model.b * model.b)
    return float(reg + model.C * np.maximum(0.0, 1.0 - margins).sum())


def dual_objective(model: SvmModel, X, y) -> float:
    """sum alpha - 0.5 |sum alpha_i y_i x~_i|^2 (maximization form)."""
    if model.alpha is None:
        raise ValueError("model carries no dual variables")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xa = np.hstack([X, np.ones((X.shape[0], 1))])
    w_aug = xa.T @ (model.alpha * y)
    return float(model.alpha.sum() - 0.5 * (w_aug @ w_aug))


def save_svm(ovr: OvrSvmModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, ovr.n_classes, ovr.p))
        for m in ovr.models:
            fh.write(np.ascontiguousarray(m.w, dtype="<f4").tobytes())
            fh.write(struct.pack("<f", m.b))


def load_svm(path, C: float = 1.0) -> OvrSvmModel:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError("file too short for SVM header")
        magic, version, n_classes, p = _HEADER.unpack(header)
        if magic != MAGIC or version != VERSION:
            raise ValueError(f"not an SVM model file (magic {magic!r}, version {version})")
        models = []
        for _ in range(n_classes):
            buf = fh.read(p * 4 + 4)
            if len(buf) != p * 4 + 4:
                raise ValueError("SVM payload truncated")
            w = np.frombuffer(buf[: p * 4], dtype="<f4").copy()
            (b,) = struct.unpack("<f", buf[p * 4 :])
            models.append(SvmModel(w=w, b=float(b), C=C))
        if fh.read(1):
            raise ValueError("trailing bytes in SVM file")
    return OvrSvmModel(models=models)
