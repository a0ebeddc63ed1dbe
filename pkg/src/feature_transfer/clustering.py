"""Lloyd's k-means over HR features, k-means++ seeded.

The centroids define the pseudo-class space: downstream, every LR feature is
labeled with its nearest centroid index. Distances use the expansion
``|x|^2 + |c|^2 - 2 x.c`` accumulated in float64, with negative round-off
clamped to zero. Ties always break to the lowest centroid index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"UKMC"
VERSION = 1
_HEADER = struct.Struct("<4sIQQIqd")


@dataclass
class KMeansModel:
    """Fitted centroids plus fit metadata."""

    centroids: np.ndarray  # (k, d) float64
    objective: float
    iterations: int
    seed: int
    objective_trace: list = field(default_factory=list, repr=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def d(self) -> int:
        return self.centroids.shape[1]


def _pairwise_sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # |x|^2 + |c|^2 - 2 x.c, clamped: round-off can go slightly negative
    d2 = (
        np.einsum("ij,ij->i", X, X)[:, None]
        + np.einsum("ij,ij->i", C, C)[None, :]
        - 2.0 * (X @ C.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _plusplus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    # greedy k-means++: several D^2-sampled candidates per step, keep the one
    # that shrinks the potential most
    n = X.shape[0]
    n_trials = 2 + int(np.log(k))
    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    centroids[0] = X[rng.integers(n)]
    closest = _pairwise_sq_dists(X, centroids[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            candidates = rng.choice(n, size=n_trials, p=closest / total)
        else:
            candidates = rng.integers(n, size=n_trials)  # degenerate: all points coincide
        cand_d2 = _pairwise_sq_dists(X, X[candidates])
        potentials = np.minimum(closest[:, None], cand_d2).sum(axis=0)
        best = int(np.argmin(potentials))
        centroids[j] = X[candidates[best]]
        np.minimum(closest, cand_d2[:, best], out=closest)
    return centroids


def kmeans_fit(X, k: int, max_iter: int = 300, tol: float = 1e-4, seed: int = 0) -> KMeansModel:
    """Run k-means++ seeding then Lloyd iterations until the relative
    objective improvement drops below ``tol`` or ``max_iter`` is reached.

    Empty clusters are reseeded to the point currently farthest from its
    assigned centroid, which keeps exactly k clusters alive. The returned
    ``objective`` is recomputed at the final centroids; ``objective_trace``
    records the per-iteration objectives (non-increasing).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if tol < 0:
        raise ValueError("tol must be >= 0")

    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(X, k, rng)

    trace: list[float] = []
    prev_obj = np.inf
    iterations = 0
    for _ in range(max_iter):
        d2 = _pairwise_sq_dists(X, centroids)
        labels = np.argmin(d2, axis=1)
        min_d2 = d2[np.arange(n), labels]
        obj = float(min_d2.sum())
        trace.append(obj)
        iterations += 1

        if np.isfinite(prev_obj):
            if prev_obj == 0.0 or (prev_obj - obj) < tol * prev_obj:
                break
        prev_obj = obj

        new_centroids = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        nonempty = counts > 0
        new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]

        if not nonempty.all():
            # reseed each empty centroid at the point farthest from its centroid
            order = np.argsort(-min_d2, kind="stable")
            pos = 0
            for j in np.flatnonzero(~nonempty):
                new_centroids[j] = X[order[pos]]
                pos += 1
        centroids = new_centroids

    final_d2 = _pairwise_sq_dists(X, centroids)
    objective = float(final_d2[np.arange(n), np.argmin(final_d2, axis=1)].sum())
    trace.append(objective)

    return KMeansModel(
        centroids=centroids,
        objective=objective,
        iterations=iterations,
        seed=seed,
        objective_trace=trace,
    )


def kmeans_assign(model: KMeansModel, X) -> np.ndarray:
    """Nearest-centroid index per row; ties go to the lowest index."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(f"expected m x {model.d} matrix, got {X.shape}")
    return np.argmin(_pairwise_sq_dists(X, model.centroids), axis=1)


def kmeans_objective(model: KMeansModel, X) -> float:
    """Sum over rows of the squared distance to the nearest centroid."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(f"expected n x {model.d} matrix, got {X.shape}")
    return float(_pairwise_sq_dists(X, model.centroids).min(axis=1).sum())


def save_kmeans(model: KMeansModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, model.k, model.d,
                              model.iterations, model.seed, model.objective))
        fh.write(np.ascontiguousarray(model.centroids, dtype="<f8").tobytes())


def load_kmeans(path) -> KMeansModel:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError("file too short for k-means header")
        magic, version, k, d, iterations, seed, objective = _HEADER.unpack(header)
        if magic != MAGIC or version != VERSION:
            raise ValueError(f"not a k-means model file (magic {magic!r}, version {version})")
        payload = fh.read(k * d * 8)
        if len(payload) != k * d * 8 or fh.read(1):
            raise ValueError("k-means centroid payload size mismatch")
    centroids = np.frombuffer(payload, dtype="<f8").reshape(k, d).copy()
    if not np.all(np.isfinite(centroids)):
        raise ValueError("centroids contain NaN or Inf")
    return KMeansModel(centroids=centroids, objective=objective,
                       iterations=iterations, seed=seed)
