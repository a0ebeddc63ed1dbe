"""Independent brute-force oracles used across the test suite.

Each oracle deliberately re-derives its answer from first principles
(exhaustive enumeration, finite differences, KKT case analysis) so it shares
no code path with the implementation it checks.
"""

import itertools
import math

import numpy as np

from feature_transfer.transfer_net import TransferNetParams, forward, loss_softmax_ce


def nearest_centroid_scan(centroids, X):
    """Double-loop nearest-centroid assignment, lowest index on ties."""
    out = []
    for x in np.asarray(X, dtype=np.float64):
        best_j, best_d = 0, math.inf
        for j, c in enumerate(np.asarray(centroids, dtype=np.float64)):
            d = float(((x - c) ** 2).sum())
            if d < best_d:
                best_j, best_d = j, d
        out.append(best_j)
    return np.array(out)


def sum_sq_to_nearest(centroids, X):
    total = 0.0
    for x in np.asarray(X, dtype=np.float64):
        total += min(float(((x - c) ** 2).sum()) for c in np.asarray(centroids, dtype=np.float64))
    return total


def partition_objective(X, assignment, k):
    """Within-cluster sum of squares for an explicit assignment."""
    X = np.asarray(X, dtype=np.float64)
    total = 0.0
    for j in range(k):
        pts = X[np.asarray(assignment) == j]
        if len(pts):
            total += float(((pts - pts.mean(axis=0)) ** 2).sum())
    return total


def brute_force_kmeans_optimum(X, k):
    """Global k-means optimum by enumerating every assignment (k^n)."""
    n = len(X)
    best = math.inf
    for assignment in itertools.product(range(k), repeat=n):
        best = min(best, partition_objective(X, assignment, k))
    return best


def is_lloyd_fixed_point(X, centroids, atol=1e-8):
    """True when assignments are nearest-centroid and every non-empty
    cluster's centroid equals the mean of its points."""
    X = np.asarray(X, dtype=np.float64)
    labels = nearest_centroid_scan(centroids, X)
    for j in range(len(centroids)):
        pts = X[labels == j]
        if len(pts) and not np.allclose(pts.mean(axis=0), centroids[j], atol=atol, rtol=0):
            return False
    return True


def finite_difference_grads(params, X, labels, eps=1e-3):
    """Central finite differences of the softmax-CE loss per parameter."""

    def loss_with_nudge(t_idx, i, delta):
        nudged = params.copy()
        nudged.tensors()[t_idx].reshape(-1)[i] += delta
        _, logits = forward(nudged, X)
        return loss_softmax_ce(logits, labels)

    grads = []
    for t_idx, tensor in enumerate(params.tensors()):
        g = np.zeros(tensor.size, dtype=np.float64)
        for i in range(tensor.size):
            plus = loss_with_nudge(t_idx, i, +eps)
            minus = loss_with_nudge(t_idx, i, -eps)
            g[i] = (plus - minus) / (2 * eps)
        grads.append(g.reshape(tensor.shape))
    return TransferNetParams(*grads)


def svm_dual_qp_oracle(X, y, C):
    """Exact solution of min 0.5 a^T Q a - e^T a over [0, C]^n by exhausting
    all 3^n active-set patterns (each alpha at 0, at C, or interior) and
    checking the KKT conditions; returns the augmented weight vector
    w~ = sum alpha_i y_i [x_i, 1]. The problem is convex, so any KKT point is
    globally optimal and w~ is unique."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    xa = np.hstack([X, np.ones((n, 1))])
    Q = (xa @ xa.T) * np.outer(y, y)
    e = np.ones(n)

    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        alpha = np.zeros(n)
        alpha[pattern == 1] = C
        free = pattern == 2
        if free.any():
            rhs = e[free] - Q[np.ix_(free, ~free)] @ alpha[~free]
            try:
                sol = np.linalg.solve(Q[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all((sol > 1e-9) & (sol < C - 1e-9)):
                continue
            alpha[free] = sol
        g = Q @ alpha - e
        if np.any(g[pattern == 0] < -1e-7):
            continue
        if np.any(g[pattern == 1] > 1e-7):
            continue
        if free.any() and np.max(np.abs(g[free])) > 1e-7:
            continue
        return xa.T @ (alpha * y), alpha
    raise AssertionError("no KKT point found (should be impossible for a convex QP)")


def ap_threshold_oracle(scores, labels, mode):
    """AP by explicitly enumerating every ranking threshold.

    Sorts by descending score (stable), computes (precision, tp) at every
    prefix, then takes for each recall level the best precision at or past
    it. voc11 averages the eleven i/10 levels; continuous averages the P
    per-positive levels.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order]
    m = len(ranked)
    n_pos = int(ranked.sum())
    assert n_pos > 0

    tp = 0
    prec_at, tp_at = [], []
    for i in range(m):
        tp += int(ranked[i])
        prec_at.append(tp / (i + 1))
        tp_at.append(tp)

    if mode == "voc11":
        total = 0.0
        for i in range(11):
            total += max(p for p, t in zip(prec_at, tp_at) if 10 * t >= i * n_pos)
        return total / 11.0

    vals = []
    for j in range(1, n_pos + 1):
        vals.append(max(p for p, t in zip(prec_at, tp_at) if t >= j))
    return float(np.mean(np.array(vals)))


def adjusted_rand_index(a, b):
    """ARI from the pair-counting contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    classes_a = np.unique(a)
    classes_b = np.unique(b)
    table = np.array([[(np.sum((a == ca) & (b == cb))) for cb in classes_b] for ca in classes_a])

    def comb2(x):
        return x * (x - 1) // 2

    sum_cells = comb2(table).sum()
    sum_rows = comb2(table.sum(axis=1)).sum()
    sum_cols = comb2(table.sum(axis=0)).sum()
    total = comb2(len(a))
    expected = sum_rows * sum_cols / total
    max_index = (sum_rows + sum_cols) / 2
    if max_index == expected:
        return 1.0
    return (sum_cells - expected) / (max_index - expected)
