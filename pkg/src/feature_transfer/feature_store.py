"""Canonical feature dataset: container, binary/CSV serialization, splits,
and the synthetic HR/LR generator used for desk-scale experiments.

Binary layout (little-endian), magic ``UDFT``:

    magic        4 bytes  b"UDFT"
    version      u32      1
    n            u64      sample count
    d            u64      feature dimension
    n_classes    u32      ground-truth class count (0 when absent)
    flags        u32      bit0 class_labels, bit1 pseudo_labels, bit2 pseudo-label k
    data         n*d      float32, row-major
    class_labels n*n_classes u8      present iff bit0
    pseudo       n        u32        present iff bit1
    k            u32                 present iff bit2

CSV alternative: header ``f0,...,f{d-1}[,c0,...,c{n_classes-1}]``, one sample
per line. CSV does not carry pseudo-labels.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, replace

import numpy as np

MAGIC = b"UDFT"
VERSION = 1

_FLAG_CLASS_LABELS = 1 << 0
_FLAG_PSEUDO_LABELS = 1 << 1
_FLAG_PSEUDO_K = 1 << 2

_HEADER = struct.Struct("<4sIQQII")


class FeatureStoreError(Exception):
    """Base class for feature file problems."""


class FormatError(FeatureStoreError):
    """Bad magic, unsupported version, or malformed header/CSV header."""


class CorruptFileError(FeatureStoreError):
    """Payload shorter or longer than the header declares."""


class ValidationError(FeatureStoreError):
    """Contents violate dataset invariants (NaN/Inf, bad labels)."""


@dataclass
class FeatureDataset:
    """n x d float32 feature matrix with optional labels.

    ``class_labels`` is a binary n x n_classes matrix (multi-label ground
    truth). ``pseudo_labels`` holds cluster indices in [0, pseudo_label_k).
    Treat instances as immutable; derive new ones via the ``with_*`` helpers.
    """

    data: np.ndarray
    class_labels: np.ndarray | None = None
    pseudo_labels: np.ndarray | None = None
    pseudo_label_k: int | None = None

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValidationError("data must be a non-empty 2-D matrix")
        if self.class_labels is not None:
            self.class_labels = np.ascontiguousarray(self.class_labels, dtype=np.uint8)
        if self.pseudo_labels is not None:
            self.pseudo_labels = np.ascontiguousarray(self.pseudo_labels, dtype=np.uint32)
        self.validate()

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    @property
    def n_classes(self) -> int:
        return 0 if self.class_labels is None else self.class_labels.shape[1]

    def validate(self):
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("data contains NaN or Inf")
        if self.class_labels is not None:
            if self.class_labels.shape != (self.n, self.n_classes) or self.n_classes < 1:
                raise ValidationError("class_labels shape mismatch")
            if not np.all((self.class_labels == 0) | (self.class_labels == 1)):
                raise ValidationError("class_labels entries must be 0 or 1")
        if self.pseudo_labels is not None:
            if self.pseudo_labels.shape != (self.n,):
                raise ValidationError("pseudo_labels length mismatch")
            if self.pseudo_label_k is not None and self.pseudo_labels.size:
                if int(self.pseudo_labels.max()) >= self.pseudo_label_k:
                    raise ValidationError("pseudo label out of range for recorded k")

    def with_pseudo_labels(self, labels, k: int) -> "FeatureDataset":
        """New dataset carrying the given pseudo-labels (original untouched)."""
        return replace(self, pseudo_labels=np.asarray(labels), pseudo_label_k=int(k))

    def take(self, indices) -> "FeatureDataset":
        """Row subset, preserving whichever labels are present."""
        idx = np.asarray(indices)
        return FeatureDataset(
            data=self.data[idx],
            class_labels=None if self.class_labels is None else self.class_labels[idx],
            pseudo_labels=None if self.pseudo_labels is None else self.pseudo_labels[idx],
            pseudo_label_k=self.pseudo_label_k,
        )

    def equals(self, other: "FeatureDataset") -> bool:
        """Field-by-field equality, bit-exact on the data matrix."""
        if self.data.shape != other.data.shape:
            return False
        if self.data.tobytes() != other.data.tobytes():
            return False
        if (self.class_labels is None) != (other.class_labels is None):
            return False
        if self.class_labels is not None and not np.array_equal(self.class_labels, other.class_labels):
            return False
        if (self.pseudo_labels is None) != (other.pseudo_labels is None):
            return False
        if self.pseudo_labels is not None and not np.array_equal(self.pseudo_labels, other.pseudo_labels):
            return False
        return self.pseudo_label_k == other.pseudo_label_k


@dataclass
class SyntheticConfig:
    """Knobs for the planted-cluster HR/LR generator."""

    n_clusters: int
    n_per_cluster: int
    d: int
    hr_separation: float = 10.0
    lr_noise_sigma: float = 2.0
    lr_rank: int | None = None  # None means d (identity-rank projection)
    seed: int = 0

    def __post_init__(self):
        if self.lr_rank is None:
            self.lr_rank = self.d
        if min(self.n_clusters, self.n_per_cluster, self.d) < 1:
            raise ValueError("counts must be >= 1")
        if not 1 <= self.lr_rank <= self.d:
            raise ValueError("lr_rank must be in [1, d]")
        if self.lr_noise_sigma < 0 or self.hr_separation < 0:
            raise ValueError("sigma and separation must be >= 0")


def save_features(dataset: FeatureDataset, path, format: str = "binary") -> None:
    """Write ``dataset`` to ``path``; readable back via :func:`load_features`."""
    if format == "binary":
        _save_binary(dataset, path)
    elif format == "csv":
        _save_csv(dataset, path)
    else:
        raise ValueError(f"unknown format {format!r}")


def load_features(path, format: str = "binary") -> FeatureDataset:
    """Read a feature file written by :func:`save_features`, validating it."""
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown format {format!r}")


def _save_binary(dataset: FeatureDataset, path) -> None:
    flags = 0
    if dataset.class_labels is not None:
        flags |= _FLAG_CLASS_LABELS
    if dataset.pseudo_labels is not None:
        flags |= _FLAG_PSEUDO_LABELS
    if dataset.pseudo_label_k is not None:
        flags |= _FLAG_PSEUDO_K
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dataset.n, dataset.d, dataset.n_classes, flags))
        fh.write(dataset.data.tobytes())
        if dataset.class_labels is not None:
            fh.write(dataset.class_labels.tobytes())
        if dataset.pseudo_labels is not None:
            fh.write(dataset.pseudo_labels.astype("<u4").tobytes())
        if dataset.pseudo_label_k is not None:
            fh.write(struct.pack("<I", dataset.pseudo_label_k))


def _read_exact(fh, count: int, what: str) -> bytes:
    buf = fh.read(count)
    if len(buf) != count:
        raise CorruptFileError(f"truncated file: expected {count} bytes of {what}, got {len(buf)}")
    return buf


def _load_binary(path) -> FeatureDataset:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError("file too short for header")
        magic, version, n, d, n_classes, flags = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        if n < 1 or d < 1:
            raise FormatError("header declares empty matrix")
        if (flags & _FLAG_CLASS_LABELS) and n_classes < 1:
            raise FormatError("class_labels flag set but n_classes is 0")

        data = np.frombuffer(_read_exact(fh, n * d * 4, "feature data"), dtype="<f4").reshape(n, d)
        class_labels = None
        if flags & _FLAG_CLASS_LABELS:
            class_labels = np.frombuffer(
                _read_exact(fh, n * n_classes, "class labels"), dtype=np.uint8
            ).reshape(n, n_classes)
        pseudo = None
        if flags & _FLAG_PSEUDO_LABELS:
            pseudo = np.frombuffer(_read_exact(fh, n * 4, "pseudo labels"), dtype="<u4")
        k = None
        if flags & _FLAG_PSEUDO_K:
            (k,) = struct.unpack("<I", _read_exact(fh, 4, "pseudo-label k"))
        if fh.read(1):
            raise CorruptFileError("trailing bytes after declared payload")

    # construction re-validates NaN/Inf and label ranges
    return FeatureDataset(
        data=data.copy(),
        class_labels=None if class_labels is None else class_labels.copy(),
        pseudo_labels=None if pseudo is None else pseudo.copy(),
        pseudo_label_k=k,
    )


def _save_csv(dataset: FeatureDataset, path) -> None:
    cols = [f"f{j}" for j in range(dataset.d)]
    cols += [f"c{j}" for j in range(dataset.n_classes)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(dataset.n):
            # %.9g round-trips float32 exactly through a float64 parse
            row = [f"{v:.9g}" for v in dataset.data[i]]
            if dataset.class_labels is not None:
                row += [str(int(v)) for v in dataset.class_labels[i]]
            fh.write(",".join(row) + "\n")


def _load_csv(path) -> FeatureDataset:
    with open(path, "r") as fh:
        header = fh.readline().strip()
        names = header.split(",") if header else []
        d = sum(1 for c in names if c.startswith("f"))
        n_classes = sum(1 for c in names if c.startswith("c"))
        if d < 1 or d + n_classes != len(names):
            raise FormatError(f"bad CSV header {header!r}")
        body = fh.read()
    try:
        table = np.loadtxt(io.StringIO(body), delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise CorruptFileError(f"malformed CSV body: {exc}") from exc
    if table.size == 0:
        raise CorruptFileError("CSV has no data rows")
    if table.shape[1] != d + n_classes:
        raise CorruptFileError(f"CSV rows have {table.shape[1]} columns, header declares {d + n_classes}")
    data = table[:, :d].astype(np.float32)
    labels = None
    if n_classes:
        raw = table[:, d:]
        if not np.all((raw == 0) | (raw == 1)):
            raise ValidationError("class label columns must be 0/1")
        labels = raw.astype(np.uint8)
    return FeatureDataset(data=data, class_labels=labels)


def split(dataset: FeatureDataset, train_fraction: float, seed: int):
    """Deterministic disjoint/exhaustive row split into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if dataset.n < 2:
        raise ValueError("need at least 2 samples to split")
    perm = split_permutation(dataset.n, seed)
    n_train = split_sizes(dataset.n, train_fraction)[0]
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return dataset.take(train_idx), dataset.take(test_idx)


def split_permutation(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def split_sizes(n: int, train_fraction: float):
    n_train = int(round(n * train_fraction))
    n_train = min(max(n_train, 1), n - 1)
    return n_train, n - n_train


def generate_synthetic(config: SyntheticConfig):
    """Planted-cluster HR features plus a degraded LR view of the same rows.

    HR rows are drawn from ``n_clusters`` unit-variance isotropic Gaussians
    whose centroids sit ``hr_separation`` apart. The LR view maps each HR row
    through a fixed orthogonal projection onto a random ``lr_rank``-dim
    subspace and adds N(0, lr_noise_sigma^2) noise, mimicking the way
    low-resolution inputs collapse and blur class structure. Returns
    ``(hr, lr)`` with identical one-hot class labels, row-paired.
    """
    rng = np.random.default_rng(config.seed)
    k, m, d = config.n_clusters, config.n_per_cluster, config.d
    n = k * m

    if d >= k:
        # random orthonormal directions -> pairwise centroid distance == separation
        basis, _ = np.linalg.qr(rng.standard_normal((d, k)))
        centers = (config.hr_separation / np.sqrt(2.0)) * basis.T
    else:
        centers = rng.standard_normal((k, d)) * (config.hr_separation / np.sqrt(2.0))

    labels = np.repeat(np.arange(k), m)
    hr = centers[labels] + rng.standard_normal((n, d))

    if config.lr_rank == d:
        lr = hr.copy()  # projector onto the full space is exactly the identity
    else:
        q, _ = np.linalg.qr(rng.standard_normal((d, config.lr_rank)))
        lr = (hr @ q) @ q.T
    if config.lr_noise_sigma > 0:
        lr = lr + config.lr_noise_sigma * rng.standard_normal((n, d))

    onehot = np.zeros((n, k), dtype=np.uint8)
    onehot[np.arange(n), labels] = 1

    hr_ds = FeatureDataset(data=hr.astype(np.float32), class_labels=onehot)
    lr_ds = FeatureDataset(data=lr.astype(np.float32), class_labels=onehot.copy())
    return hr_ds, lr_ds


def l2_normalize(dataset: FeatureDataset) -> FeatureDataset:
    """Row-wise L2 normalization; zero rows pass through unchanged."""
    norms = np.linalg.norm(dataset.data.astype(np.float64), axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return replace(dataset, data=(dataset.data / norms).astype(np.float32))
