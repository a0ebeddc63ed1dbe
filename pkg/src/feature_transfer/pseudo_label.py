"""Pseudo-labels: nearest HR centroid per LR feature.

The cluster index plays the role of a surrogate class label for training the
transfer network, so the only requirement is the shared nearest-centroid rule
from :mod:`feature_transfer.clustering` (ties to the lowest index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import KMeansModel, kmeans_assign
from .feature_store import FeatureDataset


@dataclass
class PseudoLabeling:
    labels: np.ndarray  # (m,) cluster indices
    k: int
    histogram: np.ndarray  # (k,) per-class counts

    def __post_init__(self):
        assert self.histogram.sum() == self.labels.shape[0]


def assign_pseudo_labels(model: KMeansModel, lr: FeatureDataset) -> PseudoLabeling:
    """Label every LR row with its nearest HR centroid index."""
    if lr.d != model.d:
        raise ValueError(f"feature dim {lr.d} != centroid dim {model.d}")
    labels = kmeans_assign(model, lr.data)
    histogram = np.bincount(labels, minlength=model.k)
    return PseudoLabeling(labels=labels, k=model.k, histogram=histogram)


def pseudo_labeling_from_dataset(ds: FeatureDataset) -> PseudoLabeling:
    """Rebuild a PseudoLabeling from labels stored in a feature file."""
    if ds.pseudo_labels is None or ds.pseudo_label_k is None:
        raise ValueError("dataset carries no pseudo-labels with recorded k")
    labels = ds.pseudo_labels.astype(np.int64)
    return PseudoLabeling(labels=labels, k=ds.pseudo_label_k,
                          histogram=np.bincount(labels, minlength=ds.pseudo_label_k))
