"""Per-class average precision and mAP.

Two AP variants:

* ``voc11`` (default): mean of the interpolated max-precision at the eleven
  recall levels 0.0, 0.1, ..., 1.0 (the VOC2007 toolkit convention).
* ``continuous``: area under the precision envelope, computed as the mean
  over positives of the best precision at or beyond each positive's rank.

Ranking sorts by descending score with ties kept in original input order
(stable sort), so results are deterministic and oracle-comparable. Recall
thresholds compare in integer arithmetic (10*tp >= i*P) to dodge float
equality traps at exact recall levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .svm import OvrSvmModel, svm_decision

AP_MODES = ("voc11", "continuous")


class ZeroPositivesError(ValueError):
    """AP is undefined without at least one positive label."""


@dataclass
class EvalReport:
    per_class_ap: dict  # class index -> AP in [0, 1]
    map: float
    ap_mode: str
    run_config: dict = field(default_factory=dict)
    skipped_classes: list = field(default_factory=list)


def _ranked_stats(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.shape != scores.shape:
        raise ValueError("scores and labels must be equal-length vectors")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be binary")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order].astype(np.int64)
    tp = np.cumsum(hits)
    precision = tp / np.arange(1, scores.size + 1, dtype=np.float64)
    return hits, tp, precision


def average_precision(scores, labels, mode: str = "voc11") -> float:
    if mode not in AP_MODES:
        raise ValueError(f"mode must be one of {AP_MODES}")
    hits, tp, precision = _ranked_stats(scores, labels)
    n_pos = int(tp[-1]) if tp.size else 0
    if n_pos == 0:
        raise ZeroPositivesError("no positive labels")

    if mode == "voc11":
        total = 0.0
        for i in range(11):
            total += float(precision[10 * tp >= i * n_pos].max())
        return total / 11.0

    # continuous: precision envelope evaluated at each positive
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    return float(np.mean(envelope[hits == 1]))


def mean_average_precision(per_class_ap: dict) -> float:
    if not per_class_ap:
        raise ValueError("need at least one class AP")
    return float(np.mean(list(per_class_ap.values())))


def evaluate(models: OvrSvmModel, features, class_labels, mode: str = "voc11",
             run_config: dict | None = None) -> EvalReport:
    """Score every class's SVM on ``features`` and aggregate AP into mAP.

    Classes without a single positive in ``class_labels`` are skipped with a
    warning and excluded from the mean.
    """
    class_labels = np.asarray(class_labels)
    if class_labels.ndim != 2 or class_labels.shape[1] != models.n_classes:
        raise ValueError("class_labels must be m x n_classes")

    per_class = {}
    skipped = []
    for c in range(models.n_classes):
        labels = class_labels[:, c]
        if labels.sum() == 0:
            skipped.append(c)
            warnings.warn(f"class {c} has no positives; omitted from mAP")
            continue
        scores = svm_decision(models.models[c], features)
        per_class[c] = average_precision(scores, labels, mode=mode)

    return EvalReport(
        per_class_ap=per_class,
        map=mean_average_precision(per_class),
        ap_mode=mode,
        run_config=dict(run_config or {}),
        skipped_classes=skipped,
    )


def render_report(report: EvalReport, class_names=None) -> str:
    """Aligned one-row table: per-class AP in percent plus mAP."""
    classes = sorted(report.per_class_ap)
    if class_names is None:
        class_names = {c: f"c{c}" for c in classes}
    headers = [class_names[c] for c in classes] + ["mAP"]
    values = [f"{100.0 * report.per_class_ap[c]:.1f}" for c in classes]
    values.append(f"{100.0 * report.map:.1f}")
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
        "  ".join(v.rjust(w) for v, w in zip(values, widths)),
    ]
    if report.skipped_classes:
        lines.append(f"skipped (no positives): {report.skipped_classes}")
    return "\n".join(lines) + "\n"


def report_to_kv(report: EvalReport) -> str:
    """Machine-readable key=value dump, full float precision, sorted keys."""
    lines = [f"ap_mode={report.ap_mode}"]
    for c in sorted(report.per_class_ap):
        lines.append(f"class.{c}.ap={report.per_class_ap[c]:.17g}")
    lines.append(f"map={report.map:.17g}")
    lines.append("skipped_classes=" + ",".join(str(c) for c in report.skipped_classes))
    for key in sorted(report.run_config):
        lines.append(f"config.{key}={report.run_config[key]}")
    return "\n".join(lines) + "\n"


METRIC_PREFIXES = ("ap_mode=", "class.", "map=")


def metric_lines(kv_text: str) -> list:
    """The evaluation-result lines of a key=value report (config echo excluded)."""
    return [ln for ln in kv_text.splitlines() if ln.startswith(METRIC_PREFIXES)]
