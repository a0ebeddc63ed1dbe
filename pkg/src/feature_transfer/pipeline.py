"""End-to-end orchestration: cluster -> pseudo-label -> train -> transform ->
SVM -> evaluate, plus the two no-transfer baselines.

Each stage is a plain function over in-memory objects; the CLI wraps the same
functions with file IO at every boundary. All artifact formats round-trip
losslessly (float32 features/params, float64 centroids), so a monolithic
pipeline run and a chain of stage subcommands produce identical results.

Everything lands under ``config.out_dir``; reports contain no timestamps so
reruns with the same config and seed are byte-identical.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import clustering, evaluation, feature_store, pseudo_label, svm, transfer_net

log = logging.getLogger("feature_transfer")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    """Fully resolved run configuration; every field is echoed into reports.

    ``n2`` always equals ``k``: the transfer network's output width is the
    pseudo-class count by construction.
    """

    hr_train: str = ""
    lr_train: str = ""
    lr_test: str = ""
    hr_test: str = ""  # only needed by the HR baseline
    k: int = 100
    n1: int = 4096
    iters: int = 1000
    batch_size: int = 1000
    lr0: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0005
    step_size: int = 15000
    gamma: float = 0.1
    km_max_iter: int = 300
    km_tol: float = 1e-4
    svm_c: float = 1.0
    svm_tol: float = 1e-3
    svm_max_iter: int = 1000
    ap_mode: str = "voc11"
    normalize: str = "none"
    seed: int = 0
    out_dir: str = "out"
    threads: int = 1

    @property
    def n2(self) -> int:
        return self.k

    def __post_init__(self):
        if self.ap_mode not in evaluation.AP_MODES:
            raise ValueError(f"ap_mode must be one of {evaluation.AP_MODES}")
        if self.normalize not in ("none", "l2"):
            raise ValueError("normalize must be 'none' or 'l2'")

    def hyper(self) -> transfer_net.SgdHyper:
        return transfer_net.SgdHyper(
            total_iters=self.iters, lr0=self.lr0, momentum=self.momentum,
            weight_decay=self.weight_decay, batch_size=self.batch_size,
            step_size=self.step_size, gamma=self.gamma, seed=self.seed,
        )

    def resolved(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def parse_config_value(key: str, raw: str):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise KeyError(f"unknown config key {key!r}")
    raw = raw.strip()
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config_file(path) -> dict:
    """Flat key=value config; blank lines and # comments ignored."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        values[key.strip()] = parse_config_value(key.strip(), raw)
    return values


THREADS_ENV = "FEATURE_TRANSFER_THREADS"


def default_threads() -> int:
    """Thread-count default, overridable via the environment."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_config(file_path=None, overrides: dict | None = None) -> PipelineConfig:
    """File values first, CLI overrides on top; threads falls back to the
    environment default when neither specifies it."""
    values = load_config_file(file_path) if file_path else {}
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    values.setdefault("threads", default_threads())
    return PipelineConfig(**values)


def maybe_normalize(ds: feature_store.FeatureDataset, mode: str):
    return feature_store.l2_normalize(ds) if mode == "l2" else ds


def load_raw(path, normalize: str) -> feature_store.FeatureDataset:
    return maybe_normalize(feature_store.load_features(path), normalize)


def _timed(stage: str, fn, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        result = fn(*args, **kwargs)
    except Exception as exc:
        raise StageError(stage, exc) from exc
    log.info("stage %-14s %.3fs", stage, time.perf_counter() - t0)
    return result


def _attach_log_file(out_dir: Path):
    handler = logging.FileHandler(out_dir / "log.txt")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    return handler


def _write_report(report: evaluation.EvalReport, out_dir: Path) -> None:
    (out_dir / "report.kv").write_text(evaluation.report_to_kv(report))
    (out_dir / "report.txt").write_text(evaluation.render_report(report))


def run_pipeline(config: PipelineConfig) -> evaluation.EvalReport:
    """Full transfer pipeline; artifacts and reports under config.out_dir."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = _attach_log_file(out_dir)
    try:
        hr_train = _timed("load", load_raw, config.hr_train, config.normalize)
        lr_train = load_raw(config.lr_train, config.normalize)
        lr_test = load_raw(config.lr_test, config.normalize)

        km = _timed("cluster", clustering.kmeans_fit, hr_train.data, config.k,
                    max_iter=config.km_max_iter, tol=config.km_tol, seed=config.seed)
        clustering.save_kmeans(km, out_dir / "kmeans.ukmc")
        log.info("k-means objective %.6g after %d iterations", km.objective, km.iterations)

        labeling = _timed("pseudo-label", pseudo_label.assign_pseudo_labels, km, lr_train)
        lr_train_pl = lr_train.with_pseudo_labels(labeling.labels, labeling.k)
        feature_store.save_features(lr_train_pl, out_dir / "lr_train_pseudo.udft")

        def _train():
            return transfer_net.train(lr_train_pl, labeling,
                                      (config.n1, config.n2), config.hyper())

        params, history = _timed("train-transfer", _train)
        transfer_net.save_checkpoint(params, out_dir / "transfer.utnp")
        log.info("final training loss %.6g over %d iterations",
                 history.final_loss, len(history.losses))

        def _transform(ds, name):
            transferred = feature_store.FeatureDataset(
                data=transfer_net.transform(params, ds.data),
                class_labels=ds.class_labels,
            )
            feature_store.save_features(transferred, out_dir / name)
            return transferred

        t_train = _timed("transform", _transform, lr_train, "lr_train_transferred.udft")
        t_test = _transform(lr_test, "lr_test_transferred.udft")

        ovr = _train_svm_stage(t_train, config)
        svm.save_svm(ovr, out_dir / "svm.usvm")

        report = _evaluate_stage(ovr, t_test, config, config.resolved())
        _write_report(report, out_dir)
        return report
    except StageError as err:
        (out_dir / "FAILED").write_text(f"{err.stage}: {err.cause}\n")
        raise
    finally:
        log.removeHandler(handler)
        handler.close()


def _train_svm_stage(train_ds: feature_store.FeatureDataset, config: PipelineConfig):
    if train_ds.class_labels is None:
        raise StageError("train-svm", ValueError("training features carry no class labels"))
    return _timed("train-svm", svm.svm_train_ovr, train_ds.data, train_ds.class_labels,
                  C=config.svm_c, tol=config.svm_tol, max_iter=config.svm_max_iter,
                  seed=config.seed, threads=config.threads)


def _evaluate_stage(ovr, test_ds: feature_store.FeatureDataset,
                    config: PipelineConfig, run_config: dict):
    if test_ds.class_labels is None:
        raise StageError("evaluate", ValueError("test features carry no class labels"))
    report = _timed("evaluate", evaluation.evaluate, ovr, test_ds.data,
                    test_ds.class_labels, mode=config.ap_mode, run_config=run_config)
    for c in sorted(report.per_class_ap):
        log.info("class %d AP %.4f", c, report.per_class_ap[c])
    log.info("mAP %.4f", report.map)
    return report


def run_baseline(config: PipelineConfig, which: str) -> evaluation.EvalReport:
    """SVM straight on the raw features of one resolution, no transfer."""
    if which not in ("hr", "lr"):
        raise ValueError("which must be 'hr' or 'lr'")
    train_path = config.hr_train if which == "hr" else config.lr_train
    test_path = config.hr_test if which == "hr" else config.lr_test
    if not test_path:
        raise ValueError(f"baseline {which!r} needs a matching test feature file")

    out_dir = Path(config.out_dir) / f"baseline-{which}"
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = _attach_log_file(out_dir)
    try:
        train_ds = _timed("load", load_raw, train_path, config.normalize)
        test_ds = load_raw(test_path, config.normalize)
        ovr = _train_svm_stage(train_ds, config)
        svm.save_svm(ovr, out_dir / "svm.usvm")
        run_config = dict(config.resolved(), baseline=which)
        report = _evaluate_stage(ovr, test_ds, config, run_config)
        _write_report(report, out_dir)
        return report
    except StageError as err:
        (out_dir / "FAILED").write_text(f"{err.stage}: {err.cause}\n")
        raise
    finally:
        log.removeHandler(handler)
        handler.close()
