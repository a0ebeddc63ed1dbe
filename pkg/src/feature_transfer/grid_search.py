"""Architecture sweep over (N1, N2): one transfer pipeline per cell.

N2 doubles as the cluster count k, so HR clustering and LR pseudo-labeling
are computed once per distinct N2 and shared across that row. Each cell is
otherwise an independent standalone run with the sweep's seed; a failing
cell records its error and the sweep continues.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import clustering, evaluation, pseudo_label, svm, transfer_net
from .feature_store import FeatureDataset
from .pipeline import PipelineConfig

GRID_CSV_HEADER = "n1,n2,map,seconds"


@dataclass
class GridSpec:
    n1_values: list
    n2_values: list
    base_config: PipelineConfig
    seed: int = 0

    def __post_init__(self):
        if not self.n1_values or not self.n2_values:
            raise ValueError("grid axes must be non-empty")
        if min(self.n1_values) < 1 or min(self.n2_values) < 1:
            raise ValueError("widths must be >= 1")


@dataclass
class GridCell:
    n1: int
    n2: int
    map: float | None = None
    seconds: float = 0.0
    error: str | None = None


@dataclass
class GridResult:
    cells: dict = field(default_factory=dict)  # (n1, n2) -> GridCell

    @property
    def best(self):
        """(n1, n2) attaining the max mAP; ties to smaller n1 then n2."""
        scored = [c for c in self.cells.values() if c.error is None]
        if not scored:
            return None
        top = max(c.map for c in scored)
        winners = sorted((c.n1, c.n2) for c in scored if c.map == top)
        return winners[0]


def run_cell(n1: int, n2: int, labeling, lr_train_pl: FeatureDataset,
             lr_test: FeatureDataset, cfg: PipelineConfig, seed: int) -> float:
    hyper = transfer_net.SgdHyper(
        total_iters=cfg.iters, lr0=cfg.lr0, momentum=cfg.momentum,
        weight_decay=cfg.weight_decay, batch_size=cfg.batch_size,
        step_size=cfg.step_size, gamma=cfg.gamma, seed=seed,
    )
    params, _ = transfer_net.train(lr_train_pl, labeling, (n1, n2), hyper)
    t_train = transfer_net.transform(params, lr_train_pl.data)
    t_test = transfer_net.transform(params, lr_test.data)
    ovr = svm.svm_train_ovr(t_train, lr_train_pl.class_labels, C=cfg.svm_c,
                            tol=cfg.svm_tol, max_iter=cfg.svm_max_iter,
                            seed=seed, threads=cfg.threads)
    report = evaluation.evaluate(ovr, t_test, lr_test.class_labels, mode=cfg.ap_mode)
    return report.map


def run_grid(spec: GridSpec, hr: FeatureDataset, lr_train: FeatureDataset,
             lr_test: FeatureDataset) -> GridResult:
    if lr_train.class_labels is None or lr_test.class_labels is None:
        raise ValueError("grid search needs ground-truth labels on lr_train and lr_test")
    cfg = spec.base_config
    result = GridResult()
    for n2 in spec.n2_values:
        try:
            km = clustering.kmeans_fit(hr.data, n2, max_iter=cfg.km_max_iter,
                                       tol=cfg.km_tol, seed=spec.seed)
            labeling = pseudo_label.assign_pseudo_labels(km, lr_train)
            lr_train_pl = lr_train.with_pseudo_labels(labeling.labels, labeling.k)
            row_error = None
        except Exception as exc:  # clustering failure poisons the whole row
            row_error = f"{type(exc).__name__}: {exc}"
        for n1 in spec.n1_values:
            cell = GridCell(n1=n1, n2=n2)
            t0 = time.perf_counter()
            if row_error is not None:
                cell.error = row_error
            else:
                try:
                    cell.map = run_cell(n1, n2, labeling, lr_train_pl, lr_test,
                                        cfg, spec.seed)
                except Exception as exc:
                    cell.error = f"{type(exc).__name__}: {exc}"
            cell.seconds = time.perf_counter() - t0
            result.cells[(n1, n2)] = cell
    return result


def render_grid(result: GridResult) -> str:
    """Text table, rows = N2, columns = N1, best cell starred."""
    n1s = sorted({n1 for n1, _ in result.cells})
    n2s = sorted({n2 for _, n2 in result.cells})
    best = result.best

    def fmt(cell: GridCell) -> str:
        if cell.error is not None:
            return "ERR"
        text = f"{cell.map:.3f}"
        return text + "*" if (cell.n1, cell.n2) == best else text

    header = ["N2\\N1"] + [str(n1) for n1 in n1s]
    rows = [[str(n2)] + [fmt(result.cells[(n1, n2)]) for n1 in n1s] for n2 in n2s]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(col.rjust(w) for col, w in zip(row, widths))
             for row in [header] + rows]
    return "\n".join(lines) + "\n"


def grid_to_csv(result: GridResult) -> str:
    lines = [GRID_CSV_HEADER]
    for (n1, n2) in sorted(result.cells):
        cell = result.cells[(n1, n2)]
        map_txt = "ERR" if cell.error is not None else f"{cell.map:.17g}"
        lines.append(f"{n1},{n2},{map_txt},{cell.seconds:.3f}")
    return "\n".join(lines) + "\n"
