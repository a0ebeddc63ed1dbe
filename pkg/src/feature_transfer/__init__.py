"""Feature transfer toolkit: cluster HR deep features into pseudo-classes,
train a two-layer transfer network on LR features against those
pseudo-labels, then classify with one-vs-rest linear SVMs and report
VOC-style per-class AP / mAP."""

from .clustering import KMeansModel, kmeans_assign, kmeans_fit, kmeans_objective
from .evaluation import (EvalReport, ZeroPositivesError, average_precision,
                         evaluate, mean_average_precision)
from .feature_store import (CorruptFileError, FeatureDataset, FormatError,
                            SyntheticConfig, ValidationError,
                            generate_synthetic, load_features, save_features,
                            split)
from .grid_search import GridResult, GridSpec, render_grid, run_grid
from .pipeline import PipelineConfig, run_baseline, run_pipeline
from .pseudo_label import PseudoLabeling, assign_pseudo_labels
from .svm import (OvrSvmModel, SvmModel, ovr_decision, svm_decision,
                  svm_train_binary, svm_train_ovr)
from .transfer_net import (DivergenceError, SgdHyper, TrainHistory,
                           TransferNetParams, backward, forward, init_network,
                           loss_softmax_ce, sgd_step, train, transform)

__version__ = "0.1.0"

__all__ = [
    "KMeansModel", "kmeans_assign", "kmeans_fit", "kmeans_objective",
    "EvalReport", "ZeroPositivesError", "average_precision", "evaluate",
    "mean_average_precision",
    "CorruptFileError", "FeatureDataset", "FormatError", "SyntheticConfig",
    "ValidationError", "generate_synthetic", "load_features", "save_features",
    "split",
    "GridResult", "GridSpec", "render_grid", "run_grid",
    "PipelineConfig", "run_baseline", "run_pipeline",
    "PseudoLabeling", "assign_pseudo_labels",
    "OvrSvmModel", "SvmModel", "ovr_decision", "svm_decision",
    "svm_train_binary", "svm_train_ovr",
    "DivergenceError", "SgdHyper", "TrainHistory", "TransferNetParams",
    "backward", "forward", "init_network", "loss_softmax_ce", "sgd_step",
    "train", "transform",
    "__version__",
]
