"""Command-line front end.

Stage subcommands (cluster, pseudo-label, train-transfer, transform,
train-svm, evaluate) wrap the same library calls as the monolithic
``pipeline`` subcommand, with artifacts at every boundary, so a chained run
reproduces a pipeline run exactly. ``--config`` takes a flat key=value file
mirroring PipelineConfig; explicit flags override file values.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import clustering, evaluation, feature_store, grid_search, pseudo_label, svm, transfer_net
from . import pipeline as pipeline_mod
from .pipeline import (build_config, default_threads, load_raw, run_baseline,
                       run_pipeline)

log = logging.getLogger("feature_transfer")


def _add_seed(parser, default=0):
    parser.add_argument("--seed", type=int, default=default, help="RNG seed")


def _add_normalize(parser):
    parser.add_argument("--normalize", choices=["none", "l2"], default="none",
                        help="row normalization applied to raw features on load")


def _config_overrides(args) -> dict:
    keys = [
        "hr_train", "lr_train", "lr_test", "hr_test", "k", "n1", "iters",
        "batch_size", "lr0", "momentum", "weight_decay", "step_size", "gamma",
        "km_max_iter", "km_tol", "svm_c", "svm_tol", "svm_max_iter",
        "ap_mode", "normalize", "seed", "out_dir", "threads",
    ]
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _add_config_flags(parser, with_arch=True):
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--hr-train", dest="hr_train")
    parser.add_argument("--lr-train", dest="lr_train")
    parser.add_argument("--lr-test", dest="lr_test")
    parser.add_argument("--hr-test", dest="hr_test")
    if with_arch:
        parser.add_argument("-k", "--clusters", dest="k", type=int)
        parser.add_argument("--n1", type=int)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--lr0", type=float)
    parser.add_argument("--momentum", type=float)
    parser.add_argument("--weight-decay", dest="weight_decay", type=float)
    parser.add_argument("--step-size", dest="step_size", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--km-max-iter", dest="km_max_iter", type=int)
    parser.add_argument("--km-tol", dest="km_tol", type=float)
    parser.add_argument("--svm-c", dest="svm_c", type=float)
    parser.add_argument("--svm-tol", dest="svm_tol", type=float)
    parser.add_argument("--svm-max-iter", dest="svm_max_iter", type=int)
    parser.add_argument("--ap-mode", dest="ap_mode", choices=["voc11", "continuous"])
    parser.add_argument("--normalize", choices=["none", "l2"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--threads", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feature-transfer",
        description="HR-to-LR feature transfer: clustering pseudo-labels, a "
                    "two-layer transfer network, one-vs-rest linear SVMs, mAP reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic HR/LR benchmark")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--per-cluster", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--lr-rank", type=int, default=None)
    p.add_argument("--lr-noise", type=float, default=2.0)
    p.add_argument("--train-fraction", type=float, default=None,
                   help="also write paired train/test splits")
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--out", required=True, help="output directory")
    _add_seed(p)

    p = sub.add_parser("cluster", help="fit k-means on HR features")
    p.add_argument("--features", required=True)
    p.add_argument("-k", "--clusters", dest="k", type=int, required=True)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    _add_seed(p)
    _add_normalize(p)

    p = sub.add_parser("pseudo-label", help="attach nearest-centroid pseudo-labels")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    _add_seed(p)
    _add_normalize(p)

    p = sub.add_parser("train-transfer", help="train the two-layer transfer network")
    p.add_argument("--features", required=True, help="feature file with pseudo-labels")
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--batch-size", type=int, default=1000)
    p.add_argument("--lr0", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=0.0005)
    p.add_argument("--step-size", type=int, default=15000)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--out", required=True)
    _add_seed(p)
    _add_normalize(p)

    p = sub.add_parser("transform", help="emit transferred features")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    _add_seed(p)
    _add_normalize(p)

    p = sub.add_parser("train-svm", help="train one-vs-rest linear SVMs")
    p.add_argument("--features", required=True, help="feature file with class labels")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${pipeline_mod.THREADS_ENV} or 1)")
    p.add_argument("--out", required=True)
    _add_seed(p)
    _add_normalize(p)

    p = sub.add_parser("evaluate", help="AP/mAP report for an SVM model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True, help="test feature file with class labels")
    p.add_argument("--ap-mode", choices=["voc11", "continuous"], default="voc11")
    p.add_argument("--out-dir", required=True)
    _add_seed(p)
    _add_normalize(p)

    p = sub.add_parser("pipeline", help="full transfer pipeline")
    _add_config_flags(p)

    p = sub.add_parser("baseline", help="SVM on raw HR or LR features")
    p.add_argument("--which", choices=["hr", "lr"], required=True)
    _add_config_flags(p)

    p = sub.add_parser("grid-search", help="sweep (N1, N2) architectures")
    p.add_argument("--n1", dest="n1_list", required=True,
                   help="comma-separated N1 values")
    p.add_argument("--n2", dest="n2_list", required=True,
                   help="comma-separated N2 values (each N2 is also k)")
    _add_config_flags(p, with_arch=False)

    return parser


def _cmd_synth(args) -> int:
    cfg = feature_store.SyntheticConfig(
        n_clusters=args.clusters, n_per_cluster=args.per_cluster, d=args.dim,
        hr_separation=args.separation, lr_noise_sigma=args.lr_noise,
        lr_rank=args.lr_rank, seed=args.seed,
    )
    hr, lr = feature_store.generate_synthetic(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "udft" if args.format == "binary" else "csv"
    feature_store.save_features(hr, out / f"hr.{ext}", format=args.format)
    feature_store.save_features(lr, out / f"lr.{ext}", format=args.format)
    written = [f"hr.{ext}", f"lr.{ext}"]
    if args.train_fraction is not None:
        # one permutation for both views keeps rows paired
        perm = feature_store.split_permutation(hr.n, args.seed)
        n_train = feature_store.split_sizes(hr.n, args.train_fraction)[0]
        tr = np.sort(perm[:n_train])
        te = np.sort(perm[n_train:])
        for name, ds in (("hr", hr), ("lr", lr)):
            feature_store.save_features(ds.take(tr), out / f"{name}_train.{ext}", format=args.format)
            feature_store.save_features(ds.take(te), out / f"{name}_test.{ext}", format=args.format)
            written += [f"{name}_train.{ext}", f"{name}_test.{ext}"]
    log.info("wrote %s under %s", ", ".join(written), out)
    return 0


def _cmd_cluster(args) -> int:
    ds = load_raw(args.features, args.normalize)
    model = clustering.kmeans_fit(ds.data, args.k, max_iter=args.max_iter,
                                  tol=args.tol, seed=args.seed)
    clustering.save_kmeans(model, args.out)
    log.info("k=%d objective=%.6g iterations=%d -> %s",
             model.k, model.objective, model.iterations, args.out)
    return 0


def _cmd_pseudo_label(args) -> int:
    model = clustering.load_kmeans(args.model)
    ds = load_raw(args.features, args.normalize)
    labeling = pseudo_label.assign_pseudo_labels(model, ds)
    feature_store.save_features(ds.with_pseudo_labels(labeling.labels, labeling.k), args.out)
    log.info("labeled %d rows over %d pseudo-classes -> %s", ds.n, labeling.k, args.out)
    return 0


def _cmd_train_transfer(args) -> int:
    ds = load_raw(args.features, args.normalize)
    labeling = pseudo_label.pseudo_labeling_from_dataset(ds)
    hyper = transfer_net.SgdHyper(
        total_iters=args.iters, lr0=args.lr0, momentum=args.momentum,
        weight_decay=args.weight_decay, batch_size=args.batch_size,
        step_size=args.step_size, gamma=args.gamma, seed=args.seed,
    )
    params, history = transfer_net.train(ds, labeling, (args.n1, labeling.k), hyper)
    transfer_net.save_checkpoint(params, args.out)
    log.info("trained %d iters, final loss %.6g -> %s",
             len(history.losses), history.final_loss, args.out)
    return 0


def _cmd_transform(args) -> int:
    params = transfer_net.load_checkpoint(args.checkpoint)
    ds = load_raw(args.features, args.normalize)
    transferred = feature_store.FeatureDataset(
        data=transfer_net.transform(params, ds.data),
        class_labels=ds.class_labels,
    )
    feature_store.save_features(transferred, args.out)
    log.info("transferred %d rows %d-D -> %d-D, %s", ds.n, ds.d, transferred.d, args.out)
    return 0


def _cmd_train_svm(args) -> int:
    ds = load_raw(args.features, args.normalize)
    if ds.class_labels is None:
        raise ValueError("training features carry no class labels")
    threads = args.threads if args.threads is not None else default_threads()
    ovr = svm.svm_train_ovr(ds.data, ds.class_labels, C=args.c, tol=args.tol,
                            max_iter=args.max_iter, seed=args.seed, threads=threads)
    svm.save_svm(ovr, args.out)
    log.info("trained %d one-vs-rest models -> %s", ovr.n_classes, args.out)
    return 0


def _cmd_evaluate(args) -> int:
    ovr = svm.load_svm(args.model)
    ds = load_raw(args.features, args.normalize)
    if ds.class_labels is None:
        raise ValueError("test features carry no class labels")
    run_config = {"model": args.model, "features": args.features,
                  "ap_mode": args.ap_mode, "normalize": args.normalize}
    report = evaluation.evaluate(ovr, ds.data, ds.class_labels,
                                 mode=args.ap_mode, run_config=run_config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.kv").write_text(evaluation.report_to_kv(report))
    (out / "report.txt").write_text(evaluation.render_report(report))
    sys.stdout.write(evaluation.render_report(report))
    return 0


def _cmd_pipeline(args) -> int:
    config = build_config(args.config, _config_overrides(args))
    report = run_pipeline(config)
    sys.stdout.write(evaluation.render_report(report))
    return 0


def _cmd_baseline(args) -> int:
    config = build_config(args.config, _config_overrides(args))
    report = run_baseline(config, args.which)
    sys.stdout.write(evaluation.render_report(report))
    return 0


def _cmd_grid_search(args) -> int:
    config = build_config(args.config, _config_overrides(args))
    spec = grid_search.GridSpec(
        n1_values=[int(v) for v in args.n1_list.split(",")],
        n2_values=[int(v) for v in args.n2_list.split(",")],
        base_config=config,
        seed=config.seed,
    )
    hr = load_raw(config.hr_train, config.normalize)
    lr_train = load_raw(config.lr_train, config.normalize)
    lr_test = load_raw(config.lr_test, config.normalize)
    result = grid_search.run_grid(spec, hr, lr_train, lr_test)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "grid.csv").write_text(grid_search.grid_to_csv(result))
    table = grid_search.render_grid(result)
    (out / "grid.txt").write_text(table)
    sys.stdout.write(table)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "cluster": _cmd_cluster,
    "pseudo-label": _cmd_pseudo_label,
    "train-transfer": _cmd_train_transfer,
    "transform": _cmd_transform,
    "train-svm": _cmd_train_svm,
    "evaluate": _cmd_evaluate,
    "pipeline": _cmd_pipeline,
    "baseline": _cmd_baseline,
    "grid-search": _cmd_grid_search,
}


def cli_dispatch(argv) -> int:
    """Parse and run; returns the process exit code (2 = usage error)."""
    if not logging.getLogger().handlers and not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
