"""Command-line entry point.

Subcommands: propagate | train | analyze-bias | ablate | sweep |
export-relevance. Every experiment subcommand takes ``--config <path>`` plus
trailing ``key=value`` overrides; failures exit nonzero after printing one
machine-readable JSON error line to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .data import one_hot, read_edge_list, write_matrix_binary
from .graph import build_csr
from .metrics import bias_stats
from .propagation import PropagationConfig, propagate
from .reporting import write_report
from .smoothing import RefinementMatrix


def _load_config(args) -> harness.ExperimentConfig:
    mapping = harness.load_config_file(args.config) if args.config else {}
    mapping = harness.apply_overrides(mapping, getattr(args, "overrides", []))
    return harness.build_config(mapping)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("overrides", nargs="*", metavar="key=value",
                        help="override individual config keys")


def cmd_propagate(args) -> int:
    if args.config:
        cfg = harness.build_config(harness.load_config_file(args.config))
        if args.beta is None:
            args.beta = cfg.beta
        if args.k is None:
            args.k = cfg.k_steps
    args.beta = 0.1 if args.beta is None else args.beta
    args.k = 2 if args.k is None else args.k
    edges, inferred = read_edge_list(args.graph)
    labels: dict[int, int] = {}
    num_classes = 0
    with open(args.labels, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ValueError(f"{args.labels}:{lineno}: expected 'node_id,label'")
            node, label = int(fields[0]), int(fields[1])
            if node < 0 or label < 0:
                raise ValueError(f"{args.labels}:{lineno}: negative id")
            labels[node] = label
            num_classes = max(num_classes, label + 1)
            inferred = max(inferred, node + 1)
    if not labels:
        raise ValueError(f"{args.labels}: no labels found")
    num_nodes = args.num_nodes or inferred
    graph = build_csr(edges, num_nodes, symmetrize=True)
    y0 = np.zeros((num_nodes, num_classes))
    nodes = np.fromiter(labels.keys(), dtype=np.int64)
    y0[nodes] = one_hot([labels[int(n)] for n in nodes], num_classes)
    cfg = PropagationConfig(args.beta, args.k, args.self_loops)
    write_matrix_binary(propagate(graph, y0, cfg), args.out)
    print(f"wrote propagated labels ({num_nodes} x {num_classes}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    if cfg.repeats > 1:
        report, _ = harness.run_repeated(cfg)
        result = None
    else:
        result = harness.run_training(cfg)
        report = result.report
    out = Path(args.out)
    if result is not None and result.refinement is not None:
        relevance = out.with_name(out.stem + ".relevance.csv")
        harness.export_relevance(result.refinement, relevance)
        report.final_relevance_path = str(relevance)
    if args.checkpoint_dir and result is not None:
        harness.save_checkpoint(args.checkpoint_dir, result.params, result.refinement, cfg)
    json_path, csv_path = write_report(report, out)
    print(f"final test accuracy {report.final_test_acc_mean:.4f} "
          f"(+/- {report.final_test_acc_std:.4f} over {len(report.seeds)} seed(s))")
    print(f"wrote {json_path} and {csv_path}")
    return 0


def cmd_analyze_bias(args) -> int:
    cfg = _load_config(args)
    dataset = harness.build_dataset(cfg)
    partition = None
    if cfg.sampler_kind == "cluster":
        from . import rng as rng_streams
        from .sampling import partition_clusters
        partition = partition_clusters(dataset.graph, cfg.num_parts,
                                       rng_streams.child_seed(cfg.seed, rng_streams.PARTITION))
    batches = []
    for epoch in range(args.epochs):
        batches.extend(b for b in harness.epoch_batches(cfg, dataset, partition, epoch)
                       if b.train_local.size)
    stats = bias_stats(batches, dataset)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("class,mean,std\n")
        for c in range(dataset.num_classes):
            fh.write(f"{c},{stats.mean[c]!r},{stats.std[c]!r}\n")
    print(f"wrote per-class batch fraction stats over {stats.batch_count} batches to {args.out}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    results = harness.run_ablations(cfg, args.out_dir)
    for name, report in results.items():
        print(f"{name}: {report.final_test_acc_mean:.4f} +/- {report.final_test_acc_std:.4f}")
    print(f"wrote reports and ablation_summary.csv to {args.out_dir}")
    return 0


def cmd_sweep(args) -> int:
    mapping = harness.load_config_file(args.config) if args.config else {}
    mapping = harness.apply_overrides(mapping, args.overrides)
    grid = harness.parse_sweep_grid(mapping)
    cfg = harness.build_config(mapping)
    rows = harness.run_sweep(cfg, grid, args.out_dir)
    print(f"swept {len(rows)} points; wrote sweep_summary.csv to {args.out_dir}")
    return 0


def cmd_export_relevance(args) -> int:
    path = Path(args.checkpoint)
    if path.is_dir():
        _, refinement = harness.load_checkpoint(path)
        if refinement is None:
            raise ValueError(f"checkpoint {path} holds no relevance matrix")
    else:
        from .data import read_matrix_binary
        refinement = RefinementMatrix(read_matrix_binary(path))
    harness.export_relevance(refinement, args.out)
    print(f"wrote row-wise softmax of the relevance matrix to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="als-graph",
                                     description="Adaptive label smoothing experiments on graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", help="precompute propagated labels")
    p.add_argument("--graph", required=True, help="edge list file")
    p.add_argument("--labels", required=True, help="observed labels file")
    p.add_argument("--out", required=True, help="output binary matrix")
    p.add_argument("--beta", type=float, default=None, help="residual strength (default 0.1)")
    p.add_argument("--k", type=int, default=None, help="propagation steps (default 2)")
    p.add_argument("--config", help="optional config supplying beta/k defaults")
    p.add_argument("--num-nodes", type=int, default=0)
    p.add_argument("--self-loops", action="store_true")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("train", help="train one configuration")
    _add_config_arguments(p)
    p.add_argument("--out", default="report.json", help="report path (CSV written alongside)")
    p.add_argument("--checkpoint-dir", help="also save parameter checkpoint here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze-bias", help="per-class batch label fractions")
    _add_config_arguments(p)
    p.add_argument("--out", default="bias.csv")
    p.add_argument("--epochs", type=int, default=1, help="epochs of batches to aggregate")
    p.set_defaults(func=cmd_analyze_bias)

    p = sub.add_parser("ablate", help="adaptive smoothing against its ablations")
    _add_config_arguments(p)
    p.add_argument("--out-dir", default="ablation")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="grid over sweep.* keys in the config")
    _add_config_arguments(p)
    p.add_argument("--out-dir", default="sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-relevance", help="write softmax of a saved relevance matrix")
    p.add_argument("--checkpoint", required=True, help="checkpoint dir or .bin matrix")
    p.add_argument("--out", default="relevance.csv")
    p.set_defaults(func=cmd_export_relevance)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
