"""Command-line entry point: ``pairalign run | shift-report | generate | grad-check``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import csbm
from .estimator import EstimationError
from .experiment import ExperimentSpec, load_pair, read_config, run_experiment, shift_summary
from .gnn import gradient_check, init_model
from .graph import GraphFormatError, LabeledGraph, write_graph
from .stats import format_report
from .training import RunError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ESTIMATION = 0, 1, 2, 3

# flag dest -> (TrainConfig field, type)
_TRAIN_FLAGS = {
    "epochs": int, "period": int, "lr": float, "lambda_w": float, "lambda_beta": float,
    "delta": float, "metric": str, "hidden": int, "source_estimation": str,
}
_SPEC_FLAGS = {
    "preset": str, "source": str, "target": str, "modes": str, "repeat": int, "seed": int,
    "n_nodes": int, "out": str, "jobs": int, "dump_weights": str,
}


def _add_data_flags(p):
    p.add_argument("--preset", help="synthetic preset, csbm-1 .. csbm-8")
    p.add_argument("--source", help="source graph file")
    p.add_argument("--target", help="target graph file")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-nodes", type=int, help="nodes per preset graph (default 6000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairalign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train a battery of (mode, seed) runs and write reports")
    run.add_argument("--config", help="key=value file; command-line flags take precedence")
    _add_data_flags(run)
    run.add_argument("--modes", help="comma list of erm, pa-css, pa-ls, pa-both, strurw-ablation")
    run.add_argument("--repeat", type=int)
    run.add_argument("--epochs", type=int)
    run.add_argument("--period", type=int)
    run.add_argument("--lambda-w", type=float)
    run.add_argument("--lambda-beta", type=float)
    run.add_argument("--delta", type=float)
    run.add_argument("--lr", type=float)
    run.add_argument("--hidden", type=int)
    run.add_argument("--metric", choices=["accuracy", "binary-f1"])
    run.add_argument("--source-estimation", choices=["plain", "weighted"])
    run.add_argument("--jobs", type=int)
    run.add_argument("--out")
    run.add_argument("--dump-weights", metavar="DIR", help="write one weights JSON per run here")

    rep = sub.add_parser("shift-report", help="print css/ls shift metrics")
    _add_data_flags(rep)
    rep.add_argument("--json", metavar="PATH", help="also write the report as JSON")

    gen = sub.add_parser("generate", help="sample a preset source/target pair to graph files")
    gen.add_argument("--preset", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-nodes", type=int, default=6000)
    gen.add_argument("--out", default=".", help="directory for source.graph and target.graph")

    gc = sub.add_parser("grad-check", help="finite-difference check of the encoder gradients")
    gc.add_argument("--nodes", type=int, default=30)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--tol", type=float, default=1e-4)
    return parser


def spec_from_args(args) -> ExperimentSpec:
    merged: dict[str, str | int | float] = {}
    if getattr(args, "config", None):
        for key, raw in read_config(args.config).items():
            if key in _TRAIN_FLAGS:
                merged[key] = _TRAIN_FLAGS[key](raw)
            elif key in _SPEC_FLAGS:
                merged[key] = _SPEC_FLAGS[key](raw)
            else:
                raise ValueError(f"{args.config}: unknown key {key!r}")
    for key in list(_TRAIN_FLAGS) + list(_SPEC_FLAGS):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val

    train = {k: merged.pop(k) for k in list(merged) if k in _TRAIN_FLAGS}
    preset = merged.pop("preset", None)
    kwargs = dict(
        preset=csbm.parse_preset_name(preset) if preset is not None else None,
        source_path=merged.pop("source", None),
        target_path=merged.pop("target", None),
        train=train,
    )
    if "modes" in merged:
        kwargs["modes"] = [m for m in str(merged.pop("modes")).split(",") if m.strip()]
    kwargs.update(merged)
    return ExperimentSpec(**kwargs)


def _cmd_run(args) -> int:
    spec = spec_from_args(args)
    out = run_experiment(spec)
    print(Path(out["summary_csv"]).read_text(), end="")
    print(format_report(out["shift"]["mean"]))
    return EXIT_OK


def _cmd_shift_report(args) -> int:
    preset = csbm.parse_preset_name(args.preset) if args.preset else None
    spec = ExperimentSpec(preset=preset, source_path=args.source, target_path=args.target,
                          seed=args.seed or 0, n_nodes=args.n_nodes or 6000, modes=["erm"])
    report = shift_summary(spec)["mean"]
    print(json.dumps(report))
    print(format_report(report))
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def _cmd_generate(args) -> int:
    pid = csbm.parse_preset_name(args.preset)
    spec = ExperimentSpec(preset=pid, seed=args.seed, n_nodes=args.n_nodes, modes=["erm"])
    source, target = load_pair(spec, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_graph(source, out / "source.graph")
    write_graph(target, out / "target.graph")
    print(f"wrote {out / 'source.graph'} ({source.num_nodes} nodes, {source.num_edges} edges)")
    print(f"wrote {out / 'target.graph'} ({target.num_nodes} nodes, {target.num_edges} edges)")
    return EXIT_OK


def grad_check_graph(nodes: int = 30, seed: int = 0) -> LabeledGraph:
    """Small dense CSBM graph with random positive edge weights."""
    params = csbm.CsbmParams(n=nodes, pi=[1 / 3] * 3, B=csbm.block_matrix(0.3, 0.1),
                             means=np.eye(3), sigma=0.5, seed=seed)
    g = csbm.sample(params)
    rng = np.random.default_rng([seed, 7])
    return g.with_edge_weights(rng.uniform(0.2, 2.0, size=2 * g.num_edges))


def _cmd_grad_check(args) -> int:
    g = grad_check_graph(args.nodes, args.seed)
    model = init_model(g.feature_dim, g.num_classes, hidden=8, seed=args.seed)
    beta = np.random.default_rng([args.seed, 8]).uniform(0.5, 2.0, size=g.num_classes)
    errors = gradient_check(model, g, beta)
    worst = max(errors.values())
    width = max(map(len, errors))
    for name, err in errors.items():
        print(f"{name:<{width}}  {err:.3e}")
    print(f"max relative error {worst:.3e} ({'ok' if worst < args.tol else 'FAIL'})")
    return EXIT_OK if worst < args.tol else EXIT_FAIL


_COMMANDS = {"run": _cmd_run, "shift-report": _cmd_shift_report,
             "generate": _cmd_generate, "grad-check": _cmd_grad_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (RunError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (ValueError, GraphFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
