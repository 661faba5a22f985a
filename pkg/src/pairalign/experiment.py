"""Config-driven experiment battery: runs, JSON-lines logs, CSV summaries,
shift reports and weight dumps."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import csbm
from .graph import LabeledGraph, read_graph
from .stats import format_report, shift_report
from .training import Mode, RunResult, TrainConfig, run

TRAIN_KEYS = {f.name for f in fields(TrainConfig)} - {"mode", "seed"}


@dataclass
class ExperimentSpec:
    preset: int | None = None
    source_path: str | None = None
    target_path: str | None = None
    modes: list[Mode] = field(default_factory=lambda: [Mode.ERM, Mode.PA_BOTH])
    repeat: int = 1
    seed: int = 0
    n_nodes: int = 6000
    out: str = "results"
    jobs: int = 1
    dump_weights: str | None = None
    train: dict = field(default_factory=dict)

    def __post_init__(self):
        self.modes = [Mode.parse(m) for m in self.modes]
        if not self.modes:
            raise ValueError("at least one mode is required")
        if self.repeat < 1:
            raise ValueError("repeat must be >= 1")
        if (self.preset is None) == (self.source_path is None or self.target_path is None):
            raise ValueError("give either a preset or both --source and --target")
        if self.preset is not None and self.preset not in csbm.PRESET_IDS:
            raise ValueError(f"unknown preset csbm-{self.preset}; valid range is csbm-1 .. csbm-8")
        unknown = set(self.train) - TRAIN_KEYS
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        # fail early on bad values
        TrainConfig(**self.train)

    def run_seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.repeat)]

    def config_for(self, mode: Mode, seed: int) -> TrainConfig:
        return TrainConfig(mode=mode, seed=seed, **self.train)


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------

def preset_graphs(preset_id: int, seed: int, n_nodes: int = 6000) -> tuple[LabeledGraph, LabeledGraph]:
    src, tgt = csbm.preset(preset_id, n=n_nodes, source_seed=1000 * seed + 1,
                           target_seed=1000 * seed + 2)
    return csbm.sample(src), csbm.sample(tgt)


def load_pair(spec: ExperimentSpec, seed: int) -> tuple[LabeledGraph, LabeledGraph]:
    if spec.preset is not None:
        return preset_graphs(spec.preset, seed, spec.n_nodes)
    source = read_graph(spec.source_path)
    target = read_graph(spec.target_path)
    if source.num_classes != target.num_classes:
        raise ValueError(f"inconsistent class counts: source k={source.num_classes}, "
                         f"target k={target.num_classes}")
    if source.feature_dim != target.feature_dim:
        raise ValueError("source and target feature dimensions differ")
    return source, target


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

def _jsonable(a):
    arr = np.asarray(a, dtype=np.float64)
    return [_jsonable(x) for x in arr] if arr.ndim else (None if math.isnan(float(arr)) else float(arr))


def weights_document(result: RunResult) -> dict:
    w = result.weights
    doc = {
        "mode": result.config.mode.value,
        "seed": result.config.seed,
        "w": _jsonable(w.w),
        "alpha": _jsonable(w.alpha),
        "gamma": _jsonable(w.gamma),
        "beta": _jsonable(w.beta),
        "solved_at_epoch": result.updates[-1].epoch if result.updates else None,
        "update_epochs": [u.epoch for u in result.updates],
    }
    if not result.updates:
        doc["note"] = "never updated"
    return doc


def dump_weights(result: RunResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(weights_document(result), indent=2) + "\n")
    return path


def _run_one(args):
    spec, mode, seed = args
    source, target = load_pair(spec, seed)
    records = []
    result = run(source, target, spec.config_for(mode, seed), log=records.append)
    return mode, seed, result, records


def run_experiment(spec: ExperimentSpec) -> dict:
    """Execute every (mode, seed) run and write the report files under ``spec.out``.

    Returns a dict with the RunResults keyed by (mode, seed) and the paths written.
    """
    out = Path(spec.out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    tasks = [(spec, mode, seed) for mode in spec.modes for seed in spec.run_seeds()]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            outputs = list(pool.map(_run_one, tasks))
    else:
        outputs = [_run_one(t) for t in tasks]

    results: dict[tuple[str, int], RunResult] = {}
    for mode, seed, result, records in outputs:
        results[(mode.value, seed)] = result
        log_path = out / "runs" / f"{mode.value}-seed{seed}.jsonl"
        with log_path.open("w") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
        if spec.dump_weights:
            dump_weights(result, Path(spec.dump_weights) / f"{mode.value}-seed{seed}.json")

    runs_csv = out / "runs.csv"
    with runs_csv.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["mode", "seed", "test_score", "best_val", "best_epoch", "final_test"])
        for (mode, seed), r in results.items():
            wr.writerow([mode, seed, repr(r.test_score), repr(r.best_val), r.best_epoch, repr(r.final_test)])

    summary_csv = out / "summary.csv"
    with summary_csv.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["mode", "runs", "test_mean", "test_std"])
        for mode in spec.modes:
            scores = np.array([results[(mode.value, s)].test_score for s in spec.run_seeds()])
            wr.writerow([mode.value, scores.size, f"{scores.mean():.4f}", f"{scores.std():.4f}"])

    shift = shift_summary(spec)
    (out / "shift_report.json").write_text(json.dumps(shift, indent=2) + "\n")
    (out / "shift_report.txt").write_text(format_report(shift["mean"]) + "\n")
    return {"results": results, "summary_csv": summary_csv, "runs_csv": runs_csv, "shift": shift}


def shift_summary(spec: ExperimentSpec) -> dict:
    per_seed = []
    for seed in spec.run_seeds():
        source, target = load_pair(spec, seed)
        rep = shift_report(source, target)
        rep["seed"] = seed
        per_seed.append(rep)
        if spec.preset is None:
            break  # file inputs are identical across seeds
    keys = ("css_src", "css_tgt", "css_both", "ls")
    mean = {k: float(np.mean([r[k] for r in per_seed])) for k in keys}
    mean["skipped_classes"] = sorted({c for r in per_seed for c in r["skipped_classes"]})
    return {"mean": mean, "per_seed": per_seed}


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use - or _."""
    conf = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        conf[key.replace("-", "_")] = val
    return conf
