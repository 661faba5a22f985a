"""Pairwise alignment for graph domain adaptation.

Edge reweighting (gamma) corrects shifts in the neighbor-label law, label
reweighting (beta) corrects label-prior shift; both are estimated from soft
predictions of a small message-passing encoder trained on a labeled source
graph.
"""

from .csbm import CsbmParams, preset, sample
from .estimator import (
    EstimationError,
    compute_alpha,
    compute_gamma,
    estimate_confusion_mu,
    estimate_sigma_nu,
    solve_beta,
    solve_simplex_ls,
    solve_w,
)
from .graph import GraphFormatError, LabeledGraph, read_graph, write_graph
from .stats import css_metric, ls_metric, shift_report, summarize
from .training import Mode, RunResult, TrainConfig, run

__version__ = "0.1.0"

__all__ = [
    "CsbmParams", "preset", "sample",
    "EstimationError", "compute_alpha", "compute_gamma", "estimate_confusion_mu",
    "estimate_sigma_nu", "solve_beta", "solve_simplex_ls", "solve_w",
    "GraphFormatError", "LabeledGraph", "read_graph", "write_graph",
    "css_metric", "ls_metric", "shift_report", "summarize",
    "Mode", "RunResult", "TrainConfig", "run",
]
