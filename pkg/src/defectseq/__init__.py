"""Defect prediction from per-file metric sequences across project versions.

Submodules:
  dataset     metrics-table ingestion, bug labels, process metrics
  history     file lifecycles, sequence extraction, normalization
  rnn         variable-length recurrent classifier with BPTT
  baselines   single-version classifiers (LR, naive Bayes, kNN, NN)
  effort      cost-effectiveness curves, recall at effort, ROC area
  stats       Wilcoxon, Cliff's delta, Win/Tie/Loss, Scott-Knott
  experiment  manifest-driven comparison runs and report emission
"""

from . import baselines, dataset, effort, experiment, history, rnn, stats

__all__ = [
    "baselines",
    "dataset",
    "effort",
    "experiment",
    "history",
    "rnn",
    "stats",
]

__version__ = "0.1.0"
