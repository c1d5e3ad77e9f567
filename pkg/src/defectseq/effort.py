"""Effort-aware and threshold-independent evaluation.

Files are ranked by predicted-defect density (score per line of code); the
cumulative (LOC fraction, bug fraction) curve of that ranking is compared
against the random diagonal and the best achievable ordering, restricted to
the first pi fraction of total LOC.  ACC is the defective-file recall at a
20% inspection budget and AUC the usual rank-sum ROC area with ties
counting one half.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

CE_CUTOFFS = (0.1, 0.2, 0.5, 1.0)


class UndefinedCeError(ValueError):
    """CE is undefined: no bugs, or the optimal curve equals the diagonal."""


@dataclass(frozen=True)
class ScoredFile:
    key: str
    score: float
    loc: int
    bugs: int

    def __post_init__(self):
        if self.loc < 1:
            raise ValueError(f"loc must be >= 1 for {self.key!r} (adjust zero-LOC first)")
        if self.bugs < 0:
            raise ValueError(f"negative bug count for {self.key!r}")


def scored_files(
    keys: Sequence[str],
    scores: Sequence[float],
    locs: Sequence[int],
    bugs: Sequence[int],
) -> tuple[list[ScoredFile], int]:
    """Bundle parallel columns; zero-LOC files are counted as one line.

    Returns the files and how many needed the zero-LOC adjustment (callers
    surface that count in their reports).
    """
    adjusted = 0
    files = []
    for key, score, loc, bug in zip(keys, scores, locs, bugs, strict=True):
        if loc < 1:
            loc = 1
            adjusted += 1
        files.append(ScoredFile(key=key, score=float(score), loc=int(loc), bugs=int(bug)))
    return files, adjusted


def rank_by_density(files: Sequence[ScoredFile]) -> list[ScoredFile]:
    """Sort by score/LOC descending; ties go to the smaller file, then key."""
    if not files:
        raise ValueError("no files to rank")
    return sorted(files, key=lambda f: (-(f.score / f.loc), f.loc, f.key))


def _optimal_ordering(files: Sequence[ScoredFile]) -> list[ScoredFile]:
    # best achievable inspection order: actual bug density descending
    return sorted(files, key=lambda f: (-(f.bugs / f.loc), f.loc, f.key))


@dataclass(frozen=True, eq=False)
class CeCurve:
    """Cumulative (LOC fraction, bug fraction) vertices of one ordering."""

    points: np.ndarray  # (k+1) x 2, starts at (0, 0)
    ordering: tuple[str, ...]


def ce_curve(ordering: Sequence[ScoredFile]) -> CeCurve:
    """Piecewise-linear curve through the cumulative totals after each file."""
    if not ordering:
        raise ValueError("empty ordering")
    total_loc = sum(f.loc for f in ordering)
    total_bugs = sum(f.bugs for f in ordering)
    points = np.zeros((len(ordering) + 1, 2))
    cum_loc = 0
    cum_bugs = 0
    for i, f in enumerate(ordering, start=1):
        cum_loc += f.loc
        cum_bugs += f.bugs
        points[i, 0] = cum_loc / total_loc
        points[i, 1] = cum_bugs / total_bugs if total_bugs else 0.0
    return CeCurve(points=points, ordering=tuple(f.key for f in ordering))


def _area_under(points: np.ndarray, pi: float) -> float:
    """Trapezoidal area of the curve restricted to LOC fraction [0, pi]."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        if x0 >= pi:
            break
        if x1 <= pi:
            area += (x1 - x0) * (y0 + y1) / 2.0
        else:
            # linear interpolation at the cutoff
            y_pi = y0 + (y1 - y0) * (pi - x0) / (x1 - x0)
            area += (pi - x0) * (y0 + y_pi) / 2.0
            break
    return area


def ce_pi(files: Sequence[ScoredFile], pi: float) -> float:
    """Normalized area gain over random inspection within the first pi LOC.

    1 means the ranking matches the best achievable ordering; negative
    values mean it is worse than random.
    """
    if not files:
        raise ValueError("no files")
    if not 0.0 < pi <= 1.0:
        raise ValueError(f"pi must be in (0, 1], got {pi}")
    if sum(f.bugs for f in files) == 0:
        raise UndefinedCeError("no defective files: CE is undefined")
    area_model = _area_under(ce_curve(rank_by_density(files)).points, pi)
    area_optimal = _area_under(ce_curve(_optimal_ordering(files)).points, pi)
    area_random = pi * pi / 2.0
    denom = area_optimal - area_random
    if abs(denom) < 1e-12:
        raise UndefinedCeError("optimal ordering equals random: CE is undefined")
    return (area_model - area_random) / denom


def ce_report_values(files: Sequence[ScoredFile], cutoffs: Sequence[float] = CE_CUTOFFS) -> dict[str, float]:
    """CE at every cutoff, keyed by the cutoff's string form."""
    return {format(pi, "g"): ce_pi(files, pi) for pi in cutoffs}


def acc_at_effort(files: Sequence[ScoredFile], effort: float = 0.2) -> float:
    """Recall of defective files once the top of the ranking uses
    ``effort`` of the total LOC; partially inspected files do not count."""
    defective = sum(1 for f in files if f.bugs > 0)
    if defective == 0:
        raise ValueError("no defective files: recall undefined")
    total_loc = sum(f.loc for f in files)
    budget = effort * total_loc * (1 + 1e-12)
    cum_loc = 0
    found = 0
    for f in rank_by_density(files):
        cum_loc += f.loc
        if cum_loc > budget:
            break
        if f.bugs > 0:
            found += 1
    return found / defective


def auc(scores: Iterable[tuple[float, int]]) -> float:
    """ROC area via the rank-sum formulation; tied scores count one half."""
    pairs = list(scores)
    values = np.asarray([s for s, _ in pairs], dtype=float)
    labels = np.asarray([y for _, y in pairs], dtype=int)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(sorted_vals):
        j = i
        while j + 1 < len(sorted_vals) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[labels == 1]))
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def curve_to_csv(curve: CeCurve) -> str:
    """Vertices as CSV for external plotting."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["loc_fraction", "bug_fraction"])
    for x, y in curve.points:
        writer.writerow([repr(float(x)), repr(float(y))])
    return out.getvalue()
