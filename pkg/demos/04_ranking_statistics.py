#!/usr/bin/env python3
"""Compare techniques the way the evaluation harness does.

Ten repeat scores per technique per project feed a Wilcoxon signed-rank
test gated by Cliff's delta for per-project Win/Tie/Loss verdicts, and a
Scott-Knott partition groups techniques into statistically distinct ranks.
"""

import numpy as np

from defectseq.stats import (
    cliffs_delta,
    scott_knott,
    wilcoxon_signed_rank,
    win_tie_loss,
)


def main() -> None:
    rng = np.random.default_rng(4)

    print("=== one project, ten repeats each ===")
    strong = 0.70 + 0.02 * rng.standard_normal(10)
    weak = 0.55 + 0.02 * rng.standard_normal(10)
    result = wilcoxon_signed_rank(strong, weak)
    delta = cliffs_delta(strong, weak)
    print(f"  W+ = {result.statistic:.1f}, exact two-sided p = {result.p_value:.4f}")
    print(f"  Cliff's delta = {delta:.3f}")
    print(f"  verdict: {win_tie_loss(strong, weak).value}")

    print("\n=== negligible difference stays a tie despite significance ===")
    base = 0.60 + 0.03 * rng.standard_normal(10)
    nudged = base + 0.0005  # consistent but tiny shift
    result = wilcoxon_signed_rank(nudged, base)
    print(f"  p = {result.p_value:.4f}, delta = {cliffs_delta(nudged, base):.3f}")
    print(f"  verdict: {win_tie_loss(nudged, base).value}")

    print("\n=== Scott-Knott ranks over per-project means ===")
    values = {
        "sequence-model": [0.66, 0.71, 0.69, 0.74, 0.64],
        "regression": [0.61, 0.66, 0.63, 0.69, 0.60],
        "neighbors": [0.35, 0.30, 0.41, 0.33, 0.28],
        "bayes": [0.33, 0.31, 0.37, 0.36, 0.30],
    }
    grouping = scott_knott(values)
    for rank, names in enumerate(grouping.ranks, start=1):
        pretty = ", ".join(f"{n} ({grouping.means[n]:.3f})" for n in names)
        print(f"  rank {rank}: {pretty}")


if __name__ == "__main__":
    main()
