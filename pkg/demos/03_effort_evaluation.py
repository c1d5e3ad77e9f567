#!/usr/bin/env python3
"""Cost-effectiveness by hand: three files, two bugs, one ranking.

The model ranks by predicted-defect density (score per line).  The curve
tracks how fast bugs are found as inspected lines accumulate; CE divides
the model's area gain over random inspection by the best achievable gain,
cut off at several inspection budgets.
"""

from defectseq.effort import (
    CE_CUTOFFS,
    ScoredFile,
    acc_at_effort,
    auc,
    ce_curve,
    ce_pi,
    rank_by_density,
)

FILES = [
    ScoredFile("app/Main.java", score=0.9, loc=10, bugs=1),
    ScoredFile("app/View.java", score=0.5, loc=10, bugs=0),
    ScoredFile("app/Model.java", score=0.9, loc=80, bugs=1),
]


def main() -> None:
    ranking = rank_by_density(FILES)
    print("=== density ranking (score per line, descending) ===")
    for f in ranking:
        print(f"  {f.key:16s} score={f.score:.2f} loc={f.loc:3d} density={f.score / f.loc:.4f}")

    print("\n=== cumulative inspection curve ===")
    curve = ce_curve(ranking)
    for x, y in curve.points:
        print(f"  {x:5.2f} of lines inspected -> {y:5.2f} of bugs found")

    print("\n=== cost-effectiveness at the usual budgets ===")
    for pi in CE_CUTOFFS:
        print(f"  CE at {pi:>4}: {ce_pi(FILES, pi):.4f}")

    labels = [1 if f.bugs else 0 for f in FILES]
    print(f"\nrecall at 20% effort: {acc_at_effort(FILES):.3f}")
    print(f"ROC area:             {auc([(f.score, y) for f, y in zip(FILES, labels)]):.3f}")


if __name__ == "__main__":
    main()
