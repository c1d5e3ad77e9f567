import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defectseq.effort import (
    CE_CUTOFFS,
    ScoredFile,
    UndefinedCeError,
    acc_at_effort,
    auc,
    ce_curve,
    ce_pi,
    curve_to_csv,
    rank_by_density,
    scored_files,
)


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def oracle_vertices(ordering):
    """Cumulative (loc%, bug%) polyline, written independently."""
    total_loc = float(sum(f.loc for f in ordering))
    total_bugs = float(sum(f.bugs for f in ordering))
    xs, ys = [0.0], [0.0]
    for f in ordering:
        xs.append(xs[-1] + f.loc / total_loc)
        ys.append(ys[-1] + (f.bugs / total_bugs if total_bugs else 0.0))
    return np.asarray(xs), np.asarray(ys)


def oracle_area(ordering, pi):
    """Clip the polyline at pi via interpolation, integrate with trapezoid."""
    xs, ys = oracle_vertices(ordering)
    keep = xs < pi
    clipped_x = np.append(xs[keep], pi)
    clipped_y = np.append(ys[keep], np.interp(pi, xs, ys))
    return float(np.trapezoid(clipped_y, clipped_x))


def oracle_ce(files, pi):
    model = sorted(files, key=lambda f: (-(f.score / f.loc), f.loc, f.key))
    optimal = sorted(files, key=lambda f: (-(f.bugs / f.loc), f.loc, f.key))
    a_model = oracle_area(model, pi)
    a_opt = oracle_area(optimal, pi)
    a_rand = pi * pi / 2.0
    return (a_model - a_rand) / (a_opt - a_rand)


def random_instance(rng, max_files=8):
    n = int(rng.integers(1, max_files + 1))
    files = [
        ScoredFile(
            key=f"f{i}",
            score=float(rng.uniform()),
            loc=int(rng.integers(1, 101)),
            bugs=int(rng.integers(0, 4)),
        )
        for i in range(n)
    ]
    return files


def instance_is_defined(files):
    if sum(f.bugs for f in files) == 0:
        return False
    optimal = sorted(files, key=lambda f: (-(f.bugs / f.loc), f.loc, f.key))
    return abs(oracle_area(optimal, 1.0) - 0.5) >= 1e-12


# ---------------------------------------------------------------------------
# worked three-file example: scores give f1,f2,f3; actual density f1,f3,f2
# ---------------------------------------------------------------------------

THREE_FILES = [
    ScoredFile("f1", score=0.9, loc=10, bugs=1),
    ScoredFile("f2", score=0.5, loc=10, bugs=0),
    ScoredFile("f3", score=0.9, loc=80, bugs=1),
]


class TestRankByDensity:
    def test_equal_scores_smaller_loc_first(self):
        files = [ScoredFile("big", 0.8, 100, 0), ScoredFile("small", 0.8, 10, 0)]
        assert [f.key for f in rank_by_density(files)] == ["small", "big"]

    def test_singleton(self):
        files = [ScoredFile("only", 0.3, 5, 1)]
        assert rank_by_density(files) == files

    def test_density_tie_broken_by_loc_then_key(self):
        files = [
            ScoredFile("f1", 0.9, 10, 1),
            ScoredFile("f2", 0.9, 90, 0),
            ScoredFile("f3", 0.1, 10, 1),
        ]
        # densities 0.09, 0.01, 0.01; the 0.01 tie goes to the smaller file
        assert [f.key for f in rank_by_density(files)] == ["f1", "f3", "f2"]

    def test_key_breaks_full_ties(self):
        files = [ScoredFile("b", 0.5, 10, 0), ScoredFile("a", 0.5, 10, 0)]
        assert [f.key for f in rank_by_density(files)] == ["a", "b"]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_monotone_density_transform_preserves_everything(self, seed):
        # strictly increasing transforms of score/loc keep orderings intact
        rng = np.random.default_rng(seed)
        files = random_instance(rng)
        transformed = [
            ScoredFile(f.key, score=float(np.exp(3 * f.score / f.loc)) * f.loc, loc=f.loc, bugs=f.bugs)
            for f in files
        ]
        assert [f.key for f in rank_by_density(files)] == [
            f.key for f in rank_by_density(transformed)
        ]
        if instance_is_defined(files):
            for pi in CE_CUTOFFS:
                assert ce_pi(files, pi) == pytest.approx(ce_pi(transformed, pi), abs=1e-12)
            assert acc_at_effort(files) == acc_at_effort(transformed)


class TestCeCurve:
    def test_hand_computed_vertices(self):
        files = [
            ScoredFile("a", 1.0, 10, 1),
            ScoredFile("b", 0.9, 10, 0),
            ScoredFile("c", 0.8, 80, 1),
        ]
        curve = ce_curve(files)
        np.testing.assert_allclose(
            curve.points, [(0, 0), (0.1, 0.5), (0.2, 0.5), (1, 1)], atol=1e-12
        )

    def test_single_file(self):
        curve = ce_curve([ScoredFile("a", 0.2, 7, 2)])
        np.testing.assert_allclose(curve.points, [(0, 0), (1, 1)], atol=1e-12)

    def test_all_bugs_up_front(self):
        files = [ScoredFile("a", 1.0, 25, 3), ScoredFile("b", 0.1, 75, 0)]
        curve = ce_curve(files)
        np.testing.assert_allclose(curve.points[1], (0.25, 1.0), atol=1e-12)

    def test_coordinates_non_decreasing_and_terminal(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            files = random_instance(rng)
            if sum(f.bugs for f in files) == 0:
                continue
            pts = ce_curve(rank_by_density(files)).points
            assert np.all(np.diff(pts[:, 0]) >= 0)
            assert np.all(np.diff(pts[:, 1]) >= 0)
            np.testing.assert_allclose(pts[-1], (1.0, 1.0), atol=1e-12)

    def test_zero_bugs_curve_still_valid(self):
        curve = ce_curve([ScoredFile("a", 0.5, 10, 0)])
        np.testing.assert_allclose(curve.points, [(0, 0), (1, 0)], atol=1e-12)

    def test_csv_export_round_trips(self):
        curve = ce_curve(THREE_FILES)
        text = curve_to_csv(curve)
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        values = np.asarray([[float(a), float(b)] for a, b in rows])
        np.testing.assert_array_equal(values, curve.points)


class TestCePi:
    def test_worked_example(self):
        # areas 0.675 (model), 0.725 (optimal), 0.5 (random)
        assert ce_pi(THREE_FILES, 1.0) == pytest.approx(0.7778, abs=1e-4)
        assert ce_pi(THREE_FILES, 1.0) == pytest.approx(oracle_ce(THREE_FILES, 1.0), abs=1e-15)

    def test_optimal_scores_give_one(self):
        files = [ScoredFile(f"f{i}", score=(i + 1) * 0.1, loc=10, bugs=i) for i in range(4)]
        # score order equals bug-density order
        ordered = sorted(files, key=lambda f: -f.score)
        assert [f.key for f in rank_by_density(ordered)] == [
            f.key for f in sorted(files, key=lambda f: (-(f.bugs / f.loc), f.loc, f.key))
        ]
        for pi in CE_CUTOFFS:
            assert ce_pi(files, pi) == pytest.approx(1.0, abs=1e-12)

    def test_reverse_optimal_no_better_than_random(self):
        files = [
            ScoredFile("a", 0.1, 10, 5),
            ScoredFile("b", 0.5, 10, 1),
            ScoredFile("c", 0.9, 10, 0),
        ]
        assert ce_pi(files, 1.0) <= 0.0

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(1234)
        checked = 0
        while checked < 200:
            files = random_instance(rng)
            if not instance_is_defined(files):
                continue
            for pi in CE_CUTOFFS:
                assert ce_pi(files, pi) == pytest.approx(oracle_ce(files, pi), abs=1e-12)
            checked += 1

    def test_optimal_matches_best_permutation(self):
        # the density ordering attains the maximum area over all orderings
        rng = np.random.default_rng(99)
        for _ in range(30):
            files = random_instance(rng, max_files=6)
            if not instance_is_defined(files):
                continue
            optimal = sorted(files, key=lambda f: (-(f.bugs / f.loc), f.loc, f.key))
            for pi in (0.3, 1.0):
                best = max(
                    oracle_area(list(perm), pi)
                    for perm in itertools.permutations(files)
                )
                assert oracle_area(optimal, pi) == pytest.approx(best, abs=1e-12)

    def test_zero_bugs_undefined(self):
        with pytest.raises(UndefinedCeError):
            ce_pi([ScoredFile("a", 0.5, 10, 0)], 1.0)

    def test_degenerate_optimal_undefined(self):
        # one file: optimal curve is the diagonal's chord, denominator 0
        with pytest.raises(UndefinedCeError):
            ce_pi([ScoredFile("a", 0.5, 10, 2)], 1.0)

    def test_invalid_pi_rejected(self):
        with pytest.raises(ValueError):
            ce_pi(THREE_FILES, 0.0)


class TestAccAtEffort:
    def test_all_defects_in_budget(self):
        files = [ScoredFile("a", 0.9, 10, 1), ScoredFile("b", 0.1, 90, 0)]
        assert acc_at_effort(files) == 1.0

    def test_no_defects_in_budget(self):
        files = [ScoredFile("a", 0.9, 10, 0), ScoredFile("b", 0.1, 90, 1)]
        assert acc_at_effort(files) == 0.0

    def test_partial_file_not_counted(self):
        files = [ScoredFile(f"f{i}", 1.0 - i / 10, 10, 1 if i in (0, 9) else 0) for i in range(10)]
        # 20% of 100 LOC inspects exactly two files; one of the two defects
        assert acc_at_effort(files) == 0.5

    def test_no_defective_rejected(self):
        with pytest.raises(ValueError):
            acc_at_effort([ScoredFile("a", 0.5, 10, 0)])


class TestAuc:
    def test_perfect_separation(self):
        assert auc([(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)]) == 1.0

    def test_all_tied_is_half(self):
        assert auc([(0.5, 1), (0.5, 0), (0.5, 1), (0.5, 0)]) == 0.5

    def test_hand_counted_pairs(self):
        # (0.9>0.6), (0.9>0.1), (0.4<0.6), (0.4>0.1): 3 of 4 pairs
        assert auc([(0.9, 1), (0.4, 1), (0.6, 0), (0.1, 0)]) == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc([(0.5, 1), (0.6, 1)])

    def test_matches_pair_counting_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 31))
            scores = np.round(rng.uniform(size=n), 1)  # coarse grid forces ties
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                continue
            pos = scores[labels == 1]
            neg = scores[labels == 0]
            wins = sum(1.0 for p in pos for q in neg if p > q)
            ties = sum(0.5 for p in pos for q in neg if p == q)
            expected = (wins + ties) / (len(pos) * len(neg))
            assert auc(list(zip(scores, labels))) == pytest.approx(expected, abs=1e-12)


class TestScoredFiles:
    def test_zero_loc_adjusted_and_counted(self):
        files, adjusted = scored_files(["a", "b"], [0.5, 0.2], [0, 10], [1, 0])
        assert adjusted == 1
        assert files[0].loc == 1

    def test_negative_bugs_rejected(self):
        with pytest.raises(ValueError):
            ScoredFile("a", 0.5, 10, -1)

    def test_zero_loc_direct_construction_rejected(self):
        with pytest.raises(ValueError):
            ScoredFile("a", 0.5, 0, 1)
