import itertools
import math
import random

import numpy as np
import pytest
from scipy import stats as sps

from blendnav.geometry import Pose2D
from blendnav.stats import (Condition, DegenerateDataError, RunRecord,
                            path_length, summarize_boxplot,
                            wilcoxon_signed_rank)


def midrank(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def brute_force_p(diffs):
    """Enumerate every sign assignment of |d| ranks; two-sided exact p."""
    diffs = [d for d in diffs if d != 0.0]
    ranks = midrank([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    n = len(ranks)
    le = ge = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        le += w <= w_plus
        ge += w >= w_plus
    denom = float(2 ** n)
    return min(1.0, 2.0 * min(le / denom, ge / denom))


class TestPathLength:
    def test_3_4_5(self):
        assert path_length([Pose2D(0, 0), Pose2D(3, 4)]) == 5.0

    def test_single_pose(self):
        assert path_length([Pose2D(1, 1)]) == 0.0

    def test_unit_square(self):
        square = [Pose2D(0, 0), Pose2D(1, 0), Pose2D(1, 1), Pose2D(0, 1),
                  Pose2D(0, 0)]
        assert path_length(square) == pytest.approx(4.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            path_length([])


class TestWilcoxonExact:
    def test_all_concordant_n12(self):
        a = list(range(1, 13))
        b = [x + 1.0 + 0.01 * x for x in a]    # every difference negative
        res = wilcoxon_signed_rank(a, b)
        assert res.method == "exact"
        assert res.p_two_sided == pytest.approx(4.8828e-04, rel=1e-4)
        assert res.p_two_sided == 2.0 / 4096.0

    def test_hand_enumerated_triple(self):
        res = wilcoxon_signed_rank([1.0, -2.0, 3.0], [0.0, 0.0, 0.0])
        assert res.w_plus == 4.0
        assert res.w_minus == 2.0
        assert res.p_two_sided == 0.75

    def test_degenerate_all_equal(self):
        with pytest.raises(DegenerateDataError):
            wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])

    def test_zero_differences_dropped(self):
        res = wilcoxon_signed_rank([1.0, 5.0, -2.0, 3.0],
                                   [1.0, 5.0, 0.0, 0.0])
        assert res.n_effective == 2

    def test_matches_brute_force_with_ties(self):
        rng = random.Random(3)
        for _ in range(30):
            n = rng.randint(2, 9)
            diffs = [rng.choice([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
                     for _ in range(n)]
            res = wilcoxon_signed_rank(diffs, [0.0] * n)
            assert res.p_two_sided == pytest.approx(brute_force_p(diffs),
                                                    abs=1e-12)

    def test_rank_sum_identity(self):
        rng = random.Random(4)
        for _ in range(20):
            n = rng.randint(2, 15)
            a = [rng.uniform(-5, 5) for _ in range(n)]
            b = [rng.uniform(-5, 5) for _ in range(n)]
            res = wilcoxon_signed_rank(a, b)
            m = res.n_effective
            assert res.w_plus + res.w_minus == pytest.approx(m * (m + 1) / 2)

    def test_swap_symmetry(self):
        a = [1.0, 4.0, 2.5, -1.0, 6.0]
        b = [0.5, 5.0, 1.0, 2.0, 3.0]
        fwd = wilcoxon_signed_rank(a, b)
        rev = wilcoxon_signed_rank(b, a)
        assert fwd.w_plus == rev.w_minus
        assert fwd.p_two_sided == rev.p_two_sided

    def test_affine_invariance(self):
        a = [1.0, 4.0, 2.5, -1.0, 6.0, 0.3]
        b = [0.5, 5.0, 1.0, 2.0, 3.0, 0.1]
        base = wilcoxon_signed_rank(a, b).p_two_sided
        scaled = wilcoxon_signed_rank([3 * x + 7 for x in a],
                                      [3 * x + 7 for x in b]).p_two_sided
        assert scaled == base

    def test_concordant_pair_monotonicity(self):
        prev = 1.0
        for n in range(2, 16):
            p = wilcoxon_signed_rank(list(range(1, n + 1)),
                                     [0.0] * n).p_two_sided
            assert p <= prev
            prev = p

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1.0], [1.0, 2.0])


class TestWilcoxonNormalApprox:
    def test_large_n_uses_normal_method(self):
        rng = random.Random(9)
        a = [rng.uniform(0, 10) for _ in range(40)]
        b = [rng.uniform(0, 10) for _ in range(40)]
        res = wilcoxon_signed_rank(a, b)
        assert res.method == "normal-approx"

    def test_close_to_scipy(self):
        rng = random.Random(10)
        for _ in range(10):
            a = [rng.uniform(0, 10) for _ in range(40)]
            b = [rng.uniform(0, 10) for _ in range(40)]
            res = wilcoxon_signed_rank(a, b)
            ref = sps.wilcoxon(a, b, correction=True, mode="approx",
                               alternative="two-sided").pvalue
            assert res.p_two_sided == pytest.approx(ref, abs=1e-9)


class TestBoxplot:
    def test_odd_symmetric(self):
        s = summarize_boxplot([1, 2, 3, 4, 5])
        assert (s["q1"], s["median"], s["q3"]) == (2, 3, 4)

    def test_constant_samples(self):
        s = summarize_boxplot([7.0] * 5)
        assert s["min"] == s["q1"] == s["median"] == s["q3"] == s["max"] == 7.0
        assert s["outliers"] == []

    def test_outlier_flagged(self):
        s = summarize_boxplot([1, 2, 3, 4, 100])
        assert s["outliers"] == [100.0]
        assert s["max"] == 4.0

    def test_quartiles_match_numpy(self):
        rng = np.random.default_rng(2)
        samples = rng.uniform(0, 50, size=37)
        s = summarize_boxplot(samples)
        q1, med, q3 = np.percentile(samples, [25, 50, 75])
        assert s["q1"] == pytest.approx(q1)
        assert s["median"] == pytest.approx(med)
        assert s["q3"] == pytest.approx(q3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize_boxplot([])


class TestConditionAndRecord:
    def test_key_format(self):
        assert Condition("bsc", 0.5, 0.0, 3).key() == "bsc_delay0.5_drift0"

    def test_delay_range_key_and_draw(self):
        c = Condition(delay_range=(0.5, 1.5), seed=7)
        assert c.key() == "bsc_delay0.5to1.5_drift0"
        d = c.effective_delay()
        assert 0.5 <= d <= 1.5
        assert c.effective_delay() == d     # deterministic per seed

    def test_record_roundtrip(self):
        rec = RunRecord("doorway", Condition("bsc", 1.0, 0.1, 4), True,
                        12.5, 8.0, 8.1, 2, 0.1, 0.9, 625)
        assert RunRecord.from_dict(rec.to_dict()) == rec
