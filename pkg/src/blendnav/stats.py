"""Per-run metrics and the paired Wilcoxon signed-rank test.

The exact p-value is computed by dynamic programming over the distribution
of the positive rank sum (equivalent to enumerating all 2^n sign
assignments); ranks use mid-ranks for ties and zero differences are dropped,
Wilcoxon's original convention. Above EXACT_LIMIT pairs the test falls back
to the normal approximation with continuity and tie corrections.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Pose2D

EXACT_LIMIT = 25
TIMEOUT_SENTINEL = -1.0


class DegenerateDataError(ValueError):
    """All paired differences are zero: no test statistic exists."""


@dataclass
class Condition:
    mode: str = "bsc"            # "manual" | "bsc"
    delay: float = 0.0           # seconds of input latency
    drift: float = 0.0           # rad/s odometry heading bias
    seed: int = 0
    # per-run constant delay drawn uniformly from [lo, hi] by seed; overrides
    # `delay` when set (the second-study "0.5s-1.5s" style of latency)
    delay_range: tuple[float, float] | None = None

    def key(self) -> str:
        if self.delay_range is not None:
            lo, hi = self.delay_range
            return f"{self.mode}_delay{lo:g}to{hi:g}_drift{self.drift:g}"
        return f"{self.mode}_delay{self.delay:g}_drift{self.drift:g}"

    def effective_delay(self) -> float:
        if self.delay_range is None:
            return self.delay
        lo, hi = self.delay_range
        return lo + (hi - lo) * random.Random(f"delay:{self.seed}").random()


@dataclass
class RunRecord:
    scenario: str
    condition: Condition
    completed: bool
    time_to_completion: float        # TIMEOUT_SENTINEL when not completed
    odometric_distance: float
    true_distance: float
    collision_count: int
    min_alpha: float
    max_alpha: float
    ticks: int

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "mode": self.condition.mode,
            "delay": self.condition.delay,
            "drift": self.condition.drift,
            "seed": self.condition.seed,
            "delay_range": list(self.condition.delay_range)
                if self.condition.delay_range is not None else None,
            "completed": self.completed,
            "time_to_completion": self.time_to_completion,
            "odometric_distance": self.odometric_distance,
            "true_distance": self.true_distance,
            "collision_count": self.collision_count,
            "min_alpha": self.min_alpha,
            "max_alpha": self.max_alpha,
            "ticks": self.ticks,
        }

    @staticmethod
    def from_dict(d: dict) -> "RunRecord":
        rng = d.get("delay_range")
        cond = Condition(d["mode"], d["delay"], d["drift"], d["seed"],
                         tuple(rng) if rng else None)
        return RunRecord(d["scenario"], cond, d["completed"],
                         d["time_to_completion"], d["odometric_distance"],
                         d["true_distance"], d["collision_count"],
                         d["min_alpha"], d["max_alpha"], d["ticks"])


@dataclass
class WilcoxonResult:
    n_effective: int
    w_plus: float
    w_minus: float
    statistic: float
    p_two_sided: float
    method: str                     # "exact" | "normal-approx"


def path_length(poses: Sequence[Pose2D]) -> float:
    """Sum of consecutive Euclidean segment lengths."""
    if not poses:
        raise ValueError("need at least one pose")
    total = 0.0
    for a, b in zip(poses, poses[1:]):
        total += math.hypot(b.x - a.x, b.y - a.y)
    return total


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test on differences a - b."""
    if len(a) != len(b) or len(a) == 0:
        raise ValueError("need equal-length nonempty paired samples")
    diffs = [x - y for x, y in zip(a, b) if x - y != 0.0]
    n = len(diffs)
    if n == 0:
        raise DegenerateDataError("all paired differences are zero")

    ranks = _midranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)

    if n <= EXACT_LIMIT:
        p = _exact_p(ranks, w_plus)
        method = "exact"
    else:
        p = _normal_p(ranks, w_plus, n)
        method = "normal-approx"
    return WilcoxonResult(n_effective=n, w_plus=w_plus, w_minus=w_minus,
                          statistic=min(w_plus, w_minus),
                          p_two_sided=p, method=method)


def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def _exact_p(ranks: list[float], w_plus: float) -> float:
    """Exact two-sided p over all sign assignments, by rank-sum convolution.

    Mid-ranks are multiples of 1/2, so doubling yields an integer support.
    Counts stay below 2**EXACT_LIMIT, well within exact float range, so the
    result equals direct enumeration bit for bit.
    """
    scaled = [int(round(2 * r)) for r in ranks]   # every rank is >= 1
    total = sum(scaled)
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for s in scaled:
        counts[s:] += counts[:-s].copy()
    w2 = int(round(2 * w_plus))
    denom = float(2 ** len(ranks))
    p_le = float(counts[:w2 + 1].sum()) / denom
    p_ge = float(counts[w2:].sum()) / denom
    return min(1.0, 2.0 * min(p_le, p_ge))


def _normal_p(ranks: list[float], w_plus: float, n: int) -> float:
    mean = n * (n + 1) / 4.0
    # tie correction: subtract sum(t^3 - t)/48 over tie groups
    var = n * (n + 1) * (2 * n + 1) / 24.0
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    for count in seen.values():
        if count > 1:
            var -= (count ** 3 - count) / 48.0
    if var <= 0:
        raise DegenerateDataError("zero variance after tie correction")
    z = (w_plus - mean)
    z -= math.copysign(0.5, z) if z != 0 else 0.0   # continuity correction
    z /= math.sqrt(var)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def summarize_boxplot(samples: Sequence[float]) -> dict:
    """Five-number summary with 1.5 IQR whiskers and flagged outliers."""
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    arr = np.asarray(samples, dtype=float)
    q1, med, q3 = (float(q) for q in np.percentile(arr, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    outliers = sorted(float(x) for x in arr[(arr < lo_fence) | (arr > hi_fence)])
    return {
        "min": float(inside.min()),
        "q1": q1,
        "median": med,
        "q3": q3,
        "max": float(inside.max()),
        "outliers": outliers,
    }
