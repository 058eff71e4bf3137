"""Empirical distributions, reference pmfs, distances and interval estimates.

All distribution comparisons in the harness go through total variation
distance; goodness-of-fit uses chi-square with tail binning so every expected
bin count is at least 5. Comparisons between two simulations carry a
bootstrap noise floor so assertions read "claimed bound + noise".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

from .rng import RandomStream


class EmpiricalDistribution:
    """Counts over hashable keys (integers or canonical code bytes)."""

    __slots__ = ("counts", "total")

    def __init__(self, counts: dict | None = None):
        self.counts = dict(counts) if counts else {}
        self.total = sum(self.counts.values())
        if any(c < 1 for c in self.counts.values()):
            raise ValueError("counts must be positive")

    def add(self, key, weight: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + weight
        self.total += weight

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        for k, c in other.counts.items():
            self.counts[k] = self.counts.get(k, 0) + c
        self.total += other.total
        return self

    def freq(self, key) -> float:
        return self.counts.get(key, 0) / self.total

    def __len__(self) -> int:
        return len(self.counts)

    def to_csv(self) -> str:
        """Two-column dump (key, count), keys in sorted order; bytes keys hex-encoded."""
        lines = ["key,count"]
        def show(k):
            return k.hex() if isinstance(k, bytes) else str(k)
        for k in sorted(self.counts, key=show):
            lines.append(f"{show(k)},{self.counts[k]}")
        return "\n".join(lines) + "\n"


def tv_distance(p: EmpiricalDistribution, q: EmpiricalDistribution) -> float:
    """Half the L1 distance between the normalized count vectors."""
    if p.total == 0 or q.total == 0:
        raise ValueError("empty distribution")
    keys = set(p.counts) | set(q.counts)
    return 0.5 * sum(abs(p.freq(k) - q.freq(k)) for k in keys)


def tv_to_pmf(d: EmpiricalDistribution, pmf: dict) -> float:
    """TV between an integer-keyed empirical distribution and an explicit pmf."""
    if d.total == 0:
        raise ValueError("empty distribution")
    keys = set(d.counts) | set(pmf)
    return 0.5 * sum(abs(d.freq(k) - pmf.get(k, 0.0)) for k in keys)


def bootstrap_tv_floor(
    p: EmpiricalDistribution,
    q: EmpiricalDistribution,
    rng: RandomStream,
    reps: int = 200,
    quantile: float = 0.95,
) -> float:
    """Monte Carlo noise floor for tv_distance(p, q) under the null that both
    are samples of the same law: resample both sizes from the pooled
    frequencies and take a high quantile of the resampled TVs."""
    keys = sorted(set(p.counts) | set(q.counts), key=repr)
    pooled = np.array(
        [p.counts.get(k, 0) + q.counts.get(k, 0) for k in keys], dtype=float
    )
    pooled /= pooled.sum()
    gen = rng.numpy
    tvs = np.empty(reps)
    for r in range(reps):
        a = gen.multinomial(p.total, pooled) / p.total
        b = gen.multinomial(q.total, pooled) / q.total
        tvs[r] = 0.5 * np.abs(a - b).sum()
    return float(np.quantile(tvs, quantile))


def poisson_pmf(mean: float, k_max: int) -> np.ndarray:
    """Exact Po(mean) pmf on 0..k_max via log-space multiplicative recurrence."""
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    if mean == 0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    logs = np.empty(k_max + 1)
    logs[0] = -mean
    for k in range(1, k_max + 1):
        logs[k] = logs[k - 1] + math.log(mean / k)
    return np.exp(logs)


def geometric_pmf(p: float, k: int) -> float:
    """Geometric on {1,2,...} with success probability p: p*(1-p)^(k-1)."""
    if not (0.0 < p <= 1.0):
        raise ValueError("p must be in (0, 1]")
    if k < 1:
        raise ValueError("k must be a positive integer")
    return p * (1.0 - p) ** (k - 1)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    n: int


def chi_square_fit(
    d: EmpiricalDistribution,
    pmf: dict,
    min_expected: float = 5.0,
) -> ChiSquareResult:
    """Chi-square GOF of an integer-keyed distribution against a reference pmf.

    Bins ascending support; consecutive keys are pooled until each bin's
    expected count reaches min_expected, and all remaining mass (including
    anything outside the pmf's listed support) forms the final tail bin.
    """
    n = d.total
    if n < 100:
        raise ValueError("need at least 100 samples for a chi-square fit")
    keys = sorted(pmf)
    bins: list[tuple[float, int]] = []  # (expected prob, observed count)
    acc_p, acc_o = 0.0, 0
    for k in keys:
        acc_p += pmf[k]
        acc_o += d.counts.get(k, 0)
        if acc_p * n >= min_expected:
            bins.append((acc_p, acc_o))
            acc_p, acc_o = 0.0, 0
    # tail bin: leftover pooled keys plus all mass beyond the listed support
    tail_p = acc_p + max(1.0 - sum(b[0] for b in bins) - acc_p, 0.0)
    tail_o = n - sum(b[1] for b in bins)
    if bins and tail_p * n < min_expected:
        lp, lo = bins.pop()
        tail_p += lp
        tail_o += lo
    bins.append((tail_p, tail_o))
    if len(bins) < 2:
        raise ValueError("not enough support for a chi-square fit")
    stat = sum((o - n * p) ** 2 / (n * p) for p, o in bins)
    dof = len(bins) - 1
    return ChiSquareResult(stat, dof, float(_sps.chi2.sf(stat, dof)), n)


@dataclass(frozen=True)
class PoissonFitResult:
    statistic: float
    dof: int
    p_value: float
    tv: float
    n: int


def fit_poisson(d: EmpiricalDistribution, mean: float, tail_eps: float = 1e-12) -> PoissonFitResult:
    """Chi-square fit against Po(mean) plus TV to the truncated exact pmf."""
    if mean <= 0:
        raise ValueError("mean must be positive")
    if d.total < 100:
        raise ValueError("need at least 100 samples")
    if any((not isinstance(k, (int, np.integer))) or k < 0 for k in d.counts):
        raise ValueError("distribution must be over nonnegative integers")
    k_max = max(max(d.counts), int(mean))
    # extend support until the truncation is negligible
    pmf_arr = poisson_pmf(mean, k_max)
    while 1.0 - pmf_arr.sum() > tail_eps:
        k_max *= 2
        pmf_arr = poisson_pmf(mean, k_max)
    pmf = {k: float(pmf_arr[k]) for k in range(k_max + 1)}
    chi = chi_square_fit(d, pmf)
    return PoissonFitResult(chi.statistic, chi.dof, chi.p_value, tv_to_pmf(d, pmf), d.total)


def wilson_ci(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not (0 <= successes <= trials):
        raise ValueError("bad success/trial counts")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)  # exact at the edges
    return (lo, hi)


@dataclass(frozen=True)
class MeanCI:
    mean: float
    stderr: float
    lo: float
    hi: float
    n: int


class RunningMoments:
    """Associative count/sum/sum-of-squares accumulator for mean CIs."""

    __slots__ = ("n", "s", "s2")

    def __init__(self, n: int = 0, s: float = 0.0, s2: float = 0.0):
        self.n, self.s, self.s2 = n, s, s2

    def add(self, x: float) -> None:
        self.n += 1
        self.s += x
        self.s2 += x * x

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        self.n += other.n
        self.s += other.s
        self.s2 += other.s2
        return self

    def ci(self, z: float = 1.96) -> MeanCI:
        if self.n < 2:
            raise ValueError("need at least 2 samples")
        mean = self.s / self.n
        var = max(self.s2 / self.n - mean * mean, 0.0) * self.n / (self.n - 1)
        se = math.sqrt(var / self.n)
        return MeanCI(mean, se, mean - z * se, mean + z * se, self.n)


def mean_ci(samples, z: float = 1.96) -> MeanCI:
    """Normal-approximation CI for the mean of a sample sequence."""
    acc = RunningMoments()
    for x in samples:
        acc.add(x)
    return acc.ci(z)


def mann_whitney_greater(a, b) -> float:
    """One-sided Mann-Whitney p-value for 'a stochastically greater than b'."""
    return float(_sps.mannwhitneyu(a, b, alternative="greater").pvalue)
