"""Empirical-distribution utilities: ECDFs, KS tests (weighted variant), binned
chi-square, bootstrap and closed-form confidence intervals.

Weighted KS p-values are conservative proxies: the effective sample size
(sum w)^2 / sum w^2 replaces n in the asymptotic Kolmogorov distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy import stats as sps
from scipy.integrate import simpson


# ---------- samples ----------

@dataclass
class EmpiricalSample:
    """Values with optional importance weights (normalized to sum 1)."""

    values: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != self.values.shape:
                raise ValueError("weights must match values")
            if not np.all(np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("weights must be finite, nonnegative, not all zero")
            self.weights = w / w.sum()

    @property
    def n_effective(self) -> float:
        if self.weights is None:
            return float(self.values.size)
        return float(1.0 / np.sum(self.weights**2))

    def normalized_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.values.size, 1.0 / self.values.size)
        return self.weights


def ess(weights: np.ndarray) -> float:
    """Effective sample size (sum w)^2 / sum w^2 of an unnormalized weight vector."""
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    if s <= 0:
        return 0.0
    return float(s * s / np.sum(w * w))


# ---------- Kolmogorov-Smirnov ----------

def _sorted_ecdf(sample: EmpiricalSample):
    order = np.argsort(sample.values, kind="stable")
    x = sample.values[order]
    cumw = np.cumsum(sample.normalized_weights()[order])
    cumw[-1] = 1.0  # guard rounding
    return x, cumw


def ks_one_sample(sample: EmpiricalSample, cdf) -> tuple[float, float]:
    """KS statistic of a (possibly weighted) sample against a reference CDF.

    Returns (statistic, p). The p-value uses the asymptotic Kolmogorov law at
    the effective sample size; for weighted samples it is a conservative proxy.
    """
    x, hi = _sorted_ecdf(sample)
    lo = np.concatenate(([0.0], hi[:-1]))
    f = np.asarray(cdf(x), dtype=float)
    stat = float(np.max(np.maximum(np.abs(hi - f), np.abs(f - lo))))
    p = float(special.kolmogorov(np.sqrt(sample.n_effective) * stat))
    return stat, p


def ks_two_sample(a: EmpiricalSample, b: EmpiricalSample) -> tuple[float, float]:
    """Two-sample KS with weighted ECDFs and ESS-based asymptotic p-proxy."""
    xa, fa = _sorted_ecdf(a)
    xb, fb = _sorted_ecdf(b)
    grid = np.concatenate([xa, xb])
    grid.sort(kind="stable")
    ea = np.concatenate(([0.0], fa))[np.searchsorted(xa, grid, side="right")]
    eb = np.concatenate(([0.0], fb))[np.searchsorted(xb, grid, side="right")]
    stat = float(np.max(np.abs(ea - eb)))
    na, nb = a.n_effective, b.n_effective
    n = na * nb / (na + nb)
    p = float(special.kolmogorov(np.sqrt(n) * stat))
    return stat, p


def ks_critical(n_effective: float, alpha: float = 0.01) -> float:
    """Asymptotic critical KS distance at level alpha for one sample of size n.

    For two samples pass n = n1*n2/(n1+n2).
    """
    return float(special.kolmogi(alpha) / np.sqrt(n_effective))


# ---------- chi-square ----------

def chi_square_counts(observed: np.ndarray, expected_probs: np.ndarray, ddof: int = 0):
    """Chi-square of observed counts against cell probabilities.

    Cells with expected count below 1 are pooled into their neighbor to keep
    the asymptotic distribution honest. Returns (statistic, p, dof).
    """
    obs = np.asarray(observed, dtype=float).ravel()
    probs = np.asarray(expected_probs, dtype=float).ravel()
    if obs.shape != probs.shape:
        raise ValueError("observed and expected_probs must have the same shape")
    n = obs.sum()
    exp = probs * n
    order = np.argsort(exp)
    obs, exp = obs[order].copy(), exp[order].copy()
    while exp.size > 1 and exp[0] < 1.0:
        exp[1] += exp[0]
        obs[1] += obs[0]
        obs, exp = obs[1:], exp[1:]
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = max(obs.size - 1 - ddof, 1)
    return stat, float(sps.chi2.sf(stat, dof)), dof


def chi_square_binned(sample: EmpiricalSample, density, bins: np.ndarray):
    """Binned chi-square of a sample against a density on finite bin edges.

    Expected cell masses are Simpson integrals of `density` (vectorized callable)
    over each bin; mass outside the binned range forms one implicit cell.
    Returns (statistic, p).
    """
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 3 or np.any(np.diff(edges) <= 0):
        raise ValueError("bins must be increasing edges with at least 2 cells")
    sub = 33  # odd Simpson node count per cell
    probs = np.empty(edges.size - 1)
    for i in range(edges.size - 1):
        xs = np.linspace(edges[i], edges[i + 1], sub)
        probs[i] = simpson(np.asarray(density(xs), dtype=float), x=xs)
    inside = (sample.values >= edges[0]) & (sample.values <= edges[-1])
    counts, _ = np.histogram(sample.values[inside], bins=edges)
    counts = counts.astype(float)
    outside = float(np.count_nonzero(~inside))
    probs = np.append(probs, max(1.0 - probs.sum(), 0.0))
    counts = np.append(counts, outside)
    stat, p, _ = chi_square_counts(counts, probs)
    return stat, p


# ---------- confidence intervals ----------

def bootstrap_ci(rng, sample: EmpiricalSample, stat_fn, level: float = 0.99,
                 n_boot: int = 999) -> tuple[float, float]:
    """Percentile bootstrap interval for stat_fn(values), weight-aware."""
    n = sample.values.size
    reps = np.empty(n_boot)
    w = sample.weights
    for i in range(n_boot):
        idx = rng.choice(n, size=n, p=w) if w is not None else rng.integers(0, n, size=n)
        reps[i] = stat_fn(sample.values[idx])
    tail = (1.0 - level) / 2.0
    return float(np.quantile(reps, tail)), float(np.quantile(reps, 1.0 - tail))


def mean_ci(sample: EmpiricalSample, level: float = 0.99) -> tuple[float, float, float]:
    """(mean, lo, hi) normal-approximation interval, ESS-adjusted if weighted."""
    w = sample.normalized_weights()
    m = float(np.sum(w * sample.values))
    var = float(np.sum(w * (sample.values - m) ** 2))
    se = np.sqrt(var / sample.n_effective)
    z = sps.norm.ppf(0.5 + level / 2.0)
    return m, m - z * se, m + z * se


def wilson_ci(successes: float, n: float, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    z = sps.norm.ppf(0.5 + level / 2.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return float(max(center - half, 0.0)), float(min(center + half, 1.0))


def intervals_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]
