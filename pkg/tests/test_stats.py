"""Unit tests for the empirical-statistics helpers."""

import math

import numpy as np
import pytest
from scipy import stats as sps

from relp import seeds
from relp import stats as st
from relp.stats import EmpiricalSample

MASTER = 1234


# ---------- samples and effective size ----------

def test_sample_validation():
    with pytest.raises(ValueError):
        EmpiricalSample(np.array([]))
    with pytest.raises(ValueError):
        EmpiricalSample(np.array([1.0, math.nan]))
    with pytest.raises(ValueError):
        EmpiricalSample(np.array([[1.0, 2.0]]))
    with pytest.raises(ValueError):
        EmpiricalSample(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        EmpiricalSample(np.array([1.0, 2.0]), np.array([1.0, -0.5]))
    with pytest.raises(ValueError):
        EmpiricalSample(np.array([1.0, 2.0]), np.array([0.0, 0.0]))


def test_weights_normalize_and_ess():
    s = EmpiricalSample(np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 4.0]))
    assert s.weights.sum() == pytest.approx(1.0, rel=1e-15)
    assert s.n_effective == pytest.approx(1.0 / (0.25**2 + 0.25**2 + 0.5**2))
    assert EmpiricalSample(np.arange(5.0)).n_effective == 5.0
    assert st.ess(np.array([3.0, 3.0, 3.0])) == pytest.approx(3.0)
    assert st.ess(np.zeros(4)) == 0.0


# ---------- KS ----------

def test_ks_one_sample_hand_case():
    # two points against the uniform CDF: the ECDF gaps are all 0.25
    stat, _ = st.ks_one_sample(EmpiricalSample(np.array([0.25, 0.75])), lambda x: x)
    assert stat == pytest.approx(0.25, abs=1e-15)


def test_ks_one_sample_detects_shift():
    rng = seeds.substream(MASTER, "t-stats-shift")
    x = rng.normal(size=4_000)
    stat0, p0 = st.ks_one_sample(EmpiricalSample(x), sps.norm.cdf)
    stat1, p1 = st.ks_one_sample(EmpiricalSample(x + 0.2), sps.norm.cdf)
    assert p0 > 0.01 and p1 < 1e-6 and stat1 > stat0


def test_ks_two_sample_edges():
    a = EmpiricalSample(np.array([1.0, 2.0, 3.0]))
    stat, p = st.ks_two_sample(a, a)
    assert stat == 0.0 and p == pytest.approx(1.0)
    b = EmpiricalSample(np.array([10.0, 11.0]))
    stat, _ = st.ks_two_sample(a, b)
    assert stat == 1.0


def test_ks_two_sample_weighted():
    # same support, opposite weightings: ECDFs differ by 0.5 on [1, 2)
    a = EmpiricalSample(np.array([1.0, 2.0]), np.array([0.75, 0.25]))
    b = EmpiricalSample(np.array([1.0, 2.0]), np.array([0.25, 0.75]))
    stat, _ = st.ks_two_sample(a, b)
    assert stat == pytest.approx(0.5, abs=1e-15)


def test_ks_critical_values():
    assert st.ks_critical(1.0, 0.01) == pytest.approx(1.6276236115189504, rel=1e-12)
    # the 1.95/sqrt(N) rule of thumb is the 0.1% point
    assert st.ks_critical(1e4, 0.001) * 100.0 == pytest.approx(1.9495, abs=5e-4)
    assert st.ks_critical(400.0) == pytest.approx(1.6276236115189504 / 20.0, rel=1e-12)


# ---------- chi-square ----------

def test_chi_square_exact_fit():
    stat, p, dof = st.chi_square_counts(np.array([25.0, 25.0, 50.0]),
                                        np.array([0.25, 0.25, 0.5]))
    assert stat == 0.0 and p == pytest.approx(1.0) and dof == 2


def test_chi_square_pools_small_cells():
    # the 0.001 cell expects 0.1 counts and must be pooled away
    _, _, dof = st.chi_square_counts(np.array([0.0, 50.0, 50.0]),
                                     np.array([0.001, 0.4995, 0.4995]))
    assert dof == 1


def test_chi_square_shape_mismatch():
    with pytest.raises(ValueError):
        st.chi_square_counts(np.ones(3), np.ones(4) / 4.0)


def test_chi_square_binned_gaussian():
    rng = seeds.substream(MASTER, "t-stats-chi2")
    x = rng.normal(size=20_000)
    _, p = st.chi_square_binned(EmpiricalSample(x), sps.norm.pdf,
                                np.linspace(-3.0, 3.0, 13))
    assert p > 0.01
    _, p_bad = st.chi_square_binned(EmpiricalSample(x * 1.2), sps.norm.pdf,
                                    np.linspace(-3.0, 3.0, 13))
    assert p_bad < 1e-6


def test_chi_square_binned_bad_edges():
    s = EmpiricalSample(np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        st.chi_square_binned(s, lambda x: x, np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        st.chi_square_binned(s, lambda x: x, np.array([0.0, 1.0, 0.5]))


# ---------- intervals ----------

def test_bootstrap_ci_covers_mean():
    rng = seeds.substream(MASTER, "t-stats-boot")
    x = rng.exponential(size=2_000)
    lo, hi = st.bootstrap_ci(seeds.substream(MASTER, "t-stats-boot-rep"),
                             EmpiricalSample(x), np.mean)
    assert lo < x.mean() < hi
    assert lo < 1.0 < hi
    assert hi - lo < 0.2


def test_mean_ci_degenerate_and_weighted():
    m, lo, hi = st.mean_ci(EmpiricalSample(np.array([2.0, 2.0, 2.0])))
    assert (m, lo, hi) == (2.0, 2.0, 2.0)
    # all weight on one point collapses the interval onto it
    m, lo, hi = st.mean_ci(EmpiricalSample(np.array([1.0, 5.0]),
                                           np.array([1.0, 1e-12])))
    assert m == pytest.approx(1.0, abs=1e-10)


def test_mean_ci_width_scales():
    rng = seeds.substream(MASTER, "t-stats-meanci")
    x = rng.normal(size=10_000)
    m, lo, hi = st.mean_ci(EmpiricalSample(x), level=0.99)
    assert lo < 0.0 < hi
    z = sps.norm.ppf(0.995)
    assert hi - lo == pytest.approx(2.0 * z * x.std() / 100.0, rel=1e-2)


def test_wilson_ci():
    lo, hi = st.wilson_ci(50, 100, 0.95)
    assert (lo, hi) == pytest.approx((0.4038315303659956, 0.5961684696340044), rel=1e-12)
    lo0, hi0 = st.wilson_ci(0, 10)
    assert lo0 == 0.0 and 0.0 < hi0 < 0.5
    with pytest.raises(ValueError):
        st.wilson_ci(1, 0)


def test_intervals_overlap():
    assert st.intervals_overlap((0.0, 1.0), (0.5, 2.0))
    assert st.intervals_overlap((0.0, 1.0), (1.0, 2.0))  # touching counts
    assert not st.intervals_overlap((0.0, 1.0), (1.5, 2.0))
    assert st.intervals_overlap((1.5, 2.0), (0.0, 3.0))
