"""Unit tests for the ladder walk layer: ladder samplers, the renewal function
of descending records, its harmonic extension, conditioned ensembles, the
stationary overshoot and pass laws, and the time-reversal diagnostic.

Statistical checks run at pinned substreams with 99%-level tolerances that were
sized against independent references (closed forms where they exist, otherwise
a second estimator of the same quantity with its own error bar)."""

import math

import numpy as np
import pytest
import scipy.stats as sps

from relp import renewal as rn
from relp import seeds
from relp import stats as st
from relp.archlaw import Elasticity, step_cdf

MASTER = 1234

CRIT = rn.step_law_from_elasticity(Elasticity.critical())
ONE = rn.step_law_from_elasticity(Elasticity(1.0))
GAUSS = rn.gaussian_step_law(0.0, 1.0)
GPOS = rn.gaussian_step_law(0.5, 1.0)
PM = rn.point_mass_step_law(1.0)

# knots dense on [0, 2] where h is most curved (piecewise-linear chords bias
# hbar low otherwise); the top knot sits far enough out that a single step
# rarely overshoots the grid
CRIT_GRID = np.concatenate([np.linspace(0.0, 2.0, 33), np.linspace(2.25, 4.0, 8),
                            [5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 24.0]])
GAUSS_GRID = np.concatenate([np.linspace(0.0, 2.0, 33), np.linspace(2.25, 4.0, 8),
                             [5.0, 6.0, 8.0, 10.0]])


@pytest.fixture(scope="module")
def h_crit():
    return rn.renewal_function_h(seeds.substream(MASTER, "t-ren-hc"), CRIT,
                                 CRIT_GRID, n_paths=20_000, cap=4 * 10**5)


@pytest.fixture(scope="module")
def h_gauss():
    return rn.renewal_function_h(seeds.substream(MASTER, "t-ren-hg"), GAUSS,
                                 GAUSS_GRID, n_paths=10_000, cap=4 * 10**5)


@pytest.fixture(scope="module")
def m_crit():
    return rn.build_overshoot_law(seeds.substream(MASTER, "t-ren-m-c"), CRIT,
                                  pool_size=20_000)


@pytest.fixture(scope="module")
def m_gauss():
    return rn.build_overshoot_law(seeds.substream(MASTER, "t-ren-mg"), GAUSS,
                                  pool_size=20_000)


@pytest.fixture(scope="module")
def h_pm():
    return rn.renewal_function_h(seeds.substream(MASTER, "t-ren-h-pm"), PM,
                                 np.linspace(0.0, 4.0, 5), n_paths=200, cap=2048)


# ---------- point-mass stub: every law quantity is exact ----------

def test_pm_ascending_ladder_is_the_integers():
    lad = rn.ascending_ladder(seeds.substream(MASTER, "t-ren-pm"), PM, 5)
    assert lad.heights.tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    assert lad.epochs.tolist() == [0, 1, 2, 3, 4, 5]


def test_pm_descending_ladder_exhausts_budget():
    with pytest.raises(rn.BudgetExceeded) as exc:
        rn.descending_ladder(seeds.substream(MASTER, "t-ren-pm"), PM, 2,
                             max_steps=1000)
    assert exc.value.partial.heights.tolist() == [0.0]
    assert exc.value.partial.epochs.tolist() == [0]


def test_pm_mean_ladder_height_exact():
    mu, se = rn.estimate_mu_H(seeds.substream(MASTER, "t-ren-pm-mu"), PM, 500,
                              cap=10**4)
    assert (mu, se) == (1.0, 0.0)


def test_pm_overshoot_law_is_uniform():
    m_pm = rn.build_overshoot_law(seeds.substream(MASTER, "t-ren-m-pm"), PM,
                                  pool_size=2000, cap=10**4)
    assert (m_pm.mu_H, m_pm.mu_H_se) == (1.0, 0.0)
    u = rn.sample_overshoot_m(seeds.substream(MASTER, "t-ren-m-pm-draw"), m_pm,
                              size=100_000)
    stat, _ = st.ks_one_sample(st.EmpiricalSample(u),
                               lambda y: np.clip(y, 0.0, 1.0))
    assert stat < 0.01


def test_pm_renewal_function_is_one(h_pm):
    # the walk climbs away from 0 immediately, so 0 is the only record
    assert h_pm.values.tolist() == [1.0] * 5
    assert h_pm.n_censored == 200


def test_pm_ensemble_weights_stay_uniform(h_pm):
    res = rn.conditioned_walk_ensemble(seeds.substream(MASTER, "t-ren-ens-pm"),
                                       PM, h_pm, 0.0, 0.0, 32, 200)
    assert np.allclose(res.weights, 1.0 / 200)
    assert np.allclose(res.ess, 200.0)


def test_pm_reversal_diagnostic_skips(h_pm):
    rep = rn.duality_check(seeds.substream(MASTER, "t-ren-dual-pm"), PM, h_pm,
                           n=100)
    assert rep.skipped
    assert rep.reason == "conditioned side degenerate for a point mass"
    assert math.isnan(rep.ks_stat)


# ---------- ladder samplers ----------

def test_ascending_ladder_invariants():
    lad = rn.ascending_ladder(seeds.substream(MASTER, "t-ren-lad-a"), CRIT, 6)
    assert lad.heights.shape == (7,) and lad.epochs.shape == (7,)
    assert lad.heights[0] == 0.0 and lad.epochs[0] == 0
    assert np.all(np.diff(lad.heights) > 0)
    assert np.all(np.diff(lad.epochs) > 0)
    assert np.all(lad.heights[1:] > 0)


def test_descending_ladder_invariants():
    lad = rn.descending_ladder(seeds.substream(MASTER, "t-ren-lad-d"), CRIT, 4,
                               max_steps=10**5)
    assert np.all(np.diff(lad.heights) < 0)
    assert np.all(np.diff(lad.epochs) > 0)
    assert np.all(lad.heights[1:] < 0)


def test_ladder_rejects_bad_k():
    rng = seeds.substream(MASTER, "t-ren-lad-bad")
    with pytest.raises(ValueError):
        rn.ascending_ladder(rng, CRIT, 0)
    with pytest.raises(ValueError):
        rn.descending_ladder(rng, CRIT, 0)


def test_first_ladder_heights_restarts_under_tight_cap():
    pool, restarts = rn.first_ladder_heights(
        seeds.substream(MASTER, "t-ren-restart"), CRIT, 300, cap=2000)
    assert pool.shape == (300,)
    assert np.all(pool > 0)
    assert restarts == 7


def test_mean_ladder_height_reproducible():
    mu1, se1 = rn.estimate_mu_H(seeds.substream(MASTER, "t-ren-mu", 0), CRIT, 3000)
    mu2, se2 = rn.estimate_mu_H(seeds.substream(MASTER, "t-ren-mu", 1), CRIT, 3000)
    assert abs(mu1 - mu2) < 4 * math.hypot(se1, se2)
    assert mu1 - 2.58 * se1 > 0


def test_mean_ladder_height_dominates_step_mean():
    # the first ascending record sits at least one full step above 0
    mu, se = rn.estimate_mu_H(seeds.substream(MASTER, "t-ren-mu1", 0), ONE, 3000)
    assert mu - 2.58 * se > ONE.mean


# ---------- renewal function of descending records ----------

def test_h_anchor_and_negative_side(h_crit):
    assert h_crit.values[0] == 1.0
    assert h_crit.se[0] == 0.0
    assert h_crit(-0.5) == 0.0
    out = h_crit(np.array([-1.0, 0.0, 1.0]))
    assert out.shape == (3,) and out[0] == 0.0 and out[1] == 1.0


def test_h_monotone_within_error(h_crit, h_gauss):
    for h in (h_crit, h_gauss):
        slack = 2.0 * np.hypot(h.se[1:], h.se[:-1])
        assert int(np.sum(np.diff(h.values) < -slack)) == 0


def test_h_subadditive_within_error(h_crit, h_gauss):
    for h in (h_crit, h_gauss):
        g, v, s = h.grid, h.values, h.se
        bad = 0
        for i in range(g.size):
            t = g[i] + g
            ok = t <= g[-1]
            bad += int(np.sum(h(t[ok]) - v[i] > v[ok] + 2.0 * (s[i] + s[ok])))
        assert bad == 0


def test_h_slope_matches_ladder_mean(h_crit, h_gauss, m_crit, m_gauss):
    # factorization of the step variance across the two ladder sides pins the
    # asymptotic slope at mu_H / (variance / 2)
    for h, m, law, gl, gr in ((h_crit, m_crit, CRIT, 16.0, 24.0),
                              (h_gauss, m_gauss, GAUSS, 6.0, 10.0)):
        il = int(np.argmin(np.abs(h.grid - gl)))
        ir = int(np.argmin(np.abs(h.grid - gr)))
        slope = (h.values[ir] - h.values[il]) / (gr - gl)
        s_se = math.hypot(h.se[ir], h.se[il]) / (gr - gl)
        rhs = m.mu_H / (law.variance / 2.0)
        r_se = m.mu_H_se / (law.variance / 2.0)
        assert abs(slope - rhs) < 2.58 * math.hypot(s_se, r_se)


def test_h_extends_linearly_past_the_grid(h_crit):
    g, v = h_crit.grid, h_crit.values
    slope = (v[-1] - v[-2]) / (g[-1] - g[-2])
    assert np.isclose(h_crit(30.0), v[-1] + slope * 6.0, rtol=1e-12)


def test_h_censoring_stays_small(h_crit, h_gauss):
    assert 0 < h_crit.n_censored < 1000
    assert 0 < h_gauss.n_censored < 1000


def test_h_rejects_bad_grids():
    rng = seeds.substream(MASTER, "t-ren-h-bad")
    for bad in (np.array([0.5, 1.0]), np.array([0.0, 2.0, 1.0]), np.array([0.0])):
        with pytest.raises(ValueError):
            rn.renewal_function_h(rng, CRIT, bad, n_paths=10, cap=100)


# ---------- harmonic extension ----------

def test_hbar_equals_h_on_the_positive_side(h_crit):
    for x in (0.5, 1.0, 2.0):
        hb = rn.hbar(seeds.substream(MASTER, f"t-ren-hb-{x}"), CRIT, h_crit, x,
                     n=10**5)
        i = int(np.argmin(np.abs(CRIT_GRID - x)))
        z = (hb.value - h_crit(x)) / math.hypot(hb.se, float(h_crit.se[i]))
        assert abs(z) < 2.58


def test_hbar_negative_side_is_overshoot_tail(h_crit, m_crit):
    # one step up from -y lands above 0 exactly when the first ascending
    # record clears y
    for y in (0.5, 1.0, 2.0):
        hb = rn.hbar(seeds.substream(MASTER, f"t-ren-hbn-{y}"), CRIT, h_crit, -y,
                     n=10**5)
        tp, tse = m_crit.tail(np.array([y]))
        z = (hb.value - tp[0]) / math.hypot(hb.se, tse[0])
        assert abs(z) < 2.58


def test_hbar_gauss_both_sides(h_gauss, m_gauss):
    hb = rn.hbar(seeds.substream(MASTER, "t-ren-hg-hb"), GAUSS, h_gauss, 1.0,
                 n=10**5)
    i = int(np.argmin(np.abs(GAUSS_GRID - 1.0)))
    assert abs(hb.value - h_gauss(1.0)) < 2.58 * math.hypot(hb.se,
                                                            float(h_gauss.se[i]))
    for y in (0.5, 1.0):
        hbn = rn.hbar(seeds.substream(MASTER, f"t-ren-hg-n{y}"), GAUSS, h_gauss,
                      -y, n=10**5)
        tp, tse = m_gauss.tail(np.array([y]))
        assert abs(hbn.value - tp[0]) < 2.58 * math.hypot(hbn.se, tse[0])


def test_hbar_vanishes_far_below_zero(h_crit):
    hb = rn.hbar(seeds.substream(MASTER, "t-ren-hb-deep"), CRIT, h_crit, -30.0,
                 n=10**5)
    assert hb.value == 0.0 and hb.se == 0.0


def test_hbar_counts_grid_overshoots():
    h4 = rn.renewal_function_h(seeds.substream(MASTER, "t-ren-h4"), CRIT,
                               np.linspace(0.0, 4.0, 9), n_paths=500, cap=10**5)
    hb = rn.hbar(seeds.substream(MASTER, "t-ren-hb4"), CRIT, h4, 2.0, n=10**4)
    assert hb.n_truncated > 0


# ---------- conditioned ensembles ----------

def _replicate_ci(res, vals):
    ests = res.estimate(vals)
    m = float(ests.mean())
    half = float(sps.t.ppf(0.995, ests.size - 1)) * float(ests.std(ddof=1)) \
        / math.sqrt(ests.size)
    return m - half, m + half


def test_ensemble_restriction_ratio(h_crit):
    # rows are independent replicates; lineage correlation inside one ensemble
    # makes its internal error bar too small, so the CI comes from the spread
    # across rows
    R, P = 16, 1000
    for tag, x, a in (("t-ren-ratio-21", 2.0, 1.0), ("t-ren-ratio-31", 3.0, 1.0),
                      ("t-ren-ratio-32", 3.0, 2.0)):
        res = rn.conditioned_walk_ensemble(seeds.substream(MASTER, tag), CRIT,
                                           h_crit, np.full(R, x), 0.0, 96, P)
        vals = np.where(res.running_min >= a, 1.0, 0.0) \
            * h_crit(res.final_s - a) / np.maximum(h_crit(res.final_s), 1e-300)
        lo, hi = _replicate_ci(res, vals)
        ref = h_crit(x - a) / h_crit(x)
        ia = int(np.argmin(np.abs(CRIT_GRID - (x - a))))
        ix = int(np.argmin(np.abs(CRIT_GRID - x)))
        rse = ref * math.hypot(float(h_crit.se[ia]) / h_crit(x - a),
                               float(h_crit.se[ix]) / h_crit(x))
        assert st.intervals_overlap((lo, hi), (ref - 2.58 * rse, ref + 2.58 * rse))


def test_ensemble_restriction_ratio_gauss(h_gauss):
    R, P = 16, 1000
    res = rn.conditioned_walk_ensemble(seeds.substream(MASTER, "t-ren-g-ratio"),
                                       GAUSS, h_gauss, np.full(R, 2.0), 0.0, 96, P)
    vals = np.where(res.running_min >= 1.0, 1.0, 0.0) \
        * h_gauss(res.final_s - 1.0) / np.maximum(h_gauss(res.final_s), 1e-300)
    lo, hi = _replicate_ci(res, vals)
    ref = h_gauss(1.0) / h_gauss(2.0)
    i1 = int(np.argmin(np.abs(GAUSS_GRID - 1.0)))
    i2 = int(np.argmin(np.abs(GAUSS_GRID - 2.0)))
    rse = ref * math.hypot(float(h_gauss.se[i1]) / h_gauss(1.0),
                           float(h_gauss.se[i2]) / h_gauss(2.0))
    assert st.intervals_overlap((lo, hi), (ref - 2.58 * rse, ref + 2.58 * rse))


def test_ensemble_barrier_ratio(h_crit, h_gauss):
    # start below the barrier, so the condition starts to bind at step one and
    # both sides of the ratio are harmonic extensions
    R, P = 16, 1000
    for tag, law, h, x, a, y in (("t-ren-bar-a", CRIT, h_crit, 0.5, 1.0, 0.0),
                                 ("t-ren-bar-c", CRIT, h_crit, -0.5, 0.5, -1.0),
                                 ("t-ren-g-bar", GAUSS, h_gauss, 0.5, 1.0, 0.0)):
        res = rn.conditioned_walk_ensemble(seeds.substream(MASTER, tag), law, h,
                                           np.full(R, x), y, 96, P,
                                           from_step_one=True)
        vals = np.where(res.running_min >= a, 1.0, 0.0) \
            * h(res.final_s - a) / np.maximum(h(res.final_s - y), 1e-300)
        lo, hi = _replicate_ci(res, vals)
        hba = rn.hbar(seeds.substream(MASTER, tag + "-n"), law, h, x - a, n=10**5)
        hby = rn.hbar(seeds.substream(MASTER, tag + "-d"), law, h, x - y, n=10**5)
        ref = hba.value / hby.value
        rse = ref * math.hypot(hba.se / hba.value, hby.se / hby.value)
        assert st.intervals_overlap((lo, hi), (ref - 2.58 * rse, ref + 2.58 * rse))


def test_ensemble_auto_step_one_matches_explicit(h_crit):
    r1 = rn.conditioned_walk_ensemble(seeds.substream(MASTER, "t-ren-auto"),
                                      CRIT, h_crit, -0.5, 0.0, 16, 200)
    r2 = rn.conditioned_walk_ensemble(seeds.substream(MASTER, "t-ren-auto"),
                                      CRIT, h_crit, -0.5, 0.0, 16, 200,
                                      from_step_one=True)
    assert np.array_equal(r1.final_s, r2.final_s)
    assert np.array_equal(r1.weights, r2.weights)


def test_ancestry_replay_reproduces_a_recorded_lineage(h_crit):
    res = rn.conditioned_walk_ensemble(seeds.substream(MASTER, "t-ren-anc"),
                                       CRIT, h_crit, np.array([1.0, 2.0]), 0.0,
                                       48, 300, record_paths=True)
    paths, ess = rn.conditioned_paths_via_ancestry(
        seeds.substream(MASTER, "t-ren-anc"), CRIT, h_crit,
        np.array([1.0, 2.0]), 0.0, 48, 300)
    assert paths.shape == (2, 49)
    assert np.all(ess > 0)
    for b in range(2):
        assert np.any(np.all(res.paths[b] == paths[b][None, :], axis=1))


def test_ensemble_degenerates_without_resampling(h_gauss):
    with pytest.raises(rn.DegenerateEnsemble) as exc:
        rn.conditioned_walk_ensemble(seeds.substream(MASTER, "t-ren-deg"),
                                     GAUSS, h_gauss, 0.0, 0.0, 4096, 500,
                                     resample_every=0, from_step_one=True)
    assert exc.value.partial is not None


# ---------- walks with positive drift ----------

def test_rejection_walks_condition_on_staying_up():
    paths, n_prop = rn.rejection_walks(seeds.substream(MASTER, "t-ren-rej3"),
                                       ONE, [2.0, 2.0, 2.0], 64, 6.0)
    assert paths.shape == (3, 65)
    assert n_prop == 3
    assert np.all(paths[:, 0] == 2.0)
    assert paths[:, 1:].min() > 0.0


def test_rejection_walks_need_positive_mean():
    with pytest.raises(ValueError):
        rn.rejection_walks(seeds.substream(MASTER, "t-x"), CRIT, 2.0, 64, 6.0)


def test_rejection_walks_budget():
    with pytest.raises(rn.BudgetExceeded):
        rn.rejection_walks(seeds.substream(MASTER, "t-ren-rej-budget"), ONE,
                           np.full(40, 0.0), 64, 10**9, max_rounds=1)


def test_ruin_bound_is_small_at_high_level():
    up = rn.ruin_probability_upper(seeds.substream(MASTER, "t-ren-ruin"), ONE,
                                   6.0, n_paths=20_000)
    assert 0.0 < up < 1e-3
    with pytest.raises(ValueError):
        rn.ruin_probability_upper(seeds.substream(MASTER, "t-x"), CRIT, 6.0,
                                  n_paths=100)


@pytest.fixture(scope="module")
def pass_pool_one():
    return rn.first_ladder_heights(seeds.substream(MASTER, "t-ren-pass-pool"),
                                   ONE, 20_000)


@pytest.fixture(scope="module")
def pass_pool_gpos():
    return rn.first_ladder_heights(seeds.substream(MASTER, "t-ren-gpass-pool"),
                                   GPOS, 20_000)


@pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
def test_ladder_tail_matches_walk_survival(pass_pool_one, y):
    # mean * P(H > y) / mu_H equals the chance the whole walk stays above y
    pool, restarts = pass_pool_one
    assert restarts == 0
    p, se = rn.walk_min_above(seeds.substream(MASTER, f"t-ren-pass-min-{y}"),
                              ONE, y, 20_000)

    def stat(arr):
        return ONE.mean * np.mean(arr > y) / np.mean(arr)

    lo, hi = st.bootstrap_ci(seeds.substream(MASTER, f"t-ren-pass-boot-{y}"),
                             st.EmpiricalSample(pool), stat, n_boot=2000)
    assert st.intervals_overlap((lo, hi), (p - 2.58 * se, p + 2.58 * se))


@pytest.mark.parametrize("y", [0.5, 1.0])
def test_ladder_tail_matches_walk_survival_gauss(pass_pool_gpos, y):
    pool, restarts = pass_pool_gpos
    assert restarts == 0
    p, se = rn.walk_min_above(seeds.substream(MASTER, f"t-ren-gpass-{y}"),
                              GPOS, y, 20_000)

    def stat(arr):
        return GPOS.mean * np.mean(arr > y) / np.mean(arr)

    lo, hi = st.bootstrap_ci(seeds.substream(MASTER, f"t-ren-gpass-b-{y}"),
                             st.EmpiricalSample(pool), stat, n_boot=2000)
    assert st.intervals_overlap((lo, hi), (p - 2.58 * se, p + 2.58 * se))


# ---------- stationary overshoot law ----------

def test_overshoot_law_matches_level_crossings():
    # overshoot of a far level, started well below it, is already stationary
    m_one = rn.build_overshoot_law(seeds.substream(MASTER, "t-ren-m-one"), ONE,
                                   pool_size=10**5)
    ov, censored = rn.crossing_overshoots(seeds.substream(MASTER, "t-ren-cross"),
                                          ONE, -20.0, 10**5)
    assert censored == 0
    ms = rn.sample_overshoot_m(seeds.substream(MASTER, "t-ren-m-draw"), m_one,
                               size=10**5)
    ks, _ = st.ks_two_sample(st.EmpiricalSample(ms), st.EmpiricalSample(ov))
    assert ks < 0.015


def test_overshoot_law_guards():
    with pytest.raises(ValueError):
        rn.OvershootLaw(mu_H=1.0, mu_H_se=0.0, pool=np.array([]))
    with pytest.raises(ValueError):
        rn.crossing_overshoots(seeds.substream(MASTER, "t-x"), CRIT, 0.5, 10)


# ---------- stationary pass law ----------

def test_nu_mass_and_box(h_crit, m_crit):
    nu = rn.build_nu_sampler(CRIT, h_crit, m_crit.mu_H)
    assert nu.z_max == CRIT_GRID[-1]
    assert abs(nu.total_mass - 1.0) < 0.05
    assert nu.box_mass / nu.total_mass > 0.999


def test_nu_draws_follow_the_density(h_crit, m_crit):
    nu = rn.build_nu_sampler(CRIT, h_crit, m_crit.mu_H)
    xs, ys = nu.sample(seeds.substream(MASTER, "t-ren-nu-draw"), 10_000)
    assert np.all((xs >= 0) & (ys >= 0) & (xs + ys <= nu.z_max))
    # undershoot marginal against the quadrature of h(z) * P(step in (z, top))
    e = Elasticity.critical()
    zg = np.linspace(0.0, nu.z_max, 4001)
    dens = h_crit(zg) * (step_cdf(np.full_like(zg, nu.z_max), e) - step_cdf(zg, e))
    cdf = np.concatenate([[0.0],
                          np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(zg))])
    cdf /= cdf[-1]
    ks, _ = st.ks_one_sample(st.EmpiricalSample(xs),
                             lambda q: np.interp(q, zg, cdf))
    assert ks < 0.03


@pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
def test_nu_overshoot_tail_matches_ladder_pool(h_crit, m_crit, y):
    nu = rn.build_nu_sampler(CRIT, h_crit, m_crit.mu_H)
    xs, ys = nu.sample(seeds.substream(MASTER, "t-ren-nu-draw"), 10_000)
    e_lo, e_hi = st.wilson_ci(float(np.sum(ys > y)), float(ys.size))

    def stat(arr):
        return np.mean(np.maximum(arr - y, 0.0)) / np.mean(arr)

    lo, hi = st.bootstrap_ci(seeds.substream(MASTER, f"t-ren-nu-t-{y}"),
                             st.EmpiricalSample(m_crit.pool), stat, n_boot=2000)
    assert st.intervals_overlap((e_lo, e_hi), (lo, hi))


def test_nu_gauss_mass(h_gauss, m_gauss):
    nu = rn.build_nu_sampler(GAUSS, h_gauss, m_gauss.mu_H)
    assert abs(nu.total_mass - 1.0) < 0.05
    assert nu.box_mass / nu.total_mass > 0.999
    xs, ys = nu.sample(seeds.substream(MASTER, "t-ren-nug-d"), 5000)
    assert np.all((xs >= 0) & (ys >= 0) & (xs + ys <= nu.z_max))


def test_nu_truncation_and_guards(h_crit, h_pm, m_crit):
    h4 = rn.renewal_function_h(seeds.substream(MASTER, "t-ren-h4"), CRIT,
                               np.linspace(0.0, 4.0, 9), n_paths=500, cap=10**5)
    with pytest.raises(rn.TruncationError):
        rn.build_nu_sampler(CRIT, h4, m_crit.mu_H)
    with pytest.raises(ValueError):
        rn.build_nu_sampler(CRIT, h_crit, m_crit.mu_H, z_max=50.0)
    with pytest.raises(ValueError):
        rn.nu_density(np.array([0.5]), np.array([0.5]), PM, h_pm, 1.0)


def test_nu_density_formula(h_crit, m_crit):
    x, y = np.array([0.5, 1.5]), np.array([1.0, 0.25])
    got = rn.nu_density(x, y, CRIT, h_crit, m_crit.mu_H)
    want = h_crit(x) * CRIT.density(x + y) / m_crit.mu_H
    assert np.allclose(got, want, rtol=1e-12)


# ---------- time-reversal diagnostic ----------

def test_reversal_diagnostic_critical(h_crit):
    rep = rn.duality_check(seeds.substream(MASTER, "t-ren-dual-sm"), CRIT,
                           h_crit, n=2000, horizon=1024)
    assert not rep.skipped
    assert rep.ks_stat < rep.ks_crit_99
    assert rep.stabilized_fraction > 0.98
    assert rep.ess_conditioned > 1000


def test_reversal_diagnostic_gauss(h_gauss):
    rep = rn.duality_check(seeds.substream(MASTER, "t-ren-g-dual"), GAUSS,
                           h_gauss, n=4000)
    assert rep.ks_stat < rep.ks_crit_99
    assert rep.stabilized_fraction > 0.98


def test_reversal_diagnostic_deterministic(h_crit):
    r1 = rn.duality_check(seeds.substream(MASTER, "t-ren-det"), CRIT, h_crit,
                          n=1000, horizon=256)
    r2 = rn.duality_check(seeds.substream(MASTER, "t-ren-det"), CRIT, h_crit,
                          n=1000, horizon=256)
    assert r1.ks_stat == r2.ks_stat
