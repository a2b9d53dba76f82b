"""Unit tests for the Euler oracle: deterministic limits, reflection identity,
the near-origin guard, and distributional agreement with the exact samplers."""

import math

import numpy as np
import pytest

from relp import archlaw as al
from relp import sde
from relp import seeds
from relp import stats as st
from relp.archlaw import Elasticity

E1 = Elasticity(1.0)
MASTER = 1234
DT = 1.0 / 128.0  # binary dt keeps the deterministic paths exact


def _zero_noise(rng, n):
    return np.zeros(n)


# ---------- deterministic limits ----------

def test_ballistic_path():
    p = sde.integrate(seeds.substream(MASTER, "t-sde-ball"), E1, 0.0, 1.0,
                      DT, 2.0, noise=_zero_noise)
    assert np.array_equal(p.positions, p.times)
    assert np.all(p.velocities == 1.0)
    assert p.bounce_events == []
    assert not p.accumulation_reached
    assert sde.extract_first_arch(p) is sde.NO_BOUNCE


def test_deterministic_drop_bounces_once():
    c = 0.5
    p = sde.integrate(seeds.substream(MASTER, "t-sde-drop"), Elasticity(c),
                      1.0, -1.0, DT, 3.0, noise=_zero_noise)
    assert len(p.bounce_events) == 1
    ev = p.bounce_events[0]
    assert ev.time == 1.0
    assert ev.v_in == -1.0
    assert ev.v_out == c
    zeta1, v1 = sde.extract_first_arch(p)
    assert (zeta1, v1) == (1.0, c)
    # after the bounce the free path climbs at speed c forever
    assert np.all(np.diff(p.positions[int(1.0 / DT) + 1:]) > 0)


def test_reflection_identity_on_noisy_path():
    p = sde.integrate(seeds.substream(MASTER, "t-sde-noisy", 6), E1, 0.0, 1.0,
                      1e-3, 20.0)
    assert len(p.bounce_events) == 5
    for ev in p.bounce_events:
        assert ev.v_in < 0.0
        assert ev.v_out == -E1.c * ev.v_in  # exact, not approximate
    assert np.all(p.positions >= 0.0)


def test_near_origin_guard():
    p = sde.integrate(seeds.substream(MASTER, "t-sde-guard"), E1, 1e-13, 0.0,
                      0.01, 1.0, noise=_zero_noise)
    assert p.accumulation_reached
    assert p.positions.size == 1  # halted before the first step


def test_integrate_domain_errors():
    rng = seeds.substream(MASTER, "t-sde-bad")
    with pytest.raises(ValueError):
        sde.integrate(rng, E1, -1.0, 1.0, 0.01, 1.0)
    with pytest.raises(ValueError):
        sde.integrate(rng, E1, 0.0, 0.0, 0.01, 1.0)
    with pytest.raises(ValueError):
        sde.integrate(rng, E1, 1.0, 1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        sde.integrate(rng, E1, 0.0, math.inf, 0.01, 1.0)


def test_integrate_determinism():
    a = sde.integrate(seeds.substream(MASTER, "t-sde-det"), E1, 0.0, 1.0, 1e-3, 5.0)
    b = sde.integrate(seeds.substream(MASTER, "t-sde-det"), E1, 0.0, 1.0, 1e-3, 5.0)
    assert np.array_equal(a.positions, b.positions)
    assert a.bounce_events == b.bounce_events


def test_extract_synthetic_event():
    p = sde.DiscretePath(E1, 0.5, np.zeros(3), np.zeros(3),
                         bounce_events=[sde.BounceEvent(0.25, -2.0, 2.0)])
    assert sde.extract_first_arch(p) == (0.25, 2.0)


# ---------- batch lanes ----------

def test_first_arches_deterministic_drop():
    t, v = sde.first_arches(seeds.substream(MASTER, "t-sde-batch"), Elasticity(0.5),
                            16, DT, 3.0, x0=1.0, u0=-1.0, noise=_zero_noise)
    assert np.all(t == 1.0)
    assert np.all(v == 0.5)


def test_first_arches_ballistic_all_censored():
    t, v = sde.first_arches(seeds.substream(MASTER, "t-sde-batch2"), E1,
                            8, DT, 2.0, noise=_zero_noise)
    assert np.all(np.isnan(t)) and np.all(np.isnan(v))


def test_first_arches_determinism():
    a = sde.first_arches(seeds.substream(MASTER, "t-sde-batch3"), E1, 200, 1e-3, 3.0)
    b = sde.first_arches(seeds.substream(MASTER, "t-sde-batch3"), E1, 200, 1e-3, 3.0)
    assert np.array_equal(a[0], b[0], equal_nan=True)
    assert np.array_equal(a[1], b[1], equal_nan=True)


# ---------- cross-validation against the exact samplers ----------

def test_first_arch_law_matches_exact_sampler():
    # both sides truncated to zeta1 <= T: the heavy t^{-1/4} tail makes the
    # unconditional law unreachable at any finite horizon
    T = 5.0
    d, w = al.sample_arches(seeds.substream(MASTER, "t-sde-exact"), E1, 60_000)
    keep = d <= T
    dx, wx = d[keep], w[keep]

    zt, zv = sde.first_arches(seeds.substream(MASTER, "t-sde-ks-0.001"), E1,
                              4000, 1e-3, T)
    ok = ~np.isnan(zt)
    assert 800 < ok.sum() < 1400  # keep rate near P(zeta1 <= 5) ~ 0.25

    stat, p = st.ks_two_sample(st.EmpiricalSample(zt[ok]), st.EmpiricalSample(dx))
    assert p > 0.01

    sv, pv = st.ks_two_sample(st.EmpiricalSample(np.log(zv[ok])), st.EmpiricalSample(wx))
    assert pv > 0.01

    gap = np.log(zv[ok]).mean() - wx.mean()
    se = math.sqrt(np.log(zv[ok]).var() / ok.sum() + wx.var() / wx.size)
    assert abs(gap) < 3.0 * se + 2.0 * math.sqrt(1e-3)
