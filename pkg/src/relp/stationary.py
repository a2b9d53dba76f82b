"""Stationary bounce windows and the entrance law at a prescribed speed.

A window is a two-sided piece of the stationary bounce chain around a record
anchor: backward entries hold log-velocities at or below 0, the anchor is the
first entry strictly above. Windows are built in the critical regime (pass
law for the anchor pair, renewal h-transform for the backward continuation)
and in the supercritical regime (stationary overshoot law for the anchor,
rejection conditioning for the backward side). Reading a window at velocity
scale v, summing its backward occupation time, and restarting the forward
side as a bounce skeleton yields entrance samples for the reflected process
started from stationarity at speed v.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from relp import renewal, skeleton
from relp.archlaw import Elasticity, Regime, sample_duration_given_velocities
from relp.renewal import (
    NuSampler,
    OvershootLaw,
    RenewalFunction,
    StepLaw,
    build_nu_sampler,
    build_overshoot_law,
    conditioned_paths_via_ancestry,
    rejection_walks,
    renewal_function_h,
    ruin_probability_upper,
    sample_overshoot_m,
    step_law_from_elasticity,
)

# renewal grid for the critical resources: fine near 0 where the chord bias
# bites, stretched past 20 so the pass-law box keeps essentially all mass
CRITICAL_H_GRID = np.concatenate([
    np.linspace(0.0, 2.0, 33),
    np.linspace(2.25, 4.0, 8),
    np.array([5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 24.0]),
])

RESIDUAL_RUIN = 1e-6   # analytic target for escape past the conditioning level
ESCAPE_UCB = 1e-4      # Monte Carlo certification bound on the same event
DEFAULT_PARTICLES = 128
PARENT_BUDGET = 3 * 10**6   # ancestry ints held per ensemble chunk


class TruncatedShift(RuntimeError):
    """The window is too short for the requested re-anchoring.

    feasible_depth carries the backward depth the shift could keep (None when
    no entry exceeds the target level at all), so callers can rebuild deeper
    instead of failing outright.
    """

    def __init__(self, msg, feasible_depth=None):
        super().__init__(msg)
        self.feasible_depth = feasible_depth


@dataclass(frozen=True)
class StationaryWindow:
    """Two-sided stationary bounce window around a record anchor.

    s holds the log-velocity walk, one entry per bounce; array index
    back_depth + n stores entry n, so entries n < 0 sit at or below 0 and the
    anchor entry n = 0 is strictly above. durations holds the matching arch
    durations normalized to unit entry speed, which makes every stored field
    invariant under shifts of the velocity scale; the physical duration of
    arch n at scale u is u**2 * exp(2 s_n) * duration_n.
    """

    elasticity: Elasticity
    s: np.ndarray
    durations: np.ndarray
    back_depth: int
    weight: float = 1.0

    def __post_init__(self):
        if self.s.ndim != 1 or self.durations.shape != self.s.shape:
            raise ValueError("s and durations must be matching 1-d arrays")
        if not 0 <= self.back_depth < self.s.size:
            raise ValueError("back_depth out of range")
        if not np.all(np.isfinite(self.s)):
            raise ValueError("log-velocities must be finite")
        if not np.all(self.durations > 0):
            raise ValueError("durations must be positive")
        if not self.s[self.back_depth] > 0:
            raise ValueError("anchor entry must sit strictly above 0")
        if np.any(self.s[:self.back_depth] > 0):
            raise ValueError("backward entries must stay at or below 0")
        if not self.weight > 0:
            raise ValueError("weight must be positive")

    @property
    def fwd_length(self) -> int:
        return self.s.size - self.back_depth - 1

    @property
    def indices(self) -> np.ndarray:
        """Entry indices -back_depth .. fwd_length, aligned with s."""
        return np.arange(-self.back_depth, self.fwd_length + 1)


def theta_shift(w: StationaryWindow, x: float, min_depth: int = 1) -> StationaryWindow:
    """Re-anchor the window at its first entry with log-velocity above x.

    All entries keep their place; log-velocities drop by x and the entries
    before the new anchor become the backward side. Raises TruncatedShift
    when no entry exceeds x, or when fewer than min_depth entries would
    remain behind the new anchor.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("shift level must be finite")
    if min_depth < 0:
        raise ValueError("min_depth must be nonnegative")
    above = np.flatnonzero(w.s > x)
    if above.size == 0:
        raise TruncatedShift(f"no entry above level {x:g}")
    t = int(above[0])
    if t < min_depth:
        raise TruncatedShift(
            f"shift to level {x:g} keeps only {t} backward entries",
            feasible_depth=t,
        )
    return StationaryWindow(elasticity=w.elasticity, s=w.s - x,
                            durations=w.durations, back_depth=t, weight=w.weight)


# ---------- backward occupation time ----------

def _geometric_tail(terms: np.ndarray) -> float:
    """Bound on the occupation time cut off at the back edge.

    Fits log-linear decay over the deepest quarter of the backward terms and
    sums the extrapolated geometric series. Terms that underflowed to 0 are
    left out of the fit; if nothing in the quarter survives the bound is 0,
    and if the fit shows no decay it is inf.
    """
    q = max(2, terms.size // 4)
    seg = terms[:q]
    pos = np.flatnonzero(seg > 0)
    if pos.size == 0:
        return 0.0
    if pos.size < 2:
        return float("inf")
    slope, intercept = np.polyfit(pos.astype(float), np.log(seg[pos]), 1)
    if not slope > 0:
        return float("inf")
    r = math.exp(-slope)
    return math.exp(intercept) * r / (1.0 - r)


def alpha(w: StationaryWindow, x: float = 0.0, depth: int | None = None):
    """Backward occupation time of the window shifted to level x.

    Returns (value, tail_bound). value is exp(2x) times the sum of
    exp(2 s_n) * duration_n over the backward entries of the shifted window,
    the physical time spent below speed exp(x) within the stored depth at
    unit velocity scale. tail_bound is the geometric extrapolation of the
    terms lost to truncation at the back edge. depth restricts the sum to
    the shallowest that many backward entries.
    """
    shifted = theta_shift(w, x, min_depth=1)
    k = shifted.back_depth
    back_s = shifted.s[:k]
    back_d = shifted.durations[:k]
    if depth is not None:
        if depth < 1:
            raise ValueError("depth must be at least 1")
        back_s = back_s[-depth:]
        back_d = back_d[-depth:]
    terms = np.exp(2.0 * back_s) * back_d
    scale = math.exp(2.0 * x)
    return scale * float(terms.sum()), scale * _geometric_tail(terms)


def count_heavy_backward_terms(w: StationaryWindow) -> int:
    """Backward occupation terms above the slow threshold exp(-n ** 0.25).

    The stationary backward terms decay geometrically in the depth n while
    the threshold decays only stretched-polynomially, so the count stays
    small and stabilizes as the depth grows; a count that keeps climbing
    with depth flags a bad backward law.
    """
    k = w.back_depth
    if k == 0:
        return 0
    n = np.arange(1, k + 1)
    idx = k - n
    t = np.exp(2.0 * w.s[idx]) * w.durations[idx]
    return int((t > np.exp(-n**0.25)).sum())


# ---------- supercritical resources ----------

def cramer_root(law: StepLaw, grid_halfwidth: float = 45.0, n_knots: int = 40001) -> float:
    """Positive root of E[exp(-theta * step)] = 1 for a positive-mean law.

    The moment generating function is a trapezoid log-quadrature of the step
    density on a wide grid around the mean; the root is bracketed by
    doubling and solved with brentq.
    """
    if law.density is None:
        raise ValueError("needs a step density")
    if not law.mean > 0:
        raise ValueError("needs a positive-mean step law")
    half = grid_halfwidth * max(1.0, math.sqrt(law.variance))
    w = np.linspace(law.mean - half, law.mean + half, n_knots)
    with np.errstate(divide="ignore"):
        logp = np.log(law.density(w))
    lw = np.full(n_knots, math.log(w[1] - w[0]))
    lw[0] = lw[-1] = lw[0] - math.log(2.0)

    def g(t):
        return float(logsumexp(-t * w + logp + lw))

    hi = 0.5
    while g(hi) <= 0:
        hi *= 2.0
        if hi > 64.0:
            raise ValueError("no positive root below 64")
    lo = hi / 2.0
    while g(lo) >= 0:
        lo /= 2.0
        if lo < 1e-12:
            raise ValueError("root indistinguishable from 0")
    return float(brentq(g, lo, hi, xtol=1e-12))


@dataclass(frozen=True)
class SupercriticalResources:
    """Shared inputs for supercritical window building."""

    law: StepLaw
    m: OvershootLaw
    cramer_root: float
    escape_level: float
    ruin_ucb: float


def prepare_supercritical_resources(rng, e: Elasticity, pool_size: int = 10**5,
                                    n_ruin_paths: int = 10**5) -> SupercriticalResources:
    """Stationary overshoot law plus a certified escape level.

    The escape level approximates the backward conditioning to stay positive
    forever: it starts at ceil(-ln(RESIDUAL_RUIN) / root) so the exponential
    bound on falling back below 0 is under RESIDUAL_RUIN, then is raised
    until a Monte Carlo 99% upper bound on that event clears ESCAPE_UCB.
    """
    if e.regime is not Regime.SUPERCRITICAL:
        raise ValueError("needs a supercritical elasticity")
    law = step_law_from_elasticity(e)
    root = cramer_root(law)
    level = math.ceil(-math.log(RESIDUAL_RUIN) / root)
    for _ in range(4):
        ucb = ruin_probability_upper(rng, law, level, n_paths=n_ruin_paths)
        if ucb < ESCAPE_UCB:
            break
        level += 2
    else:
        raise RuntimeError(f"no escape level certified, last bound {ucb:g}")
    m = build_overshoot_law(rng, law, pool_size=pool_size)
    return SupercriticalResources(law=law, m=m, cramer_root=root,
                                  escape_level=float(level), ruin_ucb=ucb)


# ---------- critical resources ----------

@dataclass(frozen=True)
class CriticalResources:
    """Renewal function, overshoot law and pass-law sampler at criticality."""

    law: StepLaw
    h: RenewalFunction
    m: OvershootLaw
    nu: NuSampler

    @property
    def mu_H(self) -> float:
        return self.m.mu_H


def prepare_critical_resources(rng, e: Elasticity, grid=None, n_paths: int = 2 * 10**4,
                               pool_size: int = 2 * 10**4,
                               cap: int = 4 * 10**5) -> CriticalResources:
    """Build the critical resources at sizes matched to the checks downstream.

    2e4 record-counting paths on CRITICAL_H_GRID keep the knot standard
    errors near 1e-2, and the grid top at 24 leaves under 0.1% of the
    pass-law mass outside the sampling box.
    """
    if e.regime is not Regime.CRITICAL:
        raise ValueError("needs a critical elasticity")
    law = step_law_from_elasticity(e)
    if grid is None:
        grid = CRITICAL_H_GRID
    h = renewal_function_h(rng, law, grid, n_paths=n_paths, cap=cap)
    m = build_overshoot_law(rng, law, pool_size=pool_size)
    nu = build_nu_sampler(law, h, m.mu_H)
    return CriticalResources(law=law, h=h, m=m, nu=nu)


# ---------- window builders ----------

def _escape_horizon(law: StepLaw, x_min: float, level: float) -> int:
    # smallest n with x_min + mean*n - 4.5*sd*sqrt(n) >= level
    mu = law.mean
    sd = math.sqrt(law.variance)
    disc = (4.5 * sd)**2 + 4.0 * mu * (level - x_min)
    r = (4.5 * sd + math.sqrt(disc)) / (2.0 * mu)
    return int(math.ceil(r * r)) + 1


def _chunk_rows(n_steps: int, n_particles: int) -> int:
    # bound the resampling-ancestry footprint, not the step draws
    events = max(1, n_steps // renewal.DEFAULT_RESAMPLE_EVERY)
    return max(1, PARENT_BUDGET // (events * n_particles))


def _windows_from_chains(e: Elasticity, rng, chain: np.ndarray,
                         back_depth: int) -> list[StationaryWindow]:
    """Draw all arch durations for a batch of log-velocity chains.

    chain rows run from the deepest backward entry through one step past the
    forward end; the extra step supplies the exit velocity of the last
    stored arch. Durations come from one batched draw at unit entry speed.
    """
    ratios = np.exp(np.diff(chain, axis=1)) / e.c
    durations = sample_duration_given_velocities(rng, 1.0, ratios, e)
    s = chain[:, :-1]
    return [
        StationaryWindow(elasticity=e, s=s[i].copy(), durations=durations[i].copy(),
                         back_depth=back_depth)
        for i in range(chain.shape[0])
    ]


def _positive_overshoots(rng, m: OvershootLaw, n: int) -> np.ndarray:
    y = np.atleast_1d(sample_overshoot_m(rng, m, size=n))
    while True:
        z = np.flatnonzero(y <= 0.0)
        if z.size == 0:
            return y
        y[z] = np.atleast_1d(sample_overshoot_m(rng, m, size=z.size))


def build_windows_supercritical(rng, e: Elasticity, back_depth: int, fwd_length: int,
                                count: int, resources: SupercriticalResources | None = None,
                                max_rounds: int = 10**6) -> list[StationaryWindow]:
    """count independent stationary windows with back_depth backward entries.

    The anchor log-velocity is drawn from the stationary overshoot law. The
    backward side, read in reverse, is the walk from minus the anchor
    conditioned to stay positive at every later step, realized by rejection
    against escape above resources.escape_level; the forward side is the
    unconditioned walk. The round budget covers the rare deep anchors whose
    first backward step alone has acceptance well under 1e-3; late rounds
    only redraw the unfilled lanes, so they stay cheap.
    """
    if e.regime is not Regime.SUPERCRITICAL:
        raise ValueError("needs a supercritical elasticity")
    if back_depth < 1 or fwd_length < 0 or count < 1:
        raise ValueError("need back_depth >= 1, fwd_length >= 0, count >= 1")
    if resources is None:
        resources = prepare_supercritical_resources(rng, e)
    law = resources.law
    s0 = _positive_overshoots(rng, resources.m, count)
    horizon = max(back_depth,
                  _escape_horizon(law, -float(s0.max()), resources.escape_level))
    paths, _ = rejection_walks(rng, law, -s0, horizon, resources.escape_level,
                               max_rounds=max_rounds)
    back = -paths[:, back_depth:0:-1]
    fsteps = law.sampler(rng, (count, fwd_length + 1))
    fwd = s0[:, None] + np.cumsum(fsteps, axis=1)
    chain = np.concatenate([back, s0[:, None], fwd], axis=1)
    return _windows_from_chains(e, rng, chain, back_depth)


def build_window_supercritical(rng, e: Elasticity, back_depth: int, fwd_length: int,
                               resources: SupercriticalResources | None = None) -> StationaryWindow:
    return build_windows_supercritical(rng, e, back_depth, fwd_length, 1,
                                       resources=resources)[0]


def build_windows_critical(rng, e: Elasticity, back_depth: int, fwd_length: int,
                           count: int, resources: CriticalResources | None = None,
                           n_particles: int = DEFAULT_PARTICLES) -> list[StationaryWindow]:
    """count stationary windows at criticality.

    The pair (depth below 0 before the anchor, anchor) is drawn from the
    stationary pass law; the backward side below the first entry is the
    h-transformed walk conditioned to stay nonnegative, one selected lineage
    per window at unit weight. Ensembles run in row chunks sized to bound
    the ancestry footprint, and each chunk draws its durations in one batch.
    """
    if e.regime is not Regime.CRITICAL:
        raise ValueError("needs a critical elasticity")
    if back_depth < 1 or fwd_length < 0 or count < 1:
        raise ValueError("need back_depth >= 1, fwd_length >= 0, count >= 1")
    if resources is None:
        resources = prepare_critical_resources(rng, e)
    law = resources.law
    out: list[StationaryWindow] = []
    chunk = _chunk_rows(back_depth - 1, n_particles) if back_depth > 1 else count
    while len(out) < count:
        rows = min(chunk, count - len(out))
        xs, ys = resources.nu.sample(rng, rows)
        while True:
            z = np.flatnonzero(ys <= 0.0)
            if z.size == 0:
                break
            xs[z], ys[z] = resources.nu.sample(rng, z.size)
        if back_depth == 1:
            bpaths = xs[:, None]
        else:
            bpaths, _ = conditioned_paths_via_ancestry(
                rng, law, resources.h, xs, 0.0, back_depth - 1, n_particles)
        back = -bpaths[:, ::-1]
        fsteps = law.sampler(rng, (rows, fwd_length + 1))
        fwd = ys[:, None] + np.cumsum(fsteps, axis=1)
        chain = np.concatenate([back, ys[:, None], fwd], axis=1)
        out.extend(_windows_from_chains(e, rng, chain, back_depth))
    return out


def build_window_critical(rng, e: Elasticity, back_depth: int, fwd_length: int,
                          resources: CriticalResources | None = None) -> StationaryWindow:
    return build_windows_critical(rng, e, back_depth, fwd_length, 1,
                                  resources=resources)[0]


# ---------- entrance sampling ----------

class Mode(enum.Enum):
    BACKWARD = "backward"
    FORWARD_ONLY = "forward-only"


@dataclass(frozen=True)
class EntranceSample:
    """One draw of the stationary entrance at speed v.

    y is the log-overshoot of the anchor above ln v, tau_v the physical time
    the window spent below speed v within the stored backward depth (with
    tau_tail_bound bounding the truncated remainder), and forward the bounce
    skeleton restarted at the anchor speed v * exp(y). Forward-only samples
    carry tau_v = 0 and approximate = True.
    """

    v: float
    y: float
    tau_v: float
    tau_tail_bound: float
    forward: skeleton.BounceSkeleton
    approximate: bool = False

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("v must be positive")
        if not self.y > 0:
            raise ValueError("log-overshoot must be positive")
        if self.approximate:
            if self.tau_v != 0.0:
                raise ValueError("forward-only samples carry no age")
        elif not self.tau_v > 0:
            raise ValueError("age must be positive")
        if not self.tau_tail_bound >= 0:
            raise ValueError("tail bound must be nonnegative")
        if not math.isclose(self.forward.start_velocity, self.v * math.exp(self.y),
                            rel_tol=1e-9):
            raise ValueError("forward skeleton must start at v * exp(y)")


def _entrance_from_window(w: StationaryWindow, v: float) -> EntranceSample:
    k = w.back_depth
    y = float(w.s[k])
    a0, tail = alpha(w, 0.0)
    norm = w.s[k:] - w.s[k]
    fwd = skeleton.BounceSkeleton(
        elasticity=w.elasticity,
        start_velocity=v * math.exp(y),
        norm_log_velocities=norm,
        log_durations=np.log(w.durations[k:-1]),
    )
    return EntranceSample(v=v, y=y, tau_v=v * v * a0, tau_tail_bound=v * v * tail,
                          forward=fwd)


def sample_entrance_batch(rng, e: Elasticity, v: float, count: int,
                          mode: Mode = Mode.BACKWARD, back_depth: int | None = None,
                          fwd_length: int = 64, resources=None) -> list[EntranceSample]:
    """count entrance draws at speed v.

    Backward mode builds stationary windows and reads them at scale v: the
    stored walk and normalized durations are invariant under shifts of the
    velocity scale, so the window anchored at its level crossing is the
    entrance at any threshold, with the physical age rescaled by v ** 2.
    Re-anchoring a window inside its own backward side would instead tilt
    the law (the backward entries are conditioned to stay below the build
    level), so the threshold is never moved after the build. Forward-only
    mode draws the log-overshoot from the stationary overshoot law and
    simulates a fresh forward skeleton; it carries no age.
    """
    if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
        raise ValueError("v must be a positive finite speed")
    if count < 1:
        raise ValueError("count must be at least 1")
    if e.regime is Regime.SUBCRITICAL:
        raise ValueError("no stationary entrance law in the subcritical regime")
    crit = e.regime is Regime.CRITICAL
    if resources is None:
        resources = (prepare_critical_resources(rng, e) if crit
                     else prepare_supercritical_resources(rng, e))
    if back_depth is None:
        back_depth = 192 if crit else 64
    v = float(v)
    if mode is Mode.FORWARD_ONLY:
        ys = _positive_overshoots(rng, resources.m, count)
        out = []
        for y in ys:
            sk = skeleton.simulate_skeleton(rng, e, v * math.exp(y), fwd_length + 1)
            out.append(EntranceSample(v=v, y=float(y), tau_v=0.0, tau_tail_bound=0.0,
                                      forward=sk, approximate=True))
        return out
    build = build_windows_critical if crit else build_windows_supercritical
    return [_entrance_from_window(w, v)
            for w in build(rng, e, back_depth, fwd_length, count,
                           resources=resources)]


def sample_entrance(rng, e: Elasticity, v: float, mode: Mode = Mode.BACKWARD,
                    back_depth: int | None = None, fwd_length: int = 64,
                    resources=None) -> EntranceSample:
    return sample_entrance_batch(rng, e, v, 1, mode=mode, back_depth=back_depth,
                                 fwd_length=fwd_length, resources=resources)[0]
