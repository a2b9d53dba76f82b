"""Random-walk ladder machinery for an arbitrary step law: ladder processes,
stationary overshoot law, renewal function, conditioned walks (h-transform
ensembles and rejection), the stationary undershoot/overshoot joint law, and
the ladder duality diagnostic.

Everything is parameterized by StepLaw, instantiated in practice with the
log-velocity step of the reflected Langevin process but exercised in tests
with Gaussian and point-mass stubs as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from relp import archlaw
from relp.archlaw import Elasticity

WALK_CHUNK = 256          # steps simulated per vector block
LADDER_CAP = 10**6        # per-record step budget before restart/censor
DEFAULT_RESAMPLE_EVERY = 8


class BudgetExceeded(RuntimeError):
    """Simulation budget ran out; carries the partial sample in .partial."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class DegenerateEnsemble(RuntimeError):
    """Importance weights collapsed; carries partial output in .partial."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class TruncationError(RuntimeError):
    """A truncation box failed to capture the required probability mass."""


# ---------- step laws ----------

@dataclass(frozen=True)
class StepLaw:
    """Real-valued random-walk step distribution.

    density may be None for laws without one (point-mass stub). sampler takes
    (rng, size) and must be a pure function of the stream.
    """

    density: Callable | None
    cdf: Callable
    sampler: Callable
    mean: float
    variance: float


def step_law_from_elasticity(e: Elasticity) -> StepLaw:
    """The log-velocity walk step law of the reflected process at elasticity c."""
    return StepLaw(
        density=lambda w: archlaw.step_density(w, e),
        cdf=lambda w: archlaw.step_cdf(w, e),
        sampler=lambda rng, size: archlaw.sample_step(rng, e, size=size),
        mean=e.mu,
        variance=archlaw.STEP_VARIANCE,
    )


def gaussian_step_law(mean: float, sd: float) -> StepLaw:
    frozen = sps.norm(loc=mean, scale=sd)
    return StepLaw(
        density=frozen.pdf,
        cdf=frozen.cdf,
        sampler=lambda rng, size: rng.normal(mean, sd, size=size),
        mean=float(mean),
        variance=float(sd) ** 2,
    )


def point_mass_step_law(a: float) -> StepLaw:
    """Deterministic step of size a (test stub; has no density)."""
    return StepLaw(
        density=None,
        cdf=lambda w: (np.asarray(w, dtype=float) >= a).astype(float),
        sampler=lambda rng, size: np.full(size, float(a)),
        mean=float(a),
        variance=0.0,
    )


# ---------- ladder processes ----------

@dataclass(frozen=True)
class LadderSample:
    """Strict ladder heights with their epochs; heights[0] = 0 at epoch 0."""

    heights: np.ndarray
    epochs: np.ndarray


def _ladder(rng, law: StepLaw, k: int, sign: float, max_steps: int) -> LadderSample:
    heights = [0.0]
    epochs = [0]
    s = 0.0
    best = 0.0
    n = 0
    while len(heights) < k + 1:
        if n >= max_steps:
            partial = LadderSample(np.array(heights), np.array(epochs, dtype=np.int64))
            raise BudgetExceeded(
                f"{n} steps produced only {len(heights) - 1} of {k} ladder points",
                partial=partial,
            )
        block = min(WALK_CHUNK, max_steps - n)
        path = s + np.cumsum(sign * law.sampler(rng, block))
        # prior record level must carry the best across chunk boundaries
        prior = np.maximum.accumulate(np.concatenate(([best], path[:-1])))
        rec = path > prior
        for i in np.flatnonzero(rec):
            heights.append(sign * path[i])
            epochs.append(n + i + 1)
            if len(heights) == k + 1:
                break
        s = path[-1]
        best = max(best, float(path.max()))
        n += block
    return LadderSample(np.array(heights[: k + 1]), np.array(epochs[: k + 1], dtype=np.int64))


def ascending_ladder(rng, law: StepLaw, k: int, max_steps: int = 10**7) -> LadderSample:
    """First k strict ascending ladder points of the walk from 0.

    Raises BudgetExceeded (carrying the partial sample) if max_steps total walk
    steps do not produce k records, which is likely when the mean is negative.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    return _ladder(rng, law, k, +1.0, max_steps)


def descending_ladder(rng, law: StepLaw, k: int, max_steps: int = 10**7) -> LadderSample:
    """First k strict descending ladder points (heights decreasing)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    out = _ladder(rng, law, k, -1.0, max_steps)
    return out


def first_ladder_heights(rng, law: StepLaw, n: int, cap: int = LADDER_CAP):
    """n i.i.d. first strict ascending ladder heights, vectorized over lanes.

    Lanes that have not crossed 0 after cap steps restart from scratch (the
    restart count is returned; the induced bias is a documented truncation).
    Returns (heights, n_restarts).
    """
    out = np.empty(n)
    filled = 0
    restarts = 0
    while filled < n:
        lanes = n - filled
        s = np.zeros(lanes)
        done = np.zeros(lanes, dtype=bool)
        vals = np.empty(lanes)
        steps_used = 0
        while steps_used < cap and not done.all():
            live = ~done
            block = law.sampler(rng, (int(live.sum()), WALK_CHUNK))
            path = s[live, None] + np.cumsum(block, axis=1)
            hit = (path > 0).any(axis=1)
            first = np.argmax(path > 0, axis=1)
            idx = np.flatnonzero(live)
            vals[idx[hit]] = path[hit, first[hit]]
            done[idx[hit]] = True
            s[idx[~hit]] = path[~hit, -1]
            steps_used += WALK_CHUNK
        k = int(done.sum())
        out[filled:filled + k] = vals[done]
        filled += k
        restarts += int((~done).sum())
    return out, restarts


def estimate_mu_H(rng, law: StepLaw, n: int, cap: int = LADDER_CAP):
    """Mean first ascending ladder height with its standard error."""
    if n < 100:
        raise ValueError("n must be at least 100")
    h1, _ = first_ladder_heights(rng, law, n, cap=cap)
    return float(h1.mean()), float(h1.std(ddof=1) / math.sqrt(n))


# ---------- stationary overshoot law ----------

@dataclass
class OvershootLaw:
    """Stationary overshoot law: density (1/mu_H) P(H1 > y) dy on [0, inf).

    Sampling is U * (size-biased pick from the ladder-height pool), which has
    exactly that density with the pool's empirical H1 law in place of the true
    one.
    """

    mu_H: float
    mu_H_se: float
    pool: np.ndarray
    n_restarts: int = 0
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.pool.size == 0:
            raise ValueError("ladder-height pool is empty")
        c = np.cumsum(self.pool)
        self._cum = c / c[-1]

    def tail(self, y):
        """(estimate, se) of P(H1 > y) from the pool."""
        y = np.asarray(y, dtype=float)
        p = np.mean(self.pool[None, ...] > y[..., None], axis=-1)
        se = np.sqrt(np.maximum(p * (1 - p), 0.0) / self.pool.size)
        return p, se

    def sample(self, rng, size=None):
        idx = np.searchsorted(self._cum, rng.random(size))
        return rng.random(size) * self.pool[idx]


def build_overshoot_law(rng, law: StepLaw, pool_size: int = 2 * 10**5,
                        cap: int = LADDER_CAP) -> OvershootLaw:
    pool, restarts = first_ladder_heights(rng, law, pool_size, cap=cap)
    mu = float(pool.mean())
    se = float(pool.std(ddof=1) / math.sqrt(pool_size))
    return OvershootLaw(mu_H=mu, mu_H_se=se, pool=pool, n_restarts=restarts)


# ---------- renewal function ----------

@dataclass
class RenewalFunction:
    """Monte Carlo renewal function of the descending ladder process.

    values[j] estimates the expected number of strict descending ladder points
    at or above -grid[j] (the point at 0 included), so values[0] = 1 exactly.
    Evaluation interpolates linearly inside the grid and continues the last
    segment's slope beyond it (the function is asymptotically linear).
    """

    grid: np.ndarray
    values: np.ndarray
    se: np.ndarray
    n_paths: int
    n_censored: int = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid, self.values)
        slope = (self.values[-1] - self.values[-2]) / (self.grid[-1] - self.grid[-2])
        beyond = x > self.grid[-1]
        out = np.where(beyond, self.values[-1] + slope * (x - self.grid[-1]), out)
        out = np.where(x < 0.0, 0.0, out)
        return out if out.ndim else float(out)

    def clamped(self, x):
        """(values, n_beyond): top-knot clamp beyond the grid, 0 below it."""
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid, self.values)
        out = np.where(x < 0.0, 0.0, out)
        n_beyond = int(np.count_nonzero(x > self.grid[-1]))
        return (out if out.ndim else float(out)), n_beyond


def renewal_function_h(rng, law: StepLaw, grid, n_paths: int = 2 * 10**4,
                       cap: int = LADDER_CAP) -> RenewalFunction:
    """Estimate the renewal function by descending-ladder record counting.

    Each path walks from 0 collecting strict descending records until it falls
    below -grid[-1] (records deeper than that cannot count at any knot) or the
    step cap hits (counted in n_censored). The count of records at or above
    -x, averaged over paths, estimates the value at x.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be increasing and start at 0")
    if grid.size < 2:
        raise ValueError("grid needs at least two knots")
    x_max = grid[-1]
    marks = np.zeros((n_paths, grid.size), dtype=np.int64)
    s = np.zeros(n_paths)
    low = np.zeros(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    steps = 0
    censored = 0
    while alive.any():
        if steps >= cap:
            censored = int(alive.sum())
            break
        live = np.flatnonzero(alive)
        block = law.sampler(rng, (live.size, WALK_CHUNK))
        path = s[live, None] + np.cumsum(block, axis=1)
        prior = np.minimum.accumulate(
            np.concatenate([low[live, None], path[:, :-1]], axis=1), axis=1)
        rec = path < prior
        lane_idx, step_idx = np.nonzero(rec)
        depths = -path[lane_idx, step_idx]
        keep = depths <= x_max
        # a record at depth d counts at every knot x >= d: mark the first such
        # knot here, prefix-sum over knots at the end
        knot = np.searchsorted(grid, depths[keep], side="left")
        np.add.at(marks, (live[lane_idx[keep]], knot), 1)
        s[live] = path[:, -1]
        low[live] = np.minimum(low[live], path.min(axis=1))
        alive[live] = low[live] >= -x_max
        steps += WALK_CHUNK
    counts = 1 + np.cumsum(marks, axis=1)  # the +1 is the record at 0 itself
    values = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / math.sqrt(n_paths)
    values[0] = 1.0  # exact: only the record at 0 is >= 0
    se[0] = 0.0
    return RenewalFunction(grid=grid, values=values, se=se, n_paths=n_paths,
                           n_censored=censored)


@dataclass(frozen=True)
class HbarEstimate:
    value: float
    se: float
    n_truncated: int


def hbar(rng, law: StepLaw, h: RenewalFunction, x: float, n: int = 10**5) -> HbarEstimate:
    """Monte Carlo of E[h(x + W); x + W >= 0], the one-step smoothing of h.

    Steps landing beyond h's grid contribute the top-knot value and are counted
    in n_truncated.
    """
    w = law.sampler(rng, n)
    s = x + w
    vals, n_beyond = h.clamped(s)
    vals = np.where(s >= 0.0, vals, 0.0)
    return HbarEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)),
                        n_beyond)


# ---------- conditioned walks: weighted ensembles ----------

@dataclass
class EnsembleResult:
    """Terminal state of a weighted ensemble of conditioned walks.

    Shapes are (n_ensembles, n_particles). weights are self-normalized within
    each row (rows with all walks dead raise instead). running_min covers the
    constrained index range only (from 1 when from_step_one, else from 0).
    paths is (n_ensembles, n_particles, n_steps + 1) when recorded, else None.
    """

    final_s: np.ndarray
    running_min: np.ndarray
    weights: np.ndarray
    ess: np.ndarray
    n_steps: int
    paths: np.ndarray | None = None

    def estimate(self, values):
        """Self-normalized weighted mean of per-particle values, per ensemble."""
        values = np.asarray(values, dtype=float)
        return (self.weights * values).sum(axis=1)


def _systematic(rng, w):
    """Systematic resampling indices for one weight row; w need not be normalized."""
    c = np.cumsum(w)
    total = c[-1]
    p = w.size
    u = (rng.random() + np.arange(p)) / p
    return np.searchsorted(c, u * total, side="right").clip(0, p - 1)


class _Engine:
    """Sequential importance resampling for walks conditioned to stay >= a.

    Weight after n steps is h(S_n - a) on the event that the walk stayed at or
    above a over the constrained range, with incremental ratios
    h(S_t - a) / h(S_{t-1} - a) so resampling composes correctly. Step draws
    come from rng_steps only and in a fixed order (one (rows, particles) block
    per step), so a second pass with a clone of rng_steps can replay them.
    """

    def __init__(self, law, h, x, a, n_particles, resample_every, from_step_one):
        self.law = law
        self.h = h
        self.a = float(a)
        self.resample_every = int(resample_every)
        self.from_step_one = bool(from_step_one)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self.rows = x.size
        self.s = np.repeat(x[:, None], n_particles, axis=1)
        self.alive = np.ones_like(self.s, dtype=bool)
        if from_step_one:
            self.runmin = np.full_like(self.s, np.inf)
        else:
            if np.any(x < a):
                raise ValueError("start below the barrier needs from_step_one")
            self.runmin = self.s.copy()
        # per-particle constants cancel under self-normalization, so the
        # initial base is 1; it becomes h(S - a) again after each resample
        self.base = np.ones_like(self.s)
        self.parents = []
        self.resample_steps = []
        self.min_ess = np.full(self.rows, float(n_particles))

    def _h_at(self, s):
        return np.asarray(self.h(s - self.a), dtype=float)

    def current_weights(self):
        w = np.where(self.alive, self._h_at(self.s), 0.0)
        with np.errstate(invalid="ignore"):
            return w / self.base

    def step(self, rng_steps):
        inc = self.law.sampler(rng_steps, self.s.shape)
        self.s = self.s + inc
        self.alive &= self.s >= self.a
        self.runmin = np.minimum(self.runmin, self.s)

    def maybe_resample(self, rng_aux, t):
        if self.resample_every <= 0 or t % self.resample_every != 0:
            return
        w = self.current_weights()
        tot = w.sum(axis=1)
        if np.any(tot == 0.0):
            raise DegenerateEnsemble(f"all walks dead in some ensemble at step {t}")
        ess = tot**2 / (w**2).sum(axis=1)
        self.min_ess = np.minimum(self.min_ess, ess)
        idx = np.empty_like(w, dtype=np.int64)
        for b in range(self.rows):
            idx[b] = _systematic(rng_aux, w[b])
        rows = np.arange(self.rows)[:, None]
        self.s = self.s[rows, idx]
        self.runmin = self.runmin[rows, idx]
        self.alive = self.alive[rows, idx]
        self.base = self._h_at(self.s)
        self.parents.append(idx)
        self.resample_steps.append(t)


def conditioned_walk_ensemble(rng, law: StepLaw, h: RenewalFunction, x, a: float,
                              n_steps: int, n_particles: int,
                              resample_every: int = DEFAULT_RESAMPLE_EVERY,
                              from_step_one: bool | None = None,
                              record_paths: bool = False) -> EnsembleResult:
    """Weighted ensemble targeting the walk from x conditioned to stay >= a.

    x may be a scalar or a vector of per-ensemble starts. from_step_one
    defaults to starts below the barrier (then the constraint covers steps
    1..n only, which is the meaningful choice for x < a). Raises
    DegenerateEnsemble when the effective sample size of the final weights
    drops below 1% of n_particles.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if from_step_one is None:
        from_step_one = bool(np.any(x < a))
    ss = rng.bit_generator.seed_seq.spawn(2)
    rng_steps = np.random.Generator(np.random.PCG64(ss[0]))
    rng_aux = np.random.Generator(np.random.PCG64(ss[1]))
    eng = _Engine(law, h, x, a, n_particles, resample_every, from_step_one)
    paths = None
    if record_paths:
        paths = np.empty((eng.rows, n_particles, n_steps + 1))
        paths[..., 0] = eng.s
    for t in range(1, n_steps + 1):
        eng.step(rng_steps)
        if record_paths:
            paths[..., t] = eng.s
        eng.maybe_resample(rng_aux, t)
        if record_paths and eng.parents and eng.resample_steps[-1] == t:
            idx = eng.parents[-1]
            rows = np.arange(eng.rows)[:, None]
            paths = paths[rows, idx, :]
    w = eng.current_weights()
    tot = w.sum(axis=1)
    if np.any(tot == 0.0):
        raise DegenerateEnsemble("all walks dead at the horizon")
    ess = tot**2 / (w**2).sum(axis=1)
    weights = w / tot[:, None]
    res = EnsembleResult(final_s=eng.s, running_min=eng.runmin, weights=weights,
                         ess=ess, n_steps=n_steps, paths=paths)
    if np.any(ess < 0.01 * n_particles):
        raise DegenerateEnsemble(
            f"effective sample size {ess.min():.1f} below 1% of {n_particles}",
            partial=res,
        )
    return res


def conditioned_paths_via_ancestry(rng, law: StepLaw, h: RenewalFunction, x, a: float,
                                   n_steps: int, n_particles: int,
                                   resample_every: int = DEFAULT_RESAMPLE_EVERY,
                                   from_step_one: bool | None = None):
    """One conditioned path per ensemble row, drawn proportionally to weight.

    Memory-light two-pass scheme: run the ensemble storing only resampling
    ancestry, select a terminal particle per row, then replay the identical
    step stream and accumulate just the selected lineage. Returns
    (paths, ess) with paths of shape (rows, n_steps + 1).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if from_step_one is None:
        from_step_one = bool(np.any(x < a))
    ss = rng.bit_generator.seed_seq.spawn(2)
    rng_aux = np.random.Generator(np.random.PCG64(ss[1]))

    eng = _Engine(law, h, x, a, n_particles, resample_every, from_step_one)
    rng_steps = np.random.Generator(np.random.PCG64(ss[0]))
    for t in range(1, n_steps + 1):
        eng.step(rng_steps)
        eng.maybe_resample(rng_aux, t)
    w = eng.current_weights()
    tot = w.sum(axis=1)
    if np.any(tot == 0.0):
        raise DegenerateEnsemble("all walks dead at the horizon")
    ess = tot**2 / (w**2).sum(axis=1)
    if np.any(ess < 0.01 * n_particles):
        raise DegenerateEnsemble(f"effective sample size {ess.min():.1f} collapsed")

    rows = eng.rows
    sel = np.empty(rows, dtype=np.int64)
    for b in range(rows):
        p = w[b] / tot[b]
        sel[b] = rng_aux.choice(n_particles, p=p)

    # slot occupied by the selected lineage during each step interval
    slot = np.empty((rows, n_steps + 1), dtype=np.int64)
    cur = sel.copy()
    prev = n_steps
    for idx, t in zip(reversed(eng.parents), reversed(eng.resample_steps)):
        slot[:, t + 1:prev + 1] = cur[:, None]
        cur = idx[np.arange(rows), cur]
        prev = t
    slot[:, :prev + 1] = cur[:, None]

    # replay the identical step draws, keeping only the lineage increments
    rng_steps = np.random.Generator(np.random.PCG64(ss[0]))
    paths = np.empty((rows, n_steps + 1))
    paths[:, 0] = x
    r = np.arange(rows)
    for t in range(1, n_steps + 1):
        inc = law.sampler(rng_steps, (rows, n_particles))
        paths[:, t] = paths[:, t - 1] + inc[r, slot[:, t]]
    return paths, ess


# ---------- conditioned walks: rejection ----------

REJECTED = object()  # sentinel returned when a proposal fails the condition


def conditioned_walk_rejection(rng, law: StepLaw, x: float, horizon: int,
                               escape_level: float):
    """One proposal for the walk from x staying positive up to the horizon.

    Accepts (returns the path, length horizon + 1) only if every S_1..S_n is
    positive and S_n >= escape_level, so that returning to 0 afterwards has
    negligible probability under a positive-mean law. Returns REJECTED on
    failure. Only valid for laws with positive mean.
    """
    if not law.mean > 0:
        raise ValueError("rejection conditioning needs a positive-mean step law")
    steps = law.sampler(rng, horizon)
    path = np.concatenate(([x], x + np.cumsum(steps)))
    if path[1:].min() > 0 and path[-1] >= escape_level:
        return path
    return REJECTED


def rejection_walks(rng, law: StepLaw, x, horizon: int, escape_level: float,
                    max_rounds: int = 10**4):
    """Vector form: one accepted conditioned path per entry of x.

    Proposes in rounds over the unfilled lanes; raises BudgetExceeded if the
    acceptance probability is too small to fill within max_rounds rounds.
    Returns (paths, n_proposed) with paths of shape (len(x), horizon + 1).
    """
    if not law.mean > 0:
        raise ValueError("rejection conditioning needs a positive-mean step law")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    out = np.empty((n, horizon + 1))
    done = np.zeros(n, dtype=bool)
    proposed = 0
    for _ in range(max_rounds):
        todo = np.flatnonzero(~done)
        if todo.size == 0:
            return out, proposed
        steps = law.sampler(rng, (todo.size, horizon))
        path = np.concatenate([x[todo, None], x[todo, None] + np.cumsum(steps, axis=1)],
                              axis=1)
        proposed += todo.size
        ok = (path[:, 1:].min(axis=1) > 0) & (path[:, -1] >= escape_level)
        out[todo[ok]] = path[ok]
        done[todo[ok]] = True
    raise BudgetExceeded(f"{int(done.sum())} of {n} lanes accepted after {max_rounds} rounds")


def ruin_probability_upper(rng, law: StepLaw, level: float, n_paths: int = 10**5,
                           horizon: int | None = None) -> float:
    """99% upper confidence bound on P(walk from level ever reaches <= 0).

    Auxiliary Monte Carlo supporting the escape-level choice of the rejection
    conditioning: simulates finite-horizon ruin and inflates the count by a
    Poisson upper bound. The horizon default makes the post-horizon remainder
    negligible for the laws used here (drift well above 0).
    """
    if not law.mean > 0:
        raise ValueError("needs a positive-mean step law")
    if horizon is None:
        horizon = int(10 * level / law.mean) + 400
    ruined = 0
    for start in range(0, n_paths, 4096):
        m = min(4096, n_paths - start)
        steps = law.sampler(rng, (m, horizon))
        path = level + np.cumsum(steps, axis=1)
        ruined += int((path.min(axis=1) <= 0).sum())
    upper = sps.gamma.ppf(0.99, ruined + 1) / n_paths
    return float(upper)


# ---------- stationary undershoot/overshoot joint law ----------

@dataclass
class NuSampler:
    """Joint law of (undershoot x, overshoot y) at a stationary ascending pass.

    Density (1/mu_H) p0(x + y) h(x) on x, y >= 0, truncated to x <= z_max
    where z = x + y. Sampling draws z proportional to z * p0(z) from an
    inverse-table on (0, z_max], splits x = U * z, and thins by h(x) / h_max.
    total_mass is the quadrature estimate of the untruncated mass (should be
    1 up to the Monte Carlo error of h and mu_H).
    """

    law: StepLaw
    h: RenewalFunction
    mu_H: float
    z_max: float
    total_mass: float
    box_mass: float
    _z_grid: np.ndarray = field(repr=False, default=None)
    _z_cdf: np.ndarray = field(repr=False, default=None)
    _h_max: float = 0.0

    def density(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = self.law.density(x + y) * self.h(x) / self.mu_H
        out = np.where((x >= 0) & (y >= 0), out, 0.0)
        return out if out.ndim else float(out)

    def marginal_undershoot(self, x):
        """Density of x alone: (1/mu_H) h(x) P(W >= x)."""
        x = np.asarray(x, dtype=float)
        out = self.h(x) * (1.0 - self.law.cdf(x)) / self.mu_H
        out = np.where(x >= 0, out, 0.0)
        return out if out.ndim else float(out)

    def sample(self, rng, size):
        xs = np.empty(size)
        ys = np.empty(size)
        filled = 0
        while filled < size:
            m = max(2 * (size - filled), 256)
            z = np.interp(rng.random(m), self._z_cdf, self._z_grid)
            x = rng.random(m) * z
            acc = rng.random(m) * self._h_max < self.h(x)
            k = min(int(acc.sum()), size - filled)
            take = np.flatnonzero(acc)[:k]
            xs[filled:filled + k] = x[take]
            ys[filled:filled + k] = z[take] - x[take]
            filled += k
        return xs, ys


def build_nu_sampler(law: StepLaw, h: RenewalFunction, mu_H: float,
                     z_max: float | None = None, min_box_mass: float = 0.999,
                     n_knots: int = 4001) -> NuSampler:
    """Quadrature tables for the stationary pass law on the box z <= z_max.

    z_max defaults to the renewal grid's top knot (proposals never need h
    beyond it). Raises TruncationError if the box captures less than
    min_box_mass of the estimated total mass.
    """
    if law.density is None:
        raise ValueError("the pass law needs a step density")
    if z_max is None:
        z_max = float(h.grid[-1])
    if z_max > h.grid[-1]:
        raise ValueError("z_max beyond the renewal grid")
    z = np.linspace(0.0, z_max, n_knots)
    # cumulative of the x-integrated density: int_0^z p0(t) H(t) dt / mu_H
    # with H(t) = int_0^t h; the proposal needs the weight z * p0(z) instead
    hz = np.asarray(h(z), dtype=float)
    big_h = np.concatenate(([0.0], np.cumsum((hz[1:] + hz[:-1]) / 2) * np.diff(z)))
    pz = np.asarray(law.density(z), dtype=float)
    mass_cum = np.concatenate(([0.0], np.cumsum((pz[1:] * big_h[1:] + pz[:-1] * big_h[:-1]) / 2)
                               * np.diff(z))) / mu_H
    box_mass = float(mass_cum[-1])
    # continue beyond the box with the linearly extended h to estimate the rest
    z_ext = np.linspace(z_max, z_max + 80.0, 2001)
    hz_ext = np.asarray(h(z_ext), dtype=float)
    big_h_ext = big_h[-1] + np.concatenate(
        ([0.0], np.cumsum((hz_ext[1:] + hz_ext[:-1]) / 2) * np.diff(z_ext)))
    pz_ext = np.asarray(law.density(z_ext), dtype=float)
    tail_mass = float(np.trapezoid(pz_ext * big_h_ext, z_ext)) / mu_H
    total = box_mass + tail_mass
    if box_mass < min_box_mass * total:
        raise TruncationError(
            f"box z <= {z_max:g} holds {box_mass / total:.4%} of the mass, "
            f"needs {min_box_mass:.1%}")
    w = z * pz
    cdf = np.concatenate(([0.0], np.cumsum((w[1:] + w[:-1]) / 2) * np.diff(z)))
    cdf /= cdf[-1]
    ns = NuSampler(law=law, h=h, mu_H=mu_H, z_max=float(z_max),
                   total_mass=total, box_mass=box_mass)
    ns._z_grid = z
    ns._z_cdf = cdf
    ns._h_max = float(hz.max())
    return ns


# ---------- ladder duality diagnostic ----------

@dataclass(frozen=True)
class DualityReport:
    """Comparison of the first ascending ladder height with the all-time
    minimum of the walk conditioned to stay nonnegative (step index >= 1 on
    both sides). skipped is set for laws where the conditioned side is
    degenerate (no descents, e.g. a positive point mass)."""

    ks_stat: float
    ks_crit_99: float
    n_direct: int
    ess_conditioned: float
    stabilized_fraction: float
    skipped: bool = False
    reason: str = ""


DUALITY_PARTICLE_FACTOR = 12


def duality_check(rng, law: StepLaw, h: RenewalFunction, n: int = 10**4,
                  horizon: int = 2048, cap: int = LADDER_CAP) -> DualityReport:
    """Weighted two-sample comparison behind the ladder duality identity.

    Side one: n direct first ascending ladder heights. Side two: the running
    minimum over steps 1..horizon of walks from 0 conditioned (by h-weights)
    to stay nonnegative. Resampling duplicates early-determined minima, so the
    ensemble runs DUALITY_PARTICLE_FACTOR * n particles and ess_conditioned
    reports the effective size of the distinct minima (the honest sample size
    for the comparison); ks_crit_99 combines it with n. stabilized_fraction is
    the weighted share of walks whose minimum last moved in the first three
    quarters of the horizon; it should be close to 1 when the horizon is long
    enough.
    """
    from relp import stats as rstats

    if law.variance == 0.0:
        return DualityReport(ks_stat=float("nan"), ks_crit_99=float("nan"), n_direct=0,
                             ess_conditioned=0.0, stabilized_fraction=float("nan"),
                             skipped=True,
                             reason="conditioned side degenerate for a point mass")
    direct, _ = first_ladder_heights(rng, law, n, cap=cap)

    ss = rng.bit_generator.seed_seq.spawn(2)
    rng_steps = np.random.Generator(np.random.PCG64(ss[0]))
    rng_aux = np.random.Generator(np.random.PCG64(ss[1]))
    n_particles = DUALITY_PARTICLE_FACTOR * n
    eng = _Engine(law, h, 0.0, 0.0, n_particles, DEFAULT_RESAMPLE_EVERY, True)
    last_move = np.zeros_like(eng.s, dtype=np.int64)
    for t in range(1, horizon + 1):
        prev = eng.runmin.copy()
        eng.step(rng_steps)
        moved = eng.runmin < prev
        last_move = np.where(moved, t, last_move)
        before = len(eng.parents)
        eng.maybe_resample(rng_aux, t)
        if len(eng.parents) > before:
            idx = eng.parents[-1]
            last_move = last_move[np.arange(eng.rows)[:, None], idx]
    w = eng.current_weights()[0]
    tot = w.sum()
    if tot == 0.0:
        raise DegenerateEnsemble("conditioned side died out")
    wn = w / tot
    stab = float(wn[last_move[0] <= (3 * horizon) // 4].sum())
    mins = eng.runmin[0]
    uniq, inv = np.unique(mins, return_inverse=True)
    agg = np.bincount(inv, weights=wn)
    ess = float(1.0 / np.sum(agg**2))
    a = rstats.EmpiricalSample(direct)
    b = rstats.EmpiricalSample(mins, weights=wn)
    ks, _ = rstats.ks_two_sample(a, b)
    n_comb = n * ess / (n + ess)
    crit = rstats.ks_critical(n_comb, 0.01)
    return DualityReport(ks_stat=float(ks), ks_crit_99=float(crit), n_direct=n,
                         ess_conditioned=ess, stabilized_fraction=stab)


# ---------- free-function conveniences ----------

def sample_overshoot_m(rng, m: OvershootLaw, size=None):
    """Draw from the stationary overshoot law m as U times a size-biased
    ladder-height pick from the pool (density (1/mu_H) P(H1 > y))."""
    return m.sample(rng, size)


def crossing_overshoots(rng, law: StepLaw, start: float, n: int,
                        cap: int = 2 * 10**6):
    """Overshoots above 0 of n walks launched from start < 0.

    Lanes that have not crossed within cap steps are dropped (their count is
    returned, quantifying the truncation; the induced bias is of the order of
    the dropped fraction). Returns (overshoots, n_censored).
    """
    if start >= 0:
        raise ValueError("start must be below 0")
    s = np.full(n, float(start))
    done = np.zeros(n, dtype=bool)
    vals = np.full(n, np.nan)
    steps_used = 0
    while steps_used < cap and not done.all():
        live = ~done
        block = law.sampler(rng, (int(live.sum()), WALK_CHUNK))
        path = s[live, None] + np.cumsum(block, axis=1)
        hit = (path > 0).any(axis=1)
        first = np.argmax(path > 0, axis=1)
        idx = np.flatnonzero(live)
        vals[idx[hit]] = path[hit, first[hit]]
        done[idx[hit]] = True
        s[idx[~hit]] = path[~hit, -1]
        steps_used += WALK_CHUNK
    return vals[done], int(n - done.sum())


def nu_density(x, y, law: StepLaw, h: RenewalFunction, mu_H: float):
    """Stationary pass density (1/mu_H) p0(x + y) h(x) on the quadrant."""
    if law.density is None:
        raise ValueError("the pass law needs a step density")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = law.density(x + y) * h(x) / mu_H
    out = np.where((x >= 0) & (y >= 0), out, 0.0)
    return out if out.ndim else float(out)


def walk_min_above(rng, law: StepLaw, y: float, n: int, horizon: int = 96):
    """Fraction of n plain walks from 0 whose minimum over steps 1..horizon
    stays above y, with its binomial standard error.

    For positive-mean laws and a horizon with drift * horizon well above y
    this estimates the all-time probability; the caller owns that sizing.
    """
    count = 0
    for lo in range(0, n, 8192):
        m = min(8192, n - lo)
        steps = law.sampler(rng, (m, horizon))
        path = np.cumsum(steps, axis=1)
        count += int((path.min(axis=1) > y).sum())
    p = count / n
    return p, math.sqrt(max(p * (1 - p), 1e-12) / n)
