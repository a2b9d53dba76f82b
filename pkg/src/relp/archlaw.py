"""Closed-form densities, CDFs, constants, and exact samplers for one normalized
arch of the reflected Langevin process.

An arch is the excursion between consecutive bounces. Started at unit speed,
its duration and the log of the outgoing/incoming speed ratio form the i.i.d.
atom driving every other module. All formulas below were cross-checked against
30-digit adaptive quadrature; the incomplete-beta form of the step CDF and the
erf form of the inner integral are exact identities, not fits.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

log = logging.getLogger(__name__)

PI_OVER_SQRT3 = math.pi / math.sqrt(3.0)
CRITICAL_C = math.exp(-PI_OVER_SQRT3)        # elasticity separating the regimes
REGIME_RTOL = 1e-12                          # relative comparison window around CRITICAL_C
STEP_VARIANCE = 4.0 * math.pi**2 / 9.0       # exact variance of the step law

# Inverse-CDF table for the centered step law: knots uniform in logit(p) over
# (TAIL_P, 1-TAIL_P), closed-form exponential tail inversion beyond.
TABLE_KNOTS = 4096
TAIL_P = 1e-8

ENVELOPE_SAFETY = 1.05   # guard on the rejection envelope constant
_SQRT_2_3 = math.sqrt(2.0 / 3.0)


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


class EnvelopeError(RuntimeError):
    """Rejection envelope failed to dominate the target density."""


@dataclass(frozen=True)
class Elasticity:
    """Velocity restitution coefficient c with its derived drift and regime.

    The log-velocity walk has step mean mu = ln c + pi/sqrt(3); the sign of mu
    (equivalently c versus CRITICAL_C) fixes the regime. Use Elasticity.critical()
    to force the exact critical regime regardless of float rounding.
    """

    c: float
    _exact_critical: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            c = float(self.c)
        except (TypeError, ValueError):
            raise ValueError(f"elasticity must be a positive finite real, got {self.c!r}")
        if not (math.isfinite(c) and c > 0):
            raise ValueError(f"elasticity must be a positive finite real, got {self.c!r}")
        object.__setattr__(self, "c", c)

    @classmethod
    def critical(cls) -> "Elasticity":
        return cls(CRITICAL_C, _exact_critical=True)

    @property
    def log_c(self) -> float:
        return math.log(self.c)

    @property
    def mu(self) -> float:
        """Drift of the log-velocity walk, ln(c / CRITICAL_C)."""
        return self.log_c + PI_OVER_SQRT3

    @property
    def regime(self) -> Regime:
        if self._exact_critical or abs(self.c - CRITICAL_C) <= REGIME_RTOL * CRITICAL_C:
            return Regime.CRITICAL
        return Regime.SUBCRITICAL if self.c < CRITICAL_C else Regime.SUPERCRITICAL


@dataclass(frozen=True)
class ArchSample:
    """One normalized arch: unit-entry-speed duration and log of the speed step."""

    duration: float
    log_step: float


# ---------- step law (log-velocity walk increment) ----------

def _check_finite(x, name):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def step_density(w, e: Elasticity):
    """Density (3/2pi) e^{(5/2)t} / (1 + e^{3t}) at t = w - ln c.

    Vectorized in w. Exponentials are arranged so both tails underflow to 0
    instead of overflowing.
    """
    t = _check_finite(w, "w") - e.log_c
    tn = np.minimum(t, 0.0)
    tp = np.maximum(t, 0.0)
    out = np.where(
        t <= 0,
        np.exp(2.5 * tn) / (1.0 + np.exp(3.0 * tn)),
        np.exp(-0.5 * tp) / (1.0 + np.exp(-3.0 * tp)),
    )
    out = out * (3.0 / (2.0 * math.pi))
    return out if out.ndim else float(out)


def step_cdf(w, e: Elasticity):
    """Exact CDF: regularized incomplete beta I_x(5/6, 1/6) at x = logistic(3t).

    The upper half runs through the complementary parameter order so the
    result keeps absolute precision where expit(3t) would round to 1.
    """
    t = _check_finite(w, "w") - e.log_c
    t = np.asarray(t, dtype=float)
    lo = special.betainc(5.0 / 6.0, 1.0 / 6.0, special.expit(3.0 * np.minimum(t, 0.0)))
    hi = 1.0 - special.betainc(1.0 / 6.0, 5.0 / 6.0,
                               special.expit(-3.0 * np.maximum(t, 0.0)))
    out = np.where(t <= 0.0, lo, hi)
    return out if out.ndim else float(out)


def step_quantile(p, e: Elasticity):
    """Exact functional inverse of step_cdf on (0, 1).

    Inverts the incomplete beta on each half of (0, 1) through the symmetric
    parameter order, so both tails keep full relative precision.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("p must lie strictly inside (0, 1)")
    lower = p <= 0.5
    x = special.betaincinv(5.0 / 6.0, 1.0 / 6.0, np.where(lower, p, 0.5))
    q = special.betaincinv(1.0 / 6.0, 5.0 / 6.0, np.where(lower, 0.5, 1.0 - p))
    t = np.where(
        lower,
        (np.log(x) - np.log1p(-x)) / 3.0,
        (np.log1p(-q) - np.log(q)) / 3.0,
    )
    # betaincinv underflows deep in the tails; the exponential asymptotes of
    # the CDF give essentially exact starts there, and Newton steps on the CDF
    # secure |step_cdf(step_quantile(p)) - p| <= 1e-10 everywhere
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p < 1e-6, 0.4 * np.log(5.0 * np.pi * p / 3.0), t)
        t = np.where(p > 1.0 - 1e-6, -2.0 * np.log(np.pi * (1.0 - p) / 3.0), t)
    out = t + e.log_c
    for _ in range(3):
        err = step_cdf(out, e) - p
        out = out - err / np.maximum(step_density(out, e), 1e-300)
    return out if out.ndim else float(out)


class _StepTable:
    """Cached inverse-CDF table of the centered step law (c-free)."""

    def __init__(self):
        logit_lo = math.log(TAIL_P / (1.0 - TAIL_P))
        self.logits = np.linspace(logit_lo, -logit_lo, TABLE_KNOTS)
        self.t = step_quantile(special.expit(self.logits), Elasticity(1.0)) - Elasticity(1.0).log_c
        self.lo = self.logits[0]
        self.inv_step = 1.0 / (self.logits[1] - self.logits[0])

    def invert(self, u: np.ndarray) -> np.ndarray:
        t = np.empty_like(u)
        lo = u < TAIL_P
        hi = u > 1.0 - TAIL_P
        mid = ~(lo | hi)
        if np.any(mid):
            um = u[mid]
            pos = (np.log(um) - np.log1p(-um) - self.lo) * self.inv_step
            idx = np.clip(pos.astype(np.int64), 0, TABLE_KNOTS - 2)
            frac = pos - idx
            t[mid] = self.t[idx] * (1.0 - frac) + self.t[idx + 1] * frac
        # closed-form tail inversions against the asymptotic exponentials:
        # G(t) ~ (3/5pi) e^{5t/2} as t -> -inf, 1 - G(t) ~ (3/pi) e^{-t/2} as t -> +inf
        if np.any(lo):
            t[lo] = 0.4 * np.log(5.0 * math.pi * u[lo] / 3.0)
        if np.any(hi):
            t[hi] = 2.0 * np.log(3.0 / (math.pi * (1.0 - u[hi])))
        return t


_STEP_TABLE: _StepTable | None = None


def _step_table() -> _StepTable:
    global _STEP_TABLE
    if _STEP_TABLE is None:
        _STEP_TABLE = _StepTable()
    return _STEP_TABLE


def sample_step(rng: np.random.Generator, e: Elasticity, size=None):
    """Draw step-law variates by inverse CDF on the cached table.

    One uniform per draw. Table interpolation keeps the quantile within ~1e-5
    of exact in the bulk; the tails invert the asymptotic exponentials.
    """
    u = np.atleast_1d(rng.random(size))
    t = _step_table().invert(u)
    if size is None:
        return float(t[0]) + e.log_c
    return t + e.log_c


# ---------- joint arch law ----------

def _inner_integral(x):
    """I(x) = int_0^x e^{-3h/2} dh / sqrt(pi h), exactly sqrt(2/3) erf(sqrt(3x/2)).

    A 3-term series takes over below 1e-6, where the closed form loses nothing
    but a special-function call.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-6
    if np.any(small):
        xs = x[small]
        out[small] = 2.0 * np.sqrt(xs / math.pi) * (1.0 - xs / 2.0 + 9.0 * xs * xs / 40.0)
    big = ~small
    if np.any(big):
        out[big] = _SQRT_2_3 * special.erf(np.sqrt(1.5 * x[big]))
    return out


def joint_density(s, u, e: Elasticity):
    """Joint density of (duration, outgoing-speed ratio over c) for a unit-speed arch.

    f(s, u) = (3u / (pi sqrt(2) s^2)) exp(-2(u^2-u+1)/s) I(4u/s). Independent of c
    in these coordinates; c enters only through the u = e^{log_step}/c identification.
    """
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0) or np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise ValueError("s and u must be positive finite reals")
    # prefactor folded into the exponent: 1/s^2 alone would overflow at tiny s
    # long before the exponential pulls the product to 0
    expo = np.log(3.0 * u / (math.pi * math.sqrt(2.0))) - 2.0 * np.log(s) \
        - 2.0 * (u * u - u + 1.0) / s
    out = np.exp(expo) * _inner_integral(4.0 * u / s)
    return out if out.ndim else float(out)


def conditional_duration_density(s, u, v, e: Elasticity):
    """Density of an arch duration given entry speed u and outgoing speed c*v.

    p(s | u, v) = sqrt(2) (u^3 + v^3) / (s^2 sqrt(uv)) exp(-2(v^2-uv+u^2)/s) I(4uv/s).
    Integrates to 1 exactly; scale covariant (s ~ lambda^2 when u, v ~ lambda).
    """
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    for name, arr in (("s", s), ("u", u), ("v", v)):
        if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError(f"{name} must be positive and finite")
    expo = np.log(math.sqrt(2.0) * (u**3 + v**3) / np.sqrt(u * v)) \
        - 2.0 * np.log(s) - 2.0 * (v * v - u * v + u * u) / s
    out = np.exp(expo) * _inner_integral(4.0 * u * v / s)
    return out if out.ndim else float(out)


def sample_duration_given_velocities(rng: np.random.Generator, u, v, e: Elasticity,
                                     size=None, accept_stats: dict | None = None):
    """Rejection-sample arch durations given entry speed u and outgoing speed c*v.

    Proposal: inverse-gamma with shape 3/2 and scale b = 2(v^2 - uv + u^2),
    matching the s^{-5/2} e^{-b/s} envelope. The envelope constant in closed
    form is (u+v)/sqrt(u^2-uv+v^2) <= 2, so acceptance never drops below
    1/(2*ENVELOPE_SAFETY). Broadcasts over u and v. The accepted draw sequence
    is a pure function of the stream, and rescaling (u, v) by lambda maps the
    same stream to exactly lambda^2 times the draws.
    """
    scalar = size is None and np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u <= 0) or np.any(v <= 0) or np.any(~np.isfinite(u)) or np.any(~np.isfinite(v)):
        raise ValueError("u and v must be positive finite reals")
    shape = np.broadcast_shapes(u.shape, v.shape,
                                () if size is None else tuple(np.atleast_1d(size)))
    b = np.broadcast_to(2.0 * (v * v - u * v + u * u), shape)
    six_uv = np.broadcast_to(6.0 * u * v, shape)

    out = np.empty(shape)
    todo = np.ones(shape, dtype=bool)
    proposed = accepted = 0
    while np.any(todo):
        k = int(todo.sum())
        s = b[todo] / rng.gamma(1.5, 1.0, size=k)
        y = np.sqrt(six_uv[todo] / s)
        # density / (M * proposal) = (sqrt(pi)/2) erf(y)/y, provably <= 1
        ratio = 0.5 * math.sqrt(math.pi) * special.erf(y) / y
        if np.any(ratio > 1.0 + 1e-12):
            raise EnvelopeError(f"envelope violated: max ratio {ratio.max():.17g}")
        acc = rng.random(k) < ratio / ENVELOPE_SAFETY
        proposed += k
        accepted += int(acc.sum())
        idx = np.flatnonzero(todo)
        hit = idx[acc]
        out.flat[hit] = s[acc]
        todo.flat[hit] = False
    if accept_stats is not None:
        accept_stats["proposed"] = proposed
        accept_stats["accepted"] = accepted
    log.debug("duration rejection: %d/%d accepted (%.3f)", accepted, proposed,
              accepted / max(proposed, 1))
    if scalar:
        return float(out.reshape(-1)[0])
    return out


def sample_arches(rng: np.random.Generator, e: Elasticity, n: int):
    """Vector draw of n normalized arches; returns (durations, log_steps)."""
    steps = sample_step(rng, e, size=n)
    ratio = np.exp(steps) / e.c
    durations = sample_duration_given_velocities(rng, 1.0, ratio, e)
    return durations, steps


def sample_arch(rng: np.random.Generator, e: Elasticity) -> ArchSample:
    """One normalized arch, jointly distributed per the exact arch law."""
    durations, steps = sample_arches(rng, e, 1)
    return ArchSample(duration=float(durations[0]), log_step=float(steps[0]))


# ---------- tail constants ----------

def duration_tail_constant() -> float:
    """c' = 3 Gamma(1/4) / (2^{3/4} pi^{3/2}); P(duration > t) ~ c' t^{-1/4}."""
    return 3.0 * math.gamma(0.25) / (2.0**0.75 * math.pi**1.5)


def conditional_tail_bound(t):
    """Bound (16 sqrt 2 / (3 sqrt pi)) t^{-3/2} on conditional duration tails.

    Applies to P(duration > t a^2) when both conditioning speeds are at most a.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise ValueError("t must be positive and finite")
    out = (16.0 * math.sqrt(2.0) / (3.0 * math.sqrt(math.pi))) * t**-1.5
    return out if out.ndim else float(out)
