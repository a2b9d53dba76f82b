"""Euler discretization of the reflected second-order dynamics.

Position X integrates velocity, velocity integrates white noise, and each
zero crossing of X reverses the velocity with restitution -c. The scheme is
deliberately plain (velocity-first Euler, linear crossing interpolation) so
it stays an independent oracle for the exact arch samplers: the two share no
formulas, only the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from relp.archlaw import Elasticity

POSITION_EPS = 1e-12   # simultaneous |X|, |V| below this means the
VELOCITY_EPS = 1e-12   # discretization starved at the accumulation point


class _NoBounce:
    """Sentinel value: the path never hit zero before t_max."""

    __slots__ = ()

    def __repr__(self):
        return "NO_BOUNCE"


NO_BOUNCE = _NoBounce()


@dataclass(frozen=True)
class BounceEvent:
    time: float
    v_in: float      # incoming velocity, always negative
    v_out: float     # outgoing velocity, exactly -c * v_in


@dataclass(frozen=True)
class DiscretePath:
    """One integrated trajectory sampled on the dt grid.

    positions and velocities hold the post-reflection state at grid times
    k*dt. bounce_events records each crossing with its interpolated time.
    accumulation_reached flags a halt at the near-(0,0) guard, which the
    continuum model forbids above the critical elasticity; it is reported,
    never silently dropped.
    """

    elasticity: Elasticity
    dt: float
    positions: np.ndarray
    velocities: np.ndarray
    bounce_events: list[BounceEvent] = field(default_factory=list)
    accumulation_reached: bool = False

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.positions.size)


def _default_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n)


def integrate(rng, e: Elasticity, x0: float, u0: float, dt: float, t_max: float,
              noise=None) -> DiscretePath:
    """Integrate one path from (x0, u0) to t_max.

    Velocity-first Euler: V += sqrt(dt) * noise, X += V * dt. A sign change
    of X within a step is located by linear interpolation at fraction
    theta = X_prev / (X_prev - X_new); the bounce happens there, the velocity
    flips to -c * V, and the remaining (1 - theta) of the step is re-run with
    the outgoing velocity. `noise` replaces the standard normal increments
    (test hook); it is called once per step.
    """
    if not (x0 >= 0.0 and math.isfinite(x0)):
        raise ValueError("x0 must be a finite nonnegative real")
    if not math.isfinite(u0):
        raise ValueError("u0 must be finite")
    if x0 == 0.0 and u0 == 0.0:
        raise ValueError("(x0, u0) = (0, 0) is not a valid start")
    if not (0.0 < dt < t_max):
        raise ValueError("need 0 < dt < t_max")
    if noise is None:
        noise = _default_noise
    n = int(round(t_max / dt))
    sq = math.sqrt(dt)
    xs = np.empty(n + 1)
    vs = np.empty(n + 1)
    xs[0], vs[0] = x0, u0
    x, v = x0, u0
    events: list[BounceEvent] = []
    accumulation = False
    k = 0
    for k in range(1, n + 1):
        if abs(x) < POSITION_EPS and abs(v) < VELOCITY_EPS:
            accumulation = True
            k -= 1
            break
        v = v + sq * float(noise(rng, 1)[0])
        x_new = x + v * dt
        if x_new < 0.0:
            theta = x / (x - x_new)
            events.append(BounceEvent(time=(k - 1 + theta) * dt, v_in=v, v_out=-e.c * v))
            v = -e.c * v
            x_new = v * (1.0 - theta) * dt
        x = x_new
        xs[k], vs[k] = x, v
    return DiscretePath(elasticity=e, dt=dt, positions=xs[:k + 1].copy(),
                        velocities=vs[:k + 1].copy(), bounce_events=events,
                        accumulation_reached=accumulation)


def extract_first_arch(path: DiscretePath):
    """(zeta1, V1) of the first recorded bounce, or NO_BOUNCE."""
    if not path.bounce_events:
        return NO_BOUNCE
    ev = path.bounce_events[0]
    return ev.time, ev.v_out


def first_arches(rng, e: Elasticity, n: int, dt: float, t_max: float,
                 x0: float = 0.0, u0: float = 1.0, noise=None):
    """First-bounce samples (zeta1, V1) from n independent lanes.

    Same scheme as integrate, run as a flat vector of lanes that retire at
    their first crossing; positions are not recorded. Returns (times, speeds)
    with nan in both slots for lanes that never bounced before t_max. Lanes
    that hit the near-(0, 0) guard cannot occur before the first bounce
    (they start away from it), so no flag is needed here.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 < dt < t_max):
        raise ValueError("need 0 < dt < t_max")
    if x0 == 0.0 and u0 == 0.0:
        raise ValueError("(x0, u0) = (0, 0) is not a valid start")
    if noise is None:
        noise = _default_noise
    steps = int(round(t_max / dt))
    sq = math.sqrt(dt)
    x = np.full(n, float(x0))
    v = np.full(n, float(u0))
    lane = np.arange(n)                    # original index of each live lane
    out_t = np.full(n, np.nan)
    out_v = np.full(n, np.nan)
    for k in range(1, steps + 1):
        if lane.size == 0:
            break
        v = v + sq * noise(rng, lane.size)
        x_new = x + v * dt
        crossed = x_new < 0.0
        if np.any(crossed):
            theta = x[crossed] / (x[crossed] - x_new[crossed])
            out_t[lane[crossed]] = (k - 1 + theta) * dt
            out_v[lane[crossed]] = -e.c * v[crossed]
            keep = ~crossed
            x, v, lane = x_new[keep], v[keep], lane[keep]
        else:
            x = x_new
    return out_t, out_v
