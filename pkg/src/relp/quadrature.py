"""Quadrature oracles for the arch law.

Deliberately independent of the closed forms used by the samplers: everything
here integrates raw densities numerically, so tests and the verification
report can cross-validate the analytic paths against dumb quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from relp import archlaw
from relp.archlaw import Elasticity

STEP_HALF_RANGE = 80.0  # step tails decay like e^{-|t|/2}; 80 puts the
                        # truncated mean mass near 1e-16


def step_moments(e: Elasticity, half_range: float = STEP_HALF_RANGE):
    """(mass, mean, variance) of the step density by adaptive quadrature
    over [ln c - half_range, ln c + half_range]."""
    lo = e.log_c - half_range
    hi = e.log_c + half_range
    mass = integrate.quad(lambda w: archlaw.step_density(w, e), lo, hi,
                          limit=200, epsabs=1e-12, epsrel=1e-12)[0]
    mean = integrate.quad(lambda w: w * archlaw.step_density(w, e), lo, hi,
                          limit=200, epsabs=1e-12, epsrel=1e-12)[0]
    second = integrate.quad(lambda w: w * w * archlaw.step_density(w, e), lo, hi,
                            limit=200, epsabs=1e-12, epsrel=1e-12)[0]
    return mass, mean, second - mean**2


def _duration_integral(dens_of_s, scale, epsabs, epsrel):
    """Integral over the duration s of a density with an algebraic s^{-5/2}
    right tail. The substitution s = scale/r turns the tail into a sqrt(r)
    vanishing near r = 0 and keeps exponential decay at large r, so the
    adaptive rule converges cleanly."""

    def g(r):
        s = scale / r
        return dens_of_s(s) * scale / (r * r)

    return integrate.quad(g, 0.0, np.inf, limit=200,
                          epsabs=epsabs, epsrel=epsrel)[0]


def joint_mass(e: Elasticity) -> float:
    """Total mass of the joint duration/velocity density by nested quadrature.

    The velocity integral runs in log coordinates (the u-marginal has an
    algebraic u^{-3/2} tail; u = e^z makes both tails exponential)."""

    def inner_z(z):
        if abs(z) > 150.0:  # u-marginal decays like e^{-|z|/2}; avoid exp overflow
            return 0.0
        u = np.exp(z)
        scale = 2.0 * (u * u - u + 1.0)
        return u * _duration_integral(lambda s: archlaw.joint_density(s, u, e),
                                      scale, 1e-10, 1e-9)

    return integrate.quad(inner_z, -np.inf, np.inf, limit=300,
                          epsabs=1e-9, epsrel=1e-8)[0]


def joint_s_marginal(u, e: Elasticity):
    """Velocity marginal of the joint density: integral over the duration."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty_like(u_arr)
    for i, ui in enumerate(u_arr):
        scale = 2.0 * (ui * ui - ui + 1.0)
        out[i] = _duration_integral(lambda s: archlaw.joint_density(s, ui, e),
                                    scale, 1e-12, 1e-11)
    return out if np.ndim(u) else float(out[0])


def conditional_mass(u: float, v: float, e: Elasticity) -> float:
    """Total mass of the conditional duration density given both velocities."""
    b = 2.0 * (v * v - u * v + u * u)
    return _duration_integral(
        lambda s: archlaw.conditional_duration_density(s, u, v, e), b, 1e-12, 1e-11)


def conditional_cdf_fn(u: float, v: float, e: Elasticity, r_max: float = 60.0,
                       n: int = 6001):
    """CDF of the conditional duration as a callable, via the substitution
    r = b/s with b = 2(v^2 - uv + u^2), which maps the heavy right tail of s
    to a neighborhood of r = 0 where the transformed density vanishes.

    Returns (cdf, total_mass); the cdf is normalized by total_mass, which
    should itself be within quadrature error of 1.
    """
    b = 2.0 * (v * v - u * v + u * u)
    # second substitution r = q^2 smooths the sqrt(r) behavior at r = 0,
    # so the trapezoidal cumulative keeps O(h^2) accuracy on the grid
    q = np.linspace(0.0, math.sqrt(r_max), n)
    qs = q[1:]
    dens = archlaw.conditional_duration_density(b / qs**2, u, v, e) * 2.0 * b / qs**3
    dens = np.concatenate(([0.0], dens))
    cum = np.concatenate(([0.0], np.cumsum((dens[1:] + dens[:-1]) / 2) * np.diff(q)))
    total = float(cum[-1])

    def cdf(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            qq = np.where(t > 0, np.sqrt(b / t), np.inf)
        # P(s <= t) = P(q >= sqrt(b/t))
        out = (total - np.interp(qq, q, cum, right=total)) / total
        out = np.where(t <= 0, 0.0, out)
        return out if out.ndim else float(out)

    return cdf, total


def duration_tail(t: float, e: Elasticity) -> float:
    """P(first arch duration > t) by nested quadrature over the joint density.

    The outer integral substitutes s = t/y^4, under which the s^{-5/4}
    marginal tail becomes a bounded smooth integrand on (0, 1]."""

    def m(s):
        top = max(6.0 * np.sqrt(s), 4.0)
        return integrate.quad(lambda u: archlaw.joint_density(s, u, e),
                              0.0, top, points=[0.5, 1.0],
                              limit=200, epsabs=1e-12, epsrel=1e-10)[0]

    def g(y):
        s = t / y**4
        return m(s) * 4.0 * t / y**5

    return integrate.quad(g, 0.0, 1.0, limit=200, epsabs=1e-11, epsrel=1e-9)[0]
