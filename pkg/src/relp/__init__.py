"""Exact sampling and statistical verification for the reflected Langevin process."""

from relp.archlaw import (
    ArchSample,
    CRITICAL_C,
    Elasticity,
    Regime,
    conditional_duration_density,
    conditional_tail_bound,
    duration_tail_constant,
    joint_density,
    sample_arch,
    sample_step,
    step_cdf,
    step_density,
    step_quantile,
)
from relp.renewal import (
    OvershootLaw,
    RenewalFunction,
    build_overshoot_law,
    renewal_function_h,
    sample_overshoot_m,
    step_law_from_elasticity,
)
from relp.sde import first_arches, integrate
from relp.skeleton import BounceSkeleton, CrossingRecord, first_crossing, simulate_skeleton
from relp.stationary import (
    prepare_critical_resources,
    prepare_supercritical_resources,
    sample_entrance,
    sample_entrance_batch,
)
from relp.verify import FULL, QUICK, render_report, run_suite

__all__ = [
    "ArchSample",
    "BounceSkeleton",
    "CRITICAL_C",
    "CrossingRecord",
    "Elasticity",
    "FULL",
    "OvershootLaw",
    "QUICK",
    "Regime",
    "RenewalFunction",
    "build_overshoot_law",
    "conditional_duration_density",
    "conditional_tail_bound",
    "duration_tail_constant",
    "first_arches",
    "first_crossing",
    "integrate",
    "joint_density",
    "prepare_critical_resources",
    "prepare_supercritical_resources",
    "render_report",
    "renewal_function_h",
    "run_suite",
    "sample_arch",
    "sample_entrance",
    "sample_entrance_batch",
    "sample_overshoot_m",
    "sample_step",
    "simulate_skeleton",
    "step_cdf",
    "step_density",
    "step_law_from_elasticity",
    "step_quantile",
]

__version__ = "0.1.0"
