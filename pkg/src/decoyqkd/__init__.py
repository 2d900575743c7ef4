"""Finite-statistics decoy-state analysis for weak-laser-pulse QKD."""
from .analysis import (
    AnalysisConfig,
    AnalysisReport,
    RateComparison,
    analyze_session,
    bound_b1,
    bound_y1,
    conservative_single_photon_fraction,
    conventional_rate,
    decoy_rate,
    single_photon_count_bound,
)
from .lp import LpSolution, enumerate_vertices, optimize
from .photonics import (
    Adversarial,
    Beamsplitter,
    expected_detection_probability,
    poisson_pmf,
    true_yield,
    truncated_series_coefficients,
)
from .polytope import ConstraintSet, IntensityLevel, build_constraints, contains
from .sim import SessionConfig, SessionRecord, expected_session, pns_channel, read_record, run_session, write_record
from .stats import Interval, TrialCount, binomial_cdf, binomial_confidence_interval, make_rng
from .sweep import SweepSpec, compare_rates, run_sweep

__version__ = "0.1.0"
