"""Security quantities derived from the confidence polytope.

Bounds on the single-photon yield, the conservative single-photon fraction of
detections, the guaranteed number of single-photon detections, the
single-photon bit error rate, and the rate formulas used to compare decoy
and conventional operation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Literal, NamedTuple, Sequence

import numpy as np

from .lp import Simplex
from .photonics import DEFAULT_K, series_tail_mass, truncated_series_coefficients
from .polytope import ConstraintSet, IntensityLevel, build_constraints
from .stats import CiMode, Interval, TrialCount, binomial_cdf, binomial_confidence_interval

if TYPE_CHECKING:
    from .sim import SessionRecord

__all__ = [
    "AnalysisConfig",
    "AnalysisReport",
    "CountBound",
    "RateComparison",
    "InfeasibleRegionError",
    "SIFT_PROBABILITY",
    "bound_y1",
    "conservative_single_photon_fraction",
    "single_photon_count_bound",
    "bound_b1",
    "decoy_rate",
    "conventional_rate",
    "analyze_session",
    "REPORT_FIELDS",
]

# Probability that Alice's and Bob's bases agree.
SIFT_PROBABILITY = 0.5

REPORT_FIELDS = (
    "y1_lo",
    "y1_hi",
    "p_min_prime",
    "s_bound",
    "b1_max",
    "confidence",
    "decoy_rate",
    "epsilon",
    "m_levels",
    "abort",
    "y0_lo",
    "y0_hi",
    "s_guaranteed",
    "b1_vacuous",
)


@dataclass(frozen=True)
class AnalysisConfig:
    """Knobs for :func:`analyze_session`.

    ``s_mode`` picks the detection pool for the single-photon count bound:
    sifted detections of the one-laser class (``"sifted"``) or all of that
    class's detections (``"all"``). ``yk_upper`` chooses per-yield upper
    bounds for the fraction's denominator: LP maxima (``"lp"``) or the
    trivial bound 1 (``"one"``). ``mu_bounds`` optionally replaces the
    exactly known one-laser intensity by an interval.
    """

    epsilon: float = 1e-7
    K: int = DEFAULT_K
    ci_mode: CiMode = "paper"
    s_mode: Literal["sifted", "all"] = "sifted"
    yk_upper: Literal["lp", "one"] = "lp"
    mu_bounds: Interval | None = None
    net_rate: Callable[[float, float], float] | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.s_mode not in ("sifted", "all"):
            raise ValueError(f"unknown s_mode {self.s_mode!r}")
        if self.yk_upper not in ("lp", "one"):
            raise ValueError(f"unknown yk_upper {self.yk_upper!r}")


@dataclass(frozen=True)
class AnalysisReport:
    y1_bounds: Interval
    y0_bounds: Interval
    p_min_prime: float
    s_bound: int
    s_guaranteed: bool
    b1_max: float
    b1_vacuous: bool
    confidence: float
    decoy_rate: float
    epsilon: float
    M: int
    abort: bool = False
    net_rate: float | None = None

    def as_dict(self) -> dict:
        return {
            "y1_lo": self.y1_bounds.lo,
            "y1_hi": self.y1_bounds.hi,
            "p_min_prime": self.p_min_prime,
            "s_bound": self.s_bound,
            "b1_max": self.b1_max,
            "confidence": self.confidence,
            "decoy_rate": self.decoy_rate,
            "epsilon": self.epsilon,
            "m_levels": self.M,
            "abort": self.abort,
            "y0_lo": self.y0_bounds.lo,
            "y0_hi": self.y0_bounds.hi,
            "s_guaranteed": self.s_guaranteed,
            "b1_vacuous": self.b1_vacuous,
        }

    def to_text(self) -> str:
        """Flat ``key=value`` block, one field per line."""
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, bool):
                value = int(value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=False, allow_nan=True)

    @classmethod
    def aborted(cls, epsilon: float, M: int) -> "AnalysisReport":
        # An empty region guarantees nothing; report zero bounds.
        zero = Interval(0.0, 0.0)
        return cls(
            y1_bounds=zero,
            y0_bounds=zero,
            p_min_prime=0.0,
            s_bound=0,
            s_guaranteed=False,
            b1_max=1.0,
            b1_vacuous=True,
            confidence=(1.0 - epsilon) ** (2 * M + 1),
            decoy_rate=0.0,
            epsilon=epsilon,
            M=M,
            abort=True,
        )


@dataclass(frozen=True)
class RateComparison:
    """Decoy versus conventional guaranteed single-photon rate at one ``eta``.

    ``f`` is the ratio of the lower to the upper LP bound on ``y1`` at the
    decoy optimum.
    """

    eta: float
    decoy_rate: float
    conventional_rate: float
    f: float
    optimal_mu_decoy: float
    optimal_mu_conventional: float


class CountBound(NamedTuple):
    s: int
    guaranteed: bool


class InfeasibleRegionError(RuntimeError):
    """The observed counts admit no yield vector: abort the session."""


def _unit(dim: int, k: int) -> np.ndarray:
    e = np.zeros(dim)
    e[k] = 1.0
    return e


def bound_y1(cs: ConstraintSet | Simplex) -> Interval:
    """Minimum and maximum of ``y_1`` over the region."""
    lp = cs if isinstance(cs, Simplex) else Simplex(cs)
    e1 = _unit(lp.dim, 1)
    lo = lp.solve(e1, "min")
    hi = lp.solve(e1, "max")
    if not (lo.optimal and hi.optimal):
        raise InfeasibleRegionError("no yield vector is consistent with the observed counts")
    return Interval(max(0.0, lo.value), min(1.0, max(hi.value, lo.value)))


def conservative_single_photon_fraction(
    mu_bounds: Interval,
    y1_lower: float,
    yk_uppers: Sequence[float],
) -> float:
    """Lower bound on the fraction of detections caused by one-photon pulses.

    The numerator ``exp(-mu) mu y1`` takes the lower ends of ``mu`` and
    ``y1``; the denominator takes the upper end of ``mu`` and every yield,
    with yields beyond the truncation counted as 1.
    """
    if mu_bounds.lo <= 0:
        raise ValueError("the intensity lower bound must be positive")
    uppers = np.clip(np.asarray(yk_uppers, dtype=float), 0.0, 1.0)
    K = uppers.size - 1
    mu_lo, mu_hi = mu_bounds.lo, mu_bounds.hi
    numerator = math.exp(-mu_lo) * mu_lo * max(0.0, y1_lower)
    coeffs, _ = truncated_series_coefficients(mu_hi, K)
    denominator = float(coeffs @ uppers) + series_tail_mass(mu_hi, K)
    if denominator <= 0.0:
        return 0.0
    return min(1.0, numerator / denominator)


def single_photon_count_bound(detections: int, p_min_prime: float, epsilon: float) -> CountBound:
    """Largest ``s`` with ``P(X <= s) <= epsilon`` for ``X ~ Bin(detections, p)``.

    If even ``s = 0`` fails the result is ``CountBound(0, False)``: no
    single-photon detection is guaranteed.
    """
    if detections < 0 or not 0.0 <= p_min_prime <= 1.0:
        raise ValueError("need detections >= 0 and p_min_prime in [0, 1]")
    if binomial_cdf(0, detections, p_min_prime) > epsilon:
        return CountBound(0, False)
    lo, hi = 0, detections  # cdf(lo) <= eps; cdf(detections) = 1 > eps
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if binomial_cdf(mid, detections, p_min_prime) <= epsilon:
            lo = mid
        else:
            hi = mid
    return CountBound(lo, True)


def bound_b1(error_bounds: Interval, mu: float, y0_lower: float, y1_lower: float) -> float:
    """Largest single-photon error rate allowed by the one-laser error data.

    ``error_bounds`` bounds the per-pulse probability of an erroneous click.
    Setting the multi-photon error rates to zero leaves
    ``B+ >= exp(-mu) (y0/2 + mu b1 y1)``, solved for ``b1`` at the
    conservative corner. Returns 1 when ``y1_lower`` is 0.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if y1_lower <= 0.0:
        return 1.0
    b1 = (math.exp(mu) * error_bounds.hi - 0.5 * max(0.0, y0_lower)) / (mu * y1_lower)
    return min(1.0, max(0.0, b1))


def decoy_rate(mu: float, y1_lower: float) -> float:
    """Guaranteed single-photon detections per clock cycle from the one-laser class.

    A quarter of the cycles fire exactly one laser.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return 0.25 * mu * math.exp(-mu) * y1_lower


def conventional_rate(eta: float) -> tuple[float, float]:
    """Best guaranteed single-photon rate ``mu (eta - mu/2)`` and its ``mu = eta``."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return eta * eta / 2.0, eta


def error_rate_bounds(level: IntensityLevel, epsilon: float, mode: CiMode = "paper") -> Interval | None:
    """Bounds on the per-pulse probability of an erroneous click for ``level``.

    Errors are only observed on sifted detections, so the interval for
    ``errors / pulses`` is rescaled by ``1 / SIFT_PROBABILITY``.
    """
    if level.error_trials is None:
        return None
    per_pulse = binomial_confidence_interval(TrialCount(level.trials.n, level.error_trials.c), epsilon, mode)
    return Interval(
        min(1.0, per_pulse.lo / SIFT_PROBABILITY),
        min(1.0, per_pulse.hi / SIFT_PROBABILITY),
    )


def analyze_session(record: "SessionRecord", config: AnalysisConfig | None = None) -> AnalysisReport:
    """Run the full bound pipeline on one session's counts."""
    config = config or AnalysisConfig()
    levels = list(record.levels)
    eps = config.epsilon
    M = len(levels)
    if len({lv.mu for lv in levels}) < 2:
        raise ValueError("analysis needs at least two distinct intensity levels")
    single = next((lv for lv in levels if lv.j == 1), None)
    if single is None:
        raise ValueError("no one-laser (j=1) level in the record")

    cs = build_constraints(levels, config.K, eps, config.ci_mode)
    lp = Simplex(cs)
    if not lp.feasible:
        return AnalysisReport.aborted(eps, M)
    dim = config.K + 1
    y1 = bound_y1(lp)
    y0_lo = lp.solve(_unit(dim, 0), "min")
    y0_hi = lp.solve(_unit(dim, 0), "max")
    y0 = Interval(max(0.0, y0_lo.value), max(y0_lo.value, min(1.0, y0_hi.value)))

    if config.yk_upper == "lp":
        uppers = np.array([lp.solve(_unit(dim, k), "max").value for k in range(dim)])
    else:
        uppers = np.ones(dim)
    mu_bounds = config.mu_bounds or Interval(single.mu, single.mu)
    p_prime = conservative_single_photon_fraction(mu_bounds, y1.lo, uppers)

    if config.s_mode == "sifted" and single.error_trials is not None:
        pool = single.error_trials.n
    else:
        pool = single.trials.c
    s = single_photon_count_bound(pool, p_prime, eps)

    err = error_rate_bounds(single, eps, config.ci_mode)
    if err is None:
        b1, b1_vacuous = 1.0, True
    else:
        b1 = bound_b1(err, single.mu, y0.lo, y1.lo)
        b1_vacuous = y1.lo <= 0.0 or b1 >= 1.0

    rate = decoy_rate(single.mu, y1.lo)
    net = config.net_rate(rate, b1) if config.net_rate is not None else None
    return AnalysisReport(
        y1_bounds=y1,
        y0_bounds=y0,
        p_min_prime=p_prime,
        s_bound=s.s,
        s_guaranteed=s.guaranteed,
        b1_max=b1,
        b1_vacuous=b1_vacuous,
        confidence=(1.0 - eps) ** (2 * M + 1),
        decoy_rate=rate,
        epsilon=eps,
        M=M,
        net_rate=net,
    )
