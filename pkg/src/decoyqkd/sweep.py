"""Intensity sweeps and rate comparisons over many simulated sessions."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .analysis import AnalysisConfig, RateComparison, analyze_session, conventional_rate, decoy_rate
from .photonics import Beamsplitter, ChannelModel
from .sim import SessionConfig, expected_session, run_session

__all__ = [
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "session_seed",
    "mu_grid",
    "refine_argmax",
    "run_sweep",
    "compare_rates",
    "loglog_slope",
    "ROW_FIELDS",
]

ROW_FIELDS = (
    "mu",
    "eta",
    "N",
    "seed",
    "y1_lo",
    "y1_hi",
    "rate_lo",
    "rate_true",
    "s_bound",
    "b1_max",
    "abort",
)


def session_seed(base_seed: int, index: int) -> int:
    """Independent 63-bit seed for replica ``index``."""
    state = np.random.SeedSequence([int(base_seed), int(index)]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def mu_grid(lo: float, hi: float, step: float) -> tuple[float, ...]:
    """Inclusive grid ``lo, lo+step, ..., <= hi``, rounded to kill float drift."""
    if step <= 0 or lo <= 0 or hi < lo:
        raise ValueError("mu grid needs 0 < lo <= hi and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(round(lo + i * step, 12) for i in range(n))


@dataclass(frozen=True)
class SweepSpec:
    mu_grid: tuple[float, ...]
    eta: float
    n_cycles: int | None = None
    n_scaled: float | None = None
    epsilon: float = 1e-7
    y0: float = 3e-6
    seeds: int = 1
    base_seed: int = 0
    K: int = 11
    intrinsic_ber: float = 0.0
    expected: bool = False
    channel: ChannelModel | None = None
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def __post_init__(self) -> None:
        grid = tuple(float(m) for m in self.mu_grid)
        if not grid or any(m <= 0 for m in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("mu grid must be nonempty, positive and strictly increasing")
        object.__setattr__(self, "mu_grid", grid)
        if (self.n_cycles is None) == (self.n_scaled is None):
            raise ValueError("give exactly one of n_cycles or n_scaled")
        if self.seeds < 1:
            raise ValueError("need at least one seed")
        # Keep analysis epsilon/K in step with the sweep's.
        object.__setattr__(self, "analysis", replace(self.analysis, epsilon=self.epsilon, K=self.K))

    @property
    def N(self) -> int:
        if self.n_cycles is not None:
            return int(self.n_cycles)
        return int(round(self.n_scaled / self.eta))

    def session_config(self, mu: float, seed_index: int) -> SessionConfig:
        channel = self.channel if self.channel is not None else Beamsplitter(self.eta, self.y0)
        return SessionConfig(
            n_cycles=self.N,
            mu_base=mu,
            channel=channel,
            epsilon=self.epsilon,
            intrinsic_ber=self.intrinsic_ber,
            seed=session_seed(self.base_seed, seed_index),
        )


@dataclass(frozen=True)
class SweepRow:
    mu: float
    eta: float
    N: int
    seed: int
    y1_lo: float
    y1_hi: float
    rate_lo: float
    rate_true: float
    s_bound: int
    b1_max: float
    abort: bool

    def values(self) -> tuple:
        return tuple(getattr(self, f) for f in ROW_FIELDS)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]

    def rates(self) -> np.ndarray:
        """``rate_lo`` as an array of shape (seeds, len(mu_grid))."""
        n_mu = len(self.spec.mu_grid)
        r = np.array([row.rate_lo for row in self.rows]).reshape(n_mu, self.spec.seeds)
        return r.T

    def argmax_per_seed(self, refine: bool = True) -> np.ndarray:
        grid = np.array(self.spec.mu_grid)
        return np.array([refine_argmax(grid, r) if refine else grid[int(np.argmax(r))] for r in self.rates()])

    def argmax_median(self, refine: bool = True) -> float:
        return float(np.median(self.argmax_per_seed(refine)))

    def best_rate_per_seed(self) -> np.ndarray:
        return self.rates().max(axis=1)

    def best_rate_median(self) -> float:
        return float(np.median(self.best_rate_per_seed()))

    def quantiles(self) -> np.ndarray:
        """Per-mu 25th, 50th and 75th percentiles of ``rate_lo`` (shape (len(mu_grid), 3))."""
        return np.percentile(self.rates(), [25, 50, 75], axis=0).T


def refine_argmax(grid: Sequence[float], values: Sequence[float]) -> float:
    """Grid argmax refined by the vertex of a parabola through its neighbours."""
    x = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    i = int(np.argmax(v))
    if i == 0 or i == len(x) - 1:
        return float(x[i])
    x0, x1, x2 = x[i - 1 : i + 2]
    f0, f1, f2 = v[i - 1 : i + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (f1 - f0) + x1 * (f0 - f2) + x0 * (f2 - f1)) / denom
    b = (x2 * x2 * (f0 - f1) + x1 * x1 * (f2 - f0) + x0 * x0 * (f1 - f2)) / denom
    if a >= 0:
        return float(x1)
    return float(np.clip(-b / (2 * a), x0, x2))


def _sweep_point(args: tuple[SweepSpec, float, int]) -> SweepRow:
    spec, mu, seed_index = args
    cfg = spec.session_config(mu, seed_index)
    record = expected_session(cfg) if spec.expected else run_session(cfg)
    report = analyze_session(record, spec.analysis)
    true_y1 = record.truth.y1 if record.truth is not None else math.nan
    return SweepRow(
        mu=mu,
        eta=spec.eta,
        N=spec.N,
        seed=cfg.seed,
        y1_lo=report.y1_bounds.lo,
        y1_hi=report.y1_bounds.hi,
        rate_lo=report.decoy_rate,
        rate_true=decoy_rate(mu, true_y1),
        s_bound=report.s_bound,
        b1_max=report.b1_max,
        abort=report.abort,
    )


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Simulate and analyze every (mu, seed) pair.

    Replica ``i`` uses the same session seed at every ``mu`` so that scatter
    between neighbouring grid points does not move the argmax. Rows come back
    ordered by (mu, seed index) regardless of ``jobs``.
    """
    tasks = [(spec, mu, i) for mu in spec.mu_grid for i in range(spec.seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_sweep_point(t) for t in tasks]
    return SweepResult(spec, tuple(rows))


def compare_rates(
    etas: Sequence[float],
    n_cycles: int,
    grid: Sequence[float],
    *,
    epsilon: float = 1e-7,
    y0: float = 3e-6,
    seeds: int = 1,
    base_seed: int = 0,
    expected: bool = False,
    jobs: int = 1,
) -> list[RateComparison]:
    """Best decoy rate over ``grid`` at fixed session size, against the conventional rate."""
    out = []
    for eta in etas:
        spec = SweepSpec(
            mu_grid=tuple(grid),
            eta=eta,
            n_cycles=n_cycles,
            epsilon=epsilon,
            y0=y0,
            seeds=seeds,
            base_seed=base_seed,
            expected=expected,
        )
        res = run_sweep(spec, jobs=jobs)
        med = np.median(res.rates(), axis=0)
        i = int(np.argmax(med))
        at_best = [row for row in res.rows if row.mu == spec.mu_grid[i]]
        f = float(np.median([r.y1_lo / r.y1_hi if r.y1_hi > 0 else 0.0 for r in at_best]))
        conv, mu_conv = conventional_rate(eta)
        out.append(
            RateComparison(
                eta=eta,
                decoy_rate=float(med[i]),
                conventional_rate=conv,
                f=f,
                optimal_mu_decoy=spec.mu_grid[i],
                optimal_mu_conventional=mu_conv,
            )
        )
    return out


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log10 y`` against ``log10 x``."""
    return float(np.polyfit(np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float)), 1)[0])
