"""Finite-sample statistics for detection counts.

Confidence bounds on Bernoulli rates, binomial tail probabilities and
aggregate random sampling. Log-domain binomial terms use Loader's
saddle-point decomposition so that sessions with up to ~1e13 pulses keep
full relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import special

__all__ = [
    "Interval",
    "TrialCount",
    "CiMode",
    "make_rng",
    "log_binomial_term",
    "binomial_confidence_interval",
    "binomial_cdf",
    "sample_binomial",
    "sample_multinomial",
]

CiMode = Literal["paper", "tail"]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_BISECT_LOG_TOL = 1e-12
_BISECT_MAXITER = 400


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"interval lower end {self.lo} exceeds upper end {self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def scaled(self, factor: float) -> "Interval":
        """Multiply both ends by a nonnegative factor."""
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        return Interval(self.lo * factor, self.hi * factor)


@dataclass(frozen=True)
class TrialCount:
    """``c`` successes observed in ``n`` Bernoulli trials."""

    n: int
    c: int

    def __post_init__(self) -> None:
        if self.n < 0 or self.c < 0:
            raise ValueError(f"trial counts must be nonnegative, got n={self.n}, c={self.c}")
        if self.c > self.n:
            raise ValueError(f"success count {self.c} exceeds trial count {self.n}")

    @property
    def rate(self) -> float:
        return self.c / self.n if self.n else 0.0


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Seeded generator; ``stream`` indices derive independent child streams."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


# --- log-domain binomial term ------------------------------------------------

_STIRLERR_SMALL: dict[float, float] = {}


def _stirlerr(n: float) -> float:
    """log(n!) - log(sqrt(2 pi n) (n/e)^n)."""
    if n > 15.0:
        nn = n * n
        return (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * nn)) / nn) / nn) / nn) / n
    val = _STIRLERR_SMALL.get(n)
    if val is None:
        val = math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LOG_SQRT_2PI
        _STIRLERR_SMALL[n] = val
    return val


def _bd0(x: float, np_: float) -> float:
    """Deviance term ``x log(x/np) + np - x`` without cancellation."""
    d = x - np_
    if abs(d) < 0.1 * (x + np_):
        v = d / (x + np_)
        s = d * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 1000):
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * math.log(x / np_) + np_ - x


def log_binomial_term(n: int, c: int, p: float) -> float:
    """Natural log of ``binom(n, c) p^c (1-p)^(n-c)``; ``-inf`` where it vanishes."""
    if not 0 <= c <= n:
        return -math.inf
    if p <= 0.0:
        return 0.0 if c == 0 else -math.inf
    if p >= 1.0:
        return 0.0 if c == n else -math.inf
    if c == 0:
        return n * math.log1p(-p)
    if c == n:
        return n * math.log(p)
    q = 1.0 - p
    lc = _stirlerr(n) - _stirlerr(c) - _stirlerr(n - c) - _bd0(c, n * p) - _bd0(n - c, n * q)
    lf = 2.0 * _LOG_SQRT_2PI + math.log(c) + math.log1p(-c / n)
    return lc - 0.5 * lf


# --- confidence bounds --------------------------------------------------------

def _bisect(f, a: float, b: float) -> float:
    """Root of monotone ``f`` bracketed by ``[a, b]`` with f(a)·f(b) <= 0.

    Stops once ``|f| <= _BISECT_LOG_TOL`` or the bracket can no longer be
    split in floating point.
    """
    fa = f(a)
    for _ in range(_BISECT_MAXITER):
        m = 0.5 * (a + b)
        if not a < m < b:
            return m
        fm = f(m)
        if abs(fm) <= _BISECT_LOG_TOL:
            return m
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _term_interval(n: int, c: int, log_eps: float) -> Interval:
    mle = c / n

    def g(y: float) -> float:
        return log_binomial_term(n, c, y) - log_eps

    if g(mle) <= 0.0:
        # The single term never exceeds epsilon, so the solution set
        # collapses onto the maximum-likelihood point.
        return Interval(mle, mle)
    lo = 0.0 if c == 0 else _bisect(g, 0.0, mle)
    hi = 1.0 if c == n else _bisect(g, mle, 1.0)
    return Interval(min(lo, mle), max(hi, mle))


def _tail_interval(n: int, c: int, eps: float) -> Interval:
    # Clopper-Pearson with epsilon in each tail.
    lo = 0.0 if c == 0 else float(special.betaincinv(c, n - c + 1, eps))
    hi = 1.0 if c == n else 1.0 - float(special.betaincinv(n - c, c + 1, eps))
    mle = c / n
    return Interval(min(lo, mle), max(hi, mle))


def binomial_confidence_interval(t: TrialCount, epsilon: float, mode: CiMode = "paper") -> Interval:
    """Confidence bounds on the success probability behind ``t``.

    In ``"paper"`` mode the ends are the two solutions of
    ``binom(n, c) Y^c (1-Y)^(n-c) = epsilon`` on either side of ``c/n``,
    found by bisection on the log of the term. ``"tail"`` mode gives the
    Clopper-Pearson interval with ``epsilon`` in each tail.

    Parameters
    ----------
    t : TrialCount
        Observed trials and successes, ``t.n >= 1``.
    epsilon : float
        Per-bound failure probability in (0, 1).
    mode : {"paper", "tail"}

    Returns
    -------
    Interval
        Always contains ``c/n``. If the single term stays below ``epsilon``
        everywhere (very large ``n`` with large ``epsilon``) the interval is
        the point ``[c/n, c/n]``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if t.n < 1:
        raise ValueError("at least one trial is required")
    if mode == "paper":
        return _term_interval(t.n, t.c, math.log(epsilon))
    if mode == "tail":
        return _tail_interval(t.n, t.c, epsilon)
    raise ValueError(f"unknown confidence interval mode {mode!r}")


def binomial_cdf(s: int, n: int, p: float) -> float:
    """``P(X <= s)`` for ``X ~ Binomial(n, p)`` via the regularized incomplete beta."""
    if s < 0:
        return 0.0
    if s >= n or p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 0.0
    return float(special.betainc(n - s, s + 1, 1.0 - p))


# --- sampling ---------------------------------------------------------------

def sample_binomial(n: int, p: float, rng: np.random.Generator) -> int:
    """One Binomial(n, p) draw.

    numpy's generator inverts the CDF when ``n * min(p, 1-p) <= 30`` and uses
    the exact BTPE rejection sampler above that, so draws are exact at every
    size and reproducible per seed.
    """
    if n < 0 or not 0.0 <= p <= 1.0:
        raise ValueError(f"invalid binomial parameters n={n}, p={p}")
    if n == 0 or p == 0.0:
        return 0
    if p == 1.0:
        return int(n)
    return int(rng.binomial(n, p))


def sample_multinomial(n: int, weights: Sequence[float], rng: np.random.Generator) -> list[int]:
    """Multinomial counts drawn as a chain of conditional binomials."""
    w = [float(x) for x in weights]
    if any(x < 0 for x in w):
        raise ValueError("multinomial weights must be nonnegative")
    if abs(sum(w) - 1.0) > 1e-12:
        raise ValueError(f"multinomial weights must sum to 1, got {sum(w)!r}")
    counts = []
    remaining = int(n)
    rest = 1.0
    for x in w[:-1]:
        p = min(1.0, x / rest) if rest > 0 else 0.0
        k = sample_binomial(remaining, p, rng)
        counts.append(k)
        remaining -= k
        rest -= x
    counts.append(remaining)
    return counts
