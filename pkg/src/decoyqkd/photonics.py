"""Poisson photon statistics and channel yield models."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln, pdtrc

__all__ = [
    "Beamsplitter",
    "Adversarial",
    "ChannelModel",
    "poisson_pmf",
    "truncated_series_coefficients",
    "series_tail_mass",
    "true_yield",
    "signal_survival",
    "expected_detection_probability",
]

DEFAULT_K = 11


@dataclass(frozen=True)
class Beamsplitter:
    """Honest lossy channel: each photon clicks independently with ``eta``,
    and the detector fires spuriously with probability ``y0``."""

    eta: float
    y0: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.eta <= 1.0 and 0.0 <= self.y0 <= 1.0):
            raise ValueError(f"eta and y0 must be probabilities, got eta={self.eta}, y0={self.y0}")


@dataclass(frozen=True)
class Adversarial:
    """Channel specified directly by its yields ``y[0..K]``.

    ``tail_yield`` is the yield used for photon numbers above ``K`` when one
    is needed to generate data; ``None`` leaves those yields undefined.
    """

    yields: tuple[float, ...]
    tail_yield: float | None = None

    def __post_init__(self) -> None:
        y = tuple(float(v) for v in self.yields)
        if not y:
            raise ValueError("an adversarial channel needs at least y0")
        if any(not 0.0 <= v <= 1.0 for v in y):
            raise ValueError("yields must lie in [0, 1]")
        if self.tail_yield is not None and not 0.0 <= self.tail_yield <= 1.0:
            raise ValueError("tail_yield must lie in [0, 1]")
        object.__setattr__(self, "yields", y)

    @property
    def K(self) -> int:
        return len(self.yields) - 1

    @property
    def y0(self) -> float:
        return self.yields[0]


ChannelModel = Union[Beamsplitter, Adversarial]


def poisson_pmf(n: int, mu: float) -> float:
    """``exp(-mu) mu**n / n!``."""
    if n < 0 or mu < 0:
        raise ValueError("poisson_pmf needs n >= 0 and mu >= 0")
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def truncated_series_coefficients(mu: float, K: int) -> tuple[np.ndarray, float]:
    """Poisson weights ``exp(-mu) mu^k / k!`` for ``k = 0..K`` and the mass
    ``1 - sum`` left beyond ``K``."""
    if mu < 0 or K < 0:
        raise ValueError("need mu >= 0 and K >= 0")
    k = np.arange(K + 1)
    if mu == 0.0:
        coeffs = np.zeros(K + 1)
        coeffs[0] = 1.0
        return coeffs, 0.0
    coeffs = np.exp(-mu + k * math.log(mu) - gammaln(k + 1))
    return coeffs, series_tail_mass(mu, K)


def series_tail_mass(mu: float, K: int) -> float:
    """``P(X > K)`` for ``X ~ Poisson(mu)``, accurate when tiny."""
    if mu == 0.0:
        return 0.0
    return float(pdtrc(K, mu))


def _survival(eta: float, n: int) -> float:
    # 1 - (1 - eta)^n
    if eta >= 1.0:
        return 1.0 if n > 0 else 0.0
    return -math.expm1(n * math.log1p(-eta))


def true_yield(channel: ChannelModel, n: int) -> float:
    """Click probability given ``n`` photons were emitted."""
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    if isinstance(channel, Beamsplitter):
        return channel.y0 + (1.0 - channel.y0) * _survival(channel.eta, n)
    if n <= channel.K:
        return channel.yields[n]
    if channel.tail_yield is None:
        raise ValueError(f"yield for n={n} is undefined beyond truncation K={channel.K}")
    return channel.tail_yield


def signal_survival(channel: ChannelModel, n: int) -> float:
    """Probability that at least one signal photon (not a dark count) clicks.

    Defined through ``y_n = 1 - (1 - y0)(1 - survival)``.
    """
    if isinstance(channel, Beamsplitter):
        return _survival(channel.eta, n)
    if n == 0:
        return 0.0
    y0 = channel.y0
    if y0 >= 1.0:
        return 0.0
    return max(0.0, (true_yield(channel, n) - y0) / (1.0 - y0))


def expected_detection_probability(channel: ChannelModel, mu: float) -> float:
    """Probability that a pulse of mean photon number ``mu`` produces a click.

    The beamsplitter uses the closed form ``1 - (1 - y0) exp(-mu eta)``. An
    adversarial channel is summed up to its truncation ``K``; if it defines a
    ``tail_yield`` the tail contributes ``tail_yield * P(n > K)``, otherwise
    the tail (at most :func:`series_tail_mass`) is left out.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if isinstance(channel, Beamsplitter):
        return channel.y0 - (1.0 - channel.y0) * math.expm1(-mu * channel.eta)
    coeffs, tail = truncated_series_coefficients(mu, channel.K)
    total = float(np.dot(coeffs, channel.yields))
    if channel.tail_yield is not None:
        total += channel.tail_yield * tail
    return min(total, 1.0)
