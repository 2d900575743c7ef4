"""Aggregate simulation of the four-laser decoy protocol.

Each clock cycle Alice fires each of four identical lasers (per-laser mean
``mu_base``) with probability 1/2, so ``j`` lasers fire with probability
``binom(4, j)/16`` and the pulse has mean ``j * mu_base``. Sessions are
sampled per class rather than per cycle, which is statistically identical
and keeps ``N ~ 1e11`` cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

import numpy as np

from .photonics import (
    Adversarial,
    Beamsplitter,
    ChannelModel,
    expected_detection_probability,
    poisson_pmf,
    signal_survival,
    true_yield,
)
from .polytope import IntensityLevel
from .stats import TrialCount, make_rng, sample_binomial, sample_multinomial

__all__ = [
    "N_LASERS",
    "CLASS_WEIGHTS",
    "SessionConfig",
    "SessionRecord",
    "SessionTruth",
    "run_session",
    "expected_session",
    "pns_channel",
    "write_record",
    "read_record",
    "RecordFormatError",
]

N_LASERS = 4
CLASS_WEIGHTS = tuple(math.comb(N_LASERS, j) / 2**N_LASERS for j in range(N_LASERS + 1))
_ORIGIN_TAIL = 1e-18
_HEADER_TAG = "decoyqkd-session"


class RecordFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    n_cycles: int
    mu_base: float
    channel: ChannelModel
    epsilon: float = 1e-7
    intrinsic_ber: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be at least 1")
        if not self.mu_base > 0:
            raise ValueError("mu_base must be positive")
        if not 0.0 <= self.intrinsic_ber <= 0.5:
            raise ValueError("intrinsic_ber must lie in [0, 0.5]")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class SessionTruth:
    """Quantities a simulation knows but an experiment would not."""

    y1: float
    b1: float
    single_photon_detections: int
    single_photon_sifted: int


@dataclass(frozen=True)
class SessionRecord:
    levels: tuple[IntensityLevel, ...]
    config: SessionConfig | None = None
    truth: SessionTruth | None = field(default=None, compare=False)

    def level(self, j: int) -> IntensityLevel:
        for lv in self.levels:
            if lv.j == j:
                return lv
        raise KeyError(j)

    @property
    def n_cycles(self) -> int:
        return sum(lv.trials.n for lv in self.levels)


def pns_channel(eta_eve: float = 0.0, y0: float = 0.0, K: int = 11) -> Adversarial:
    """Photon-number-splitting yields.

    Single photons reach Bob with probability ``eta_eve`` (0 blocks them all),
    every multi-photon pulse is forwarded losslessly, and dark counts add on
    top as for any detector.
    """
    if not (0.0 <= eta_eve <= 1.0 and 0.0 <= y0 <= 1.0):
        raise ValueError("eta_eve and y0 must be probabilities")
    y1 = y0 + (1.0 - y0) * eta_eve
    return Adversarial((y0, y1) + (1.0,) * (K - 1), tail_yield=1.0)


def _origin_range(channel: ChannelModel, mu: float) -> int:
    """Largest photon number worth tracking at intensity ``mu``."""
    if isinstance(channel, Adversarial) and channel.tail_yield is None:
        return channel.K
    n = int(mu) + 1
    while poisson_pmf(n, mu) > _ORIGIN_TAIL:
        n += 1
    if isinstance(channel, Adversarial):
        n = max(n, channel.K)
    return n


def _click_components(channel: ChannelModel, mu: float):
    """Per photon number: click weight ``p_n y_n`` and the share of clicks with no signal photon."""
    n_max = _origin_range(channel, mu)
    ns = range(n_max + 1)
    pn = np.array([poisson_pmf(n, mu) for n in ns])
    yn = np.array([true_yield(channel, n) for n in ns])
    sn = np.array([signal_survival(channel, n) for n in ns])
    click = pn * yn
    dark_only = channel.y0 * (1.0 - sn)
    with np.errstate(invalid="ignore", divide="ignore"):
        dark_share = np.where(yn > 0, dark_only / yn, 0.0)
    dark_share = np.clip(dark_share, 0.0, 1.0)
    return click, dark_share


def _true_b1(channel: ChannelModel, ber: float) -> float:
    y1 = true_yield(channel, 1)
    if y1 <= 0.0:
        return 0.0
    s1 = signal_survival(channel, 1)
    return (0.5 * channel.y0 * (1.0 - s1) + ber * s1) / y1


def run_session(config: SessionConfig) -> SessionRecord:
    """Simulate one session; identical configs give identical records.

    Draw order: class sizes, detections per class, then for the one-laser
    class the photon-number origin of each click, its dark/signal origin,
    basis sifting, and bit errors (dark-only clicks err with probability 1/2,
    signal clicks with ``intrinsic_ber``).
    """
    rng = make_rng(config.seed)
    ch = config.channel
    sizes = sample_multinomial(config.n_cycles, CLASS_WEIGHTS, rng)
    counts = []
    for j, n_j in enumerate(sizes):
        y_j = expected_detection_probability(ch, j * config.mu_base)
        counts.append(sample_binomial(n_j, y_j, rng))

    mu1 = config.mu_base
    click, dark_share = _click_components(ch, mu1)
    total = click.sum()
    if counts[1] > 0 and total > 0:
        by_origin = sample_multinomial(counts[1], list(click / total), rng)
    else:
        by_origin = [0] * click.size
    sifted = errors = single_sifted = 0
    for n, d_n in enumerate(by_origin):
        dark = sample_binomial(d_n, float(dark_share[n]), rng)
        sift_dark = sample_binomial(dark, 0.5, rng)
        sift_sig = sample_binomial(d_n - dark, 0.5, rng)
        errors += sample_binomial(sift_dark, 0.5, rng)
        errors += sample_binomial(sift_sig, config.intrinsic_ber, rng)
        sifted += sift_dark + sift_sig
        if n == 1:
            single_sifted = sift_dark + sift_sig

    levels = []
    for j, (n_j, c_j) in enumerate(zip(sizes, counts)):
        err = TrialCount(sifted, errors) if j == 1 else None
        levels.append(IntensityLevel(j, j * mu1, TrialCount(n_j, c_j), err))
    truth = SessionTruth(
        y1=true_yield(ch, 1),
        b1=_true_b1(ch, config.intrinsic_ber),
        single_photon_detections=by_origin[1] if len(by_origin) > 1 else 0,
        single_photon_sifted=single_sifted,
    )
    return SessionRecord(tuple(levels), config, truth)


def expected_session(config: SessionConfig) -> SessionRecord:
    """Noise-free record: every count set to its (rounded) expectation."""
    ch = config.channel
    n = config.n_cycles
    sizes = [round(n * w) for w in CLASS_WEIGHTS]
    sizes[2] += n - sum(sizes)
    levels = []
    mu1 = config.mu_base
    click, dark_share = _click_components(ch, mu1)
    per_click_err = 0.0
    if click.sum() > 0:
        err_n = dark_share * 0.5 + (1.0 - dark_share) * config.intrinsic_ber
        per_click_err = float((click * err_n).sum() / click.sum())
    for j, n_j in enumerate(sizes):
        c_j = min(n_j, round(n_j * expected_detection_probability(ch, j * mu1)))
        err = None
        if j == 1:
            s1 = round(0.5 * c_j)
            err = TrialCount(s1, min(s1, round(s1 * per_click_err)))
        levels.append(IntensityLevel(j, j * mu1, TrialCount(n_j, c_j), err))
    p1 = click[1] / click.sum() if click.size > 1 and click.sum() > 0 else 0.0
    c1 = levels[1].trials.c
    truth = SessionTruth(
        y1=true_yield(ch, 1),
        b1=_true_b1(ch, config.intrinsic_ber),
        single_photon_detections=round(c1 * p1),
        single_photon_sifted=round(0.5 * c1 * p1),
    )
    return SessionRecord(tuple(levels), config, truth)


# --- record file format -----------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _channel_fields(ch: ChannelModel) -> list[str]:
    if isinstance(ch, Beamsplitter):
        return ["channel=beamsplitter", f"eta={_fmt(ch.eta)}", f"y0={_fmt(ch.y0)}"]
    out = ["channel=custom", "yields=" + ",".join(_fmt(v) for v in ch.yields)]
    if ch.tail_yield is not None:
        out.append(f"tail_yield={_fmt(ch.tail_yield)}")
    return out


def write_record(record: SessionRecord, fh: TextIO) -> None:
    """Header line with the configuration, then ``j mu N_j C_j [S_1 E_1]`` per level."""
    head = [f"# {_HEADER_TAG}"]
    cfg = record.config
    if cfg is not None:
        head += [
            f"n_cycles={cfg.n_cycles}",
            f"mu_base={_fmt(cfg.mu_base)}",
            f"epsilon={_fmt(cfg.epsilon)}",
            *_channel_fields(cfg.channel),
            f"intrinsic_ber={_fmt(cfg.intrinsic_ber)}",
            f"seed={cfg.seed}",
        ]
    fh.write(" ".join(head) + "\n")
    for lv in record.levels:
        fields = [str(lv.j), _fmt(lv.mu), str(lv.trials.n), str(lv.trials.c)]
        if lv.error_trials is not None:
            fields += [str(lv.error_trials.n), str(lv.error_trials.c)]
        fh.write(" ".join(fields) + "\n")


def _parse_header(line: str) -> SessionConfig | None:
    tokens = line.lstrip("#").split()
    if not tokens or tokens[0] != _HEADER_TAG:
        raise RecordFormatError(f"header must start with '# {_HEADER_TAG}'")
    kv = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise RecordFormatError(f"malformed header field {tok!r}")
        k, v = tok.split("=", 1)
        kv[k] = v
    if not kv:
        return None
    try:
        if kv.get("channel", "beamsplitter") == "beamsplitter":
            channel: ChannelModel = Beamsplitter(float(kv["eta"]), float(kv.get("y0", 0.0)))
        else:
            tail = kv.get("tail_yield")
            channel = Adversarial(
                tuple(float(v) for v in kv["yields"].split(",")),
                None if tail is None else float(tail),
            )
        return SessionConfig(
            n_cycles=int(kv["n_cycles"]),
            mu_base=float(kv["mu_base"]),
            channel=channel,
            epsilon=float(kv.get("epsilon", 1e-7)),
            intrinsic_ber=float(kv.get("intrinsic_ber", 0.0)),
            seed=int(kv.get("seed", 0)),
        )
    except (KeyError, ValueError) as exc:
        raise RecordFormatError(f"bad header: {exc}") from exc


def read_record(fh: Iterable[str]) -> SessionRecord:
    """Parse the format written by :func:`write_record`.

    The header may carry only the tag, so experimental counts can be fed in
    without a simulation configuration.
    """
    lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("#"):
        raise RecordFormatError("missing header line")
    config = _parse_header(lines[0])
    levels = []
    for ln in lines[1:]:
        if ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) not in (4, 6):
            raise RecordFormatError(f"level line needs 4 or 6 fields: {ln!r}")
        try:
            j, mu, n_j, c_j = int(parts[0]), float(parts[1]), int(parts[2]), int(parts[3])
            err = TrialCount(int(parts[4]), int(parts[5])) if len(parts) == 6 else None
            levels.append(IntensityLevel(j, mu, TrialCount(n_j, c_j), err))
        except ValueError as exc:
            raise RecordFormatError(f"bad level line {ln!r}: {exc}") from exc
    if not levels:
        raise RecordFormatError("record has no level lines")
    return SessionRecord(tuple(levels), config)


def with_seed(config: SessionConfig, seed: int) -> SessionConfig:
    return replace(config, seed=seed)
