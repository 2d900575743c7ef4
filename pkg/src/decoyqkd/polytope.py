"""Confidence region over the photon-number yields.

Each intensity level contributes an upper and a lower bound on its truncated
Poisson mixture of yields; together with ``0 <= y_k <= 1`` these halfspaces
cut out a convex polytope that contains the true yields with high confidence.
All rows are stored in the single form ``coefficients . y <= bound``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .photonics import truncated_series_coefficients
from .stats import CiMode, Interval, TrialCount, binomial_confidence_interval

__all__ = [
    "IntensityLevel",
    "ConstraintSet",
    "VacuousTruncationError",
    "build_constraints",
    "box_constraints",
    "contains",
    "UPPER_DETECTION",
    "LOWER_DETECTION",
    "BOX_LOW",
    "BOX_HIGH",
]

UPPER_DETECTION = "upper-detection"
LOWER_DETECTION = "lower-detection"
BOX_LOW = "box-low"
BOX_HIGH = "box-high"
OTHER = "other"

# Above this tail mass the dropped part of the series swamps the constraint.
VACUOUS_TAIL = 0.5
CONTAINS_TOL = 1e-9


class VacuousTruncationError(ValueError):
    """Truncation order too small for the strongest intensity level."""

    def __init__(self, level: "IntensityLevel", K: int, tail: float):
        self.level = level
        self.K = K
        self.tail = tail
        super().__init__(
            f"K={K} leaves Poisson tail mass {tail:.3g} > {VACUOUS_TAIL} "
            f"at level j={level.j} (mu={level.mu:g}); increase K"
        )


@dataclass(frozen=True)
class IntensityLevel:
    """One pulse class: ``j`` lasers fired together at total mean ``mu``.

    ``error_trials`` holds (sifted detections, bit errors) for the class with
    definite polarization.
    """

    j: int
    mu: float
    trials: TrialCount
    error_trials: TrialCount | None = None

    def __post_init__(self) -> None:
        if self.mu < 0:
            raise ValueError("mean photon number must be nonnegative")


@dataclass(frozen=True)
class ConstraintSet:
    """Halfspaces ``A y <= b`` over ``dimension`` yields, one tag per row."""

    A: np.ndarray
    b: np.ndarray
    tags: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"{A.shape[0]} coefficient rows but {b.shape[0]} bounds")
        tags = tuple(self.tags) if self.tags else (OTHER,) * A.shape[0]
        if len(tags) != A.shape[0]:
            raise ValueError("one provenance tag per halfspace is required")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "tags", tags)

    @property
    def dimension(self) -> int:
        return self.A.shape[1]

    def __len__(self) -> int:
        return self.A.shape[0]

    def rows(self, tag: str) -> tuple[np.ndarray, np.ndarray]:
        mask = np.array([t == tag for t in self.tags], dtype=bool)
        return self.A[mask], self.b[mask]

    def with_halfspaces(self, A: np.ndarray, b: Sequence[float], tag: str = OTHER) -> "ConstraintSet":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return ConstraintSet(
            np.vstack([self.A, A]),
            np.concatenate([self.b, np.asarray(b, dtype=float).reshape(-1)]),
            self.tags + (tag,) * A.shape[0],
        )

    def dump(self, fh: TextIO) -> None:
        """Write ``dim m`` then one ``coefficients... bound`` line per row."""
        fh.write(f"{self.dimension} {len(self)}\n")
        for row, bound in zip(self.A, self.b):
            fh.write(" ".join(repr(float(v) + 0.0) for v in (*row, bound)) + "\n")

    @classmethod
    def load(cls, fh: Iterable[str]) -> "ConstraintSet":
        lines = [ln for ln in (raw.strip() for raw in fh) if ln and not ln.startswith("#")]
        if not lines:
            raise ValueError("empty halfspace file")
        head = lines[0].split()
        if len(head) != 2:
            raise ValueError("first line must be 'dim m'")
        dim, m = int(head[0]), int(head[1])
        if len(lines) - 1 != m:
            raise ValueError(f"expected {m} halfspace lines, found {len(lines) - 1}")
        data = np.array([[float(v) for v in ln.split()] for ln in lines[1:]], dtype=float).reshape(m, -1)
        if data.shape[1] != dim + 1:
            raise ValueError(f"halfspace lines need {dim + 1} values")
        return cls(data[:, :dim], data[:, dim])


def box_constraints(dimension: int) -> ConstraintSet:
    eye = np.eye(dimension)
    return ConstraintSet(
        np.vstack([-eye, eye]),
        np.concatenate([np.zeros(dimension), np.ones(dimension)]),
        (BOX_LOW,) * dimension + (BOX_HIGH,) * dimension,
    )


def level_interval(level: IntensityLevel, epsilon: float, mode: CiMode = "paper") -> Interval:
    return binomial_confidence_interval(level.trials, epsilon, mode)


def build_constraints(
    levels: Sequence[IntensityLevel],
    K: int,
    epsilon: float,
    mode: CiMode = "paper",
) -> ConstraintSet:
    """Halfspace description of the confidence region over ``y_0..y_K``.

    For level ``j`` with detection bounds ``[Y-, Y+]`` and Poisson weights
    ``c_k``, the dropped series tail is nonnegative, so

        sum_k c_k y_k <= Y+
        sum_k c_k (1 - y_k) <= 1 - Y-   i.e.   -sum_k c_k y_k <= tail - Y-

    where ``tail = 1 - sum_k c_k``. Upper-detection and lower-detection rows
    come first (in level order), followed by the ``2(K+1)`` box rows.
    """
    if not levels:
        raise ValueError("at least one intensity level is required")
    if K < 1:
        raise ValueError("truncation order K must be at least 1")
    rows, bounds, tags = [], [], []
    for level in levels:
        if level.trials.n < 1:
            raise ValueError(f"level j={level.j} has no pulses")
        coeffs, tail = truncated_series_coefficients(level.mu, K)
        if tail > VACUOUS_TAIL:
            raise VacuousTruncationError(level, K, tail)
        ci = level_interval(level, epsilon, mode)
        rows += [coeffs, -coeffs]
        bounds += [ci.hi, tail - ci.lo]
        tags += [UPPER_DETECTION, LOWER_DETECTION]
    box = box_constraints(K + 1)
    return ConstraintSet(
        np.vstack([np.array(rows), box.A]),
        np.concatenate([np.array(bounds), box.b]),
        tuple(tags) + box.tags,
    )


def contains(cs: ConstraintSet, point: Sequence[float], tol: float = CONTAINS_TOL) -> bool:
    """True iff ``point`` satisfies every halfspace within ``tol``."""
    y = np.asarray(point, dtype=float)
    if y.shape != (cs.dimension,):
        raise ValueError(f"point has shape {y.shape}, constraint set has dimension {cs.dimension}")
    return bool(np.all(cs.A @ y <= cs.b + tol))
