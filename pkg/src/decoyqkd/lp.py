"""Linear optimization over a :class:`~decoyqkd.polytope.ConstraintSet`.

The production path is a dense two-phase tableau simplex with Bland's
anti-cycling rule. :func:`enumerate_vertices` is a brute-force halfspace
intersection used as an independent oracle in tests.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .polytope import ConstraintSet

__all__ = ["LpSolution", "Simplex", "optimize", "enumerate_vertices", "LpNumericalError"]

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
DEDUP_TOL = 1e-8
MAX_ORACLE_DIM = 8

Sense = Literal["min", "max"]
Status = Literal["optimal", "infeasible", "unbounded"]


class LpNumericalError(RuntimeError):
    """The simplex failed to terminate or lost feasibility numerically."""


@dataclass(frozen=True)
class LpSolution:
    value: float
    point: np.ndarray | None
    status: Status

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class Simplex:
    """Prepared standard form of ``A y <= b`` for repeated optimization.

    Rows with a single nonzero coefficient that bound a variable from below
    are absorbed into a shift ``y = lower + x``; variables with no lower bound
    are split into a difference of nonnegative parts. Columns are scaled by
    their largest coefficient among multi-variable rows and every row is then
    normalized to unit max-norm. Phase 1 runs once; each call to
    :meth:`solve` starts phase 2 from the stored feasible basis.
    """

    def __init__(self, cs: ConstraintSet):
        A = np.array(cs.A, dtype=float)
        b = np.array(cs.b, dtype=float)
        m, d = A.shape
        self.cs = cs
        self.dim = d

        nnz = np.count_nonzero(A, axis=1)
        single = nnz == 1
        lower = np.full(d, -np.inf)
        drop = np.zeros(m, dtype=bool)
        for i in np.flatnonzero(single):
            k = int(np.flatnonzero(A[i])[0])
            if A[i, k] < 0:
                lower[k] = max(lower[k], b[i] / A[i, k])
                drop[i] = True
        # A row that bounds from below gets absorbed only if it is the tightest one.
        for i in np.flatnonzero(drop):
            k = int(np.flatnonzero(A[i])[0])
            if b[i] / A[i, k] < lower[k]:
                drop[i] = False
        keep = ~drop
        multi = keep & ~single
        colscale = np.ones(d)
        if multi.any():
            mx = np.abs(A[multi]).max(axis=0)
            colscale = np.where(mx > 0, mx, 1.0)
        self.lower = lower
        self.colscale = colscale

        finite = np.isfinite(lower)
        shift = np.where(finite, lower, 0.0)
        A = A[keep]
        b = b[keep] - A @ shift
        A = A / colscale  # x' = colscale * x
        # Split free variables into x+ - x-.
        free = np.flatnonzero(~finite)
        self.free = free
        if free.size:
            A = np.hstack([A, -A[:, free]])
        rowscale = np.abs(A).max(axis=1)
        rowscale[rowscale == 0] = 1.0
        A = A / rowscale[:, None]
        b = b / rowscale
        self.shift = shift
        self.A_std = A
        self.b_std = b
        self.n_x = A.shape[1]
        self.m = A.shape[0]
        self._phase1()

    # -- tableau helpers -------------------------------------------------

    def _pivot(self, T: np.ndarray, basis: list[int], r: int, j: int) -> None:
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        basis[r] = j

    def _iterate(self, T: np.ndarray, basis: list[int], ncols: int) -> Status:
        """Bland's rule on the last row of ``T`` over the first ``ncols`` columns."""
        max_iter = 50 * (T.shape[0] + ncols) + 1000
        for _ in range(max_iter):
            rc = T[-1, :ncols]
            cand = np.flatnonzero(rc < -PIVOT_TOL)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0])
            col = T[:-1, j]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / col[pos]
            ratios = np.maximum(ratios, 0.0)
            best = ratios.min()
            ties = pos[ratios <= best * (1 + 1e-9) + 1e-15]
            r = int(min(ties, key=lambda i: basis[i]))
            self._pivot(T, basis, r, j)
        raise LpNumericalError("simplex iteration limit reached")

    def _phase1(self) -> None:
        A, b = self.A_std, self.b_std
        m, n = A.shape
        sign = np.where(b < 0, -1.0, 1.0)
        art_rows = np.flatnonzero(b < 0)
        n_art = art_rows.size
        ncols = n + m + n_art
        T = np.zeros((m + 1, ncols + 1))
        T[:m, :n] = A * sign[:, None]
        T[:m, n:n + m] = np.diag(sign)
        T[:m, -1] = b * sign
        basis = [n + i for i in range(m)]
        for a, i in enumerate(art_rows):
            T[i, n + m + a] = 1.0
            basis[i] = n + m + a
        if n_art:
            T[-1, :] = -T[art_rows].sum(axis=0)
            T[-1, n + m:n + m + n_art] = 0.0
            self._iterate(T, basis, ncols)
            infeas = -T[-1, -1]
            if infeas > FEAS_TOL:
                self.feasible = False
                self.infeasibility = float(infeas)
                return
            # Drive remaining artificials out of the basis.
            keep_rows = []
            for r in range(m):
                if basis[r] >= n + m:
                    row = T[r, :n + m]
                    cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                    if cand.size:
                        self._pivot(T, basis, r, int(cand[0]))
                        keep_rows.append(r)
                else:
                    keep_rows.append(r)
            T = np.vstack([T[keep_rows], T[-1:]])
            basis = [basis[r] for r in keep_rows]
            T = np.delete(T, np.s_[n + m:n + m + n_art], axis=1)
        self.feasible = True
        self.infeasibility = 0.0
        self.T1 = T
        self.basis1 = basis

    # -- solving -----------------------------------------------------------

    def _to_original(self, x_std: np.ndarray) -> np.ndarray:
        d = self.dim
        x = x_std[:d].copy()
        if self.free.size:
            x[self.free] -= x_std[d:]
        return x / self.colscale + self.shift

    def _polish(self, basis: list[int]) -> np.ndarray | None:
        """Basic solution recomputed from the untouched standard-form data."""
        n, m = self.n_x, self.m
        full = np.hstack([self.A_std, np.eye(m)])
        cols = np.array(basis)
        B = full[:, cols]
        if B.shape[0] != B.shape[1]:
            # Redundant rows were dropped; solve in the least-squares sense.
            xb, *_ = np.linalg.lstsq(B, self.b_std, rcond=None)
        else:
            try:
                xb = np.linalg.solve(B, self.b_std)
            except np.linalg.LinAlgError:
                return None
        z = np.zeros(n + m)
        z[cols] = xb
        return z[:n]

    def solve(self, objective: Sequence[float], sense: Sense = "min") -> LpSolution:
        c = np.asarray(objective, dtype=float)
        if c.shape != (self.dim,):
            raise ValueError(f"objective needs {self.dim} entries, got {c.shape}")
        if not self.feasible:
            return LpSolution(np.nan, None, "infeasible")
        sgn = 1.0 if sense == "min" else -1.0
        if sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
        cw = sgn * c / self.colscale
        if self.free.size:
            cw = np.concatenate([cw, -cw[self.free]])
        T = self.T1.copy()
        basis = list(self.basis1)
        n, m = self.n_x, self.m
        ncols = n + m
        cost = np.zeros(ncols)
        cost[:n] = cw
        T[-1, :ncols] = cost
        T[-1, -1] = 0.0
        for r, j in enumerate(basis):
            if cost[j] != 0.0:
                T[-1] -= cost[j] * T[r]
        status = self._iterate(T, basis, ncols)
        if status == "unbounded":
            return LpSolution(-sgn * np.inf, None, "unbounded")

        z = np.zeros(ncols)
        z[basis] = T[:-1, -1]
        candidates = [self._to_original(z[:n])]
        polished = self._polish(basis)
        if polished is not None:
            candidates.insert(0, self._to_original(polished))
        best = None
        for y in candidates:
            viol = float(np.max(self.cs.A @ y - self.cs.b, initial=0.0))
            if best is None or viol < best[1] - 1e-15:
                best = (y, viol)
            if viol <= FEAS_TOL:
                best = (y, viol)
                break
        y, viol = best
        if viol > FEAS_TOL:
            logger.warning("simplex optimum violates constraints by %.3g", viol)
        return LpSolution(float(c @ y), y, "optimal")


def optimize(cs: ConstraintSet, objective: Sequence[float], sense: Sense = "min") -> LpSolution:
    """Optimize a linear objective over ``cs``.

    Parameters
    ----------
    cs : ConstraintSet
    objective : sequence of float
        One coefficient per yield.
    sense : {"min", "max"}

    Returns
    -------
    LpSolution
        ``status`` is ``"infeasible"`` when phase 1 cannot satisfy every
        halfspace within ``FEAS_TOL``; callers treat that as a session abort.
    """
    return Simplex(cs).solve(objective, sense)


def enumerate_vertices(cs: ConstraintSet, chunk: int = 20000) -> np.ndarray:
    """All vertices of ``cs`` by solving every ``dimension``-subset of rows.

    Returns an array of shape ``(n_vertices, dimension)``. Only meant as a
    test oracle, so dimension is capped at ``MAX_ORACLE_DIM``.
    """
    d = cs.dimension
    if d > MAX_ORACLE_DIM:
        raise ValueError(f"vertex enumeration limited to dimension <= {MAX_ORACLE_DIM}, got {d}")
    A, b = cs.A, cs.b
    combos = itertools.combinations(range(len(cs)), d)
    found: list[np.ndarray] = []
    while True:
        idx = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if idx.size == 0:
            break
        As = A[idx]
        bs = b[idx]
        sv = np.linalg.svd(As, compute_uv=False)
        ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1e-300)
        if not ok.any():
            continue
        xs = np.linalg.solve(As[ok], bs[ok][..., None])[..., 0]
        feas = np.all(xs @ A.T <= b + FEAS_TOL, axis=1)
        found.extend(xs[feas])
    verts: list[np.ndarray] = []
    for x in found:
        if not any(np.max(np.abs(x - v)) <= DEDUP_TOL for v in verts):
            verts.append(x)
    return np.array(verts).reshape(-1, d)
