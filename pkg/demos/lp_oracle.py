"""
Checking the simplex against brute-force vertex enumeration
===========================================================

With a small truncation order the confidence region has few enough
halfspaces that every vertex can be listed. The extremes of y1 over the
vertices must match what the simplex reports.
"""
import numpy as np

from decoyqkd import Beamsplitter, SessionConfig, run_session
from decoyqkd.lp import Simplex, enumerate_vertices
from decoyqkd.polytope import build_constraints

record = run_session(SessionConfig(10**6, 0.5, Beamsplitter(0.1, 3e-6), seed=11))
cs = build_constraints(record.levels, K=3, epsilon=1e-7)

vertices = enumerate_vertices(cs)
print(f"{len(cs)} halfspaces, {len(vertices)} vertices in dimension {cs.dimension}")

lp = Simplex(cs)
e1 = np.eye(cs.dimension)[1]
for sense, ref in (("min", vertices[:, 1].min()), ("max", vertices[:, 1].max())):
    sol = lp.solve(e1, sense)
    print(f"{sense} y1: simplex {sol.value:.12f}  vertices {ref:.12f}  diff {abs(sol.value - ref):.1e}")
