"""
Analyzing one simulated session
===============================

Simulate a four-laser session over an honest lossy channel, write it in the
record format the CLI reads, and run the full bound pipeline on it.
"""
import io

from decoyqkd import AnalysisConfig, Beamsplitter, SessionConfig, analyze_session, run_session
from decoyqkd.photonics import true_yield
from decoyqkd.polytope import build_constraints
from decoyqkd.sim import read_record, write_record

# A 10% channel with a small dark-count rate; ten million clock cycles.
channel = Beamsplitter(eta=0.1, y0=3e-6)
config = SessionConfig(n_cycles=10**7, mu_base=0.5, channel=channel, intrinsic_ber=0.01, seed=7)
record = run_session(config)

# Each class j fired j lasers at once; its mean photon number is j * mu.
for level in record.levels:
    t = level.trials
    print(f"j={level.j} mu={level.mu:.2f} sent={t.n:>9d} clicks={t.c:>8d} rate={t.rate:.5f}")

# The record format is plain text, so experimental counts can be fed in too.
buf = io.StringIO()
write_record(record, buf)
print()
print(buf.getvalue())
record = read_record(io.StringIO(buf.getvalue()))

# Bound y1 over the confidence region, then derive the single-photon
# fraction, the count bound and the error-rate bound.
report = analyze_session(record, AnalysisConfig(epsilon=1e-7))
print(report.to_text())
print(f"true y1 = {true_yield(channel, 1):.6f} lies in "
      f"[{report.y1_bounds.lo:.6f}, {report.y1_bounds.hi:.6f}]")

# The region itself: 2 rows per level plus the 0 <= y_k <= 1 box.
cs = build_constraints(record.levels, K=11, epsilon=1e-7)
print(f"region: {len(cs)} halfspaces in dimension {cs.dimension}")
