"""
Decoy pulses against the conventional choice of intensity
=========================================================

Without decoys the safe choice is ``mu = eta``, giving ``eta^2 / 2``
guaranteed single-photon detections per cycle. With decoys the guaranteed
rate scales like ``eta``.
"""
from decoyqkd.sweep import compare_rates, loglog_slope, mu_grid

etas = (1e-4, 1e-3, 1e-2, 1e-1)
comps = compare_rates(etas, n_cycles=10**9, grid=mu_grid(0.05, 1.5, 0.05))

print(f"{'eta':>8} {'conventional':>13} {'decoy':>11} {'mu*':>5} {'f':>6} {'ratio':>9}")
for c in comps:
    print(f"{c.eta:8.0e} {c.conventional_rate:13.3e} {c.decoy_rate:11.3e} "
          f"{c.optimal_mu_decoy:5.2f} {c.f:6.3f} {c.decoy_rate / c.conventional_rate:9.1f}")

print()
print(f"log-log slope, decoy:        {loglog_slope(etas, [c.decoy_rate for c in comps]):.3f}")
print(f"log-log slope, conventional: {loglog_slope(etas, [c.conventional_rate for c in comps]):.3f}")
