"""
Two ways to bound a detection probability
=========================================

The default bound solves ``binom(n, c) Y^c (1-Y)^(n-c) = epsilon`` on each
side of ``c/n``. The alternative is the Clopper-Pearson interval with
``epsilon`` in each tail. This script compares them.
"""
from decoyqkd.stats import TrialCount, binomial_confidence_interval

cases = [(100, 0), (10**4, 50), (10**6, 10**3), (10**9, 10**6)]
for eps in (1e-7, 1e-14):
    print(f"epsilon = {eps:g}")
    for n, c in cases:
        t = TrialCount(n, c)
        term = binomial_confidence_interval(t, eps, mode="paper")
        tail = binomial_confidence_interval(t, eps, mode="tail")
        print(f"  n={n:<10d} c={c:<8d} term [{term.lo:.4e}, {term.hi:.4e}]"
              f"   tails [{tail.lo:.4e}, {tail.hi:.4e}]")
    print()

# With no successes the term equation has a closed form: 1 - eps^(1/n).
ci = binomial_confidence_interval(TrialCount(100, 0), 1e-7)
print(f"c=0, n=100: upper end {ci.hi:.8f} vs closed form {1 - 1e-7 ** (1 / 100):.8f}")

# A single binomial term never exceeds about 1/sqrt(2 pi n p q). When that
# peak is below epsilon the equation has no solution and the interval
# collapses onto c/n. At loose epsilon this is common, which is why the
# tail mode is the one with a coverage guarantee there.
for n in (10, 100, 10**4):
    t = TrialCount(n, n // 2)
    print(f"epsilon=0.05 n={n:<6d} term interval {binomial_confidence_interval(t, 0.05)}")
