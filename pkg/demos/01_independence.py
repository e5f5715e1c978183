"""Which bootstrap works for the Kolmogorov-Smirnov independence test?

Run with ``python3 demos/01_independence.py``; takes about half a minute.
"""
import numpy as np

from boottest import DGPSpec, Combo, FunctionalSpec, Sample2D, StudyConfig, TestSpec, run_study, run_test
from boottest.exceptions import IncompatiblePair

rng = np.random.default_rng(1)

# A dependent sample: Y = X + noise
x = rng.normal(size=60)
y = 0.5 * x + rng.normal(size=60)
sample = Sample2D(x, y)

# Two ways to calibrate the same statistic.
# The empirical bootstrap resamples pairs, so its replicates have to be centred
# at the observed phi(H_n).  Resampling the margins separately already satisfies
# the null, and the bootstrap statistic is the same formula as the test statistic.
for scheme, stat in [("empirical", "centred"), ("independence", "equivalent")]:
    res = run_test(TestSpec("independence", scheme, stat, B=200, seed=7), sample)
    print(f"{scheme:>13} + {stat:<10}  T_n = {res.t_obs:.3f}  p = {res.p_value:.4f}")

# Swapping the pairing is refused, because it does not give a consistent test.
try:
    TestSpec("independence", "empirical", "equivalent")
except IncompatiblePair as exc:
    print("refused:", exc)

# With allow_invalid the broken pairings can still be studied.  Both of them
# hardly ever reject, whether or not the null holds.
config = StudyConfig(
    FunctionalSpec("independence"),
    dgps=(DGPSpec.parse("regression:b=0"), DGPSpec.parse("regression:b=1")),
    sample_sizes=(30,),
    combos=tuple(Combo.parse(c) for c in ["empirical:centred", "independence:equivalent",
                                           "empirical:equivalent", "independence:centred"]),
    nsims=100,
    seed=3,
    allow_invalid=True,
)
print()
print(f"{'dgp':<18}{'combo':<36}{'rate':>6}   95% CI")
for row in run_study(config):
    combo = f"{row.scheme}/{row.statistic}"
    print(f"{row.dgp:<18}{combo:<36}{row.rate:>6.2f}   [{row.ci_lo:.2f}, {row.ci_hi:.2f}]")
