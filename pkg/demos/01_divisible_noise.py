"""Splitting Discrete Laplace noise across parties.

Every party draws the difference of two Polya variables. Summed over all
parties the result is exactly c independent Discrete Laplace draws, whatever
the number of parties. The script compares a Monte Carlo histogram with the
exact convolution.
"""

import math

import numpy as np

from shuffleparity.counting import CountingConfig, simulate_counts
from shuffleparity.noise import dlap_convolution_pmf, dlap_variance, sample_share_sums, tv_to_pmf
from shuffleparity.shuffle import PartyStatus

rng = np.random.default_rng(7)
eps, c = 1.0, 3

support, pmf = dlap_convolution_pmf(eps, c)
print(f"exact law of {c} summed DLap({1 / eps:g}) draws; variance {c * dlap_variance(eps):.4f}")

for n in (1, 10, 100):
    sums = sample_share_sums(n, eps, c, 200_000, rng)
    print(f"n={n:>3}: TV to exact law = {tv_to_pmf(sums, support, pmf):.4f}, sample variance {sums.var():.4f}")

# Only a third of the parties send anything: one full DLap draw survives.
n = 30
cfg = CountingConfig(n, eps, c=c)
honest = PartyStatus.drop_random(n, n - n // c, rng).honest
err = simulate_counts(np.zeros(n, dtype=np.int64), cfg, 200_000, rng, honest=honest)
print(f"{honest.sum()} of {n} parties honest: noise variance {err.var():.4f} "
      f"(one DLap draw has {dlap_variance(eps):.4f})")

centre = len(support) // 2
print("\npmf near zero:")
for i in range(-4, 5):
    print(f"  {i:+d}  {pmf[centre + i]:.5f}")
print(f"largest neighbour ratio within |i|<=4: "
      f"{max(pmf[centre + i] / pmf[centre + i + 1] for i in range(-5, 4)):.4f} vs e^eps = {math.exp(eps):.4f}")
