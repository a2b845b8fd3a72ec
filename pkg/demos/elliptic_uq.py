"""Steady single-phase flow with a two-parameter random permeability.

The left and right halves of a 20x20 block each get a truncated-normal
permeability.  We estimate the mean and spread of the pressure in the
bottom-right cell with plain Monte Carlo and with clustered stochastic
finite volumes (k-means), using the same number of solves.
"""
import numpy as np

from sfvuq.cases import case1
from sfvuq.uq import frozen_samples, run_study

case = case1()
samples = frozen_samples(case, 4096, seed=0)
print(f"grid {case.nx}x{case.ny}, {samples.n} base samples, dim {samples.dim}")

# a reference from every base sample
ref = run_study(case, "MC", samples.n, samples)
print(f"reference  mean {ref.mean:.6f}  std {ref.std:.6f}")

for budget in (8, 32, 128):
    mc = run_study(case, "MC", budget, samples)
    sfv = run_study(case, "SFV-kmeans", budget, samples, seed=0)
    print(f"budget {budget:4d}  MC err {abs(mc.mean - ref.mean):.2e}"
          f"  SFV err {abs(sfv.mean - ref.mean):.2e}")
