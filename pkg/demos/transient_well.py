"""Transient single-phase depletion towards a producing well.

Four vertical channels carry mixture-distributed permeabilities.  One
realisation is simulated, then the cumulative production is estimated
over the random channels.
"""
import numpy as np

from sfvuq.cases import case2
from sfvuq.uq import frozen_samples, run_study, sample_coefficients, simulate

case = case2()
samples = frozen_samples(case, 256, seed=1)

coeffs = sample_coefficients(case, samples).take(0)
traj = simulate(case, coeffs)
p = np.array([s.pressure.mean() for s in traj.states])
q = np.array([s.well_rates.sum() for s in traj.states[1:]])
print(f"mean pressure {p[0] / 1e6:.2f} -> {p[-1] / 1e6:.2f} MPa over {len(q)} steps")
print(f"cumulative production {np.sum(q) * case.dt:.1f} m3")

for method in ("MC", "SFV-kmeans"):
    est = run_study(case, method, 32, samples, seed=1)
    print(f"{method:11s} mean {est.mean:.2f}  std {est.std:.2f}")
