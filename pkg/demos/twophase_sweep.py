"""Water injection into an oil-filled channel system (IMPES).

Water enters through the top-right corner and oil is produced at the
bottom-left.  The swept volume is tracked over time for one draw.  A
coarsened 10x10 grid and a shorter horizon keep the run short.
"""
import numpy as np

from sfvuq.cases import case3
from sfvuq.uq import frozen_samples, sample_coefficients, simulate, swept_volume_history

case = case3(nx=10, ny=10, n_steps=300)
samples = frozen_samples(case, 8, seed=3)
traj = simulate(case, sample_coefficients(case, samples).take(0))
swept = swept_volume_history(traj, case.grid, case.props)
s = traj.final.saturation_w
print(f"water saturation range [{s.min():.3f}, {s.max():.3f}]")
for k in (0, 75, 150, 300):
    print(f"step {k:4d}  swept volume {swept[k]:10.1f} m3")
print(np.round(s.reshape(case.ny, case.nx)[::-1], 2))
