"""Error against budget for MC and the two clustering strategies.

The full sample set gives the reference; errors are fitted on a
log-log scale.  Clustered estimates should fall off roughly like
1/budget, Monte Carlo like 1/sqrt(budget) (noisily).
"""
from sfvuq.cases import case1
from sfvuq.uq import convergence_study, frozen_samples

case = case1()
samples = frozen_samples(case, 4096, seed=0)
budgets = [4, 8, 16, 32, 64, 128, 256]
recs = convergence_study(case, budgets, ["MC", "SFV-kmeans", "SFV-tensor"], samples, seed=0)
for name, rec in recs.items():
    errs = "  ".join(f"{e:.1e}" for e in rec.mean_errors)
    print(f"{name:11s} slope {rec.mean_slope:+.2f}  {errs}")
