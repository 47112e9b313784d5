# ## Monte Carlo check of the HDP central limit
#
# Small replicate count so it runs in well under a minute; bump
# `replicates` for tighter standard errors.

import numpy as np

from hdphom import asymptotics as asy
from hdphom.montecarlo import ExperimentConfig, run_clt

cfg = ExperimentConfig(model="hdp", m=2, alpha=200.0, beta=200.0,
                       replicates=2000, root_seed=7, centering="exact-mean")
rep = run_clt(cfg)
print(rep.to_text())

# predicted vs observed

print("predicted", asy.variance_hdp(2, cfg.c).total, "observed", rep.variance)

# a crude text histogram of the scaled statistic

counts, edges = np.histogram(rep.scaled, bins=15)
for k, e in zip(counts, edges):
    print(f"{e:6.2f} {'#' * (k // 10)}")

# the right tail is heavier: skewness shrinks like beta**-0.5

print("skewness", rep.skewness)
