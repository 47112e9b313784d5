# ## Asymptotic variance as a function of the concentration ratio
#
# c = alpha / beta. Small c: level one dominates. Large c: the top level
# degenerates and the one-level limit takes over.

import numpy as np

from hdphom import asymptotics as asy

cs = np.geomspace(1e-2, 1e3, 11)

# ### HDP, orders 2..4

for m in (2, 3, 4):
    print(f"m={m}")
    for c in cs:
        v = asy.variance_hdp(m, float(c))
        print(f"  c={c:9.3g}  level1={v.level1:10.4f}  level2={v.level2:10.4f}  total={v.total:10.4f}")
    print(f"  one-level limit {asy.one_level_limit(m)}")

# m=2 has a closed form; it crosses 2 at the golden ratio

print(asy.variance_hdp_m2_closed(1.0), asy.golden_ratio_root())

# ### Finite-dimensional top level, c = 1

for d in (0.01, 0.1, 1.0, 10.0):
    print(d, asy.variance_fdhdp(2, 1.0, d).total)
print("d -> 0 recovers", asy.variance_hdp(2, 1.0).total)

# ### Several groups sharing the top level

for L in (1, 2, 3, 5):
    v = asy.variance_groups(2, L, 1.0)
    print(L, round(v.total, 6), round(v.correction, 6))
