# ## Which sign in the Dirichlet delta-method covariance?
#
# Two candidate conventions. The algebraic route rebuilds the level-one
# variance from each; the Monte Carlo route samples Dirichlet vectors.

from hdphom import asymptotics as asy
from hdphom.montecarlo import sigma_star_monte_carlo

for conv in ("plus", "minus"):
    print(conv)
    print(asy.covariance_sigma_star(3, 1.0, conv).entries)

print(asy.sigma_star_sign_residuals(3, 0.7, 2.0))

# off d = 1 the denominator power matters, the numeric Jacobian settles it

print(asy.sigma_star_delta_method(3, 2.5))
print(asy.covariance_sigma_star(3, 2.5, "plus").entries)

# fewer replicates than `verify` uses; still decisive

oracle = sigma_star_monte_carlo(replicates=2000)
print(oracle)
