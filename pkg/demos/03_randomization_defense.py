"""Why per-query model randomization hurts bisection but not averaging.

Instead of flipping labels at a fixed rate, the server draws a fresh normal
vector w* + sigma * noise for every query. Near the decision boundary the
answer is a coin flip; far away it is almost always honest. Bisection lives
on the boundary, so it collapses. The averaging attack never goes near the
boundary: it sums label-weighted sphere samples, and the expectation of
that sum points along w* no matter the noise, provided the attacker's
noise estimate sigma_hat is not wildly below the truth.
"""

import numpy as np

import mexlab as mx

D, EPS, SIGMA = 64, 1e-4, 0.1

w_star = mx.sample_unit_sphere(D, np.random.default_rng(31))

clean_oracle = mx.Oracle(
    mx.Halfspace(w_star), mx.NoDefense(), mx.QueryLedger("0.0001"),
    rng=np.random.default_rng(1),
)
clean = mx.qs_extract_halfspace(clean_oracle, D, EPS)
defended_oracle = mx.Oracle(
    mx.Halfspace(w_star),
    mx.ModelRandomization(SIGMA),
    mx.QueryLedger("0.0001"),
    rng=np.random.default_rng(2),
)
defended = mx.qs_extract_halfspace(defended_oracle, D, EPS)
print("bisection, no defense:      %5d queries, err2 %.2e"
      % (clean.queries_used, mx.geometric_error(w_star, clean.w_hat)))
print("bisection, randomized:      %5d queries, err2 %.2e  <- wrecked"
      % (defended.queries_used, mx.geometric_error(w_star, defended.w_hat)))

rng_e = np.random.default_rng(3)
rhos = [mx.estimate_rho(w_star, x, SIGMA, 200, rng_e).rho_hat
        for x in clean.extras["queries_refine"]]
print("flip rate the defense would apply to the attack's boundary queries:"
      " mean %.3f (coin-flip territory)" % np.mean(rhos))

print()
d_small = 5
w_small = mx.sample_unit_sphere(d_small, np.random.default_rng(32))
oracle = mx.Oracle(
    mx.Halfspace(w_small),
    mx.ModelRandomization(0.5),
    mx.QueryLedger("0.0001"),
    rng=np.random.default_rng(33),
)
avg = mx.average_attack(oracle, d_small, 0.5, 0.3, 0.1, np.random.default_rng(34))
print("averaging attack, d=%d, sigma=sigma_hat=0.5:" % d_small)
print("  outcome %s after %d queries, err2 %.3f, |v|=%.3f (needs >= %.3f)"
      % (avg.outcome, avg.queries_used,
         mx.geometric_error(w_small, avg.w_hat),
         avg.extras["v_norm"], avg.extras["threshold"]))

oracle = mx.Oracle(
    mx.Halfspace(w_small),
    mx.ModelRandomization(20 / np.sqrt(d_small)),
    mx.QueryLedger("0.0001"),
    rng=np.random.default_rng(35),
)
bad = mx.average_attack(oracle, d_small, 1 / np.sqrt(d_small), 0.3, 0.1,
                        np.random.default_rng(36))
print("same attack but the server's noise is 20x the attacker's estimate:")
print("  outcome %s, |v|=%.4f below threshold %.4f, so the attack admits it"
      % (bad.outcome, bad.extras["v_norm"], bad.extras["threshold"]))
