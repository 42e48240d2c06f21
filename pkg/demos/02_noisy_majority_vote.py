"""Beat a label-flipping defense by repeating every query.

A server that flips each answer with probability rho < 1/2 still leaks the
true label in the majority of r independent replies. A Chernoff bound picks
r so that, union-bounded over the whole query plan, every majority vote is
correct with probability 1 - delta. The catch is the bill: r grows like
1/(1/2 - rho)^2, so the defense trades accuracy it cannot keep for money
the attacker must spend.
"""

import numpy as np

import mexlab as mx

D, EPS, DELTA = 10, 1e-3, 0.05

print("flip rate | repeats |   queries |      cost | err2")
for rho in (0.0, 0.1, 0.25, 0.4):
    w_star = mx.sample_unit_sphere(D, np.random.default_rng(21))
    oracle = mx.Oracle(
        mx.Halfspace(w_star),
        mx.ConstantFlip(rho),
        mx.QueryLedger("0.0001"),
        rng=np.random.default_rng(22),
    )
    report = mx.noisy_qs_extract(oracle, D, EPS, DELTA, rho)
    err = mx.geometric_error(w_star, report.w_hat)
    print("   %4.2f   | %6d  | %9d | $%8s | %.2e"
          % (rho, report.extras["repetition"], report.queries_used,
             report.cost, err))

print()
print("the repeat count is pure arithmetic, no oracle needed:")
for rho, q in ((0.1, 257), (0.25, 257), (0.4, 257)):
    print("  repetition_count(rho=%.2f, q=%d, delta=%.2f) = %d"
          % (rho, q, DELTA, mx.repetition_count(rho, q, DELTA)))
