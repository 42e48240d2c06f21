"""Adaptive line search versus angular bisection on the same servers.

The line-search attack finds one point of each sign, walks the segment
between them to locate a boundary crossing, then prices out each coordinate
relative to the largest one. It asks for labels near the boundary only
along axis-aligned probes, which costs more queries per digit of precision
than bisecting angles directly.
"""

import numpy as np

import mexlab as mx

D, EPS, TRIALS = 13, 0.01, 10

lm_q, qs_q, lm_e, qs_e = [], [], [], []
for t in range(TRIALS):
    w_star = mx.sample_unit_sphere(D, np.random.default_rng(40 + t))

    oracle = mx.Oracle(mx.Halfspace(w_star), mx.NoDefense(),
                       mx.QueryLedger("0.0001"), rng=np.random.default_rng(1))
    lm = mx.lowd_meek_extract(oracle, D, EPS, np.random.default_rng(90 + t))
    lm_q.append(lm.queries_used)
    lm_e.append(mx.geometric_error(w_star, lm.w_hat))

    oracle = mx.Oracle(mx.Halfspace(w_star), mx.NoDefense(),
                       mx.QueryLedger("0.0001"), rng=np.random.default_rng(1))
    qs = mx.qs_extract_halfspace(oracle, D, EPS)
    qs_q.append(qs.queries_used)
    qs_e.append(mx.geometric_error(w_star, qs.w_hat))

print("d=%d, eps=%.2f, %d random servers" % (D, EPS, TRIALS))
print()
print("              mean queries   mean err2")
print("line search     %7.1f      %.2e" % (np.mean(lm_q), np.mean(lm_e)))
print("bisection       %7.1f      %.2e" % (np.mean(qs_q), np.mean(qs_e)))
print()
print("line search pays %.2fx the queries for no accuracy gain"
      % (np.mean(lm_q) / np.mean(qs_q)))
