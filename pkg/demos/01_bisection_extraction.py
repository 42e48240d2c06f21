"""Extract a served halfspace with two-phase angular bisection.

The server answers sign(<w*, x>) and nothing else. The attack probes the
axes, picks the dominant coordinate as pivot, then bisects each pairwise
angle until the requested accuracy is met. Query count scales like
d * log2(1/eps), so tightening eps by 10x only adds a constant number of
rounds per coordinate.
"""

import numpy as np

import mexlab as mx

D = 64
PRICE = "0.0001"

w_star = mx.sample_unit_sphere(D, np.random.default_rng(7))
print("server holds a %d-dimensional halfspace; per-query price $%s" % (D, PRICE))
print()
print("   eps      queries    bound    err2         cost")
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    oracle = mx.Oracle(
        mx.Halfspace(w_star),
        mx.NoDefense(),
        mx.QueryLedger(PRICE),
        rng=np.random.default_rng(1),
    )
    report = mx.qs_extract_halfspace(oracle, D, eps)
    bound = mx.plan_query_bound(D, mx.BisectionPlan.default(D, eps))
    err = mx.geometric_error(w_star, report.w_hat)
    print("  %6.0e   %6d    %5d    %.2e    $%s"
          % (eps, report.queries_used, bound, err, report.cost))

print()
print("same run, but stopping when the iterate stays put instead of at a")
print("preset depth (window N=10, tolerance tau=1e-3):")
oracle = mx.Oracle(
    mx.Halfspace(w_star), mx.NoDefense(), mx.QueryLedger(PRICE),
    rng=np.random.default_rng(1),
)
stab = mx.qs_extract_stability(oracle, D, N=10, tau=1e-3)
print("  stability stop: %d queries, err2 %.2e, fired=%s"
      % (stab.queries_used, mx.geometric_error(w_star, stab.w_hat),
         stab.extras["stability_fired"]))
