"""What the server can learn from the queries it was asked.

A defender who logs query points can test whether the traffic looks like
legitimate use. Two forensic signals against extraction traffic: the point
cloud's location differs measurably from a neutral reference (two-sample
Hotelling T^2), and the points crowd the decision boundary (distance along
the served normal).
"""

import numpy as np

import mexlab as mx

D = 13

w_star = mx.sample_unit_sphere(D, np.random.default_rng(71))
oracle = mx.Oracle(mx.Halfspace(w_star), mx.NoDefense(),
                   mx.QueryLedger("0.0001"), rng=np.random.default_rng(1))
report = mx.qs_extract_halfspace(oracle, D, 1e-2)
attack_cloud = np.vstack([np.asarray(report.extras["queries_%s" % ph])
                          for ph in ("probe", "coarse", "refine")])
pick = np.random.default_rng(72).choice(len(attack_cloud), 200, replace=False)
attack_sample = attack_cloud[pick]

reference = mx.sample_unit_sphere(D, np.random.default_rng(73), size=200)
benign = mx.sample_unit_sphere(D, np.random.default_rng(74), size=200)

flagged = mx.hotelling_t2(attack_sample, reference)
control = mx.hotelling_t2(benign, reference)
print("Hotelling T^2 against a uniform-sphere reference (n=200 each):")
print("  extraction traffic: T2=%8.1f  p=%.2e  <- flagged" %
      (flagged.statistic, flagged.p_value))
print("  benign traffic:     T2=%8.1f  p=%.3f" %
      (control.statistic, control.p_value))

print()
stats_attack = mx.boundary_distance_stats(report.extras["queries_refine"], w_star)
stats_benign = mx.boundary_distance_stats(benign, w_star)
print("normalized distance to the decision boundary |<w*,x>|/|x|:")
print("  attack refine phase: median %.4f (n=%d)"
      % (stats_attack.median, stats_attack.n_used))
print("  benign sample:       median %.4f" % stats_benign.median)

print()
sigma = 0.1
rng_e = np.random.default_rng(75)
rho_boundary = np.mean([mx.estimate_rho(w_star, x, sigma, 300, rng_e).rho_hat
                        for x in report.extras["queries_refine"][:50]])
rho_benign = np.mean([mx.estimate_rho(w_star, x, sigma, 300, rng_e).rho_hat
                      for x in benign[:50]])
print("if the server randomized its model (sigma=%.1f), those queries" % sigma)
print("would have been answered wrongly at rate:")
print("  attack refine phase: %.3f   benign: %.3f" % (rho_boundary, rho_benign))
