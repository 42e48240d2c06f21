"""Steal an RBF SVM by hunting its margin.

Each round the attack drafts k random candidate points, scores them with
its current local model, and spends its one query on the candidate whose
|pre-sign| value is smallest, i.e. the point the local model is least sure
about. Labels cluster along the victim's decision surface, which is
exactly where a kernel SVM needs support vectors. A uniform sampler at the
same budget wastes most of its labels deep inside confident regions.
"""

import numpy as np

import mexlab as mx

D, BUDGET = 10, 150
PARAMS = {"C": 10.0, "gamma": 0.15, "tol": 1e-3, "max_passes": 5}

rng = np.random.default_rng(51)
centers = rng.uniform(-1.0, 1.0, (4, D))
coefs = np.array([1.0, -1.0, 1.0, -1.0])
probe = rng.uniform(-1.0, 1.0, (4096, D))
pre = np.exp(-0.15 * ((probe[:, None, :] - centers) ** 2).sum(axis=2)) @ coefs
victim = mx.KernelSvmModel(centers, coefs, -float(np.median(pre)), gamma=0.15)

box = np.tile(np.array([-1.0, 1.0]), (D, 1))
X_eval = np.random.default_rng(52).uniform(-1.0, 1.0, (2000, D))
y_eval = victim.predict(X_eval)

trace = []
oracle = mx.Oracle(victim, mx.NoDefense(), mx.QueryLedger("0.0001"),
                   rng=np.random.default_rng(1))
model, report = mx.eat_extract_svm(oracle, box, budget=BUDGET, svm_params=PARAMS,
                                   rng=np.random.default_rng(53), trace=trace)
eat_acc = np.mean(model.predict(X_eval) == y_eval)

oracle = mx.Oracle(victim, mx.NoDefense(), mx.QueryLedger("0.0001"),
                   rng=np.random.default_rng(1))
Xb = np.random.default_rng(54).uniform(-1.0, 1.0, (BUDGET, D))
baseline = mx.svm_train(Xb, oracle.query_batch(Xb), **PARAMS)
base_acc = np.mean(baseline.predict(X_eval) == y_eval)

print("victim: RBF SVM over [-1,1]^%d, budget %d labels, price $%s total"
      % (D, BUDGET, report.cost))
print()
print("margin-hunting extraction agrees with victim on %.1f%% of held-out points"
      % (100 * eat_acc))
print("uniform sampling at the same budget reaches %.1f%%" % (100 * base_acc))
print()
picked = [r["scores"][r["pick"]] for r in trace]
print("how unsure the local model was about each purchased point")
print("(|pre-sign| of the pick; small means on the margin):")
print("  first 5 rounds: %s" % ["%.3f" % s for s in picked[:5]])
print("  last 5 rounds:  %s" % ["%.3f" % s for s in picked[-5:]])
