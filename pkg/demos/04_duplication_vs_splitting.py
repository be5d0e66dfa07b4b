"""
Why duplication is not splitting
================================

Fitting ridge on every row repeated G times is the same as fitting once
with the penalty divided by G. EvDup therefore only retunes the
regularization, while the split ensemble adds genuinely different noisy
views of each step.
"""

import numpy as np

from shotsplit import RunConfig, Task, evaluate_method, prepare_run, ridge_fit

rng = np.random.default_rng(1)
X, y = rng.normal(size=(40, 8)), rng.normal(size=40)
for g in (2, 5, 10):
    w_dup = ridge_fit(np.repeat(X, g, axis=0), np.repeat(y, g), 10.0).weights
    w_ref = ridge_fit(X, y, 10.0 / g).weights
    print(f"G={g:>2}: relative difference {np.linalg.norm(w_dup - w_ref) / np.linalg.norm(w_ref):.1e}")

print("\nmean test NRMSE over 5 seeds")
for task in Task:
    scores = {"EV": [], "EvDup": [], "Split": []}
    for seed in range(1, 6):
        config = RunConfig(task=task, seed=seed)
        data = prepare_run(config)
        for method in scores:
            scores[method].append(evaluate_method(data, config, method).nrmse_test)
    print(f"{task.value:>12}: " + "  ".join(f"{m} {np.mean(v):.3f}" for m, v in scores.items()))
