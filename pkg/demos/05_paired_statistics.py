"""
Comparing protocols seed by seed
================================

Runs that share a seed share a shot record, so protocols are compared on
paired per-seed gaps. The summary gives the mean gap, win rate, a
two-sided Wilcoxon signed-rank p-value and a 95% half-width.
"""

import numpy as np

from shotsplit import PairedSample, RunConfig, Task, paired_gap_stats, run_protocols

seeds = range(1, 11)
ev, split = [], []
for seed in seeds:
    _, (r_ev, r_split) = run_protocols(RunConfig(task=Task.LORENZ, seed=seed), ("EV", "Split"))
    ev.append(r_ev.nrmse_test)
    split.append(r_split.nrmse_test)

s = paired_gap_stats(PairedSample(np.array(ev), np.array(split), "EV", "Split"))
print("gap = NRMSE(EV) - NRMSE(Split), positive favors Split")
print(f"n={s.n} mean gap {s.mean_gap:.4f} +/- {s.ci95:.4f}, sd {s.sd:.4f}")
print(f"win rate {s.win_rate:.2f}, Wilcoxon p = {s.wilcoxon_p:.4g}")
