"""
One budget, three protocols
===========================

At the shared operating point (4 qubits, 18 shots, 12000 executions) every
protocol reads the same shot record. Split picks its group size on the
chronological validation block, then refits on train+validation and is
scored once on the test block.
"""

from shotsplit import RunConfig, Task, evaluate_method, prepare_run

for task in Task:
    config = RunConfig(task=task, seed=1)
    data = prepare_run(config)
    print(f"\n{task.value}: T={data.record.n_steps}, rho_EV={data.rho_ev}, record {data.record.digest()[:12]}")
    for method in ("EV", "Raw", "Split"):
        r = evaluate_method(data, config, method)
        extra = ""
        if method == "Split":
            scores = ", ".join(f"k={k}: {v:.3f}" for k, v in r.val_scores.items())
            extra = f"  (warm start k={r.warm_start_k}, a={r.noise_ratio:.2f}; validation {scores})"
        print(f"  {method:>5}: k={r.k_selected:>2} test NRMSE {r.nrmse_test:.4f}{extra}")
