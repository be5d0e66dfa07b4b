"""
From a time series to a shot record
===================================

A reservoir here is a small fixed random circuit. Each input value is
encoded by single-qubit rotations, the circuit is run, and every qubit is
measured in the Z and X bases. A finite number of shots per step gives a
tensor of +/-1 outcomes rather than exact expectation values.
"""

import numpy as np

from shotsplit import FeatureParams, SeriesSpec, Task, build_features, build_reservoir, generate, run_sequence

# A short Mackey-Glass series, normalized to [0, 1] on its first 150 samples
series = generate(SeriesSpec(Task.MACKEY_GLASS, length=201, seed=3), train_prefix_len=150)
print("series range:", series.values.min(), series.values.max())

# A 4-qubit ring reservoir; the input weights and layer angles are drawn once
params = build_reservoir(seed=7, n_qubits=4, depth=1)
print("input weights:", np.round(params.input_weights, 3))

# 18 shots per basis and step, so every step costs 36 circuit executions
record = run_sequence(params, series.values[:-1], n_shots=18, sampling_seed=11)
print("record shape (T, shots, 2Q):", record.outcomes.shape)
print("executions:", record.executions)
print("first step, first three shots:\n", record.outcomes[0, :3])

# Each shot index carries its own leaky trace; ten lags are stacked
feats = build_features(record, FeatureParams(leak=0.2, window=10))
print("feature tensor:", feats.values.shape, "-> d =", feats.dim)

# Averaging over shots estimates the expectation values, with shot noise
ev = feats.values.mean(axis=1)
spread = feats.values.std(axis=1).mean()
print(f"mean within-step shot spread {spread:.3f} vs across-time EV spread {ev.std(axis=0).mean():.3f}")
