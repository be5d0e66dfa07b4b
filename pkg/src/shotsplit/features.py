"""Per-shot leaky integration and tapped-delay readout features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import ShotRecord


@dataclass(frozen=True)
class FeatureParams:
    leak: float = 0.2
    window: int = 10

    def __post_init__(self):
        if not 0.0 < self.leak <= 1.0:
            raise ValueError(f"leak must lie in (0, 1], got {self.leak}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")


@dataclass
class FeatureTensor:
    """Shot-level features, shape ``(T, n_shots, 2 * Q * window)``.

    Column block ``j`` (of width 2Q) holds the trace from ``j`` steps ago.
    """

    values: np.ndarray
    params: FeatureParams
    n_qubits: int
    record_digest: str | None = None

    @property
    def n_steps(self):
        return self.values.shape[0]

    @property
    def n_shots(self):
        return self.values.shape[1]

    @property
    def dim(self):
        return self.values.shape[2]


def leaky_update(prev_trace, measurement, leak):
    """One step of ``r_t = (1 - leak) * r_{t-1} + leak * m_t``."""
    prev_trace = np.asarray(prev_trace, dtype=float)
    measurement = np.asarray(measurement, dtype=float)
    if prev_trace.shape != measurement.shape:
        raise ValueError(f"trace shape {prev_trace.shape} does not match measurement shape {measurement.shape}")
    return (1.0 - leak) * prev_trace + leak * measurement


def leaky_traces(outcomes, leak):
    """Run one persistent trace per shot index across time; returns ``(T, N, 2Q)``."""
    outcomes = np.asarray(outcomes, dtype=float)
    traces = np.empty_like(outcomes)
    r = np.zeros(outcomes.shape[1:])
    for t in range(outcomes.shape[0]):
        r = leaky_update(r, outcomes[t], leak)
        traces[t] = r
    return traces


def build_features(record, params=FeatureParams()):
    """Tapped-delay features ``[r_t, r_{t-1}, ..., r_{t-L+1}]`` for every shot stream.

    Steps before the start of the record contribute zero traces.
    """
    if isinstance(record, ShotRecord):
        outcomes, q, digest = record.outcomes, record.n_qubits, record.digest()
    else:
        outcomes = np.asarray(record)
        q, digest = outcomes.shape[2] // 2, None
    if outcomes.shape[0] == 0:
        raise ValueError("empty shot record")
    traces = leaky_traces(outcomes, params.leak)
    n_steps, n_shots, width = traces.shape
    values = np.zeros((n_steps, n_shots, width * params.window))
    for lag in range(min(params.window, n_steps)):
        values[lag:, :, lag * width : (lag + 1) * width] = traces[: n_steps - lag]
    return FeatureTensor(values=values, params=params, n_qubits=q, record_digest=digest)
