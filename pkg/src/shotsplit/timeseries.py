"""Benchmark series for one-step-ahead forecasting.

Three generators are provided (Mackey-Glass, Lorenz x-coordinate, NARMA10).
Each returns a :class:`TimeSeries` holding the raw samples and a min-max
normalized copy whose anchors come from a chronological training prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _rng


class GenerationError(RuntimeError):
    """Raised when a benchmark integrator or recurrence diverges."""


class Task(str, Enum):
    MACKEY_GLASS = "MackeyGlass"
    LORENZ = "Lorenz"
    NARMA10 = "Narma10"


MACKEY_GLASS_DEFAULTS = dict(beta=0.2, gamma=0.1, tau=17.0, n=10.0, dt=0.1, subsample=10, burn_in=1000)
LORENZ_DEFAULTS = dict(sigma=10.0, rho=28.0, beta=8.0 / 3.0, dt=0.01, subsample=5, burn_in=500)
NARMA10_DEFAULTS = dict(u_low=0.0, u_high=0.5, burn_in=100, max_restarts=3)


@dataclass(frozen=True)
class SeriesSpec:
    """What to generate: task, number of samples, seed and parameter overrides."""

    task: Task
    length: int
    seed: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))

    def resolved_params(self):
        defaults = {
            Task.MACKEY_GLASS: MACKEY_GLASS_DEFAULTS,
            Task.LORENZ: LORENZ_DEFAULTS,
            Task.NARMA10: NARMA10_DEFAULTS,
        }[self.task]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown {self.task.value} parameters: {sorted(unknown)}")
        return {**defaults, **self.params}


@dataclass
class TimeSeries:
    """A normalized scalar series.

    Attributes
    ----------
    values : ndarray
        Normalized samples in [0, 1].
    raw : ndarray
        Samples before normalization.
    raw_min, raw_max : float
        Normalization anchors, computed on ``raw[:train_prefix_len]``.
    """

    values: np.ndarray
    raw: np.ndarray
    raw_min: float
    raw_max: float
    train_prefix_len: int
    spec: SeriesSpec | None = None

    def __len__(self):
        return len(self.values)


def _check_length(length):
    if int(length) <= 0:
        raise ValueError(f"series length must be positive, got {length}")


# ---------------------------------------------------------------------------
# Integrators


def mackey_glass_raw(n_samples, history, beta=0.2, gamma=0.1, tau=17.0, n=10.0, dt=0.1, subsample=10):
    """Euler integration of the Mackey-Glass delay equation.

    ``history`` gives the ``round(tau/dt)`` values preceding the first step
    (a scalar is broadcast to a constant history). One sample is emitted
    every ``subsample`` integrator steps; the first emitted sample is the
    state after ``subsample`` steps.
    """
    lag = int(round(tau / dt))
    buf = np.empty(lag + n_samples * subsample + 1)
    buf[: lag + 1] = np.broadcast_to(np.asarray(history, dtype=float), (lag + 1,))
    x = buf[lag]
    for i in range(lag, lag + n_samples * subsample):
        xd = buf[i - lag]
        x = x + dt * (beta * xd / (1.0 + xd**n) - gamma * x)
        buf[i + 1] = x
    out = buf[lag + subsample :: subsample][:n_samples]
    if not np.all(np.isfinite(out)):
        raise GenerationError("Mackey-Glass integration produced non-finite values")
    return out


def lorenz_raw(n_samples, x0, sigma=10.0, rho=28.0, beta=8.0 / 3.0, dt=0.01, subsample=5):
    """RK4 integration of the Lorenz flow; returns the subsampled x-coordinate."""

    def f(s):
        x, y, z = s
        return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])

    s = np.asarray(x0, dtype=float).copy()
    out = np.empty(n_samples)
    for i in range(n_samples):
        for _ in range(subsample):
            k1 = f(s)
            k2 = f(s + 0.5 * dt * k1)
            k3 = f(s + 0.5 * dt * k2)
            k4 = f(s + dt * k3)
            s = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = s[0]
    if not np.all(np.isfinite(out)):
        raise GenerationError("Lorenz integration produced non-finite values")
    return out


def narma10_raw(u):
    """Iterate the NARMA10 recurrence for the drive ``u``.

    ``y[t+1] = 0.3 y[t] + 0.05 y[t] sum(y[t-9..t]) + 1.5 u[t] u[t-9] + 0.1``,
    starting from a zero history. Returns ``y`` with ``len(u) + 1`` entries.
    """
    u = np.asarray(u, dtype=float)
    y = np.zeros(len(u) + 1)
    for t in range(len(u)):
        window = y[max(0, t - 9) : t + 1].sum()
        u_lag = u[t - 9] if t >= 9 else 0.0
        y[t + 1] = 0.3 * y[t] + 0.05 * y[t] * window + 1.5 * u[t] * u_lag + 0.1
        if not np.isfinite(y[t + 1]) or abs(y[t + 1]) > 10:
            raise GenerationError(f"NARMA10 recurrence diverged at step {t + 1}")
    return y


# ---------------------------------------------------------------------------
# Generators


def gen_mackey_glass(spec, train_prefix_len=None):
    _check_length(spec.length)
    p = spec.resolved_params()
    rng = _rng.substream(spec.seed, _rng.SERIES)
    lag = int(round(p["tau"] / p["dt"]))
    history = 1.2 + rng.uniform(-0.1, 0.1, size=lag + 1)
    raw = mackey_glass_raw(
        p["burn_in"] + spec.length,
        history,
        beta=p["beta"],
        gamma=p["gamma"],
        tau=p["tau"],
        n=p["n"],
        dt=p["dt"],
        subsample=p["subsample"],
    )[p["burn_in"] :]
    return normalize_input(raw, train_prefix_len or spec.length, spec=spec)


def gen_lorenz(spec, train_prefix_len=None):
    _check_length(spec.length)
    p = spec.resolved_params()
    rng = _rng.substream(spec.seed, _rng.SERIES)
    x0 = np.ones(3) + rng.uniform(-0.1, 0.1, size=3)
    raw = lorenz_raw(
        p["burn_in"] + spec.length,
        x0,
        sigma=p["sigma"],
        rho=p["rho"],
        beta=p["beta"],
        dt=p["dt"],
        subsample=p["subsample"],
    )[p["burn_in"] :]
    return normalize_input(raw, train_prefix_len or spec.length, spec=spec)


def gen_narma10(spec, train_prefix_len=None):
    """NARMA10 output series; the drive is redrawn on divergence."""
    _check_length(spec.length)
    p = spec.resolved_params()
    n = p["burn_in"] + spec.length
    for attempt in range(p["max_restarts"] + 1):
        rng = _rng.substream(spec.seed, _rng.SERIES, attempt)
        u = rng.uniform(p["u_low"], p["u_high"], size=n)
        try:
            y = narma10_raw(u)
        except GenerationError:
            continue
        raw = y[1:][p["burn_in"] :]
        return normalize_input(raw, train_prefix_len or spec.length, spec=spec)
    raise GenerationError(f"NARMA10 diverged on {p['max_restarts'] + 1} substreams (seed={spec.seed})")


GENERATORS = {
    Task.MACKEY_GLASS: gen_mackey_glass,
    Task.LORENZ: gen_lorenz,
    Task.NARMA10: gen_narma10,
}


def generate(spec, train_prefix_len=None):
    """Dispatch to the generator for ``spec.task``."""
    return GENERATORS[spec.task](spec, train_prefix_len)


def normalize_input(series, train_prefix_len, spec=None):
    """Min-max normalize ``series`` with anchors from its first ``train_prefix_len`` samples.

    Samples outside the prefix range are clipped to [0, 1].
    """
    raw = np.asarray(series, dtype=float)
    train_prefix_len = int(train_prefix_len)
    if train_prefix_len < 2 or train_prefix_len > len(raw):
        raise ValueError(f"train_prefix_len must be in [2, {len(raw)}], got {train_prefix_len}")
    prefix = raw[:train_prefix_len]
    lo, hi = float(prefix.min()), float(prefix.max())
    if hi - lo <= 0:
        raise ValueError("training prefix is constant; normalization is degenerate")
    values = np.clip((raw - lo) / (hi - lo), 0.0, 1.0)
    return TimeSeries(values=values, raw=raw, raw_min=lo, raw_max=hi, train_prefix_len=train_prefix_len, spec=spec)


def make_forecast_pairs(series):
    """Align input ``u[t]`` with target ``u[t+1]``; returns ``(inputs, targets)``."""
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series)
    if len(values) < 2:
        raise ValueError("need at least 2 samples to form a forecast pair")
    return values[:-1], values[1:]
