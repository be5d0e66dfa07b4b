"""Shot-record organization: EV averaging, raw stacking, split-ensemble grouping, EV duplication.

All protocols go through one grouping routine (contiguous groups of ``k``
shot indices, averaged), so ``Split(k=N)`` reproduces EV and ``Split(k=1)``
reproduces Raw bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .features import FeatureTensor


class Organization(str, Enum):
    EV = "EV"
    RAW = "Raw"
    SPLIT = "Split"
    EV_DUP = "EvDup"


@dataclass(frozen=True)
class GroupingPlan:
    """How the ``n_shots`` shots of one time step become design-matrix rows.

    Split and EvDup accept any divisor ``k`` of ``n_shots``, including the
    endpoints; candidate search restricts itself to internal divisors.
    """

    organization: Organization
    k: int
    n_shots: int

    def __post_init__(self):
        object.__setattr__(self, "organization", Organization(self.organization))
        if self.n_shots < 1 or self.k < 1 or self.n_shots % self.k:
            raise ValueError(f"group size {self.k} does not divide n_shots={self.n_shots}")
        if self.organization is Organization.EV and self.k != self.n_shots:
            raise ValueError("EV requires k = n_shots")
        if self.organization is Organization.RAW and self.k != 1:
            raise ValueError("Raw requires k = 1")

    @property
    def n_groups(self):
        return self.n_shots // self.k

    @classmethod
    def ev(cls, n_shots):
        return cls(Organization.EV, n_shots, n_shots)

    @classmethod
    def raw(cls, n_shots):
        return cls(Organization.RAW, 1, n_shots)

    @classmethod
    def split(cls, n_shots, k):
        return cls(Organization.SPLIT, k, n_shots)

    @classmethod
    def ev_dup(cls, n_shots, k):
        return cls(Organization.EV_DUP, k, n_shots)


@dataclass
class GroupedDataset:
    X: np.ndarray
    y: np.ndarray
    timestep_index: np.ndarray
    plan: GroupingPlan

    @property
    def n_rows(self):
        return self.X.shape[0]


@dataclass(frozen=True)
class WarmStartParams:
    noise_ratio: float
    tradeoff: float = 1.0  # 2 * alpha / beta

    def __post_init__(self):
        if not self.noise_ratio >= 0:
            raise ValueError(f"noise_ratio must be >= 0, got {self.noise_ratio}")
        if not self.tradeoff > 0:
            raise ValueError(f"tradeoff must be > 0, got {self.tradeoff}")


def internal_divisors(n_shots):
    """Divisors ``k`` of ``n_shots`` with ``1 < k < n_shots``, ascending."""
    return [k for k in range(2, n_shots) if n_shots % k == 0]


def _values(features):
    return features.values if isinstance(features, FeatureTensor) else np.asarray(features)


def group_means(values, k):
    """Average contiguous groups of ``k`` shots: ``(T, N, d) -> (T, N/k, d)``."""
    t, n, d = values.shape
    return values.reshape(t, n // k, k, d).mean(axis=2)


def organize(features, targets, block, plan):
    """Build the design matrix for the time steps in ``block``.

    ``targets[t]`` is the label paired with every row derived from step
    ``t``. Rows are ordered by step, then by group index.
    """
    values = _values(features)
    block = np.asarray(block, dtype=int)
    targets = np.asarray(targets, dtype=float)
    if values.shape[1] != plan.n_shots:
        raise ValueError(f"plan expects {plan.n_shots} shots, features have {values.shape[1]}")
    if block.size and (block.min() < 0 or block.max() >= values.shape[0]):
        raise ValueError("block indexes time steps outside the record")
    sub = values[block]
    if plan.organization is Organization.EV_DUP:
        grouped = np.repeat(group_means(sub, plan.n_shots), plan.n_groups, axis=1)
    else:
        grouped = group_means(sub, plan.k)
    g = plan.n_groups
    X = grouped.reshape(len(block) * g, -1)
    step = np.repeat(block, g)
    return GroupedDataset(X=X, y=targets[step], timestep_index=step, plan=plan)


def rho_k(n_shots, k, rho_ev):
    """Training-support ratio after grouping by ``k``: ``(n_shots / k) * rho_ev``."""
    if k < 1 or n_shots % k:
        raise ValueError(f"k={k} does not divide n_shots={n_shots}")
    return n_shots * rho_ev / k


def within_step_var(values):
    """Unbiased variance across shots, per step and feature: ``(T, N, d) -> (T, d)``.

    Shifted by the first shot so identical shots give exactly zero.
    """
    return (values - values[:, :1]).var(axis=1, ddof=1)


def estimate_noise_ratio(features, block):
    """Noise-to-signal ratio ``a`` from within-step shot spread vs. across-time EV spread.

    Returns ``inf`` when the EV features do not vary over the block.
    """
    values = _values(features)[np.asarray(block, dtype=int)]
    if values.shape[0] < 2 or values.shape[1] < 2:
        raise ValueError("need at least 2 time steps and 2 shots")
    within = within_step_var(values).mean()
    across = values.mean(axis=1).var(axis=0, ddof=1).mean()
    if across < 1e-12:
        return math.inf
    return float(within / across)


def snap_to_divisor(k_cont, n_shots):
    """Nearest internal divisor of ``n_shots``; ties go to the smaller one.

    Returns ``n_shots`` when there are no internal divisors.
    """
    cands = internal_divisors(n_shots)
    if not cands:
        return n_shots
    return min(cands, key=lambda k: (abs(k - k_cont), k))


def warm_start_k(params, rho_ev, n_shots):
    """Closed-form initial group size, clipped to [1, n_shots] and snapped to a divisor."""
    if not rho_ev > 0:
        raise ValueError(f"rho_ev must be positive, got {rho_ev}")
    a = params.noise_ratio
    if math.isinf(a):
        k_cont = float(n_shots)
    else:
        k_cont = (params.tradeoff * a * a * rho_ev * n_shots) ** (1.0 / 3.0) - a
    k_cont = min(max(k_cont, 1.0), float(n_shots))
    return snap_to_divisor(k_cont, n_shots)
