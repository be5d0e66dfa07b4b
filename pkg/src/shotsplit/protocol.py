"""Budget accounting, chronological splits, group-size selection and the single-run pipeline."""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _rng
from .features import FeatureParams, build_features
from .quantum import Entangler, build_reservoir, run_sequence
from .readout import (
    aggregate_predictions,
    estimate_feature_noise_var,
    fit_standardizer,
    noise_aware_fit,
    nrmse,
    predict,
    ridge_fit,
)
from .shotorg import (
    GroupingPlan,
    Organization,
    WarmStartParams,
    estimate_noise_ratio,
    internal_divisors,
    organize,
    rho_k,
    warm_start_k,
)
from .timeseries import SeriesSpec, Task, generate, normalize_input

METHODS = ("EV", "Raw", "Split", "EvDup", "EvNA", "SplitNA")
GAMMA_GRID = (0.0, 0.1, 0.3, 1.0, 3.0, 10.0)
MIN_STEPS_AFTER_WASHOUT = 10
TIE_TOL = 1e-12


class BudgetError(ValueError):
    """The execution budget leaves too few labeled time steps."""


@dataclass(frozen=True)
class BudgetSpec:
    total: int = 12000
    n_shots: int = 18
    settings: int = 2
    washout: int = 30
    train_frac: float = 0.7
    val_frac: float = 0.25


@dataclass
class SplitIndex:
    """Disjoint chronological blocks of labeled time steps.

    Reads of ``test`` are counted in ``test_reads`` so a run can assert the
    held-out block was touched exactly once.
    """

    washout: np.ndarray
    fit: np.ndarray
    validation: np.ndarray
    trainval: np.ndarray
    test_block: np.ndarray
    test_reads: int = 0

    @property
    def test(self):
        self.test_reads += 1
        return self.test_block


@dataclass
class RunConfig:
    task: Task = Task.MACKEY_GLASS
    n_qubits: int = 4
    depth: int = 1
    entangler: Entangler = Entangler.RING_CNOT
    leak: float = 0.2
    window: int = 10
    lam: float = 10.0
    budget: BudgetSpec = field(default_factory=BudgetSpec)
    method: str = "Split"
    k: int | None = None
    gamma_grid: tuple = GAMMA_GRID
    seed: int = 1
    tradeoff: float = 1.0
    series_params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.task = Task(self.task)
        self.entangler = Entangler(self.entangler)
        if isinstance(self.budget, dict):
            self.budget = BudgetSpec(**self.budget)
        self.gamma_grid = tuple(float(g) for g in self.gamma_grid)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["task"] = self.task.value
        d["entangler"] = self.entangler.value
        d["gamma_grid"] = list(self.gamma_grid)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown RunConfig fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunResult:
    method: str
    k_selected: int
    gamma_selected: float
    nrmse_val: float
    nrmse_test: float
    rho_ev: float
    rho_ev_blocks: float
    rho_k: float
    warm_start_k: int | None
    noise_ratio: float | None
    val_scores: dict
    record_digest: str
    test_evaluations: int
    fallback_to_ev: bool = False
    timings: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)


@dataclass
class RunData:
    """Everything shared by all methods evaluated on one (config, seed)."""

    series: object
    inputs: np.ndarray
    targets: np.ndarray
    record: object
    features: object
    split: SplitIndex
    rho_ev: float
    rho_ev_blocks: float
    timings: dict


# ---------------------------------------------------------------------------
# Budget and splits


def budget_timesteps(budget):
    """Labeled time steps ``floor(total / (settings * n_shots))``."""
    if budget.total < 1 or budget.n_shots < 1 or budget.settings < 1:
        raise BudgetError("budget, shots and settings must be positive")
    t = budget.total // (budget.settings * budget.n_shots)
    if t < budget.washout + MIN_STEPS_AFTER_WASHOUT:
        raise BudgetError(
            f"budget yields T={t} labeled steps; need at least washout + {MIN_STEPS_AFTER_WASHOUT}"
        )
    return t


def _frac(x):
    return Fraction(str(x))


def rho_ev(budget, n_qubits, window):
    """Real-valued EV training-support ratio ``train_frac * (T - washout) / (2 Q L)``."""
    t = budget_timesteps(budget)
    return float(_frac(budget.train_frac) * (t - budget.washout) / (2 * n_qubits * window))


def chronological_split(n_steps, budget):
    """Washout, then train+validation / test, with validation at the end of train+validation."""
    t0 = budget.washout
    if n_steps < t0 + MIN_STEPS_AFTER_WASHOUT:
        raise BudgetError(f"T={n_steps} is too short for washout {t0}")
    rest = n_steps - t0
    n_tv = math.floor(_frac(budget.train_frac) * rest)
    n_val = math.floor(_frac(budget.val_frac) * n_tv)
    idx = np.arange(n_steps)
    split = SplitIndex(
        washout=idx[:t0],
        fit=idx[t0 : t0 + n_tv - n_val],
        validation=idx[t0 + n_tv - n_val : t0 + n_tv],
        trainval=idx[t0 : t0 + n_tv],
        test_block=idx[t0 + n_tv :],
    )
    for name in ("fit", "validation", "test_block"):
        if getattr(split, name).size == 0:
            raise BudgetError(f"{name} block is empty for T={n_steps}")
    return split


# ---------------------------------------------------------------------------
# Fitting and scoring


def _plan(organization, n_shots, k):
    if organization is Organization.EV:
        return GroupingPlan.ev(n_shots)
    if organization is Organization.RAW:
        return GroupingPlan.raw(n_shots)
    return GroupingPlan(organization, k, n_shots)


def fit_and_predict(features, targets, fit_block, eval_block, plan, lam, gamma=0.0):
    """Fit on ``fit_block`` under ``plan`` and return per-step predictions on ``eval_block``.

    Standardization (and the noise-variance estimate when ``gamma > 0``) uses
    the fit block only.
    """
    fit_block = np.asarray(fit_block)
    eval_block = np.asarray(eval_block)
    if fit_block.size and eval_block.size and fit_block.max() >= eval_block.min():
        raise ValueError("fit block must end before the evaluation block starts")
    train = organize(features, targets, fit_block, plan)
    std = fit_standardizer(train.X)
    Xf = std.transform(train.X)
    if gamma > 0:
        k_noise = plan.n_shots if plan.organization is Organization.EV_DUP else plan.k
        noise_var = estimate_feature_noise_var(features, fit_block, k_noise) / std.scale**2
        model = noise_aware_fit(Xf, train.y, lam, gamma, noise_var)
    else:
        model = ridge_fit(Xf, train.y, lam)
    ev = organize(features, targets, eval_block, plan)
    return aggregate_predictions(predict(model, std.transform(ev.X)), ev.timestep_index)


def _score(features, targets, fit_block, eval_block, plan, lam, gamma=0.0):
    steps, y_hat = fit_and_predict(features, targets, fit_block, eval_block, plan, lam, gamma)
    return nrmse(np.asarray(targets)[steps], y_hat)


@dataclass
class Selection:
    k: int
    scores: dict
    order: list
    fallback: bool = False


def _argmin_smaller(scores):
    best = min(scores.values())
    return min(c for c, s in scores.items() if s <= best + TIE_TOL)


def select_group_size(features, targets, split, n_shots, lam, warm_start=None, organization=Organization.SPLIT, candidates=None):
    """Pick ``k`` among internal divisors by validation NRMSE; ties go to the smaller ``k``.

    All candidates are scored; ``warm_start`` only puts its candidate first
    in the evaluation order. With no internal divisors the EV group size is
    returned and ``fallback`` is set.
    """
    organization = Organization(organization)
    cands = sorted(internal_divisors(n_shots) if candidates is None else candidates)
    if not cands:
        return Selection(k=n_shots, scores={}, order=[], fallback=True)
    order = ([warm_start] if warm_start in cands else []) + [k for k in cands if k != warm_start]
    scores = {}
    for k in order:
        scores[k] = _score(features, targets, split.fit, split.validation, _plan(organization, n_shots, k), lam)
    return Selection(k=_argmin_smaller(scores), scores=scores, order=order)


def select_gamma(features, targets, split, plan, lam, grid=GAMMA_GRID):
    """Noise-aware penalty strength chosen on validation; ties go to the smaller gamma."""
    scores = {g: _score(features, targets, split.fit, split.validation, plan, lam, g) for g in grid}
    return _argmin_smaller(scores), scores


# ---------------------------------------------------------------------------
# Pipeline


def prepare_run(config):
    """Generate series, simulate the shot record and build features for one (config, seed)."""
    b = config.budget
    n_steps = budget_timesteps(b)
    split = chronological_split(n_steps, b)
    timings = {}

    t = time.perf_counter()
    spec = SeriesSpec(config.task, n_steps + 1, _rng.derive_seed(config.seed, _rng.SERIES), dict(config.series_params))
    series = generate(spec, train_prefix_len=_prefix_len(split))
    timings["series"] = time.perf_counter() - t

    t = time.perf_counter()
    params = build_reservoir(_rng.derive_seed(config.seed, _rng.RESERVOIR), config.n_qubits, config.depth, config.entangler)
    record = run_sequence(params, series.values[:-1], b.n_shots, _rng.derive_seed(config.seed, _rng.SAMPLING), task=config.task.value)
    record.extra = {"series_seed": spec.seed, "series_params": dict(config.series_params)}
    timings["simulate"] = time.perf_counter() - t

    return assemble_run(series, record, config, split, timings)


def _prefix_len(split):
    # Normalization anchors use the inputs of the washout and train+validation steps only.
    return int(split.trainval[-1]) + 1


def assemble_run(series, record, config, split=None, timings=None):
    """Pair a normalized series (``T + 1`` samples) with a ``T``-step shot record."""
    timings = dict(timings or {})
    n_steps = record.n_steps
    if len(series.values) != n_steps + 1:
        raise ValueError(f"series has {len(series.values)} samples; a {n_steps}-step record needs {n_steps + 1}")
    if record.n_qubits != config.n_qubits or record.n_shots != config.budget.n_shots:
        raise ValueError("record shape does not match the run configuration")
    split = split or chronological_split(n_steps, config.budget)
    t = time.perf_counter()
    features = build_features(record, FeatureParams(config.leak, config.window))
    timings["features"] = time.perf_counter() - t
    d = 2 * config.n_qubits * config.window
    return RunData(
        series=series,
        inputs=series.values[:-1],
        targets=series.values[1:],
        record=record,
        features=features,
        split=split,
        rho_ev=float(_frac(config.budget.train_frac) * (n_steps - config.budget.washout) / d),
        rho_ev_blocks=len(split.trainval) / d,
        timings=timings,
    )


def prepare_from_record(record, config, series_values=None):
    """Build run data around an existing (e.g. imported) shot record.

    ``series_values`` are raw series samples (``T + 1`` of them); without
    them the series is regenerated from ``record.extra["series_seed"]``.
    """
    split = chronological_split(record.n_steps, config.budget)
    if series_values is None:
        extra = record.extra or {}
        if "series_seed" not in extra:
            raise ValueError("record has no series_seed; supply the series explicitly")
        spec = SeriesSpec(Task(record.task), record.n_steps + 1, int(extra["series_seed"]), dict(extra.get("series_params") or {}))
        series = generate(spec, train_prefix_len=_prefix_len(split))
    else:
        series = normalize_input(series_values, _prefix_len(split))
    return assemble_run(series, record, config, split)


def budget_for_record(record, washout=30, train_frac=0.7, val_frac=0.25):
    """Budget spec matching a record's ``2 * N_shots * T`` executions."""
    return BudgetSpec(
        total=2 * record.n_shots * record.n_steps,
        n_shots=record.n_shots,
        washout=washout,
        train_frac=train_frac,
        val_frac=val_frac,
    )


def evaluate_method(data, config, method, k=None):
    """Select (k, gamma) on validation, refit on train+validation and score the test block once."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n = config.budget.n_shots
    feats, y, split, lam = data.features, data.targets, data.split, config.lam
    t_start = time.perf_counter()

    ws_k = a = None
    if method in ("Split", "EvDup", "SplitNA"):
        a = estimate_noise_ratio(feats, split.fit)
        ws_k = warm_start_k(WarmStartParams(a, config.tradeoff), data.rho_ev, n)

    fallback = False
    val_scores = {}
    gamma = 0.0
    if method in ("EV", "EvNA"):
        plan = GroupingPlan.ev(n)
    elif method == "Raw":
        plan = GroupingPlan.raw(n)
    else:
        org = Organization.EV_DUP if method == "EvDup" else Organization.SPLIT
        if k is not None:
            plan = GroupingPlan(org, k, n)
        else:
            sel = select_group_size(feats, y, split, n, lam, warm_start=ws_k, organization=org)
            fallback = sel.fallback
            val_scores = {str(c): s for c, s in sel.scores.items()}
            plan = GroupingPlan.ev(n) if fallback else GroupingPlan(org, sel.k, n)
    if method in ("EvNA", "SplitNA"):
        gamma, g_scores = select_gamma(feats, y, split, plan, lam, config.gamma_grid)
        val_scores.update({f"k={plan.k},gamma={g}": s for g, s in g_scores.items()})

    nrmse_val = _score(feats, y, split.fit, split.validation, plan, lam, gamma)
    t_select = time.perf_counter() - t_start

    t = time.perf_counter()
    reads_before = split.test_reads
    steps, y_hat = fit_and_predict(feats, y, split.trainval, split.test, plan, lam, gamma)
    nrmse_test = nrmse(y[steps], y_hat)
    test_evaluations = split.test_reads - reads_before
    timings = dict(data.timings, select=t_select, refit=time.perf_counter() - t)

    return RunResult(
        method=method,
        k_selected=plan.k,
        gamma_selected=gamma,
        nrmse_val=nrmse_val,
        nrmse_test=nrmse_test,
        rho_ev=data.rho_ev,
        rho_ev_blocks=data.rho_ev_blocks,
        rho_k=rho_k(n, plan.k, data.rho_ev),
        warm_start_k=ws_k,
        noise_ratio=a,
        val_scores=val_scores,
        record_digest=data.record.digest(),
        test_evaluations=test_evaluations,
        fallback_to_ev=fallback,
        timings=timings,
        config=dict(config.to_dict(), method=method, k=k),
    )


def run_protocols(config, methods=("EV", "Raw", "Split")):
    """Evaluate several methods on one shared shot record."""
    data = prepare_run(config)
    results = [evaluate_method(data, config, m) for m in methods]
    digests = {r.record_digest for r in results}
    assert len(digests) == 1, "methods were evaluated on different shot records"
    return data, results


def run_pipeline(config):
    """End-to-end run of ``config.method`` (with ``config.k`` forced if set)."""
    data = prepare_run(config)
    return evaluate_method(data, config, config.method, config.k)
