"""Experiment registry and the resumable, budget-matched batch runner.

Each experiment is a list of cells (parameter overrides of the shared
operating point) and a list of methods. For every (benchmark, cell, seed)
one shot record is simulated and all methods are evaluated on it; the rows
are cached under ``<out>/cache/<key>.json`` so an interrupted sweep resumes
where it stopped.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..protocol import BudgetSpec, RunConfig, run_protocols
from ..timeseries import Task
from .results import aggregate, emit_results

log = logging.getLogger(__name__)

CACHE_VERSION = 1

# Shared synthetic protocol.
TOTAL_BUDGET = 12000
SETTINGS = 2
WASHOUT = 30
LEAK = 0.2
WINDOW = 10
LAMBDA = 10.0
SHARED_POINT = {"n_qubits": 4, "n_shots": 18, "depth": 1, "entangler": "RingCnot", "lam": LAMBDA}

N_SHOTS_SWEEP = (10, 12, 15, 18, 20, 25, 30, 40, 50)
QUBIT_SWEEP = (4, 6, 8, 10, 12)
ARCHITECTURES = (
    ("RingCnot", 1),
    ("RingCnot", 2),
    ("RingCnot", 4),
    ("LineCnot", 1),
    ("AllToAllCz", 1),
)
LAMBDA_GRID = tuple(float(x) for x in np.logspace(-3, 3, 13))
DEFAULT_SEEDS = tuple(range(1, 21))
BENCHMARKS = (Task.MACKEY_GLASS, Task.LORENZ, Task.NARMA10)


def _cells(**sweep):
    (name, values), = sweep.items()
    return [dict(SHARED_POINT, **{name: v}) for v in values]


EXPERIMENTS = {
    "SharedPoint": (("EV", "Raw", "Split"), [dict(SHARED_POINT)]),
    "RhoSweep": (("EV", "Split"), _cells(n_shots=N_SHOTS_SWEEP)),
    "SizeSweep": (("EV", "Split"), _cells(n_qubits=QUBIT_SWEEP)),
    "Controls": (("EV", "Raw", "EvDup", "EvNA", "Split", "SplitNA"), [dict(SHARED_POINT)]),
    "DupSweep": (("EV", "EvDup", "Split"), _cells(n_shots=N_SHOTS_SWEEP)),
    "ArchAblation": (
        ("EV", "Split"),
        [dict(SHARED_POINT, entangler=e, depth=d) for e, d in ARCHITECTURES],
    ),
    "LambdaAblation": (("EV", "Raw", "Split"), _cells(lam=LAMBDA_GRID)),
}


class PartialRunError(RuntimeError):
    """Some (cell, seed) runs failed; finished rows were written and can be resumed."""

    def __init__(self, failures):
        super().__init__(f"{len(failures)} run(s) failed; rerun to resume")
        self.failures = failures


@dataclass
class ExperimentSpec:
    id: str
    out_dir: Path
    benchmarks: tuple = BENCHMARKS
    seeds: tuple = DEFAULT_SEEDS
    methods: tuple | None = None
    cells: list | None = None
    workers: int = 1

    def __post_init__(self):
        if self.id not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.id!r}; expected one of {sorted(EXPERIMENTS)}")
        self.out_dir = Path(self.out_dir)
        self.benchmarks = tuple(Task(b) for b in self.benchmarks)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        if not self.benchmarks:
            raise ValueError("benchmarks must not be empty")
        default_methods, default_cells = EXPERIMENTS[self.id]
        self.methods = tuple(self.methods or default_methods)
        self.cells = [dict(c) for c in (self.cells or default_cells)]


@dataclass
class ResultTable:
    experiment: str
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)


def canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def cell_config(benchmark, cell, seed):
    budget = BudgetSpec(total=TOTAL_BUDGET, n_shots=cell["n_shots"], settings=SETTINGS, washout=WASHOUT)
    return RunConfig(
        task=benchmark,
        n_qubits=cell["n_qubits"],
        depth=cell["depth"],
        entangler=cell["entangler"],
        leak=LEAK,
        window=WINDOW,
        lam=cell["lam"],
        budget=budget,
        seed=seed,
    )


def cache_key(experiment, benchmark, cell, seed, methods):
    payload = canonical(
        {"v": CACHE_VERSION, "experiment": experiment, "benchmark": Task(benchmark).value, "cell": cell, "seed": seed, "methods": list(methods)}
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def compute_cell(experiment, benchmark, cell, seed, methods):
    """Rows for one (benchmark, cell, seed), every method on the same shot record."""
    config = cell_config(benchmark, cell, seed)
    _, results = run_protocols(config, methods)
    rows = []
    for r in results:
        rows.append(
            {
                "experiment": experiment,
                "benchmark": Task(benchmark).value,
                "cell_params": canonical(cell),
                "protocol": r.method,
                "seed": seed,
                "k_selected": r.k_selected,
                "gamma_selected": r.gamma_selected,
                "rho_ev": r.rho_ev,
                "rho_k": r.rho_k,
                "nrmse_val": r.nrmse_val,
                "nrmse_test": r.nrmse_test,
                "record_digest": r.record_digest,
            }
        )
    return rows


def _write_json_atomic(path, obj):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj))
    os.replace(tmp, path)


def _load_cached(path):
    try:
        return json.loads(path.read_text())["rows"]
    except (OSError, ValueError, KeyError):
        return None


def run_experiment(spec, emit=True):
    """Run (or resume) every (benchmark, cell, seed) of ``spec`` and aggregate.

    Raises :class:`PartialRunError` after writing whatever finished when any
    run fails.
    """
    cache_dir = spec.out_dir / "cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for b in spec.benchmarks:
        for ci, cell in enumerate(spec.cells):
            for seed in spec.seeds:
                key = cache_key(spec.id, b, cell, seed, spec.methods)
                jobs.append(((spec.benchmarks.index(b), ci, seed), (spec.id, b, cell, seed, spec.methods), cache_dir / f"{key}.json"))

    done = {}
    pending = []
    for order, args, path in jobs:
        rows = _load_cached(path) if path.exists() else None
        if rows is None:
            pending.append((order, args, path))
        else:
            done[order] = rows
    log.info("%s: %d cached, %d to run", spec.id, len(done), len(pending))

    failures = []

    def collect(order, args, path, rows):
        _write_json_atomic(path, {"args": [args[0], Task(args[1]).value, args[2], args[3], list(args[4])], "rows": rows})
        done[order] = rows

    if spec.workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = {pool.submit(compute_cell, *args): (order, args, path) for order, args, path in pending}
            for fut in as_completed(futures):
                order, args, path = futures[fut]
                try:
                    collect(order, args, path, fut.result())
                except Exception as exc:  # noqa: BLE001 - keep the sweep going
                    failures.append((args, repr(exc)))
    else:
        for order, args, path in pending:
            try:
                collect(order, args, path, compute_cell(*args))
            except Exception as exc:  # noqa: BLE001
                failures.append((args, repr(exc)))

    method_rank = {m: i for i, m in enumerate(spec.methods)}
    rows = []
    for order in sorted(done):
        rows.extend(sorted(done[order], key=lambda r: method_rank.get(r["protocol"], len(method_rank))))
    table = ResultTable(experiment=spec.id, rows=rows, aggregates=aggregate(rows))

    marker = spec.out_dir / "INCOMPLETE"
    if emit and rows:
        emit_results(table, spec.out_dir)
        meta = {
            "experiment": spec.id,
            "benchmarks": [b.value for b in spec.benchmarks],
            "seeds": list(spec.seeds),
            "methods": list(spec.methods),
            "cells": spec.cells,
            "record_digests": sorted({r["record_digest"] for r in rows}),
            "failures": [{"args": canonical([a[0], Task(a[1]).value, a[2], a[3]]), "error": e} for a, e in failures],
        }
        meta["written_at"] = datetime.now(timezone.utc).isoformat()
        (spec.out_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    if failures:
        marker.write_text("\n".join(canonical([a[0], Task(a[1]).value, a[2], a[3]]) + "\t" + e for a, e in failures) + "\n")
        raise PartialRunError(failures)
    if marker.exists():
        marker.unlink()
    return table
