"""Aggregation and CSV/JSON emission of experiment results (long, plot-ready format)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..stats import PairedSample, paired_gap_stats

RAW_COLUMNS = (
    "experiment",
    "benchmark",
    "cell_params",
    "protocol",
    "seed",
    "k_selected",
    "gamma_selected",
    "rho_ev",
    "rho_k",
    "nrmse_val",
    "nrmse_test",
)
AGGREGATE_COLUMNS = (
    "experiment",
    "benchmark",
    "cell_params",
    "protocol",
    "n_seeds",
    "rho_ev",
    "mean_nrmse_test",
    "sd_nrmse_test",
    "mean_nrmse_val",
    "reference",
    "gap_mean",
    "gap_sd",
    "win_rate",
    "wilcoxon_p",
    "ci95",
)
_INT_COLUMNS = {"seed", "k_selected", "n_seeds"}
_STR_COLUMNS = {"experiment", "benchmark", "cell_params", "protocol", "reference"}
REFERENCE = "EV"


def aggregate(rows):
    """Per (benchmark, cell, protocol): mean/SD of test NRMSE and paired stats against EV.

    The gap is ``NRMSE(EV) - NRMSE(protocol)``, so positive values favor the
    protocol. SDs are sample SDs.
    """
    groups = {}
    for r in rows:
        groups.setdefault((r["experiment"], r["benchmark"], r["cell_params"], r["protocol"]), []).append(r)
    out = []
    for (exp, bench, cell, proto), members in groups.items():
        members = sorted(members, key=lambda r: r["seed"])
        test = np.array([m["nrmse_test"] for m in members])
        agg = {
            "experiment": exp,
            "benchmark": bench,
            "cell_params": cell,
            "protocol": proto,
            "n_seeds": len(members),
            "rho_ev": members[0]["rho_ev"],
            "mean_nrmse_test": float(test.mean()),
            "sd_nrmse_test": float(test.std(ddof=1)) if len(test) > 1 else 0.0,
            "mean_nrmse_val": float(np.mean([m["nrmse_val"] for m in members])),
            "reference": "",
            "gap_mean": "",
            "gap_sd": "",
            "win_rate": "",
            "wilcoxon_p": "",
            "ci95": "",
        }
        ref = groups.get((exp, bench, cell, REFERENCE))
        if proto != REFERENCE and ref is not None:
            ref_by_seed = {m["seed"]: m["nrmse_test"] for m in ref}
            paired = [(ref_by_seed[m["seed"]], m["nrmse_test"]) for m in members if m["seed"] in ref_by_seed]
            if len(paired) >= 2:
                a, b = zip(*paired)
                s = paired_gap_stats(PairedSample(np.array(a), np.array(b), REFERENCE, proto))
                agg.update(reference=REFERENCE, gap_mean=s.mean_gap, gap_sd=s.sd, win_rate=s.win_rate, wilcoxon_p=s.wilcoxon_p, ci95=s.ci95)
        out.append(agg)
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows, columns, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def read_csv(path):
    """Read a raw or aggregate CSV back with numeric columns typed."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for r in reader:
            typed = {}
            for k, v in r.items():
                if k in _STR_COLUMNS or v == "":
                    typed[k] = v
                elif k in _INT_COLUMNS:
                    typed[k] = int(v)
                else:
                    typed[k] = float(v)
            rows.append(typed)
    return rows


def emit_results(table, out_dir, fmt="csv"):
    """Write ``raw`` and ``aggregate`` files in ``fmt`` ("csv" or "json"); returns their paths."""
    if not table.rows:
        raise ValueError("result table is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw = [{c: r[c] for c in RAW_COLUMNS} for r in table.rows]
    agg = [{c: a[c] for c in AGGREGATE_COLUMNS} for a in table.aggregates]
    if fmt == "csv":
        paths = out_dir / "raw.csv", out_dir / "aggregate.csv"
        write_csv(raw, RAW_COLUMNS, paths[0])
        write_csv(agg, AGGREGATE_COLUMNS, paths[1])
    elif fmt == "json":
        paths = out_dir / "raw.json", out_dir / "aggregate.json"
        paths[0].write_text(json.dumps(raw, indent=1) + "\n")
        paths[1].write_text(json.dumps(agg, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return paths
