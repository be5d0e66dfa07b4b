import csv
import json

import numpy as np
import pytest

from shotsplit import cli
from shotsplit.harness import experiments as ex
from shotsplit.harness.records import (
    RecordFormatError,
    export_series,
    export_shot_record,
    import_series,
    import_shot_record,
)
from shotsplit.harness.results import AGGREGATE_COLUMNS, RAW_COLUMNS, aggregate, emit_results, read_csv
from shotsplit.protocol import RunConfig, evaluate_method, prepare_run
from shotsplit.quantum import ShotRecord, build_reservoir, run_sequence


def small_record(q=2, n=3, t=5):
    return run_sequence(build_reservoir(4, q), np.linspace(0, 1, t), n, sampling_seed=8, task="MackeyGlass")


def write_fixture(tmp_path, body, meta=None):
    path = tmp_path / "rec.csv"
    path.write_text(body)
    meta = meta or {"Q": 1, "N_shots": 2, "T": 2, "reservoir_seed": 0, "sampling_seed": 0, "task": "MackeyGlass"}
    (tmp_path / "rec.meta.json").write_text(json.dumps(meta))
    return path


HAND = "t,shot,z1,x1\n0,0,1,-1\n0,1,-1,-1\n1,0,1,1\n1,1,-1,1\n"


def test_hand_written_fixture(tmp_path):
    rec = import_shot_record(write_fixture(tmp_path, HAND))
    expected = np.array([[[1, -1], [-1, -1]], [[1, 1], [-1, 1]]])
    np.testing.assert_array_equal(rec.outcomes, expected)
    assert rec.n_steps == 2 and rec.n_shots == 2 and rec.n_qubits == 1


def test_round_trip_bit_exact(tmp_path):
    rec = small_record()
    export_shot_record(rec, tmp_path / "r.csv")
    back = import_shot_record(tmp_path / "r.csv")
    np.testing.assert_array_equal(back.outcomes, rec.outcomes)
    assert back.digest() == rec.digest()
    assert (back.reservoir_seed, back.sampling_seed, back.task) == (rec.reservoir_seed, rec.sampling_seed, rec.task)


def test_zero_entry_reports_coordinates(tmp_path):
    bad = HAND.replace("1,0,1,1", "1,0,0,1")
    with pytest.raises(RecordFormatError) as err:
        import_shot_record(write_fixture(tmp_path, bad))
    assert err.value.row == 4 and err.value.column == "z1"
    assert "row 4" in str(err.value) and "z1" in str(err.value)


@pytest.mark.parametrize(
    "body,row",
    [
        ("t,shot,z1\n0,0,1\n", 1),
        (HAND.replace("0,1,-1,-1", "0,1,-1"), 3),
        (HAND.replace("1,0,1,1", "1,1,1,1"), 4),
        (HAND + "2,0,1,1\n", 6),
    ],
)
def test_malformed_files(tmp_path, body, row):
    with pytest.raises(RecordFormatError) as err:
        import_shot_record(write_fixture(tmp_path, body))
    assert err.value.row == row


def test_short_file_and_missing_sidecar(tmp_path):
    with pytest.raises(RecordFormatError):
        import_shot_record(write_fixture(tmp_path, "\n".join(HAND.splitlines()[:3]) + "\n"))
    (tmp_path / "rec.meta.json").unlink()
    with pytest.raises(RecordFormatError, match="sidecar"):
        import_shot_record(tmp_path / "rec.csv")


def test_series_round_trip(tmp_path):
    v = np.random.default_rng(0).normal(size=30)
    export_series(v, tmp_path / "s.csv")
    np.testing.assert_array_equal(import_series(tmp_path / "s.csv"), v)


def test_table_constants():
    assert (ex.TOTAL_BUDGET, ex.SETTINGS, ex.WASHOUT, ex.LEAK, ex.WINDOW, ex.LAMBDA) == (12000, 2, 30, 0.2, 10, 10.0)
    assert ex.SHARED_POINT["n_qubits"] == 4 and ex.SHARED_POINT["n_shots"] == 18
    assert ex.N_SHOTS_SWEEP == (10, 12, 15, 18, 20, 25, 30, 40, 50)
    assert ex.QUBIT_SWEEP == (4, 6, 8, 10, 12)
    assert len(ex.LAMBDA_GRID) == 13 and ex.LAMBDA_GRID[0] == pytest.approx(1e-3) and ex.LAMBDA_GRID[-1] == pytest.approx(1e3)
    assert ex.DEFAULT_SEEDS == tuple(range(1, 21))
    assert ex.EXPERIMENTS["Controls"][0] == ("EV", "Raw", "EvDup", "EvNA", "Split", "SplitNA")
    assert ex.EXPERIMENTS["DupSweep"][0] == ("EV", "EvDup", "Split")
    arch = {(c["entangler"], c["depth"]) for c in ex.EXPERIMENTS["ArchAblation"][1]}
    assert arch == {("RingCnot", 1), ("RingCnot", 2), ("RingCnot", 4), ("LineCnot", 1), ("AllToAllCz", 1)}
    config = ex.cell_config("MackeyGlass", ex.SHARED_POINT, 1)
    assert (config.leak, config.window, config.lam, config.budget.total, config.budget.washout) == (0.2, 10, 10.0, 12000, 30)


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        ex.ExperimentSpec("SharedPoint", tmp_path / "o", seeds=())
    with pytest.raises(ValueError):
        ex.ExperimentSpec("Nope", tmp_path / "o")
    assert not (tmp_path / "o").exists()


@pytest.fixture(scope="module")
def shared_two_seeds(tmp_path_factory):
    out = tmp_path_factory.mktemp("shared")
    table = ex.run_experiment(ex.ExperimentSpec("SharedPoint", out, seeds=(1, 2)))
    return out, table


def test_shared_point_row_count(shared_two_seeds):
    out, table = shared_two_seeds
    assert len(table.rows) == 18
    raw = read_csv(out / "raw.csv")
    assert len(raw) == 18
    assert list(raw[0]) == list(RAW_COLUMNS)
    with open(out / "aggregate.csv") as fh:
        assert next(csv.reader(fh)) == list(AGGREGATE_COLUMNS)
    assert {r["protocol"] for r in raw} == {"EV", "Raw", "Split"}
    meta = json.loads((out / "meta.json").read_text())
    assert len(meta["record_digests"]) == 6
    for b in ("MackeyGlass", "Lorenz", "Narma10"):
        for s in (1, 2):
            assert len({r["record_digest"] for r in table.rows if r["benchmark"] == b and r["seed"] == s}) == 1


def test_csv_round_trip(shared_two_seeds):
    out, table = shared_two_seeds
    raw = read_csv(out / "raw.csv")
    assert raw == [{c: r[c] for c in RAW_COLUMNS} for r in table.rows]
    agg = read_csv(out / "aggregate.csv")
    assert [a["mean_nrmse_test"] for a in agg] == [a["mean_nrmse_test"] for a in table.aggregates]


def test_resume_recomputes_only_missing(shared_two_seeds, monkeypatch):
    out, table = shared_two_seeds
    before = (out / "raw.csv").read_bytes()
    victim = sorted((out / "cache").glob("*.json"))[0]
    victim.unlink()
    calls = []
    real = ex.compute_cell

    def counting(*args):
        calls.append(args)
        return real(*args)

    monkeypatch.setattr(ex, "compute_cell", counting)
    ex.run_experiment(ex.ExperimentSpec("SharedPoint", out, seeds=(1, 2)))
    assert len(calls) == 1
    assert victim.exists()
    assert (out / "raw.csv").read_bytes() == before


def test_partial_failure_marker(tmp_path, monkeypatch):
    def flaky(experiment, benchmark, cell, seed, methods):
        if seed == 2:
            raise RuntimeError("boom")
        return real(experiment, benchmark, cell, seed, methods)

    real = ex.compute_cell
    monkeypatch.setattr(ex, "compute_cell", flaky)
    spec = ex.ExperimentSpec("SharedPoint", tmp_path, benchmarks=("MackeyGlass",), seeds=(1, 2))
    with pytest.raises(ex.PartialRunError):
        ex.run_experiment(spec)
    assert (tmp_path / "INCOMPLETE").exists()
    assert len(read_csv(tmp_path / "raw.csv")) == 3
    monkeypatch.setattr(ex, "compute_cell", real)
    ex.run_experiment(spec)
    assert not (tmp_path / "INCOMPLETE").exists()
    assert len(read_csv(tmp_path / "raw.csv")) == 6


def test_rho_sweep_endpoint_cell(tmp_path):
    cell = dict(ex.SHARED_POINT, n_shots=50)
    spec = ex.ExperimentSpec("RhoSweep", tmp_path, benchmarks=("Lorenz",), seeds=(1,), cells=[cell])
    table = ex.run_experiment(spec)
    assert {r["rho_ev"] for r in table.rows} == {0.7875}


def fake_rows():
    rows = []
    for seed, (ev, sp) in enumerate([(1.0, 0.5), (0.8, 0.9), (0.6, 0.1)], start=1):
        for proto, v in (("EV", ev), ("Split", sp)):
            rows.append(
                dict(experiment="X", benchmark="Lorenz", cell_params="{}", protocol=proto, seed=seed, k_selected=1,
                     gamma_selected=0.0, rho_ev=1.0, rho_k=1.0, nrmse_val=v, nrmse_test=v)
            )
    return rows


def test_aggregate_hand_computed():
    agg = {a["protocol"]: a for a in aggregate(fake_rows())}
    assert agg["EV"]["mean_nrmse_test"] == pytest.approx(0.8)
    assert agg["Split"]["mean_nrmse_test"] == pytest.approx(0.5)
    assert agg["Split"]["gap_mean"] == pytest.approx(0.3)
    assert agg["Split"]["win_rate"] == pytest.approx(2 / 3)
    assert agg["EV"]["gap_mean"] == ""
    assert agg["Split"]["n_seeds"] == 3


def test_emit_json_and_empty(tmp_path):
    table = ex.ResultTable("X", fake_rows(), aggregate(fake_rows()))
    raw_path, _ = emit_results(table, tmp_path, fmt="json")
    assert len(json.loads(raw_path.read_text())) == 6
    with pytest.raises(ValueError):
        emit_results(ex.ResultTable("X"), tmp_path / "empty")
    assert not (tmp_path / "empty").exists()


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["run", "--experiment", "Nope", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--experiment", "SharedPoint", "--out", str(tmp_path), "--seeds", "0"]) == cli.EXIT_CONFIG
    assert cli.main(["analyze", "--record", str(tmp_path / "missing.csv"), "--protocol", "EV", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    (tmp_path / "bad.json").write_text('{"bogus": 1}')
    assert cli.main(["single", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    (tmp_path / "short.json").write_text(json.dumps({"budget": {"total": 100}}))
    assert cli.main(["single", "--config", str(tmp_path / "short.json"), "--out", str(tmp_path)]) == cli.EXIT_RUNTIME


def test_cli_partial_exit(tmp_path, monkeypatch):
    monkeypatch.setattr(ex, "compute_cell", lambda *a: (_ for _ in ()).throw(RuntimeError("boom")))
    code = cli.main(["run", "--experiment", "SharedPoint", "--out", str(tmp_path), "--seeds", "1", "--benchmarks", "Lorenz"])
    assert code == cli.EXIT_PARTIAL


def test_cli_single(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"task": "Lorenz", "method": "Split", "seed": 3}))
    assert cli.main(["single", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == cli.EXIT_OK
    result = json.loads((tmp_path / "o" / "result.json").read_text())
    assert result["method"] == "Split" and result["test_evaluations"] == 1


@pytest.mark.parametrize("with_series", [False, True])
def test_cli_analyze_reproduces_pipeline(tmp_path, with_series):
    config = RunConfig(task="Narma10", seed=4)
    data = prepare_run(config)
    expected = evaluate_method(data, config, "Split")
    export_shot_record(data.record, tmp_path / "rec.csv")
    argv = ["analyze", "--record", str(tmp_path / "rec.csv"), "--protocol", "Split", "--k", "auto", "--out", str(tmp_path / "o")]
    if with_series:
        export_series(data.series.raw, tmp_path / "series.csv")
        argv += ["--series", str(tmp_path / "series.csv")]
    assert cli.main(argv) == cli.EXIT_OK
    result = json.loads((tmp_path / "o" / "result.json").read_text())
    assert result["nrmse_test"] == expected.nrmse_test
    assert result["k_selected"] == expected.k_selected


def test_cli_analyze_forced_k(tmp_path):
    config = RunConfig(task="MackeyGlass", seed=2)
    data = prepare_run(config)
    export_shot_record(data.record, tmp_path / "rec.csv")
    argv = ["analyze", "--record", str(tmp_path / "rec.csv"), "--protocol", "Split", "--k", "18", "--out", str(tmp_path / "o")]
    assert cli.main(argv) == cli.EXIT_OK
    result = json.loads((tmp_path / "o" / "result.json").read_text())
    assert result["nrmse_test"] == evaluate_method(data, config, "EV").nrmse_test


def test_record_without_series_seed_needs_series(tmp_path):
    rec = ShotRecord(small_record(t=40).outcomes, 2, 3, task="Lorenz")
    export_shot_record(rec, tmp_path / "r.csv")
    argv = ["analyze", "--record", str(tmp_path / "r.csv"), "--protocol", "EV", "--washout", "0", "--out", str(tmp_path / "o")]
    assert cli.main(argv) == cli.EXIT_CONFIG
    rec.task = None
    export_shot_record(rec, tmp_path / "r.csv")
    assert cli.main(argv) == cli.EXIT_CONFIG
