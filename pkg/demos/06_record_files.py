"""
Analyzing a stored shot record
==============================

Shot records can be written to CSV with a JSON sidecar and analyzed later,
for example records produced on hardware. The command-line ``analyze``
subcommand reads them back and runs any protocol.
"""

import json
import tempfile
from pathlib import Path

from shotsplit import RunConfig, Task, evaluate_method, prepare_run
from shotsplit.cli import main
from shotsplit.harness import export_shot_record, import_shot_record

config = RunConfig(task=Task.NARMA10, seed=2)
data = prepare_run(config)
direct = evaluate_method(data, config, "Split")

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    sidecar = export_shot_record(data.record, tmp / "record.csv")
    print("sidecar:", json.loads(sidecar.read_text()))
    print("lines in CSV:", sum(1 for _ in open(tmp / "record.csv")))
    assert import_shot_record(tmp / "record.csv").digest() == data.record.digest()

    code = main(["analyze", "--record", str(tmp / "record.csv"), "--protocol", "Split", "--out", str(tmp / "out")])
    result = json.loads((tmp / "out" / "result.json").read_text())
    print("exit code", code)
    print(f"direct run {direct.nrmse_test:.6f} vs from file {result['nrmse_test']:.6f}")
