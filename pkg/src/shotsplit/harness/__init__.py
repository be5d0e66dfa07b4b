"""Batch experiments, shot-record files and result emission."""

from .experiments import EXPERIMENTS, ExperimentSpec, PartialRunError, ResultTable, run_experiment
from .records import RecordFormatError, export_shot_record, import_shot_record
from .results import AGGREGATE_COLUMNS, RAW_COLUMNS, emit_results, read_csv
