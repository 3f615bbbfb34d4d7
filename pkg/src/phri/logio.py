"""Run-directory I/O: CSV log, metrics JSON, and the meta sidecar.

The CSV column order is frozen (see docs/formats.md); floats are written
with repr-exact precision so identical runs produce identical bytes.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .simulator import COLUMNS, SimLog

LOG_NAME = "log.csv"
META_NAME = "meta.json"
METRICS_NAME = "metrics.json"

FLOAT_FMT = "%.17g"


def write_log(run_dir: str, log: SimLog) -> str:
    path = os.path.join(run_dir, LOG_NAME)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(log.columns) + "\n")
        for row in log.data:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    return path


def read_log(run_dir: str) -> SimLog:
    path = os.path.join(run_dir, LOG_NAME)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.empty((0, len(header)))
    if list(header) != list(COLUMNS):
        raise ValueError(f"unexpected CSV columns in {path}")
    meta = {}
    meta_path = os.path.join(run_dir, META_NAME)
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    return SimLog(data=data, meta=meta)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_json(path: str, payload: dict) -> str:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def write_meta(run_dir: str, log: SimLog, config_echo: dict, version: str) -> str:
    payload = dict(log.meta)
    payload["config"] = config_echo
    payload["version"] = version
    payload["columns"] = list(log.columns)
    return write_json(os.path.join(run_dir, META_NAME), payload)


def write_metrics(run_dir: str, metrics: dict) -> str:
    return write_json(os.path.join(run_dir, METRICS_NAME), metrics)
