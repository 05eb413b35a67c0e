"""Trace CSV and summary JSON persistence.

Floats are written with ``repr`` so they round-trip exactly; padding of
theta coordinates uses the token ``NA``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..trace import NO_PROPOSAL, ChainTrace

NA = "NA"


def _fmt(x: float) -> str:
    return NA if math.isnan(x) else repr(float(x))


def _parse(s: str) -> float:
    return math.nan if s == NA else float(s)


def write_trace(trace: ChainTrace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = trace.coords.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep", "model_id"] + [f"coord{j + 1}" for j in range(d)]
                   + ["accepted", "log_ratio", "log_gamma", "proposal_id"])
        for i in range(len(trace)):
            w.writerow(
                [i + 1, int(trace.model_ids[i])]
                + [_fmt(c) for c in trace.coords[i]]
                + [int(trace.accepted[i]), _fmt(trace.log_ratio[i]), _fmt(trace.log_gamma[i]), int(trace.proposal_ids[i])]
            )
    return path


def read_trace(path, block_draw_count: int = 0, seed=None, fingerprint: str = "") -> ChainTrace:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = sum(1 for h in header if h.startswith("coord"))
    n = len(body)
    coords = np.full((n, d), np.nan)
    model_ids = np.empty(n, dtype=np.int64)
    accepted = np.empty(n, dtype=bool)
    log_ratio = np.empty(n)
    log_gamma = np.empty(n)
    proposal_ids = np.full(n, NO_PROPOSAL, dtype=np.int64)
    for i, r in enumerate(body):
        model_ids[i] = int(r[1])
        coords[i] = [_parse(c) for c in r[2:2 + d]]
        accepted[i] = r[2 + d] == "1"
        log_ratio[i] = _parse(r[3 + d])
        log_gamma[i] = _parse(r[4 + d])
        proposal_ids[i] = int(r[5 + d])
    return ChainTrace(model_ids, coords, accepted, log_ratio, log_gamma, proposal_ids, block_draw_count, seed, fingerprint)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())
