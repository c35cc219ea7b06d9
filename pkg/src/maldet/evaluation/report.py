"""Score records, CSV/JSON emission and plot-data point lists.

CSV schema (version 1): sample_id,detector,score,orientation,verdict with
scores printed at full float precision so a reparse reproduces the
in-memory records exactly.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from ..errors import DataFormatError, InputError

CSV_FIELDS = ("sample_id", "detector", "score", "orientation", "verdict")
REPORT_VERSION = 1


@dataclass(frozen=True)
class ScoreRecord:
    sample_id: str
    detector: str
    score: float
    orientation: str
    verdict: str = ""

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise InputError(f"score for {self.sample_id}/{self.detector} is not finite")


def records_from_scores(scores, detector: str, orientation: str, prefix: str,
                        verdicts=None) -> list:
    out = []
    for i, s in enumerate(np.asarray(scores, dtype=np.float64)):
        v = "" if verdicts is None else str(verdicts[i])
        out.append(ScoreRecord(f"{prefix}{i}", detector, float(s), orientation, v))
    return out


def write_score_csv(records, path) -> None:
    if not records:
        raise InputError("no score records to write")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow([r.sample_id, r.detector, f"{r.score:.17g}", r.orientation, r.verdict])


def read_score_csv(path) -> list:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != list(CSV_FIELDS):
            raise DataFormatError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            if len(row) != len(CSV_FIELDS):
                raise DataFormatError(f"{path}: malformed row {row}")
            out.append(ScoreRecord(row[0], row[1], float(row[2]), row[3], row[4]))
    return out


def write_json_report(payload: dict, path) -> None:
    if not payload:
        raise InputError("empty report payload")
    body = {"report_version": REPORT_VERSION}
    body.update(payload)
    with open(path, "w") as f:
        json.dump(body, f, indent=2, sort_keys=True, default=_jsonify)
        f.write("\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def cdf_points(scores) -> tuple:
    """Empirical CDF support points: sorted values, cumulative fractions."""
    scores = np.sort(np.asarray(scores, dtype=np.float64))
    if scores.size == 0:
        raise InputError("no scores for CDF")
    y = np.arange(1, scores.size + 1) / scores.size
    return scores, y


def write_points(path, xs, ys, figure: str) -> None:
    with open(path, "w") as f:
        f.write(f"# figure={figure}\n")
        for x, y in zip(xs, ys):
            f.write(f"{x:.17g} {y:.17g}\n")


def emit_report(records, fmt: str, path) -> list:
    """Emit score records as 'csv', 'json' or 'plot-data'; returns the
    file paths written. plot-data writes one CDF point list per detector
    into the directory `path`."""
    if not records:
        raise InputError("no records to emit")
    if fmt == "csv":
        write_score_csv(records, path)
        return [path]
    if fmt == "json":
        write_json_report({"records": [asdict(r) for r in records]}, path)
        return [path]
    if fmt == "plot-data":
        os.makedirs(path, exist_ok=True)
        written = []
        detectors = sorted({r.detector for r in records})
        for det in detectors:
            scores = [r.score for r in records if r.detector == det]
            xs, ys = cdf_points(scores)
            out = os.path.join(path, f"cdf_{det}.txt")
            write_points(out, xs, ys, figure=f"score-cdf/{det}")
            written.append(out)
        return written
    raise InputError(f"unknown report format {fmt!r} (csv, json, plot-data)")
