"""Prediction files: per-sample predictions of h, h-hat* and h_DA.

One CSV row per sample, header exactly ``PREDICTION_COLUMNS``. Bounds can be
estimated from such a file without any model in this package, which lets an
external training pipeline be audited.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import DatasetPair, Hypothesis
from .errors import ParseError, ValidationError
from .estimators import BoundReport, ConfidenceConfig, report_from_predictions

PREDICTION_COLUMNS = ("split", "origin", "sample_id", "true_label", "pred_h", "pred_hstar", "pred_hda")


@dataclass(frozen=True)
class PredictionRecord:
    split: str
    origin: str
    sample_id: str
    true_label: int
    pred_h: int
    pred_hstar: int
    pred_hda: int | None = None


def records_from_run(data: DatasetPair, h: Hypothesis, h_star: Hypothesis,
                     h_da: Hypothesis | None = None) -> list[PredictionRecord]:
    out = []
    for s in (data.real_train, data.synth_train, data.real_test, data.synth_test):
        ph, ps = h(s), h_star(s)
        pd = h_da(s) if h_da is not None else [None] * s.size
        for i in range(s.size):
            out.append(PredictionRecord(
                s.split, s.origin, f"{s.origin}-{s.split}-{i}", int(s.labels[i]),
                int(ph[i]), int(ps[i]), None if pd[i] is None else int(pd[i]),
            ))
    return out


def write_predictions(records: Iterable[PredictionRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PREDICTION_COLUMNS)
        for r in records:
            w.writerow([r.split, r.origin, r.sample_id, r.true_label, r.pred_h, r.pred_hstar,
                        "" if r.pred_hda is None else r.pred_hda])


def _int_field(row: dict, key: str, line: int, allow_empty=False) -> int | None:
    raw = (row.get(key) or "").strip()
    if raw == "" and allow_empty:
        return None
    try:
        v = int(raw)
    except ValueError:
        raise ParseError(f"{key} is not an integer: {raw!r}", line) from None
    if v < 0:
        raise ParseError(f"{key} must be non-negative", line)
    return v


def read_predictions(path) -> list[PredictionRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != PREDICTION_COLUMNS:
            raise ParseError(f"header must be {','.join(PREDICTION_COLUMNS)}", 1)
        records, seen = [], set()
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise ParseError("wrong number of fields", line)
            split, origin = row["split"].strip(), row["origin"].strip()
            if split not in ("train", "test"):
                raise ParseError(f"bad split {split!r}", line)
            if origin not in ("real", "synthetic"):
                raise ParseError(f"bad origin {origin!r}", line)
            key = (split, origin, row["sample_id"])
            if key in seen:
                raise ValidationError(f"line {line}: duplicate key {key}")
            seen.add(key)
            hda = _int_field(row, "pred_hda", line, allow_empty=True)
            if hda is not None and hda > 1:
                raise ParseError("pred_hda must be 0 or 1", line)
            records.append(PredictionRecord(
                split, origin, row["sample_id"],
                _int_field(row, "true_label", line), _int_field(row, "pred_h", line),
                _int_field(row, "pred_hstar", line), hda,
            ))
    has_hda = {r.pred_hda is not None for r in records}
    if len(has_hda) > 1:
        raise ValidationError("pred_hda must be present on all rows or on none")
    return records


def estimate_from_records(records: list[PredictionRecord], conf: ConfidenceConfig = ConfidenceConfig()) -> BoundReport:
    """Bound estimates from the test rows; train rows only supply ``n``."""
    def cols(origin, split):
        rows = [r for r in records if r.origin == origin and r.split == split]
        return rows, {
            "true": np.array([r.true_label for r in rows], dtype=np.int64),
            "h": np.array([r.pred_h for r in rows], dtype=np.int64),
            "hstar": np.array([r.pred_hstar for r in rows], dtype=np.int64),
            "hda": None if not rows or rows[0].pred_hda is None
            else np.array([r.pred_hda for r in rows], dtype=np.int64),
        }

    st_rows, st = cols("synthetic", "test")
    rt_rows, rt = cols("real", "test")
    if not st_rows or not rt_rows:
        raise ValidationError("both real and synthetic test splits must be nonempty")
    n_real = sum(1 for r in records if r.split == "train" and r.origin == "real")
    n_synth = sum(1 for r in records if r.split == "train" and r.origin == "synthetic")
    n = n_real if n_real and n_real == n_synth else None
    return report_from_predictions(
        synth_true=st["true"], synth_h=st["h"], synth_hstar=st["hstar"],
        real_true=rt["true"], real_h=rt["h"], real_hstar=rt["hstar"],
        synth_hda=st["hda"], real_hda=rt["hda"], conf=conf, n=n,
    )
