"""CSV writers for run outputs. Floats use shortest round-trip repr."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    try:
        import numpy as np

        if isinstance(v, np.floating):
            return repr(float(v))
        if isinstance(v, np.bool_):
            return "true" if bool(v) else "false"
    except ImportError:  # pragma: no cover
        pass
    return str(v)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def write_lambda_csv(path, rows) -> Path:
    return write_rows(path, ["t", "phi_id", "lambda", "lambda_prime_rhs"], rows)


def write_report_csv(path, report) -> Path:
    return write_rows(path, ["check", "t1", "t2", "phi_id", "value", "pass"],
                      ((r.check, r.t1, r.t2, r.phi_id, r.value, r.passed) for r in report.rows))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=fmt) + "\n")
    return path
