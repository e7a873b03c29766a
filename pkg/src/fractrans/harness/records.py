"""Run records, verdicts and the CSV / JSON summaries built from them."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

STATUSES = ("pass", "fail", "skipped")
# verdicts tagged with this note measure time and are kept out of reproducible CSV columns
WALL_CLOCK = "wall-clock"


@dataclass
class Verdict:
    """
    One checked inequality ``value <op> threshold``.

    ``margin`` is signed so that a non-negative margin means the check holds:
    ``threshold - value`` for ``<=`` and ``value - threshold`` for ``>=``.
    """

    name: str
    status: str
    value: float | None = None
    threshold: float | None = None
    margin: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"verdict status must be one of {STATUSES}, got {self.status!r}")
        if self.status == "fail" and self.margin is None:
            raise ValueError(f"failing verdict {self.name!r} must carry its margin")


def check_le(name: str, value: float, threshold: float, note: str = "") -> Verdict:
    value = float(value)
    ok = bool(value <= threshold)
    return Verdict(name, "pass" if ok else "fail", value, float(threshold), float(threshold - value), note)


def check_ge(name: str, value: float, threshold: float, note: str = "") -> Verdict:
    value = float(value)
    ok = bool(value >= threshold)
    return Verdict(name, "pass" if ok else "fail", value, float(threshold), float(value - threshold), note)


def skipped(name: str, note: str) -> Verdict:
    return Verdict(name, "skipped", note=note)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


@dataclass
class RunRecord:
    run_id: str
    experiment: str
    config: dict
    fitted: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    steps: int = 0
    wall_clock: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(v.status != "fail" for v in self.verdicts)

    def counts(self) -> dict:
        c = {s: 0 for s in STATUSES}
        for v in self.verdicts:
            c[v.status] += 1
        return c

    def min_margin(self, include_timing: bool = False):
        m = [v.margin for v in self.verdicts if v.status != "skipped" and v.margin is not None
             and (include_timing or v.note != WALL_CLOCK)]
        return min(m) if m else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return _jsonable(d)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        d = dict(d)
        d.pop("passed", None)
        d["verdicts"] = [Verdict(**v) for v in d.get("verdicts", [])]
        return cls(**d)

    def save(self, directory) -> Path:
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        f = path / "record.json"
        f.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return f


def load_records(directory) -> list:
    """All ``record.json`` files below ``directory``, sorted by run id."""
    recs = [RunRecord.from_dict(json.loads(p.read_text())) for p in Path(directory).rglob("record.json")]
    return sorted(recs, key=lambda r: r.run_id)


def _flat(prefix: str, d: dict, out: dict):
    for k, v in sorted(d.items()):
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            _flat(key + ".", v, out)
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(_jsonable(v))
        else:
            out[key] = v


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def record_row(rec: RunRecord) -> dict:
    cfg = rec.config
    row = {
        "run_id": rec.run_id,
        "experiment": rec.experiment,
        "d": cfg["grid"]["d"],
        "N": cfg["grid"]["N"],
        "L": cfg["grid"]["L"],
        "alpha": cfg["solver"]["alpha"],
        "T": cfg["solver"]["T"],
        "velocity": cfg["velocity"]["kind"],
        "sink_strength": cfg["velocity"]["sink_strength"],
        "seed": cfg["seed"],
        "passed": rec.passed,
    }
    c = rec.counts()
    row.update({"n_pass": c["pass"], "n_fail": c["fail"], "n_skipped": c["skipped"], "min_margin": rec.min_margin()})
    fitted = {}
    _flat("fit.", rec.fitted, fitted)
    row.update(fitted)
    row["error"] = rec.error or ""
    row["steps"] = rec.steps
    row["wall_clock"] = rec.wall_clock
    return row


def report(records, out_dir) -> dict:
    """
    Write ``summary.csv`` (one row per run), ``summary.json`` and, for records
    carrying time series, ``series_<run_id>.csv`` with plot-ready columns.
    """
    records = list(records)
    if not records:
        raise ValueError("report needs at least one record")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create report directory {out}: {e}") from e
    rows = [record_row(r) for r in records]
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    # wall-clock last so the remaining columns are reproducible byte for byte
    cols = [c for c in cols if c != "wall_clock"] + ["wall_clock"]
    paths = {}
    p = out / "summary.csv"
    try:
        with open(p, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, quoting=csv.QUOTE_MINIMAL)
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(r.get(k)) for k in cols})
    except OSError as e:
        raise OSError(f"cannot write {p}: {e}") from e
    paths["csv"] = p
    summary = {
        "n_runs": len(records),
        "all_passed": all(r.passed for r in records),
        "runs": [
            {"run_id": r.run_id, "experiment": r.experiment, "passed": r.passed, "fitted": _jsonable(r.fitted),
             "verdicts": [_jsonable(asdict(v)) for v in r.verdicts], "error": r.error}
            for r in records
        ],
    }
    j = out / "summary.json"
    j.write_text(json.dumps(summary, indent=2, sort_keys=True))
    paths["json"] = j
    for r in records:
        for name, table in r.series.items():
            if not table:
                continue
            sp = out / f"series_{_safe(r.run_id)}_{name}.csv"
            keys = list(table.keys())
            n = len(table[keys[0]])
            with open(sp, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(keys)
                for i in range(n):
                    w.writerow([_fmt(_jsonable(table[k][i])) for k in keys])
            paths.setdefault("series", []).append(sp)
    return paths


def _safe(s: str) -> str:
    return "".join(c if c.isalnum() or c in "-_.=" else "_" for c in s)
