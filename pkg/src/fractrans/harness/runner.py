"""Run experiments, persist their records and fan sweeps out over worker processes."""
from __future__ import annotations

import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..solver import BlowUpError, write_field_binary
from .config import ExperimentConfig
from .experiments import REGISTRY
from .records import RunRecord, Verdict

WORKERS_ENV = "FRACTRANS_WORKERS"


def run(cfg: ExperimentConfig, persist: bool = True) -> RunRecord:
    """
    Execute one experiment.  The record is written to
    ``<output_dir>/<run_id>/record.json`` before returning, also when the
    solver blows up or the experiment raises; final fields go to
    ``<output_dir>/<run_id>/fields/*.bin``.
    """
    t0 = time.perf_counter()
    rec = RunRecord(run_id=cfg.run_id, experiment=cfg.experiment, config=cfg.to_dict())
    try:
        out = REGISTRY[cfg.experiment](cfg)
        rec.fitted = out.get("fitted", {})
        rec.verdicts = list(out.get("verdicts", []))
        rec.series = out.get("series", {})
        rec.steps = int(out.get("steps", 0))
        if persist:
            (Path(cfg.output_dir) / cfg.run_id / "fields").mkdir(parents=True, exist_ok=True)
            for name, (f, t) in out.get("fields", {}).items():
                write_field_binary(Path(cfg.output_dir) / cfg.run_id / "fields" / f"{name}.bin", f, t)
    except BlowUpError as e:
        rec.verdicts.append(Verdict("no_blow_up", "fail", value=float("inf"), threshold=1e12,
                                    margin=float("-inf"), note=str(e)))
        rec.steps = e.trajectory.steps if e.trajectory is not None else 0
        rec.error = f"blow-up: {e}"
    except Exception as e:  # noqa: BLE001 - any failure must still leave a record
        rec.error = f"{type(e).__name__}: {e}\n{traceback.format_exc()}"
    rec.wall_clock = time.perf_counter() - t0
    if persist:
        rec.save(Path(cfg.output_dir) / cfg.run_id)
    return rec


def _run_worker(cfg_dict: dict) -> dict:
    return run(ExperimentConfig.from_dict(cfg_dict)).to_dict()


def n_workers(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError as e:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from e
    return max(1, n)


def sweep(cfg: ExperimentConfig, axis: str, values, workers: int | None = None) -> list:
    """One run per value along ``axis``; records come back in ``values`` order."""
    cfgs = [cfg.replaced(axis, v) for v in values]
    workers = n_workers() if workers is None else workers
    if workers <= 1 or len(cfgs) == 1:
        return [run(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        dicts = list(ex.map(_run_worker, [c.to_dict() for c in cfgs]))
    return [RunRecord.from_dict(d) for d in dicts]
