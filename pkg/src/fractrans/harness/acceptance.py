"""The acceptance suite: numbered criteria, each backed by one or more experiment runs."""
from __future__ import annotations

from .config import default_config
from .runner import run

CRITERIA = (
    (1, "duality identity", lambda: [default_config("duality")]),
    (2, "conservation and positivity", lambda: [default_config("conservation")]),
    (3, "L2 energy inequality and threshold sweep",
     lambda: [default_config("energy_l2"), default_config("threshold_sweep")]),
    (4, "Cordoba pointwise inequality", lambda: [default_config("cordoba")]),
    (5, "Riccati envelope", lambda: [default_config("riccati")]),
    (6, "atom propagation",
     lambda: [default_config("atom_propagation", run_id="atom_propagation_alpha1"),
              default_config("atom_propagation", run_id="atom_propagation_alpha1.5",
                             solver=dict(alpha=1.5))]),
    (7, "regularization rate", lambda: [default_config("regularization_rate")]),
    (8, "Holder propagation", lambda: [default_config("holder_propagation")]),
    (9, "supercritical mode", lambda: [default_config("supercritical")]),
    (10, "interpolation bounds", lambda: [default_config("interpolation_bounds")]),
)


def run_criterion(number: int, output_dir: str = "runs/check") -> tuple:
    """Run every config behind criterion ``number``; returns ``(passed, records)``."""
    for n, _, make in CRITERIA:
        if n == number:
            recs = []
            for cfg in make():
                cfg.output_dir = output_dir
                recs.append(run(cfg))
            return all(r.passed for r in recs), recs
    raise ValueError(f"no acceptance criterion {number}")


def criterion_line(number: int, passed: bool, records) -> str:
    title = dict((n, t) for n, t, _ in CRITERIA)[number]
    margins = [r.min_margin() for r in records if r.min_margin() is not None]
    worst = f" min_margin={min(margins):.3g}" if margins else ""
    secs = sum(r.wall_clock for r in records)
    return f"criterion {number:2d} {title}: {'PASS' if passed else 'FAIL'}{worst} ({secs:.1f} s)"
