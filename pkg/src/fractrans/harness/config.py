"""Experiment configuration: one JSON document per run, every default explicit."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from ..spectral import GridSpec
from ..solver import SolverConfig
from ..velocity import VelocityModel
from ..atoms import AtomParams, default_omega

EXPERIMENTS = (
    "duality",
    "conservation",
    "energy_l2",
    "cordoba",
    "riccati",
    "atom_propagation",
    "regularization_rate",
    "holder_propagation",
    "supercritical",
    "threshold_sweep",
    "interpolation_bounds",
)

# desk-scale defaults per experiment: (grid, solver, velocity, atom, params)
_DEFAULTS = {
    "duality": (
        dict(d=1, N=1024, L=1.0),
        dict(alpha=1.0, T=0.25),
        dict(kind="composite", amplitude=0.2, sink_strength=1.0, length_scale=0.15, seed=1),
        dict(),
        dict(refine=True, oracle_tol=1e-10, tol=1e-3, min_reduction=1.5, max_seconds=30.0),
    ),
    "conservation": (
        dict(d=1, N=1024, L=1.0),
        dict(alpha=1.0, T=0.5),
        dict(kind="compressive_sink", sink_strength=5.0, length_scale=0.1),
        dict(),
        dict(n_data=20, alphas=[0.5, 1.0, 1.5], mass_tol=1e-13, min_tol=-1e-12, l1_slack=1e-10),
    ),
    "energy_l2": (
        dict(d=2, N=256, L=1.0),
        dict(alpha=1.0, T=0.5),
        dict(kind="compressive_sink", length_scale=0.1, center=[0.5, 0.5]),
        dict(),
        dict(sink_fraction=0.8, slack=0.05, n_snapshots=100, data_center=[0.3, 0.5], data_width=0.08),
    ),
    "cordoba": (
        dict(d=1, N=64, L=1.0),
        dict(alpha=1.0, T=1.0),
        dict(kind="zero"),
        dict(),
        dict(alphas=[0.5, 1.0, 1.5], n_fields=10, tol=1e-10, images=10),
    ),
    "riccati": (
        dict(d=2, N=256, L=1.0),
        dict(alpha=1.0, T=0.5),
        dict(kind="divergence_free", amplitude=0.5, seed=1),
        dict(),
        dict(r=0.125, slack=0.05, n_snapshots=40),
    ),
    "atom_propagation": (
        dict(d=2, N=256, L=2.0),
        dict(alpha=1.0, T=1.0),
        dict(kind="divergence_free", amplitude=0.5, seed=1),
        dict(A=50.0, p=2.0),
        dict(radii=[0.25, 0.125, 0.0625], calibration_radius=0.0625,
             velocity_kinds=["divergence_free", "compressive_sink", "shear"], sink_center_offset=0.2, admissible_fraction=0.5, gamma=0.1,
             horizon_factor=2.0, n_snapshots=40, slack=0.1, tracking="ball_average", track_substeps=4),
    ),
    "regularization_rate": (
        dict(d=2, N=256, L=4.0),
        dict(alpha=1.5, T=0.5),
        dict(kind="divergence_free", amplitude=0.5, seed=1),
        dict(),
        dict(beta=0.5, q=2.0, t_min=0.01, n_snapshots=12, rough_exponent_gap=0.05,
             rate_tol=0.15, uniformity_tol=0.2),
    ),
    "holder_propagation": (
        dict(d=2, N=256, L=1.0),
        dict(alpha=1.0, T=1.0),
        dict(kind="divergence_free", amplitude=0.5, seed=1),
        dict(),
        dict(beta=0.5, n_snapshots=20, factor=3.0),
    ),
    "supercritical": (
        dict(d=1, N=1024, L=4.0),
        dict(alpha=0.4, T=1.0),
        dict(kind="rough_holder", amplitude=0.5, gamma=0.6, seed=3),
        dict(A=50.0, p=2.0),
        dict(radii=[0.25, 0.125, 0.0625], calibration_radius=0.0625,
             velocity_kinds=["rough_holder", "compressive_sink"], sink_center_offset=0.2, admissible_fraction=0.5, gamma=0.1,
             horizon_factor=2.0, n_snapshots=40, slack=0.1, tracking="pointwise", track_substeps=4,
             n_data=20, mass_tol=1e-13, min_tol=-1e-12, l1_slack=1e-10),
    ),
    "threshold_sweep": (
        dict(d=2, N=256, L=1.0),
        dict(alpha=1.0, T=0.25),
        dict(kind="compressive_sink", length_scale=0.1, center=[0.5, 0.5]),
        dict(),
        dict(fractions=[0.0, 0.4, 0.8, 1.2, 2.0, 4.0], slack=0.05, n_snapshots=50,
             data_center=[0.3, 0.5], data_width=0.08),
    ),
    "interpolation_bounds": (
        dict(d=1, N=1024, L=4.0),
        dict(alpha=1.0, T=1.0),
        dict(kind="zero"),
        dict(A=50.0),
        dict(n_atoms=100, p_values=[4.0, "inf"], q_values=[1.0, 2.0],
             radii=[0.25, 0.125, 0.0625], canonical_radii=[0.25, 0.125, 0.0625, 0.03125]),
    ),
}


@dataclass
class ExperimentConfig:
    experiment: str
    grid: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    velocity: dict = field(default_factory=dict)
    atom: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "runs"
    run_id: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        g, s, v, a, p = copy.deepcopy(_DEFAULTS[self.experiment])
        self.grid = {**g, **self.grid}
        self.solver = SolverConfig(**{**s, **self.solver}).to_dict()
        self.velocity = {**v, **self.velocity}
        alpha = self.solver["alpha"]
        a.setdefault("omega", default_omega(alpha, self.grid["d"]))
        self.atom = {**AtomParams().to_dict(), **a, **self.atom}
        self.velocity = {**VelocityModel().to_dict(), **self.velocity}
        self.params = {**p, **self.params}
        # validate eagerly so a bad file fails before any work starts
        self.grid_spec()
        self.solver_config()
        self.velocity_model()
        self.atom_params()
        if self.run_id is None:
            self.run_id = self.experiment

    def grid_spec(self) -> GridSpec:
        return GridSpec(int(self.grid["d"]), int(self.grid["N"]), float(self.grid["L"]))

    def solver_config(self, **over) -> SolverConfig:
        return SolverConfig(**{**self.solver, **over})

    def velocity_model(self, **over) -> VelocityModel:
        return VelocityModel(**{**self.velocity, **over})

    def atom_params(self, **over) -> AtomParams:
        d = {**self.atom, **over}
        if d.get("p") in ("inf", "Infinity"):
            d["p"] = float("inf")
        return AtomParams(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"experiment", "grid", "solver", "velocity", "atom", "params", "seed", "output_dir", "run_id"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in d:
            raise ValueError("config must name an experiment")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def replaced(self, axis: str, value) -> "ExperimentConfig":
        """Copy with one dotted field (``solver.alpha``, ``grid.N``, ``seed`` ...) replaced."""
        d = copy.deepcopy(self.to_dict())
        parts = axis.split(".")
        if axis in ("solver.alpha", "grid.d"):
            # an automatically chosen omega follows the new alpha / dimension
            if d["atom"]["omega"] == default_omega(self.solver["alpha"], self.grid["d"]):
                del d["atom"]["omega"]
        if len(parts) == 1:
            if parts[0] not in ("seed",):
                raise ValueError(f"invalid sweep axis {axis!r}")
            d[parts[0]] = value
        elif len(parts) == 2 and parts[0] in ("grid", "solver", "velocity", "atom", "params"):
            section, key = parts
            if key not in d[section]:
                raise ValueError(f"invalid sweep axis {axis!r}: no field {key!r} in {section}")
            d[section][key] = value
        else:
            raise ValueError(f"invalid sweep axis {axis!r}")
        d["run_id"] = f"{self.run_id}__{axis}={value}"
        return ExperimentConfig.from_dict(d)


def default_config(experiment: str, **kw) -> ExperimentConfig:
    return ExperimentConfig(experiment=experiment, **kw)
