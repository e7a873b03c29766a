"""
Split-step integration of the primal transport-diffusion equation

    d_t theta + (-Delta)^{alpha/2} theta = (v . grad) theta

and of its dual conservation law

    d_s psi + (-Delta)^{alpha/2} psi = -div(v(t - s) psi).

Diffusion is applied exactly in Fourier space; advection is first-order upwind
(default) or pseudo-spectral with Heun's method, sub-cycled under a CFL limit.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .spectral import GridSpec, ScalarField, diffusion_semigroup, dealias, SpectralField, inner, lp_norm
from .velocity import VectorField

__all__ = [
    "SolverConfig",
    "Trajectory",
    "BlowUpError",
    "step_advect_conservative",
    "step_advect_primal",
    "solve_primal",
    "solve_dual",
    "duality_pairing",
    "write_field_binary",
    "read_field_binary",
    "write_field_csv",
]

BLOWUP = 1e12
HEADER = struct.Struct("<qqdd")


@dataclass
class SolverConfig:
    """
    Parameters of one solver run.

    ``dt`` is the outer (splitting) step; when omitted it is ``cfl * h / max|v|``
    or the whole horizon when ``v = 0``.  Snapshots are taken every
    ``snapshot_stride`` outer steps, or exactly at ``snapshot_times`` if given.
    """

    alpha: float
    T: float
    cfl: float = 0.45
    scheme: str = "strang"
    advection: str = "upwind_fv"
    dealias: bool = False
    snapshot_stride: int = 1
    dt: float | None = None
    snapshot_times: tuple | None = None
    lp_exponents: tuple = ()

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.scheme not in ("strang", "lie"):
            raise ValueError(f"unknown splitting scheme {self.scheme!r}")
        if self.advection not in ("upwind_fv", "spectral"):
            raise ValueError(f"unknown advection discretization {self.advection!r}")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.snapshot_times is not None:
            ts = np.asarray(self.snapshot_times, dtype=float)
            if np.any(np.diff(ts) <= 0) or ts[0] < 0 or ts[-1] > self.T * (1 + 1e-12):
                raise ValueError("snapshot_times must increase strictly within [0, T]")
            self.snapshot_times = tuple(float(t) for t in ts)
        self.lp_exponents = tuple(float(p) for p in self.lp_exponents)

    def to_dict(self) -> dict:
        return asdict(self)


class BlowUpError(RuntimeError):
    """Raised when a norm exceeds the blow-up threshold; carries the partial trajectory."""

    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    config: SolverConfig | None = None
    diagnostics: dict = field(default_factory=dict)
    kind: str = "primal"
    steps: int = 0

    @property
    def final(self) -> ScalarField:
        return self.fields[-1]

    @property
    def initial(self) -> ScalarField:
        return self.fields[0]

    def append(self, t: float, f: ScalarField):
        if self.times and t <= self.times[-1]:
            raise ValueError("snapshot times must increase")
        self.times.append(float(t))
        self.fields.append(f)

    def at_time(self, t: float, tol: float = 1e-12) -> ScalarField:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.fields[i]

    def export(self, directory, csv_too: bool = True) -> list:
        """Write every snapshot as flat binary (and CSV when d=1)."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for j, (t, f) in enumerate(zip(self.times, self.fields)):
            p = d / f"{self.kind}_{j:05d}.bin"
            write_field_binary(p, f, t)
            paths.append(p)
            if csv_too and f.grid.d == 1:
                write_field_csv(d / f"{self.kind}_{j:05d}.csv", f)
        return paths


# ----------------------------------------------------------------- diagnostics


def _diag_row(f: ScalarField, t: float, exps) -> dict:
    a = f.values
    vol = f.grid.cell_volume
    row = {
        "time": t,
        "mass": float(a.sum() * vol),
        "l1": float(np.abs(a).sum() * vol),
        "l2": float(np.sqrt((a * a).sum() * vol)),
        "min": float(a.min()),
        "max": float(a.max()),
    }
    for p in exps:
        row[f"l{p:g}"] = lp_norm(f, p)
    return row


def _record(diag: dict, row: dict):
    for k, val in row.items():
        diag.setdefault(k, []).append(val)


# ---------------------------------------------------------------- advection


def _dual_rates(u: np.ndarray, grid: GridSpec):
    """Face velocities u_{i+1/2} split into outflow/inflow rates per axis."""
    out = []
    for a in range(grid.d):
        face = 0.5 * (u[a] + np.roll(u[a], -1, axis=a))
        out.append((np.maximum(face, 0.0), np.maximum(-face, 0.0)))
    return out


def _dual_max_rate(rates, grid: GridSpec) -> float:
    tot = 0.0
    for a, (up, um) in enumerate(rates):
        tot = tot + up + np.roll(um, 1, axis=a)
    return float(np.max(tot)) / grid.h


def _dual_update(psi: np.ndarray, rates, lam: float, d: int) -> np.ndarray:
    # convex-combination form: psi_i keeps (1 - outflow) and gains upwind inflow
    keep = 1.0
    gain = 0.0
    for a, (up, um) in enumerate(rates):
        um_left = np.roll(um, 1, axis=a)  # u^-_{i-1/2}
        up_left = np.roll(up, 1, axis=a)  # u^+_{i-1/2}
        keep = keep - lam * (up + um_left)
        gain = gain + lam * (up_left * np.roll(psi, 1, axis=a) + um * np.roll(psi, -1, axis=a))
    return keep * psi + gain


def _primal_update(theta: np.ndarray, w: np.ndarray, lam: float, d: int) -> np.ndarray:
    # transport with speed w = -v: theta_t + w . grad theta = 0
    keep = 1.0
    gain = 0.0
    for a in range(d):
        wp = np.maximum(w[a], 0.0)
        wm = np.maximum(-w[a], 0.0)
        keep = keep - lam * (wp + wm)
        gain = gain + lam * (wp * np.roll(theta, 1, axis=a) + wm * np.roll(theta, -1, axis=a))
    return keep * theta + gain


def _spectral_rhs(f: np.ndarray, u: np.ndarray, grid: GridSpec, conservative: bool) -> np.ndarray:
    cache = grid._cache
    if conservative:
        acc = 0
        for a in range(grid.d):
            acc = acc + 1j * cache.derivative_symbol(a) * np.fft.rfftn(u[a] * f)
        return -np.fft.irfftn(acc, s=grid.shape, axes=grid.axes)
    fh = np.fft.rfftn(f)
    out = 0.0
    for a in range(grid.d):
        out = out + u[a] * np.fft.irfftn(1j * cache.derivative_symbol(a) * fh, s=grid.shape, axes=grid.axes)
    return out


def _dealias_array(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.ifftn(dealias(SpectralField(grid, np.fft.fftn(a))).coefficients).real


def _advect(f: ScalarField, v: VectorField, dt: float, t0: float, *, conservative: bool,
            cfl: float, method: str = "upwind_fv", do_dealias: bool = False, reverse_from=None) -> ScalarField:
    """
    Advance the advection part over ``dt`` starting at local time ``t0``.

    For the dual problem ``reverse_from = t`` and the velocity is sampled at
    ``t - s``.  Sub-cycles so that every substep respects ``cfl``.
    """
    if dt <= 0:
        raise ValueError(f"advection step must be positive, got {dt}")
    grid = f.grid
    if v.is_zero():
        return f.copy()
    a = f.values.copy()

    def vel(s):
        return v.at(reverse_from - s if reverse_from is not None else s)

    # the substep count is fixed from the fastest snapshot so it does not depend on t0
    if method == "upwind_fv":
        if conservative:
            rate = max(_dual_max_rate(_dual_rates(snap, grid), grid) for snap in v.snapshots)
        else:
            rate = max(float(np.max(np.sum(np.abs(snap), axis=0))) / grid.h for snap in v.snapshots)
    else:
        rate = max(float(np.max(np.sum(np.abs(snap), axis=0))) / grid.h for snap in v.snapshots)
    n = max(1, int(np.ceil(dt * rate / cfl)))
    sub = dt / n
    for j in range(n):
        u = vel(t0 + (j + 0.5) * sub)
        if method == "upwind_fv":
            lam = sub / grid.h
            if conservative:
                a = _dual_update(a, _dual_rates(u, grid), lam, grid.d)
            else:
                a = _primal_update(a, -u, lam, grid.d)
        else:
            k1 = _spectral_rhs(a, u, grid, conservative)
            k2 = _spectral_rhs(a + sub * k1, u, grid, conservative)
            a = a + 0.5 * sub * (k1 + k2)
        if do_dealias:
            a = _dealias_array(a, grid)
    return ScalarField(grid, a)


def step_advect_conservative(psi: ScalarField, v: VectorField, dt: float, cfl: float = 0.45,
                             t0: float = 0.0) -> ScalarField:
    """
    Upwind finite-volume step of ``d_s psi = -div(v psi)`` over ``dt``.

    Mass is conserved to round-off and non-negative data stay non-negative.
    """
    _check_velocity(psi, v)
    return _advect(psi, v, dt, t0, conservative=True, cfl=cfl)


def step_advect_primal(theta: ScalarField, v: VectorField, dt: float, cfl: float = 0.45,
                       t0: float = 0.0) -> ScalarField:
    """
    Convective upwind step of ``d_t theta = (v . grad) theta`` over ``dt``;
    each substep is a convex combination of neighbours (discrete max principle).
    """
    _check_velocity(theta, v)
    return _advect(theta, v, dt, t0, conservative=False, cfl=cfl)


def _check_velocity(f: ScalarField, v: VectorField):
    if f.grid != v.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {v.grid}")


# ------------------------------------------------------------------- drivers


def _schedule(cfg: SolverConfig, v: VectorField, grid: GridSpec):
    """Segment end times and the number of outer steps in each segment."""
    if cfg.dt is not None:
        dt = cfg.dt
    elif v.is_zero():
        dt = cfg.T
    else:
        dt = cfg.cfl * grid.h / v.max_speed()
    if cfg.snapshot_times is not None:
        targets = [t for t in cfg.snapshot_times if t > 0]
        if not targets or targets[-1] < cfg.T * (1 - 1e-12):
            targets.append(cfg.T)
        segs = []
        prev = 0.0
        for t in targets:
            segs.append((t, max(1, int(np.ceil((t - prev) / dt * (1 - 1e-12))))))
            prev = t
        return segs
    n = max(1, int(np.ceil(cfg.T / dt * (1 - 1e-12))))
    stride = cfg.snapshot_stride
    segs = []
    done = 0
    while done < n:
        m = min(stride, n - done)
        done += m
        segs.append((cfg.T * done / n, m))
    return segs


def _run(f0: ScalarField, v: VectorField, cfg: SolverConfig, conservative: bool, horizon: float) -> Trajectory:
    _check_velocity(f0, v)
    grid = f0.grid
    traj = Trajectory(config=cfg, kind="dual" if conservative else "primal")
    traj.append(0.0, f0.copy())
    _record(traj.diagnostics, _diag_row(f0, 0.0, cfg.lp_exponents))
    reverse = horizon if conservative else None
    f = f0.copy()
    t = 0.0
    zero_v = v.is_zero()
    for t_end, nsteps in _schedule(cfg, v, grid):
        if zero_v:
            # pure diffusion: one exact multiplier per segment
            f = diffusion_semigroup(f, cfg.alpha, t_end - t)
            traj.steps += 1
            t = t_end
            _record(traj.diagnostics, _diag_row(f, t, cfg.lp_exponents))
        else:
            dt = (t_end - t) / nsteps
            for j in range(nsteps):
                ts = t + j * dt
                kw = dict(conservative=conservative, cfl=cfg.cfl, method=cfg.advection,
                          do_dealias=cfg.dealias, reverse_from=reverse)
                if cfg.scheme == "strang":
                    f = _advect(f, v, 0.5 * dt, ts, **kw)
                    f = diffusion_semigroup(f, cfg.alpha, dt)
                    f = _advect(f, v, 0.5 * dt, ts + 0.5 * dt, **kw)
                else:
                    f = _advect(f, v, dt, ts, **kw)
                    f = diffusion_semigroup(f, cfg.alpha, dt)
                traj.steps += 1
                row = _diag_row(f, ts + dt, cfg.lp_exponents)
                _record(traj.diagnostics, row)
                if not np.isfinite(row["l2"]) or max(row["max"], -row["min"]) > BLOWUP:
                    traj.append(ts + dt, f)
                    raise BlowUpError(f"solution exceeded {BLOWUP:g} at t={ts + dt:.6g}", traj)
            t = t_end
        traj.append(t, f.copy())
    for k in traj.diagnostics:
        traj.diagnostics[k] = np.asarray(traj.diagnostics[k])
    return traj


def solve_primal(theta0: ScalarField, v: VectorField, cfg: SolverConfig) -> Trajectory:
    """Integrate ``d_t theta + Lambda^alpha theta = (v . grad) theta`` on ``[0, cfg.T]``."""
    return _run(theta0, v, cfg, conservative=False, horizon=cfg.T)


def solve_dual(psi0: ScalarField, v: VectorField, t: float, cfg: SolverConfig) -> Trajectory:
    """
    Integrate the dual law on ``s in [0, t]`` with velocity ``v(t - s)``.

    ``cfg.T`` is overridden by ``t`` so that the two runs of a duality check can
    share one config.
    """
    if not v.is_static and t > v.span * (1 + 1e-12):
        raise ValueError(f"horizon {t} exceeds the velocity span {v.span}")
    if cfg.T != t:
        cfg = SolverConfig(**{**cfg.to_dict(), "T": t})
    return _run(psi0, v, cfg, conservative=True, horizon=t)


def duality_pairing(theta_traj: Trajectory, psi_traj: Trajectory):
    """
    Both sides of ``int theta(t) psi_0 = int theta_0 psi(t)``.

    Returns ``(lhs, rhs, rel_error)``.
    """
    t1, t2 = theta_traj.times[-1], psi_traj.times[-1]
    if abs(t1 - t2) > 1e-12 * max(1.0, abs(t1)):
        raise ValueError(f"horizon mismatch: {t1} vs {t2}")
    lhs = inner(theta_traj.final, psi_traj.initial)
    rhs = inner(theta_traj.initial, psi_traj.final)
    scale = max(abs(lhs), abs(rhs))
    rel = 0.0 if scale == 0 else abs(lhs - rhs) / scale
    return lhs, rhs, rel


# -------------------------------------------------------------------- export


def write_field_binary(path, f: ScalarField, time: float = 0.0):
    """Header ``(int64 d, int64 N, float64 L, float64 time)`` then row-major float64, little-endian."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(g.d, g.N, g.L, float(time)))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field_binary(path):
    """Inverse of :func:`write_field_binary`; returns ``(field, time)``."""
    raw = Path(path).read_bytes()
    d, N, L, time = HEADER.unpack_from(raw)
    grid = GridSpec(int(d), int(N), L)
    vals = np.frombuffer(raw, dtype="<f8", offset=HEADER.size)
    if vals.size != grid.size:
        raise ValueError(f"{path}: payload has {vals.size} values, expected {grid.size}")
    return ScalarField(grid, vals.copy()), time


def write_field_csv(path, f: ScalarField):
    if f.grid.d != 1:
        raise ValueError("CSV export is for d=1 fields")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, val in zip(f.grid.axis(), f.values):
            w.writerow([repr(float(x)), repr(float(val))])
