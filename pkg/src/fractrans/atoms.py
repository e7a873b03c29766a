"""
Atoms of the class A^p_r: construction, membership amplitude, concentration
functional and the moving centre that follows the averaged flow.

A function phi is a (lambda-scaled) atom at scale r when it has zero mean and

    ||phi||_1 <= lambda,
    ||phi||_p <= lambda * A * r^{-d(1-1/p)},
    int |phi(x)| Omega(x - x0) dx <= lambda * r^omega   for some x0,

with ``Omega(z) = min(|z|^omega, 1)`` (periodic distance on the torus).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy import special

from .spectral import GridSpec, ScalarField, lp_norm
from .velocity import VectorField

__all__ = [
    "AtomParams",
    "Atom",
    "CenterPath",
    "ball_volume",
    "omega_weight",
    "default_omega",
    "canonical_constant",
    "build_canonical_atom",
    "build_random_atom",
    "atom_membership",
    "membership_ratios",
    "concentration_map",
    "split_constant",
    "interpolation_margins",
    "interpolation_check",
    "track_center",
    "chi_series",
    "propagated_radius",
    "radius_match",
    "envelope",
    "propagation_raw",
    "lambda_series",
    "calibrate_delta_K",
    "save_atom",
    "load_atom",
]


@dataclass(frozen=True)
class AtomParams:
    """
    A: amplitude constant (default 50); omega: concentration exponent in (0, 1);
    p: integrability exponent in (1, inf]; eps: mollifier width as a fraction
    of r (default 1/4).
    """

    A: float = 50.0
    omega: float = 0.5
    p: float = 2.0
    eps: float = 0.25

    def __post_init__(self):
        if not self.A >= 1:
            raise ValueError(f"A must be >= 1, got {self.A}")
        if not 0 < self.omega < 1:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")

    def with_p(self, p: float) -> "AtomParams":
        return AtomParams(self.A, self.omega, p, self.eps)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Atom:
    field: ScalarField
    r: float
    center: tuple
    params: AtomParams
    lam: float

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    def metadata(self) -> dict:
        return {
            "r": self.r,
            "p": self.params.p,
            "A": self.params.A,
            "omega": self.params.omega,
            "eps": self.params.eps,
            "lambda": self.lam,
            "center": list(self.center),
        }


def ball_volume(d: int) -> float:
    """Volume of the unit ball, ``pi^{d/2} / Gamma(d/2 + 1)``."""
    return float(np.pi ** (d / 2) / special.gamma(d / 2 + 1))


def omega_weight(dist, omega: float):
    """``min(|z|^omega, 1)`` for a distance (or array of distances) ``|z|``."""
    if not 0 < omega < 1:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    dist = np.asarray(dist, dtype=float)
    out = np.minimum(dist ** omega, 1.0)
    return float(out) if out.ndim == 0 else out


def default_omega(alpha: float, d: int) -> float:
    """
    Midpoint of the admissible window for omega at diffusion order alpha:
    ``(alpha - 1, 1)`` for alpha in [1, 2), ``(1/2, 1)`` for alpha = 2 and
    ``((alpha - d/2)_+, alpha)`` below 1.
    """
    if alpha >= 2:
        return 0.75
    if alpha >= 1:
        return alpha / 2
    lo = max(alpha - d / 2, 0.0)
    return (lo + alpha) / 2


def canonical_constant(d: int, p: float, A: float, omega: float, safety: float = 0.9) -> float:
    """``safety * min{|B|^{-1}, A |B|^{-1/p}, |B| / (d + omega)}``."""
    B = ball_volume(d)
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    return safety * min(1.0 / B, A * B ** -inv_p, B / (d + omega))


def _mollifier(grid: GridSpec, width: float) -> np.ndarray:
    """Discrete C-infinity bump of radius ``width`` centred at the origin, unit sum."""
    dist = grid.periodic_distance(np.zeros(grid.d))
    u = dist / width
    with np.errstate(over="ignore", divide="ignore"):
        rho = np.where(u < 1, np.exp(-1.0 / np.maximum(1 - u * u, 1e-300)), 0.0)
    if rho.sum() == 0:
        rho = (dist == 0).astype(float)
    return rho / rho.sum()


def _convolve(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return np.fft.irfftn(np.fft.rfftn(a) * np.fft.rfftn(kernel), s=a.shape, axes=tuple(range(a.ndim)))


def _balance(a: np.ndarray) -> np.ndarray:
    """Rescale the positive part so the discrete mean is zero."""
    pos = np.maximum(a, 0.0)
    neg = np.maximum(-a, 0.0)
    sp, sn = pos.sum(), neg.sum()
    if sp == 0 or sn == 0:
        raise ValueError("profile needs both signs")
    out = pos * (sn / sp) - neg
    return out - out.mean()


def _check_radius(grid: GridSpec, r: float):
    if not 0 < r <= 1:
        raise ValueError(f"radius must lie in (0, 1], got {r}")
    if r < 8 * grid.h:
        raise ValueError(f"radius {r} below 8h = {8 * grid.h} is not resolved")
    if r > grid.L / 2:
        raise ValueError(f"radius {r} exceeds half the box {grid.L / 2}")


def build_canonical_atom(grid: GridSpec, r: float, params: AtomParams = AtomParams(), center=None) -> Atom:
    """
    ``-C r^{-d}`` on the ball of radius ``r 2^{-1/d}``, ``+C r^{-d}`` on the
    surrounding shell out to ``r``, mollified at width ``eps * r`` and
    rebalanced to zero mean.
    """
    _check_radius(grid, r)
    if center is None:
        center = (grid.L / 2,) * grid.d
    center = tuple(float(c) for c in np.broadcast_to(center, (grid.d,)))
    d = grid.d
    C = canonical_constant(d, params.p, params.A, params.omega)
    dist = grid.periodic_distance(center)
    r_in = r * 2.0 ** (-1.0 / d)
    prof = np.where(dist <= r_in, -1.0, np.where(dist <= r, 1.0, 0.0)) * C * r ** -d
    prof = _convolve(prof, _mollifier(grid, params.eps * r))
    prof = _balance(prof)
    f = ScalarField(grid, prof)
    lam, _ = atom_membership(f, r, params.p, params)
    return Atom(f, r, center, params, lam)


def build_random_atom(grid: GridSpec, r: float, params: AtomParams = AtomParams(), seed: int = 0) -> Atom:
    """
    A negative and a positive smooth bump of equal mass, the positive one at
    distance ``0.5 r .. r`` from the negative one, scaled so that the largest
    membership ratio is exactly 1.
    """
    _check_radius(grid, r)
    rng = np.random.default_rng(seed)
    d = grid.d
    c0 = rng.uniform(0, grid.L, size=d)
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    c1 = c0 + rng.uniform(0.5, 1.0) * r * direction
    w0, w1 = np.maximum(rng.uniform(r / 8, r / 3, size=2), 2 * grid.h)
    b0 = np.exp(-0.5 * (grid.periodic_distance(c0) / w0) ** 2)
    b1 = np.exp(-0.5 * (grid.periodic_distance(c1) / w1) ** 2)
    prof = _balance(b1 / b1.sum() - b0 / b0.sum())
    f = ScalarField(grid, prof)
    lam, _ = atom_membership(f, r, params.p, params)
    f = ScalarField(grid, prof / lam)
    lam, center = atom_membership(f, r, params.p, params)
    return Atom(f, r, center, params, lam)


def concentration_map(f: ScalarField, omega: float) -> np.ndarray:
    """``chi(x0) = int |f(x)| Omega(x - x0) dx`` for every grid node ``x0``."""
    g = f.grid
    w = omega_weight(g.periodic_distance(np.zeros(g.d)), omega)
    # Omega is even, so correlation equals convolution
    return _convolve(np.abs(f.values), w) * g.cell_volume


def membership_ratios(f: ScalarField, r: float, p: float, params: AtomParams):
    """
    The three ratios of the atom conditions and the centre attaining the
    concentration minimum: ``(l1, lp, conc, center)``.
    """
    g = f.grid
    l1 = lp_norm(f, 1)
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    lp = lp_norm(f, p) / (params.A * r ** (-g.d * (1 - inv_p)))
    chi = concentration_map(f, params.omega)
    idx = int(np.argmin(chi))  # first occurrence: lexicographically smallest node
    node = np.unravel_index(idx, g.shape)
    center = tuple(float(i * g.h) for i in node)
    conc = float(max(chi.flat[idx], 0.0)) / r ** params.omega
    return l1, lp, conc, center


def atom_membership(f: ScalarField, r: float, p: float, params: AtomParams = AtomParams()):
    """
    Smallest ``lambda`` with ``f`` in ``lambda * A^p_r``, and the centre that
    realizes the concentration condition.  Every grid node is a candidate
    centre.
    """
    l1 = lp_norm(f, 1)
    total = float(f.values.sum() * f.grid.cell_volume)
    if abs(total) > 1e-10 * max(l1, 1e-300) and l1 > 0:
        raise ValueError(f"field is not mean-free: integral {total:.3e} vs L1 {l1:.3e}")
    if l1 == 0:
        return 0.0, tuple(0.0 for _ in range(f.grid.d))
    a, b, c, center = membership_ratios(f, r, p, params)
    return max(a, b, c), center


# --------------------------------------------------------------- L^q control


def _qexp(p: float, q: float):
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    frac = 1.0 if np.isinf(p) else (p - q) / (p - 1)
    pw = q - 1.0 if np.isinf(p) else p * (q - 1) / (p - 1)
    return inv_p, frac, pw


def split_constant(d: int, p: float, q: float, omega: float) -> float:
    """
    Constant in ``||phi||_q <= C A^{(omega + d(1-1/q)) / (omega + d(1-1/p))} r^{-d(1-1/q)}``.

    Obtained by splitting at a ball of radius tau around the centre: Hoelder
    inside, L^1/L^p interpolation of the concentration tail outside, then
    minimizing over tau.  Applies to any mean-free phi meeting the L^p and
    concentration conditions (the L^1 condition is not used).
    """
    if not 1 <= q <= p:
        raise ValueError(f"need 1 <= q <= p, got q={q}, p={p}")
    if q == p:
        return 1.0
    inv_p, frac, pw = _qexp(p, q)
    B = ball_volume(d)
    # int |phi|^q <= a t^x + b t^-y   with t = tau / r, A = r = 1
    x = d * (1 - q * inv_p)
    y = omega * frac
    a = B ** (1 - q * inv_p)
    b = 1.0
    tmin = (y * b / (x * a)) ** (1 / (x + y))
    val = a * tmin ** x + b * tmin ** -y
    return float(val ** (1 / q))


def interpolation_margins(atom: Atom, q: float, C: float | None = None) -> dict:
    """
    Ratios of ``||phi||_q`` to the two bounds (values <= 1 mean the bound holds):
    the interpolation bound with constant 1 and the concentration-split bound.
    """
    p = atom.params.p
    if not 1 <= q <= p:
        raise ValueError(f"q must lie in [1, p={p}], got {q}")
    d = atom.grid.d
    A, om, r = atom.params.A, atom.params.omega, atom.r
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    nq = lp_norm(atom.field, q)
    lam = max(atom.lam, 0.0)
    if lam == 0:
        return {"norm": nq, "interp": 0.0, "split": 0.0}
    # both bounds are 1-homogeneous in lambda
    e1 = (1 - 1 / q) / (1 - inv_p)
    b1 = lam * A ** e1 * r ** (-d * (1 - 1 / q))
    if C is None:
        C = split_constant(d, p, q, om)
    e2 = (om + d * (1 - 1 / q)) / (om + d * (1 - inv_p))
    b2 = lam * C * A ** e2 * r ** (-d * (1 - 1 / q))
    return {"norm": nq, "interp": nq / b1, "split": nq / b2, "C": C}


def canonical_calibration(grid: GridSpec, p: float, q: float, params: AtomParams, radii) -> float:
    """Concentration-split bound constant fitted as the largest observed ratio over the canonical family."""
    best = 0.0
    for r in radii:
        a = build_canonical_atom(grid, r, params.with_p(p))
        best = max(best, interpolation_margins(a, q, C=1.0)["split"])
    return best


def interpolation_check(atom: Atom, q: float, C: float | None = None, rtol: float = 1e-12) -> bool:
    """True iff both L^q bounds hold for ``atom``."""
    m = interpolation_margins(atom, q, C)
    return m["interp"] <= 1 + rtol and m["split"] <= 1 + rtol


# ------------------------------------------------------------ moving centre


@dataclass
class CenterPath:
    times: np.ndarray
    points: np.ndarray  # (n, d), wrapped into [0, L)
    mode: str = "ball_average"

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"path has no point at t={t}")
        return self.points[i]


def _ball_multiplier(grid: GridSpec, r: float) -> np.ndarray:
    """Fourier transform of the normalized indicator of the ball of radius r."""
    k = grid.wavevectors()
    kmag = np.sqrt(sum(ki * ki for ki in k))
    kr = kmag * r
    with np.errstate(invalid="ignore", divide="ignore"):
        if grid.d == 1:
            m = np.where(kr > 0, np.sin(kr) / kr, 1.0)
        else:
            m = np.where(kr > 0, 2 * special.j1(kr) / kr, 1.0)
    return m


class _Sampler:
    """Evaluate a (ball-averaged) velocity snapshot at off-grid points."""

    def __init__(self, v: VectorField, r: float, mode: str):
        self.v = v
        self.grid = v.grid
        self.mode = mode
        g = self.grid
        if mode == "ball_average":
            mult = _ball_multiplier(g, r)
            self.coef = [
                np.stack([np.fft.fftn(c) * mult / g.size for c in snap]) for snap in v.snapshots
            ]
            self.k = [2 * np.pi * g.mode_numbers() / g.L] * g.d

    def _snap_value(self, j: int, x: np.ndarray) -> np.ndarray:
        g = self.grid
        if self.mode == "ball_average":
            c = self.coef[j]
            if g.d == 1:
                e = np.exp(1j * self.k[0] * x[0])
                return np.real(c @ e)
            e0 = np.exp(1j * self.k[0] * x[0])
            e1 = np.exp(1j * self.k[1] * x[1])
            return np.real(np.einsum("aij,i,j->a", c, e0, e1))
        # multilinear interpolation on the periodic grid
        snap = self.v.snapshots[j]
        u = np.asarray(x) / g.h
        i0 = np.floor(u).astype(int)
        w = u - i0
        out = np.zeros(g.d)
        for corner in np.ndindex(*(2,) * g.d):
            idx = tuple((i0[a] + corner[a]) % g.N for a in range(g.d))
            wt = np.prod([w[a] if corner[a] else 1 - w[a] for a in range(g.d)])
            out += wt * snap[(slice(None),) + idx]
        return out

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        v = self.v
        if v.is_static:
            return self._snap_value(0, x)
        n = v.snapshots.shape[0]
        u = np.clip(t / v.snapshot_dt, 0, n - 1)
        j = min(int(np.floor(u)), n - 2)
        w = u - j
        a = self._snap_value(j, x)
        if w == 0:
            return a
        return (1 - w) * a + w * self._snap_value(j + 1, x)


def track_center(v: VectorField, x0, r: float, times, mode: str = "ball_average",
                 substeps: int = 1, reverse_from: float | None = None) -> CenterPath:
    """
    Integrate ``x'(s) = <v(s)>_{B(x(s), r)}`` (``ball_average``) or
    ``x'(s) = v(s, x(s))`` (``pointwise``) with the explicit midpoint rule,
    ``substeps`` steps between consecutive requested times.  With
    ``reverse_from = t`` the field is sampled at ``t - s`` as in the dual flow.
    """
    if mode not in ("ball_average", "pointwise"):
        raise ValueError(f"unknown tracking mode {mode!r}")
    g = v.grid
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a non-empty increasing list")
    x = np.broadcast_to(np.asarray(x0, dtype=float), (g.d,)).copy() % g.L
    sampler = _Sampler(v, r, mode)

    def rhs(s, y):
        return sampler(reverse_from - s if reverse_from is not None else s, y % g.L)

    pts = [x.copy()]
    for t_prev, t_next in zip(times[:-1], times[1:]):
        dt = (t_next - t_prev) / substeps
        for j in range(substeps):
            s = t_prev + j * dt
            k1 = rhs(s, x)
            x = x + dt * rhs(s + 0.5 * dt, x + 0.5 * dt * k1)
        pts.append(x % g.L)
    # keep the unwrapped sequence internally only; stored points are wrapped
    return CenterPath(times, np.array(pts) % g.L, mode)


def chi_series(traj, path: CenterPath, omega: float) -> np.ndarray:
    """``chi(s) = int |psi(s, x)| Omega(x - x(s)) dx`` at every path time."""
    out = []
    for t, pt in zip(path.times, path.points):
        psi = traj.at_time(t)
        w = omega_weight(psi.grid.periodic_distance(pt), omega)
        out.append(float(np.sum(np.abs(psi.values) * w) * psi.grid.cell_volume))
    return np.array(out)


# --------------------------------------------------------- propagation bounds


def propagated_radius(r: float, K: float, s, alpha: float):
    """``(r^alpha + K s)^{1/alpha}``."""
    return (r ** alpha + K * np.asarray(s, dtype=float)) ** (1 / alpha)


def radius_match(r: float, K: float, ell: int, gamma: float, s: float, alpha: float):
    """
    Both sides of the restart identity: restarting at ``s0 = ell gamma r^alpha``
    with radius ``R = r (1 + K ell gamma)^{1/alpha}`` and elapsed time
    ``S = s - s0`` yields the same radius as a single run from ``r``.
    """
    R = r * (1 + K * ell * gamma) ** (1 / alpha)
    S = s - ell * gamma * r ** alpha
    return float(propagated_radius(R, K, S, alpha)), float(propagated_radius(r, K, s, alpha))


def envelope(r: float, s, alpha: float, delta: float, K: float):
    """``(r^alpha / (r^alpha + K s))^{delta / K}``."""
    ra = r ** alpha
    return (ra / (ra + K * np.asarray(s, dtype=float))) ** (delta / K)


def propagation_raw(traj, path: CenterPath, params: AtomParams) -> dict:
    """
    Radius-free ingredients of the membership amplitude along a trajectory:
    ``l1``, ``lp`` (the L^p norm), ``chi_min`` (concentration minimized over
    centres) and ``chi_track`` (concentration about the tracked centre).
    """
    p = params.p
    out = {"s": np.asarray(path.times, dtype=float), "l1": [], "lp": [], "chi_min": []}
    for t in path.times:
        f = traj.at_time(t)
        out["l1"].append(lp_norm(f, 1))
        out["lp"].append(lp_norm(f, p))
        out["chi_min"].append(float(max(concentration_map(f, params.omega).min(), 0.0)))
    for k in ("l1", "lp", "chi_min"):
        out[k] = np.asarray(out[k])
    out["chi_track"] = chi_series(traj, path, params.omega)
    return out


def lambda_series(raw: dict, r: float, K: float, alpha: float, d: int, params: AtomParams,
                  max_radius: float = 1.0):
    """
    Membership amplitude at the propagated radius ``R(s) = (r^alpha + K s)^{1/alpha}``,
    the tracked-centre concentration ratio ``chi_track / R^omega`` and ``R``.
    Entries with ``R > max_radius`` are NaN.
    """
    s = raw["s"]
    R = propagated_radius(r, K, s, alpha)
    inv_p = 0.0 if np.isinf(params.p) else 1.0 / params.p
    lam = np.maximum.reduce([
        raw["l1"],
        raw["lp"] / (params.A * R ** (-d * (1 - inv_p))),
        raw["chi_min"] / R ** params.omega,
    ])
    chi = raw["chi_track"] / R ** params.omega
    bad = R > max_radius
    lam = np.where(bad, np.nan, lam)
    chi = np.where(bad, np.nan, chi)
    return lam, chi, R


def calibrate_delta_K(s, lam, r: float, alpha: float, K_grid=None):
    """
    Fit ``(delta, K)`` so that ``lam(s) <= envelope(r, s, alpha, delta, K)`` on
    a calibration series, choosing the K that maximizes ``beta = alpha delta / K``.

    ``lam`` is an array, or a callable ``K -> array`` when the series itself
    depends on K (membership at the propagated radius); NaN entries are
    ignored.  For each K the largest admissible delta is
    ``min_s -K ln lam(s) / ln(1 + K s / r^alpha)``.  Returns ``(delta, K, beta)``.
    """
    s = np.asarray(s, dtype=float)
    if K_grid is None:
        K_grid = np.geomspace(1.0, 32.0, 51)
    ra = r ** alpha
    best = None
    for K in K_grid:
        series = np.asarray(lam(K) if callable(lam) else lam, dtype=float)
        keep = (s > 0) & np.isfinite(series)
        if not np.any(keep):
            continue
        dl = np.min(-K * np.log(np.maximum(series[keep], 1e-300)) / np.log1p(K * s[keep] / ra))
        beta = alpha * dl / K
        if best is None or beta > best[2]:
            best = (float(dl), float(K), float(beta))
    if best is None:
        raise ValueError("no admissible calibration point (need s > 0 with finite amplitude)")
    return best


# ------------------------------------------------------------------- storage


def save_atom(prefix, atom: Atom) -> tuple:
    """Write ``prefix.bin`` (flat field format) and ``prefix.json`` metadata."""
    from .solver import write_field_binary

    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    b = prefix.with_suffix(".bin")
    j = prefix.with_suffix(".json")
    write_field_binary(b, atom.field, 0.0)
    meta = atom.metadata()
    if np.isinf(meta["p"]):
        meta["p"] = "inf"
    j.write_text(json.dumps(meta, indent=2))
    return b, j


def load_atom(prefix) -> Atom:
    from .solver import read_field_binary

    prefix = Path(prefix)
    f, _ = read_field_binary(prefix.with_suffix(".bin"))
    meta = json.loads(prefix.with_suffix(".json").read_text())
    p = float("inf") if meta["p"] == "inf" else float(meta["p"])
    params = AtomParams(meta["A"], meta["omega"], p, meta.get("eps", 0.25))
    return Atom(f, meta["r"], tuple(meta["center"]), params, meta["lambda"])
