"""
Advection fields and the norm estimators that gate the regularity hypotheses.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import optimize

from .spectral import GridSpec, ScalarField, sobolev_seminorm, lp_norm

__all__ = [
    "VectorField",
    "VelocityModel",
    "build_velocity",
    "divergence",
    "neg_div_norm",
    "bmo_norm",
    "holder_seminorm",
    "holder_norm",
    "sobolev_quotient",
    "sobolev_constant",
    "positive_part",
    "negative_part",
]

KINDS = ("zero", "divergence_free", "compressive_sink", "shear", "rough_holder", "composite")


@dataclass
class VectorField:
    """
    A (possibly time-dependent) vector field on a periodic grid.

    ``snapshots`` has shape ``(n_snap, d, *grid.shape)``; snapshot ``j`` is the
    field at time ``j * snapshot_dt``.  Between snapshots the field is linearly
    interpolated in time; outside the span it is held constant.
    """

    grid: GridSpec
    snapshots: np.ndarray
    snapshot_dt: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.snapshots, dtype=float)
        if s.ndim == self.grid.d + 1:
            s = s[None]
        if s.shape[1:] != (self.grid.d,) + self.grid.shape:
            raise ValueError(f"bad snapshot shape {s.shape} for grid {self.grid}")
        if s.shape[0] < 1:
            raise ValueError("at least one snapshot required")
        if not np.all(np.isfinite(s)):
            raise ValueError("velocity contains NaN or inf")
        if s.shape[0] > 1 and not self.snapshot_dt > 0:
            raise ValueError("snapshot spacing must be positive")
        self.snapshots = s

    @classmethod
    def static(cls, grid: GridSpec, components) -> "VectorField":
        comps = [c.values if isinstance(c, ScalarField) else np.asarray(c, float) for c in components]
        return cls(grid, np.stack(comps)[None])

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(grid, np.zeros((1, grid.d) + grid.shape))

    @property
    def is_static(self) -> bool:
        return self.snapshots.shape[0] == 1

    @property
    def span(self) -> float:
        return (self.snapshots.shape[0] - 1) * self.snapshot_dt if not self.is_static else np.inf

    def at(self, t: float) -> np.ndarray:
        """Array of shape ``(d, *grid.shape)`` at time ``t``."""
        s = self.snapshots
        if self.is_static:
            return s[0]
        u = np.clip(t / self.snapshot_dt, 0, s.shape[0] - 1)
        j = min(int(np.floor(u)), s.shape[0] - 2)
        w = u - j
        if w == 0:
            return s[j]
        return (1 - w) * s[j] + w * s[j + 1]

    def components(self, t: float = 0.0) -> list:
        return [ScalarField(self.grid, c) for c in self.at(t)]

    def is_zero(self) -> bool:
        return not np.any(self.snapshots)

    def max_speed(self) -> float:
        return float(np.abs(self.snapshots).max())

    def scaled(self, c: float) -> "VectorField":
        return VectorField(self.grid, self.snapshots * c, self.snapshot_dt)


@dataclass
class VelocityModel:
    """
    Recipe for a test velocity.

    kind:
        ``divergence_free``  perp-gradient of a smooth streamfunction (d=2) or a constant (d=1)
        ``compressive_sink`` gradient of a potential whose Laplacian is a mean-free negative bump
        ``shear``            ``(amplitude * sin(2 pi y / L), 0)`` (d=2 only)
        ``rough_holder``     random-phase field with Fourier amplitudes ``|k|^-(d/2 + gamma)``
        ``composite``        divergence_free + compressive_sink
        ``zero``             identically zero
    """

    kind: str = "zero"
    amplitude: float = 1.0
    length_scale: float = 0.25
    sink_strength: float = 0.0
    center: tuple | None = None
    gamma: float = 0.5
    modes: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown velocity kind {self.kind!r}; expected one of {KINDS}")
        if self.center is not None:
            self.center = tuple(float(c) for c in self.center)

    def to_dict(self) -> dict:
        return asdict(self)


def build_velocity(model: VelocityModel, grid: GridSpec) -> VectorField:
    kind = model.kind
    if kind == "zero":
        return VectorField.zeros(grid)
    if kind == "divergence_free":
        return _divergence_free(model, grid)
    if kind == "shear":
        if grid.d != 2:
            raise ValueError("shear requires d=2")
        y = grid.coords()[1]
        u = model.amplitude * np.sin(2 * np.pi * y / grid.L)
        return VectorField.static(grid, [u, np.zeros_like(u)])
    if kind == "compressive_sink":
        return _sink(model, grid)
    if kind == "rough_holder":
        return _rough(model, grid)
    if kind == "composite":
        a = _divergence_free(model, grid)
        b = _sink(model, grid)
        return VectorField(grid, a.snapshots + b.snapshots)
    raise AssertionError(kind)


def _divergence_free(model: VelocityModel, grid: GridSpec) -> VectorField:
    if grid.d == 1:
        # the only divergence-free periodic fields in 1d are constants
        return VectorField.static(grid, [np.full(grid.shape, model.amplitude)])
    rng = np.random.default_rng(model.seed)
    x, y = grid.coords()
    kx0 = 2 * np.pi / grid.L
    psi = np.zeros(grid.shape)
    for _ in range(model.modes):
        n1, n2 = rng.integers(1, 3, size=2)
        ph1, ph2 = rng.uniform(0, 2 * np.pi, size=2)
        psi += np.sin(n1 * kx0 * x + ph1) * np.sin(n2 * kx0 * y + ph2) / (n1 * n1 + n2 * n2) ** 0.5
    s = ScalarField(grid, psi)
    from .spectral import gradient

    gx, gy = gradient(s)
    u, v = -gy.values, gx.values
    scale = model.amplitude / max(np.abs(u).max(), np.abs(v).max())
    return VectorField.static(grid, [u * scale, v * scale])


def _bump(grid: GridSpec, center, width: float) -> np.ndarray:
    r2 = sum(dx * dx for dx in grid.periodic_displacement(center))
    return np.exp(-0.5 * r2 / width ** 2)


def _sink(model: VelocityModel, grid: GridSpec) -> VectorField:
    center = model.center if model.center is not None else (grid.L / 2,) * grid.d
    b = _bump(grid, center, model.length_scale)
    target = -model.sink_strength * (b - b.mean())
    return potential_flow(grid, target)


def potential_flow(grid: GridSpec, target_divergence: np.ndarray) -> VectorField:
    """Gradient field ``grad phi`` with ``Laplacian phi = target`` (Nyquist removed)."""
    cache = grid._cache
    th = np.fft.rfftn(target_divergence)
    th[cache.rnyquist] = 0.0
    k2 = cache.rkmag ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        phih = np.where(k2 > 0, -th / k2, 0.0)
    comps = [np.fft.irfftn(1j * cache.derivative_symbol(a) * phih, s=grid.shape, axes=grid.axes) for a in range(grid.d)]
    return VectorField.static(grid, comps)


def _rough(model: VelocityModel, grid: GridSpec) -> VectorField:
    if not 0 < model.gamma < 1:
        raise ValueError("rough_holder needs gamma in (0, 1)")
    rng = np.random.default_rng(model.seed)
    cache = grid._cache
    kmag = cache.rkmag
    comps = []
    for _ in range(grid.d):
        with np.errstate(divide="ignore"):
            amp = np.where(kmag > 0, kmag ** -(grid.d / 2 + model.gamma), 0.0)
        phase = np.exp(2j * np.pi * rng.uniform(size=kmag.shape))
        u = np.fft.irfftn(amp * phase, s=grid.shape, axes=grid.axes)
        comps.append(u)
    scale = model.amplitude / max(np.abs(c).max() for c in comps)
    return VectorField.static(grid, [c * scale for c in comps])


def divergence(v: VectorField, t: float = 0.0) -> ScalarField:
    """Spectral divergence ``sum_i d_i v_i`` at time ``t``."""
    g = v.grid
    cache = g._cache
    acc = 0
    for a, comp in enumerate(v.at(t)):
        acc = acc + 1j * cache.derivative_symbol(a) * np.fft.rfftn(comp)
    return ScalarField(g, np.fft.irfftn(acc, s=g.shape, axes=g.axes))


def positive_part(x):
    return np.maximum(x, 0.0)


def negative_part(x):
    """``x_- = (-x)_+`` so that ``x = x_+ - x_-`` and ``|x| = x_+ + x_-``."""
    return np.maximum(-np.asarray(x), 0.0)


def neg_div_norm(v: VectorField, alpha: float) -> float:
    """``|| (div v)_- ||_{L^{d/alpha}}``, maximized over snapshots."""
    d = v.grid.d
    if not d > alpha:
        raise ValueError(f"need d > alpha (d={d}, alpha={alpha})")
    q = d / alpha
    best = 0.0
    for j in range(v.snapshots.shape[0]):
        div = divergence(VectorField(v.grid, v.snapshots[j]))
        best = max(best, lp_norm(ScalarField(v.grid, negative_part(div.values)), q))
    return best


def _block_oscillation(a: np.ndarray, s: int) -> float:
    """Max mean |a - avg| over the aligned blocks of side ``s`` cells."""
    d = a.ndim
    N = a.shape[0]
    n = N // s
    if d == 1:
        b = a.reshape(n, s)
        m = b.mean(axis=1, keepdims=True)
        return float(np.abs(b - m).mean(axis=1).max())
    b = a.reshape(n, s, n, s)
    m = b.mean(axis=(1, 3), keepdims=True)
    return float(np.abs(b - m).mean(axis=(1, 3)).max())


def bmo_norm(v, all_offsets: bool = True) -> float:
    """
    Dyadic-cube lower bound of the BMO norm.

    Cubes have side ``L / 2^j`` for ``j = 0 .. log2(N) - 1``.  With
    ``all_offsets`` (default) every cyclic placement of each cube is visited,
    which makes the estimate exactly invariant under grid shifts; otherwise only
    the dyadically aligned cubes are used.  Accepts a VectorField (max over
    components and snapshots) or a ScalarField.
    """
    if isinstance(v, ScalarField):
        arrays = [v.values]
        grid = v.grid
    else:
        arrays = [c for snap in v.snapshots for c in snap]
        grid = v.grid
    N, d = grid.N, grid.d
    best = 0.0
    for a in arrays:
        s = N
        while s >= 2:
            if s == N or not all_offsets:
                best = max(best, _block_oscillation(a, s))
            else:
                for off in np.ndindex(*(s,) * d):
                    best = max(best, _block_oscillation(np.roll(a, off, axis=tuple(range(d))), s))
            s //= 2
    return best


def _offsets(grid: GridSpec):
    """Axis and diagonal offsets up to N/4 cells (one representative per +/- pair)."""
    n = grid.N // 4
    out = []
    for j in range(1, n + 1):
        if grid.d == 1:
            out.append((j,))
        else:
            out.extend([(j, 0), (0, j), (j, j), (j, -j)])
    return out


def holder_seminorm(f: ScalarField, gamma: float) -> float:
    """
    ``sup |f(x+z) - f(x)| / |z|^gamma`` over all nodes x and the offsets z along
    the axes and diagonals up to N/4 cells (periodic distance).
    """
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    g = f.grid
    a = f.values
    best = 0.0
    for off in _offsets(g):
        dist = g.h * np.sqrt(sum(o * o for o in off))
        diff = np.abs(np.roll(a, off, axis=tuple(range(g.d))) - a).max()
        best = max(best, diff / dist ** gamma)
    return float(best)


def holder_norm(f: ScalarField, gamma: float) -> float:
    """Sup norm plus :func:`holder_seminorm`."""
    return float(np.abs(f.values).max()) + holder_seminorm(f, gamma)


def _project(grid: GridSpec, x: np.ndarray) -> np.ndarray:
    """Remove the mean from a flat field vector."""
    return x - x.mean()


def sobolev_quotient(f: ScalarField, alpha: float) -> float:
    """Discrete ``int |(-Delta)^{alpha/4} f|^2 / ||f||^2_{L^{2d/(d-alpha)}}``."""
    d = f.grid.d
    sigma = 2 * d / (d - alpha)
    f = f - f.mean()
    return sobolev_seminorm(f, alpha / 2) / lp_norm(f, sigma) ** 2


def _quotient_and_grad(x: np.ndarray, grid: GridSpec, alpha: float, sigma: float):
    f = _project(grid, x).reshape(grid.shape)
    cache = grid._cache
    vol = grid.cell_volume
    lap = np.fft.irfftn(np.fft.rfftn(f) * cache.kpow(alpha), s=grid.shape, axes=grid.axes)
    num = float(np.sum(f * lap) * vol)
    a = np.abs(f)
    scale = a.max()
    s_int = np.sum((a / scale) ** sigma) * vol
    den = scale ** 2 * s_int ** (2 / sigma)
    q = num / den
    g_num = 2 * vol * lap
    g_den = 2 * vol * s_int ** (2 / sigma - 1) * (a / scale) ** (sigma - 2) * f
    grad = (g_num - q * g_den) / den
    grad = _project(grid, grad.ravel())
    return q, grad


def sobolev_constant(grid: GridSpec, alpha: float, starts: int = 8, seed: int = 0, maxiter: int = 400) -> float:
    """
    Estimate ``S_{alpha/2}`` on the torus: the infimum over mean-free fields of
    the discrete Sobolev quotient, by quasi-Newton descent from ``starts``
    random smooth initial fields plus the lowest Fourier mode.  Returns the
    smallest quotient found; deterministic for a given seed.
    """
    d = grid.d
    if not d > alpha:
        raise ValueError(f"need d > alpha (d={d}, alpha={alpha})")
    sigma = 2 * d / (d - alpha)
    rng = np.random.default_rng(seed)
    cache = grid._cache
    inits = []
    x0 = grid.coords()[0]
    inits.append(np.cos(2 * np.pi * x0 / grid.L).ravel())
    for _ in range(starts):
        spec = rng.standard_normal(cache.rkmag.shape) + 1j * rng.standard_normal(cache.rkmag.shape)
        spec *= np.exp(-(cache.rkmag * grid.L / (2 * np.pi * rng.uniform(2, 8))) ** 2)
        inits.append(np.fft.irfftn(spec, s=grid.shape, axes=grid.axes).ravel())
    best = np.inf
    for x in inits:
        x = _project(grid, x)
        x /= np.abs(x).max()
        res = optimize.minimize(
            _quotient_and_grad, x, args=(grid, alpha, sigma), jac=True, method="L-BFGS-B",
            options={"maxiter": maxiter, "gtol": 1e-10, "ftol": 1e-13},
        )
        best = min(best, float(res.fun), _quotient_and_grad(x, grid, alpha, sigma)[0])
    return best
