"""
Discrete Fourier machinery on the periodic box [0, L)^d.

Conventions
-----------
* Grid nodes sit at ``x_j = j * h`` with ``h = L / N``; arrays are indexed
  ``[i0, i1]`` with axis 0 the first coordinate (row-major).
* The forward transform is the unnormalized DFT, ``F_m = sum_j f_j e^{-2 pi i m j / N}``;
  the inverse carries the ``1 / N^d`` factor.  A constant field ``c`` therefore
  maps to ``c * N^d`` at ``m = 0``.
* Integer wavevectors ``m`` live in ``[-N/2, N/2)`` (numpy ``fftfreq`` order) and
  the physical frequency is ``k = 2 pi m / L``.
* Odd (derivative) multipliers ``i k`` vanish on the Nyquist row ``m = -N/2`` so
  that discrete derivatives stay skew-symmetric.  Even multipliers such as
  ``|k|^alpha`` are real and keep the Nyquist mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "ScalarField",
    "SpectralField",
    "forward",
    "inverse",
    "fractional_laplacian",
    "diffusion_semigroup",
    "dealias",
    "sobolev_seminorm",
    "integrate",
    "lp_norm",
    "inner",
    "spectral_inner",
    "gradient",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``N`` points per axis on a box of side ``L``."""

    d: int
    N: int
    L: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def axes(self) -> tuple:
        return tuple(range(self.d))

    @property
    def size(self) -> int:
        return self.N ** self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    def axis(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    def coords(self) -> list:
        """Node coordinates, one array of shape ``self.shape`` per axis."""
        return np.meshgrid(*([self.axis()] * self.d), indexing="ij")

    def mode_numbers(self) -> np.ndarray:
        """Integer wavenumbers ``m`` in fftfreq order."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N)

    def wavevectors(self) -> list:
        """Physical wavevector components ``2 pi m / L`` on the full DFT grid."""
        k = 2 * np.pi * self.mode_numbers() / self.L
        return np.meshgrid(*([k] * self.d), indexing="ij")

    def periodic_displacement(self, x0) -> list:
        """Minimum-image displacement ``x - x0`` of every node, per axis."""
        x0 = np.broadcast_to(np.asarray(x0, dtype=float), (self.d,))
        out = []
        for c, c0 in zip(self.coords(), x0):
            dx = c - c0
            out.append(dx - self.L * np.round(dx / self.L))
        return out

    def periodic_distance(self, x0) -> np.ndarray:
        """Minimum-image distance from every node to the point ``x0``."""
        return np.sqrt(sum(dx * dx for dx in self.periodic_displacement(x0)))

    # cached spectral helpers live on a side object so the dataclass stays hashable
    @cached_property
    def _cache(self) -> "_SpectralCache":
        return _SpectralCache(self)


class _SpectralCache:
    def __init__(self, grid: GridSpec):
        self.grid = grid
        N, L = grid.N, grid.L
        m_full = np.fft.fftfreq(N, d=1.0 / N)
        m_half = np.fft.rfftfreq(N, d=1.0 / N)
        self.k_full = 2 * np.pi * m_full / L
        self.k_half = 2 * np.pi * m_half / L
        axes = [self.k_full] * (grid.d - 1) + [self.k_half]
        self.rk = np.meshgrid(*axes, indexing="ij")
        self.rkmag = np.sqrt(sum(k * k for k in self.rk))
        # Nyquist mask on the rfft grid (index N/2 on every axis)
        nyq = np.zeros(self.rkmag.shape, dtype=bool)
        for a in range(grid.d):
            sl = [slice(None)] * grid.d
            sl[a] = N // 2
            nyq[tuple(sl)] = True
        self.rnyquist = nyq
        self._pow = {}
        self._deriv = {}

    def derivative_symbol(self, axis: int) -> np.ndarray:
        """``k_axis`` on the rfft grid with the Nyquist row of that axis zeroed."""
        if axis not in self._deriv:
            k = self.rk[axis].copy()
            sl = [slice(None)] * self.grid.d
            sl[axis] = self.grid.N // 2
            k[tuple(sl)] = 0.0
            self._deriv[axis] = k
        return self._deriv[axis]

    def kpow(self, alpha: float) -> np.ndarray:
        key = float(alpha)
        if key not in self._pow:
            with np.errstate(divide="ignore"):
                out = np.where(self.rkmag > 0, self.rkmag ** key, 0.0)
            self._pow[key] = out
        return self._pow[key]


@dataclass
class ScalarField:
    """Real samples of a function on the nodes of ``grid``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        self.values = v

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def mean(self) -> float:
        return float(self.values.mean())

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass
class SpectralField:
    """Unnormalized DFT coefficients of a real field, in fftfreq order."""

    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"expected coefficient shape {self.grid.shape}, got {c.shape}")
        self.coefficients = c


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def forward(f: ScalarField) -> SpectralField:
    if f.values.shape != f.grid.shape:
        raise ValueError("field values do not match grid shape")
    return SpectralField(f.grid, np.fft.fftn(f.values))


def inverse(spec: SpectralField) -> ScalarField:
    return ScalarField(spec.grid, np.fft.ifftn(spec.coefficients).real)


def _apply_even_multiplier(f: ScalarField, mult: np.ndarray) -> ScalarField:
    fh = np.fft.rfftn(f.values)
    return ScalarField(f.grid, np.fft.irfftn(fh * mult, s=f.grid.shape, axes=f.grid.axes))


def fractional_laplacian(f: ScalarField, alpha: float) -> ScalarField:
    """Apply ``(-Delta)^{alpha/2}``, the Fourier multiplier ``|k|^alpha``."""
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    return _apply_even_multiplier(f, f.grid._cache.kpow(alpha))


def diffusion_semigroup(f: ScalarField, alpha: float, t: float) -> ScalarField:
    """Exact fractional heat flow ``exp(-t |k|^alpha)`` over a duration ``t``."""
    if t < 0:
        raise ValueError(f"duration must be non-negative, got {t}")
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if t == 0:
        return f.copy()
    # apply as an increment whose mean is removed, so the k=0 mode is kept to the last bit
    inc = _apply_even_multiplier(f, np.expm1(-t * f.grid._cache.kpow(alpha))).values
    inc -= inc.mean()
    return ScalarField(f.grid, f.values + inc)


def dealias(spec: SpectralField) -> SpectralField:
    """2/3 rule: zero every coefficient with some ``|m_i| >= N/3``."""
    g = spec.grid
    keep = np.abs(g.mode_numbers()) < g.N / 3
    mask = np.ones(g.shape, dtype=bool)
    for a in range(g.d):
        shape = [1] * g.d
        shape[a] = g.N
        mask &= keep.reshape(shape)
    return SpectralField(g, np.where(mask, spec.coefficients, 0))


def sobolev_seminorm(f: ScalarField, h: float) -> float:
    """``int |(-Delta)^{h/2} f|^2`` evaluated by Parseval."""
    if not h > 0:
        raise ValueError(f"order must be positive, got {h}")
    g = f.grid
    fh = np.fft.rfftn(f.values)
    w = _rfft_weights(g)
    total = np.sum(w * g._cache.kpow(2 * h) * np.abs(fh) ** 2)
    return float(total * g.L ** g.d / g.size ** 2)


def _rfft_weights(g: GridSpec) -> np.ndarray:
    """Multiplicity of each rfft coefficient in the full Hermitian sum."""
    n_half = g.N // 2 + 1
    w = np.full(n_half, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    shape = [1] * g.d
    shape[-1] = n_half
    return np.broadcast_to(w.reshape(shape), g._cache.rkmag.shape)


def integrate(f: ScalarField) -> float:
    return float(f.values.sum() * f.grid.cell_volume)


def lp_norm(f: ScalarField, p: float) -> float:
    """Quadrature ``L^p`` norm; ``p = inf`` gives the sup norm."""
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum() * f.grid.cell_volume)
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * f.grid.cell_volume))
    m = a.max()
    if m == 0:
        return 0.0
    return float(m * (np.sum((a / m) ** p) * f.grid.cell_volume) ** (1.0 / p))


def inner(f: ScalarField, g: ScalarField) -> float:
    _check_same_grid(f, g)
    return float(np.sum(f.values * g.values) * f.grid.cell_volume)


def spectral_inner(f: ScalarField, g: ScalarField) -> float:
    """Parseval form of :func:`inner`."""
    _check_same_grid(f, g)
    grid = f.grid
    s = np.sum(np.fft.fftn(f.values) * np.conj(np.fft.fftn(g.values))).real
    return float(s * grid.L ** grid.d / grid.size ** 2)


def gradient(f: ScalarField) -> list:
    """Spectral gradient (Nyquist row dropped), one ScalarField per axis."""
    g = f.grid
    fh = np.fft.rfftn(f.values)
    cache = g._cache
    out = []
    for a in range(g.d):
        mult = 1j * cache.derivative_symbol(a)
        out.append(ScalarField(g, np.fft.irfftn(fh * mult, s=g.shape, axes=g.axes)))
    return out
