"""
Slow, independent reference implementations used by tests and calibration.
"""
from __future__ import annotations

import numpy as np

from .spectral import GridSpec, ScalarField

__all__ = [
    "direct_dft",
    "kernel_weights",
    "kernel_fractional_laplacian",
    "exact_translation",
    "heat_mode",
    "heat_flow",
    "fourier_pairing",
]

MAX_KERNEL_N = 64


def direct_dft(f: ScalarField) -> np.ndarray:
    """O(N^{2d}) unnormalized DFT by explicit summation."""
    g = f.grid
    j = np.arange(g.N)
    W = np.exp(-2j * np.pi * np.outer(j, j) / g.N)
    out = f.values.astype(complex)
    for a in range(g.d):
        out = np.moveaxis(np.tensordot(W, np.moveaxis(out, a, 0), axes=(1, 0)), 0, a)
    return out


def _hat_moment(a: float, b: float, center: float, h: float, alpha: float) -> float:
    """int_a^b hat_center(y) y^{-1-alpha} dy for 0 < a < b, hat of half-width h."""
    # hat(y) = 1 - |y - center| / h ; split at the center
    def prim_pow(p, y):
        # antiderivative of y^p
        if abs(p + 1) < 1e-14:
            return np.log(y)
        return y ** (p + 1) / (p + 1)

    total = 0.0
    for lo, hi, sign in ((a, min(b, center), 1.0), (max(a, center), b, -1.0)):
        if hi <= lo:
            continue
        # (1 - sign*(center - y)/h) = (1 - sign*center/h) + sign*y/h
        c0 = 1.0 - sign * center / h
        c1 = sign / h
        total += c0 * (prim_pow(-1 - alpha, hi) - prim_pow(-1 - alpha, lo))
        total += c1 * (prim_pow(-alpha, hi) - prim_pow(-alpha, lo))
    return total


def kernel_weights(grid: GridSpec, alpha: float, images: int = 10, tail: bool = True) -> np.ndarray:
    """
    Non-negative periodic weights ``w_j`` (j = 0..N-1, ``w_0 = 0``) such that
    ``(L f)_i = c * sum_j w_{j} (f_i - f_{i+j})`` discretizes the principal-value
    integral of the fractional Laplacian, before normalization.

    The near field ``|y| < h`` uses the symmetric quadratic through three nodes,
    the far field integrates the kernel against the piecewise-linear interpolant
    over ``images`` periodic copies on each side, and (with ``tail``) the
    remainder beyond the last image is added against the mean.  Only d=1.
    """
    if grid.d != 1:
        raise ValueError("kernel oracle implemented for d=1")
    N, h, L = grid.N, grid.h, grid.L
    R = (images + 0.5) * L
    nmax = int(np.floor(R / h))
    w = np.zeros(N)
    # near field: neighbours +-1 get h^-alpha / (2 - alpha) each
    w[1 % N] += h ** -alpha / (2 - alpha)
    w[-1 % N] += h ** -alpha / (2 - alpha)
    for n in range(1, nmax + 1):
        y = n * h
        lo = max(h, y - h)
        hi = min(R, y + h)
        m = _hat_moment(lo, hi, y, h, alpha)
        w[n % N] += m
        w[-n % N] += m
    if tail:
        t = 2 * R ** -alpha / alpha
        w += t / N
    w[0] = 0.0
    return w


def kernel_fractional_laplacian(f: ScalarField, alpha: float, images: int = 10) -> ScalarField:
    """
    Direct periodic-kernel summation of ``(-Delta)^{alpha/2} f``.

    The overall constant is fixed empirically so that the operator reproduces
    ``|k|^alpha`` on the lowest Fourier mode.  Cost O(N^2); N <= 64.
    """
    g = f.grid
    if g.N > MAX_KERNEL_N:
        raise ValueError(f"kernel oracle limited to N <= {MAX_KERNEL_N}, got {g.N}")
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    w = kernel_weights(g, alpha, images)
    N = g.N
    j = np.arange(N)
    # symbol of the unnormalized operator on mode m = 1
    sym1 = np.sum(w * (1 - np.cos(2 * np.pi * j / N)))
    c = (2 * np.pi / g.L) ** alpha / sym1
    a = f.values
    out = np.empty(N)
    idx = (j[:, None] + j[None, :]) % N  # idx[i, n] = i + n
    out = c * (a * w.sum() - (a[idx] * w[None, :]).sum(axis=1))
    return ScalarField(g, out)


def exact_translation(f: ScalarField, shift) -> ScalarField:
    """``f(x - shift)`` by spectral phase shift (exact for band-limited f)."""
    g = f.grid
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (g.d,))
    k = g.wavevectors()
    phase = np.exp(-1j * sum(ki * si for ki, si in zip(k, shift)))
    # taking the real part symmetrizes the Nyquist row to cos(k.shift)
    return ScalarField(g, np.fft.ifftn(np.fft.fftn(f.values) * phase).real)


def heat_mode(grid: GridSpec, alpha: float, t: float, mode=(1,), kind: str = "cos") -> ScalarField:
    """Closed-form fractional heat flow of a single Fourier mode."""
    mode = tuple(mode) + (0,) * (grid.d - len(mode))
    k = [2 * np.pi * m / grid.L for m in mode]
    phase = sum(ki * xi for ki, xi in zip(k, grid.coords()))
    kmag = np.sqrt(sum(ki * ki for ki in k))
    base = np.cos(phase) if kind == "cos" else np.sin(phase)
    return ScalarField(grid, np.exp(-t * kmag ** alpha) * base)


def heat_flow(f: ScalarField, alpha: float, t: float) -> ScalarField:
    """Exact fractional heat flow by full complex FFT (independent of the rfft path)."""
    g = f.grid
    k = g.wavevectors()
    kmag = np.sqrt(sum(ki * ki for ki in k))
    return ScalarField(g, np.fft.ifftn(np.fft.fftn(f.values) * np.exp(-t * kmag ** alpha)).real)


def fourier_pairing(theta0: ScalarField, psi0: ScalarField, alpha: float, t: float) -> float:
    """``sum_k e^{-t|k|^alpha} theta0_k conj(psi0_k)`` with quadrature normalization."""
    g = theta0.grid
    k = g.wavevectors()
    kmag = np.sqrt(sum(ki * ki for ki in k))
    s = np.sum(np.exp(-t * kmag ** alpha) * np.fft.fftn(theta0.values) * np.conj(np.fft.fftn(psi0.values)))
    return float(s.real * g.L ** g.d / g.size ** 2)
