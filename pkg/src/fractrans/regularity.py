"""
Hoelder seminorm estimators: the atomic characterization

    [f]_beta ~ sup_{r, phi in A^p_r} r^{-beta} |int f phi|

evaluated on a fixed dictionary of atoms, and direct difference quotients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .spectral import GridSpec, ScalarField
from .velocity import holder_seminorm
from .atoms import AtomParams, build_canonical_atom, atom_membership

__all__ = [
    "AtomDictionary",
    "build_dictionary",
    "holder_atomic",
    "holder_direct",
    "fit_power_law",
    "equivalence_constant",
]


@dataclass(frozen=True)
class AtomDictionary:
    """Stacked atom samples ``fields[i]`` (flattened) with radii ``radii[i]``."""

    grid: GridSpec
    fields: np.ndarray
    radii: np.ndarray
    centers: np.ndarray
    kinds: tuple
    p: float
    params: AtomParams

    def __len__(self):
        return self.fields.shape[0]


def _dyadic_radii(grid: GridSpec, n_radii: int) -> list:
    out = []
    j = 1
    while len(out) < n_radii:
        r = 2.0 ** -j
        if r < 8 * grid.h:
            break
        if r <= min(1.0, grid.L / 2):
            out.append(r)
        j += 1
    return out


def _center_nodes(grid: GridSpec, n_centers: int) -> list:
    """``n_centers`` evenly spread grid nodes (a square lattice in 2d)."""
    per = n_centers if grid.d == 1 else int(round(np.sqrt(n_centers)))
    if grid.d == 2 and per * per != n_centers:
        raise ValueError("in 2d the number of centres must be a perfect square")
    stride = grid.N // per
    idx = [i * stride + stride // 2 for i in range(per)]
    if grid.d == 1:
        return [(i,) for i in idx]
    return [(i, j) for i in idx for j in idx]


def _dipole(grid: GridSpec, center, r: float, rng, params: AtomParams) -> np.ndarray:
    d = grid.d
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    # the concentration condition tolerates a separation up to 2^{1/omega} r
    hi = min(0.9 * 2 ** (1 / params.omega) * r, 0.45 * grid.L, 0.9)
    lo = min(r, 0.8 * hi)
    c1 = np.asarray(center) + rng.uniform(lo, hi) * direction
    w0, w1 = np.maximum(rng.uniform(r / 16, r / 8, size=2), 1.5 * grid.h)
    b0 = np.exp(-0.5 * (grid.periodic_distance(center) / w0) ** 2)
    b1 = np.exp(-0.5 * (grid.periodic_distance(c1) / w1) ** 2)
    f = b1 / b1.sum() - b0 / b0.sum()
    f -= f.mean()
    lam, _ = atom_membership(ScalarField(grid, f), r, params.p, params)
    return f / lam


def build_dictionary(grid: GridSpec, n_radii: int = 5, n_centers: int = 16,
                     profiles=("canonical", "random"), params: AtomParams = AtomParams(p=2.0),
                     seed: int = 0) -> AtomDictionary:
    """
    Canonical atoms and random dipoles at dyadic radii ``1/2, 1/4, ...`` (only
    radii with ``8h <= r <= min(1, L/2)``), each placed at ``n_centers``
    evenly spaced nodes.  Every member has membership amplitude <= 1.
    """
    rng = np.random.default_rng(seed)
    radii = _dyadic_radii(grid, n_radii)
    if not radii:
        raise ValueError(f"grid {grid} resolves no dyadic radius")
    nodes = _center_nodes(grid, n_centers)
    fields, rr, cc, kinds = [], [], [], []
    for r in radii:
        if "canonical" in profiles:
            base = build_canonical_atom(grid, r, params, center=(0.0,) * grid.d)
            for node in nodes:
                fields.append(np.roll(base.field.values, node, axis=tuple(range(grid.d))).ravel())
                rr.append(r)
                cc.append(tuple(i * grid.h for i in node))
                kinds.append("canonical")
        if "random" in profiles:
            for node in nodes:
                center = tuple(i * grid.h for i in node)
                fields.append(_dipole(grid, center, r, rng, params).ravel())
                rr.append(r)
                cc.append(center)
                kinds.append("random")
    return AtomDictionary(grid, np.array(fields), np.array(rr), np.array(cc), tuple(kinds), params.p, params)


def holder_atomic(f: ScalarField, beta: float, dictionary: AtomDictionary) -> float:
    """``max_i r_i^{-beta} |int f phi_i|`` over the dictionary."""
    if len(dictionary) == 0:
        raise ValueError("empty dictionary")
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if f.grid != dictionary.grid:
        raise ValueError("field and dictionary live on different grids")
    pair = dictionary.fields @ f.values.ravel() * f.grid.cell_volume
    return float(np.max(np.abs(pair) * dictionary.radii ** -beta))


def holder_direct(f: ScalarField, beta: float) -> float:
    """Direct difference-quotient seminorm; vanishes on constants."""
    return holder_seminorm(f, beta)


def equivalence_constant(dictionary: AtomDictionary, beta: float) -> float:
    """
    ``max_i r_i^{-beta} int |x - x_i|^beta |phi_i(x)| dx``.

    Since atoms are mean-free, ``|int f phi| = |int (f - f(x_i)) phi|`` and the
    atomic estimator is bounded by this constant times the Hoelder seminorm.
    """
    g = dictionary.grid
    best = 0.0
    for phi, r, c in zip(dictionary.fields, dictionary.radii, dictionary.centers):
        w = g.periodic_distance(c).ravel() ** beta
        best = max(best, float(np.sum(w * np.abs(phi)) * g.cell_volume / r ** beta))
    return best


def fit_power_law(series) -> tuple:
    """
    Least-squares slope of ``log value`` against ``log t``.

    ``series`` is a sequence of ``(t, value)`` pairs.  Returns
    ``(exponent, r2)``.
    """
    a = np.asarray(series, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("series must be a list of (t, value) pairs")
    if a.shape[0] < 5:
        raise ValueError(f"need at least 5 points, got {a.shape[0]}")
    if np.any(a <= 0):
        raise ValueError("times and values must be positive")
    res = stats.linregress(np.log(a[:, 0]), np.log(a[:, 1]))
    r2 = float(res.rvalue ** 2) if np.ptp(np.log(a[:, 1])) > 0 else 1.0
    return float(res.slope), r2
