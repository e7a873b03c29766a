"""Pseudo-spectral laboratory for fractional transport-diffusion and its dual conservation law."""
from .spectral import (
    GridSpec,
    ScalarField,
    SpectralField,
    forward,
    inverse,
    fractional_laplacian,
    diffusion_semigroup,
    dealias,
    sobolev_seminorm,
    integrate,
    lp_norm,
    inner,
    spectral_inner,
)
from .velocity import (
    VectorField,
    VelocityModel,
    build_velocity,
    divergence,
    neg_div_norm,
    bmo_norm,
    holder_norm,
    holder_seminorm,
    sobolev_constant,
)

from .solver import SolverConfig, Trajectory, BlowUpError, solve_primal, solve_dual, duality_pairing
from .atoms import AtomParams, Atom, build_canonical_atom, build_random_atom, atom_membership
from .regularity import build_dictionary, holder_atomic, holder_direct, equivalence_constant, fit_power_law

__version__ = "0.1.0"
