"""
Build a canonical atom, push it through the dual flow of a divergence-free
velocity and watch its membership amplitude at the propagated radius decay.
"""
import numpy as np

from fractrans import GridSpec, SolverConfig, solve_dual, AtomParams, build_canonical_atom
from fractrans.velocity import VelocityModel, build_velocity
from fractrans.atoms import track_center, propagation_raw, lambda_series, calibrate_delta_K, envelope

g = GridSpec(2, 128, 2.0)
alpha, r, T = 1.0, 0.125, 0.5
params = AtomParams(A=50.0, omega=0.5, p=2.0)
atom = build_canonical_atom(g, r, params)
print(f"canonical atom at r={r}: lambda = {atom.lam:.3f}, centre = {atom.center}")

v = build_velocity(VelocityModel(kind="divergence_free", amplitude=0.5, seed=1), g)
times = np.linspace(0, T, 21)
traj = solve_dual(atom.field, v, T, SolverConfig(alpha=alpha, T=T, snapshot_times=tuple(times[1:])))
path = track_center(v, atom.center, r, times, reverse_from=T)
raw = propagation_raw(traj, path, params)

delta, K, beta = calibrate_delta_K(times, lambda K: lambda_series(raw, r, K, alpha, g.d, params)[0], r, alpha)
lam, chi, R = lambda_series(raw, r, K, alpha, g.d, params)
print(f"calibrated delta={delta:.3f} K={K:.2f} beta={beta:.3f}")
for s, l, R_s in zip(times[::4], lam[::4], R[::4]):
    print(f"s={s:.3f}  R={R_s:.3f}  lambda={l:.4f}  envelope={envelope(r, s, alpha, delta, K):.4f}")
