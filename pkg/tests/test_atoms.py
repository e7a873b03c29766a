import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from fractrans.spectral import GridSpec, ScalarField, lp_norm
from fractrans.velocity import VectorField
from fractrans.solver import Trajectory
from fractrans.oracles import heat_flow
from fractrans.atoms import (
    AtomParams, ball_volume, omega_weight, default_omega, canonical_constant, build_canonical_atom,
    build_random_atom, atom_membership, membership_ratios, concentration_map, split_constant,
    interpolation_margins, interpolation_check, canonical_calibration, track_center, chi_series,
    propagated_radius, radius_match, envelope, calibrate_delta_K, save_atom, load_atom,
)

G1 = GridSpec(1, 1024, 4.0)
G2 = GridSpec(2, 128, 2.0)


# ---------------------------------------------------------------- weights


@pytest.mark.parametrize("dist,omega,expected", [(0.0, 0.5, 0.0), (1.0, 0.5, 1.0), (0.25, 0.5, 0.5),
                                                 (3.0, 0.3, 1.0)])
def test_omega_weight_values(dist, omega, expected):
    # [TRIVIAL]
    assert omega_weight(dist, omega) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("omega", [0.0, 1.0, -0.2])
def test_omega_weight_rejects_omega(omega):
    with pytest.raises(ValueError):
        omega_weight(0.5, omega)


def test_ball_volume():
    # [TRIVIAL]
    assert ball_volume(1) == pytest.approx(2.0)
    assert ball_volume(2) == pytest.approx(np.pi)


@pytest.mark.parametrize("alpha,d,lo,hi", [(1.0, 2, 0.0, 1.0), (1.5, 2, 0.5, 1.0), (0.4, 1, 0.0, 0.4),
                                           (0.8, 1, 0.3, 0.8), (2.0, 1, 0.5, 1.0)])
def test_default_omega_in_window(alpha, d, lo, hi):
    assert lo < default_omega(alpha, d) < hi


def test_canonical_constant_d1():
    # [PAPER] in d=1 the three limits are 1/2, A 2^{-1/p}, 2/(1+omega); the first binds
    assert canonical_constant(1, 2.0, 50.0, 0.5, safety=1.0) == pytest.approx(0.5)
    assert canonical_constant(1, 2.0, 50.0, 0.5) == pytest.approx(0.45)


def test_params_validation():
    for kw in (dict(A=0.5), dict(omega=1.0), dict(p=1.0), dict(eps=0.0)):
        with pytest.raises(ValueError):
            AtomParams(**kw)


# ----------------------------------------------------------- construction


@pytest.mark.parametrize("grid", [G1, G2])
@pytest.mark.parametrize("r", [0.25, 0.125])
def test_canonical_atom_is_member(grid, r):
    a = build_canonical_atom(grid, r)
    l1 = lp_norm(a.field, 1)
    assert abs(a.field.values.sum() * grid.cell_volume) <= 1e-12 * max(l1, 1.0)
    assert 0 < a.lam <= 1.0


def test_canonical_atom_d1_p_inf():
    a = build_canonical_atom(G1, 0.0625, AtomParams(p=np.inf))
    assert a.lam <= 1.0


@pytest.mark.parametrize("r", [1e-3, 1.5, 3.0])
def test_radius_checks(r):
    with pytest.raises(ValueError):
        build_canonical_atom(G1, r)


def test_random_atom_tight_and_deterministic():
    for seed in range(5):
        a = build_random_atom(G1, 0.125, seed=seed)
        assert abs(a.lam - 1.0) <= 1e-10
        assert abs(max(membership_ratios(a.field, a.r, 2.0, a.params)[:3]) - 1.0) <= 1e-10
    b1 = build_random_atom(G2, 0.25, seed=7)
    b2 = build_random_atom(G2, 0.25, seed=7)
    np.testing.assert_array_equal(b1.field.values, b2.field.values)
    assert b1.center == b2.center


# ------------------------------------------------------------- membership


def test_membership_homogeneous():
    a = build_random_atom(G1, 0.125, seed=3)
    for c in (0.5, 2.0, 17.0):
        lam, _ = atom_membership(ScalarField(G1, c * a.field.values), 0.125, 2.0)
        assert lam == pytest.approx(c * a.lam, rel=1e-12)


def test_membership_zero_field():
    lam, center = atom_membership(ScalarField(G1, np.zeros(G1.shape)), 0.125, 2.0)
    assert lam == 0.0
    assert center == (0.0,)


def test_membership_rejects_nonzero_mean():
    with pytest.raises(ValueError):
        atom_membership(ScalarField(G1, np.ones(G1.shape)), 0.125, 2.0)


def test_concentration_map_matches_direct_sum(rng):
    # [DERIVED] O(N^2) evaluation of int |f| Omega(x - x0) over every node
    g = GridSpec(1, 128, 2.0)
    f = ScalarField(g, rng.standard_normal(g.shape))
    fast = concentration_map(f, 0.4)
    slow = np.array([np.sum(np.abs(f.values) * omega_weight(g.periodic_distance((i * g.h,)), 0.4)) * g.h
                     for i in range(g.N)])
    np.testing.assert_allclose(fast, slow, rtol=1e-11, atol=1e-13)


def test_membership_ratios_direct(rng):
    # [DERIVED] each ratio against its definition evaluated by quadrature
    g = GridSpec(1, 256, 2.0)
    x = rng.standard_normal(g.shape)
    f = ScalarField(g, x - x.mean())
    P = AtomParams(A=3.0, omega=0.5, p=3.0)
    r = 0.125
    l1, lp, conc, center = membership_ratios(f, r, 3.0, P)
    assert l1 == pytest.approx(np.sum(np.abs(f.values)) * g.h, rel=1e-13)
    assert lp == pytest.approx((np.sum(np.abs(f.values) ** 3) * g.h) ** (1 / 3) / (3.0 * r ** (-2 / 3)), rel=1e-12)
    w = omega_weight(g.periodic_distance(center), 0.5)
    assert conc == pytest.approx(np.sum(np.abs(f.values) * w) * g.h / r ** 0.5, rel=1e-10)


def test_membership_center_first_minimizer():
    # an even field about 0 with two symmetric minima picks the first node
    g = GridSpec(1, 256, 2.0)
    x = g.axis()
    v = np.cos(2 * np.pi * x / g.L)
    _, _, _, center = membership_ratios(ScalarField(g, v), 0.5, 2.0, AtomParams())
    chi = concentration_map(ScalarField(g, v), 0.5)
    assert center[0] == pytest.approx(int(np.argmin(chi)) * g.h)


# ---------------------------------------------------------- L^q control


def test_split_constant_matches_numeric_minimum():
    # [DERIVED] minimize a t^x + t^-y over t numerically
    for d, p, q, om in [(1, 4.0, 2.0, 0.5), (2, np.inf, 2.0, 0.5), (1, np.inf, 1.5, 0.3)]:
        inv_p = 0.0 if np.isinf(p) else 1 / p
        frac = 1.0 if np.isinf(p) else (p - q) / (p - 1)
        x = d * (1 - q * inv_p)
        y = om * frac
        a = ball_volume(d) ** (1 - q * inv_p)
        res = optimize.minimize_scalar(lambda lt: a * np.exp(lt * x) + np.exp(-lt * y), bounds=(-20, 20),
                                       method="bounded", options={"xatol": 1e-12})
        assert split_constant(d, p, q, om) == pytest.approx(res.fun ** (1 / q), rel=1e-8)


def test_split_constant_q_equals_p():
    assert split_constant(1, 3.0, 3.0, 0.5) == 1.0


def test_split_constant_rejects_q():
    with pytest.raises(ValueError):
        split_constant(1, 2.0, 3.0, 0.5)
    with pytest.raises(ValueError):
        interpolation_margins(build_canonical_atom(G1, 0.125), 0.5)


def test_interpolation_q1_and_q_eq_p():
    a = build_random_atom(G1, 0.125, AtomParams(p=4.0), seed=2)
    # q = 1 is the L1 condition, q = p the L^p condition
    assert interpolation_margins(a, 1.0)["interp"] <= 1 + 1e-12
    assert interpolation_margins(a, 4.0)["interp"] <= 1 + 1e-12
    assert interpolation_margins(a, 4.0)["split"] <= 1 + 1e-12


@pytest.mark.parametrize("p", [4.0, np.inf])
def test_interpolation_q2_canonical_family(p):
    P = AtomParams(p=p)
    for r in (0.25, 0.125, 0.0625, 0.03125, 0.015625):
        assert interpolation_check(build_canonical_atom(GridSpec(1, 4096, 4.0), r, P), 2.0)


def test_canonical_calibration_is_family_max():
    P = AtomParams()
    radii = (0.25, 0.0625)
    C = canonical_calibration(G1, np.inf, 2.0, P, radii)
    ratios = [interpolation_margins(build_canonical_atom(G1, r, P.with_p(np.inf)), 2.0, C=1.0)["split"]
              for r in radii]
    assert C == pytest.approx(max(ratios))


# ---------------------------------------------------------- moving centre


def test_track_center_zero_velocity():
    v = VectorField.zeros(G2)
    path = track_center(v, (0.3, 0.7), 0.25, np.linspace(0, 1, 6))
    np.testing.assert_allclose(path.points, [[0.3, 0.7]] * 6, atol=0)


@pytest.mark.parametrize("mode", ["ball_average", "pointwise"])
def test_track_center_constant_velocity(mode):
    v = VectorField.static(G2, [np.full(G2.shape, 0.3), np.full(G2.shape, -0.2)])
    times = np.linspace(0, 2, 5)
    path = track_center(v, (0.5, 0.5), 0.25, times, mode=mode)
    expect = (np.array([0.5, 0.5]) + np.outer(times, [0.3, -0.2])) % G2.L
    np.testing.assert_allclose(path.points, expect, atol=1e-12)
    assert path.at(1.0) == pytest.approx(expect[2])
    with pytest.raises(KeyError):
        path.at(0.3)


def test_track_center_midpoint_second_order():
    # [DERIVED] x' = a sin(kx) with a ball-averaged amplitude a sinc(kr):
    # tan(kx/2) = tan(kx0/2) exp(a_eff k t)
    g = GridSpec(1, 256, 1.0)
    a, k, r, x0, T = 0.5, 2 * np.pi, 0.1, 0.3, 1.0
    v = VectorField.static(g, [a * np.sin(k * g.axis())])
    a_eff = a * np.sin(k * r) / (k * r)
    exact = 2 * np.arctan(np.tan(k * x0 / 2) * np.exp(a_eff * k * T)) / k % 1.0
    errs = [abs(track_center(v, (x0,), r, [0.0, T], substeps=n).points[-1, 0] - exact) for n in (8, 16, 32)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)


def test_track_center_rejects_input():
    v = VectorField.zeros(G2)
    with pytest.raises(ValueError):
        track_center(v, (0, 0), 0.25, [0.0, 1.0], mode="lagrange")
    with pytest.raises(ValueError):
        track_center(v, (0, 0), 0.25, [1.0, 0.0])


def test_chi_series_initial_and_heat_bound():
    # under the pure heat flow cancellation shrinks chi (measured chi(0.25) = 0.0087 vs 0.284 at 0),
    # so the envelope (r^a + K s)^{omega/a} holds already with the smallest admissible K = 1
    g = GridSpec(2, 128, 2.0)
    P = AtomParams(omega=0.5)
    r, alpha = 0.25, 1.0
    atom = build_canonical_atom(g, r, P)
    times = np.linspace(0, 0.25, 11)
    traj = Trajectory()
    for t in times:
        traj.append(t, heat_flow(atom.field, alpha, t))
    path = track_center(VectorField.zeros(g), atom.center, r, times)
    chi = chi_series(traj, path, P.omega)
    assert chi[0] <= r ** P.omega * atom.lam * (1 + 1e-12)
    assert np.all(np.diff(chi) < 0)
    assert np.all(chi <= (r ** alpha + 1.0 * times) ** (P.omega / alpha))


# -------------------------------------------------------- propagation law


@given(r=st.floats(0.01, 1.0), K=st.floats(1.0, 30.0), ell=st.integers(0, 10), gamma=st.floats(0.01, 1.0),
       extra=st.floats(0.0, 2.0), alpha=st.floats(0.3, 2.0))
def test_radius_match(r, K, ell, gamma, extra, alpha):
    s = ell * gamma * r ** alpha + extra
    a, b = radius_match(r, K, ell, gamma, s, alpha)
    assert a == pytest.approx(b, rel=1e-14, abs=0)


def test_propagated_radius_and_envelope_at_zero():
    assert propagated_radius(0.2, 5.0, 0.0, 1.5) == pytest.approx(0.2)
    assert envelope(0.2, 0.0, 1.0, 0.3, 4.0) == 1.0
    s = np.linspace(0, 1, 20)
    assert np.all(np.diff(envelope(0.1, s, 1.0, 0.3, 4.0)) < 0)


@given(delta=st.floats(0.05, 2.0), K=st.floats(1.0, 30.0), noise=st.floats(0.0, 0.3))
def test_calibration_bounds_series(delta, K, noise):
    r, alpha = 0.0625, 1.0
    s = np.linspace(0, 0.5, 21)
    lam = envelope(r, s, alpha, delta, K) * (1 - noise * np.sin(7 * s) ** 2)
    dl, Kf, beta = calibrate_delta_K(s, lam, r, alpha)
    assert Kf >= 1.0
    assert beta == pytest.approx(alpha * dl / Kf)
    assert np.all(lam <= envelope(r, s, alpha, dl, Kf) * (1 + 1e-12))


def test_calibration_needs_positive_time():
    with pytest.raises(ValueError):
        calibrate_delta_K([0.0], [1.0], 0.1, 1.0)


# ------------------------------------------------------------------ storage


def test_save_load_round_trip(tmp_path):
    for P in (AtomParams(), AtomParams(p=np.inf)):
        a = build_canonical_atom(G2, 0.25, P)
        b_path, j_path = save_atom(tmp_path / "atoms" / f"a{P.p}", a)
        assert b_path.exists() and j_path.exists()
        b = load_atom(tmp_path / "atoms" / f"a{P.p}")
        np.testing.assert_array_equal(a.field.values, b.field.values)
        assert b.metadata() == a.metadata()
