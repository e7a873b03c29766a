import numpy as np
import pytest

from fractrans.spectral import GridSpec, ScalarField, inner
from fractrans.oracles import (
    direct_dft, kernel_weights, kernel_fractional_laplacian, exact_translation, heat_mode, heat_flow,
    fourier_pairing,
)

G = GridSpec(1, 64, 1.0)


# ------------------------------------------------------------------ kernel


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_kernel_annihilates_constants(alpha):
    out = kernel_fractional_laplacian(ScalarField(G, np.full(G.shape, 2.0)), alpha)
    assert np.abs(out.values).max() <= 1e-9


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_kernel_output_mean_free(alpha, rng):
    out = kernel_fractional_laplacian(ScalarField(G, rng.standard_normal(G.shape)), alpha)
    assert abs(out.values.mean()) <= 1e-10


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_kernel_positive_at_interior_max(alpha):
    # the operator is non-negative at a global maximum
    x = G.axis()
    f = ScalarField(G, np.exp(-((x - 0.5) / 0.1) ** 2))
    out = kernel_fractional_laplacian(f, alpha)
    assert out.values[np.argmax(f.values)] > 0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_kernel_reproduces_mode_one(alpha):
    # [TRIVIAL] the normalization is fixed on the lowest mode
    x = G.axis()
    out = kernel_fractional_laplacian(ScalarField(G, np.cos(2 * np.pi * x)), alpha)
    np.testing.assert_allclose(out.values, (2 * np.pi) ** alpha * np.cos(2 * np.pi * x), atol=1e-9)


def test_kernel_weights_nonnegative():
    w = kernel_weights(G, 1.0)
    assert w[0] == 0.0 and np.all(w >= 0)
    np.testing.assert_allclose(w[1:], w[1:][::-1], rtol=1e-12)


def test_kernel_limits():
    with pytest.raises(ValueError):
        kernel_fractional_laplacian(ScalarField(GridSpec(1, 128, 1.0), np.zeros(128)), 1.0)
    with pytest.raises(ValueError):
        kernel_fractional_laplacian(ScalarField(G, np.zeros(64)), 2.0)
    with pytest.raises(ValueError):
        kernel_weights(GridSpec(2, 16, 1.0), 1.0)


# ------------------------------------------------------------- translation


def test_translation_identities(rng):
    g = GridSpec(1, 128, 2.0)
    f = ScalarField(g, rng.standard_normal(g.shape))
    np.testing.assert_allclose(exact_translation(f, 0.0).values, f.values, atol=1e-13)
    np.testing.assert_allclose(exact_translation(f, g.L).values, f.values, atol=1e-12)
    np.testing.assert_allclose(exact_translation(f, g.h).values, np.roll(f.values, 1), atol=1e-12)


def test_translation_2d(rng):
    g = GridSpec(2, 32, 1.0)
    f = ScalarField(g, rng.standard_normal(g.shape))
    out = exact_translation(f, (2 * g.h, -g.h))
    np.testing.assert_allclose(out.values, np.roll(f.values, (2, -1), axis=(0, 1)), atol=1e-12)


# ------------------------------------------------------------ heat and DFT


def test_direct_dft_matches_fft(rng):
    for g in (GridSpec(1, 32, 1.0), GridSpec(2, 8, 1.0)):
        f = ScalarField(g, rng.standard_normal(g.shape))
        np.testing.assert_allclose(direct_dft(f), np.fft.fftn(f.values), atol=1e-10)


@pytest.mark.parametrize("kind", ["cos", "sin"])
def test_heat_mode_matches_heat_flow(kind):
    g = GridSpec(2, 32, 2.0)
    a = heat_mode(g, 1.5, 0.0, mode=(2, 1), kind=kind)
    b = heat_flow(a, 1.5, 0.3)
    np.testing.assert_allclose(heat_mode(g, 1.5, 0.3, mode=(2, 1), kind=kind).values, b.values, atol=1e-13)


def test_fourier_pairing_at_zero_is_inner(rng):
    g = GridSpec(1, 64, 3.0)
    a = ScalarField(g, rng.standard_normal(g.shape))
    b = ScalarField(g, rng.standard_normal(g.shape))
    assert fourier_pairing(a, b, 1.0, 0.0) == pytest.approx(inner(a, b), rel=1e-12)
    assert fourier_pairing(a, b, 1.0, 0.2) == pytest.approx(inner(heat_flow(a, 1.0, 0.2), b), rel=1e-12)
