import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgefc.euler import (
    GasModel,
    NonPhysicalStateError,
    cons_to_prim,
    directed_flux,
    flux_jacobian_primitive,
    flux_tensor,
    prim_to_cons,
    sound_speed,
)

from conftest import random_states, random_unit

positive = st.floats(0.05, 20.0)
velocity = st.floats(-5.0, 5.0)


@settings(max_examples=200, deadline=None)
@given(positive, velocity, velocity, velocity, positive)
def test_round_trip(rho, u, v, w, p):
    state = np.array([rho, u, v, w, p])
    np.testing.assert_allclose(cons_to_prim(prim_to_cons(state)), state, rtol=1e-12, atol=1e-12)


def test_known_conversion():
    u = prim_to_cons(np.array([1.0, 0.3, 0.2, 0.1, 1.0]))
    np.testing.assert_allclose(u, [1.0, 0.3, 0.2, 0.1, 2.5 + 0.07], rtol=1e-15)


def test_sound_speed():
    assert sound_speed(np.array([1.4, 0, 0, 0, 1.0])) == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [[-1.0, 0, 0, 0, 1.0], [1.0, 0, 0, 0, -0.1], [0.0, 0, 0, 0, 1.0]])
def test_nonphysical_conversion_raises(bad):
    with pytest.raises(NonPhysicalStateError):
        cons_to_prim(prim_to_cons(np.array(bad)) if bad[0] != 0 else np.array([0.0, 0, 0, 0, 1.0]))


def test_gas_validation():
    with pytest.raises(ValueError):
        GasModel(1.0)


def test_flux_at_rest_is_pressure():
    n = np.array([0.0, 0.6, 0.8])
    np.testing.assert_allclose(directed_flux(np.array([1.0, 0, 0, 0, 2.0]), n),
                               [0, 0, 1.2, 1.6, 0], atol=1e-16)


def test_flux_linear_in_direction(rng):
    w = random_states(rng, 20)
    a, b = random_unit(rng, 20), random_unit(rng, 20)
    np.testing.assert_allclose(directed_flux(w, 2 * a - 3 * b),
                               2 * directed_flux(w, a) - 3 * directed_flux(w, b), atol=1e-13)
    np.testing.assert_allclose(np.einsum("nd,ndk->nk", a, flux_tensor(w)), directed_flux(w, a),
                               atol=1e-14)


def test_jacobian_matches_central_differences(rng):
    w = random_states(rng, 100)
    n = random_unit(rng, 100)
    J = flux_jacobian_primitive(w, n)
    for c in range(5):
        eps = 1e-6 * np.maximum(np.abs(w[:, c]), 1.0)
        dw = np.zeros_like(w)
        dw[:, c] = eps
        fd = (directed_flux(w + dw, n) - directed_flux(w - dw, n)) / (2 * eps[:, None])
        scale = np.abs(J).max(axis=(1, 2))[:, None]
        assert np.max(np.abs(J[:, :, c] - fd) / scale) < 1e-6


def test_conservative_jacobian_eigenvalues(rng):
    from edgefc.solver import _cons_jacobian

    w = random_states(rng, 10)
    n = random_unit(rng, 10)
    q = np.einsum("ij,ij->i", w[:, 1:4], n)
    a = sound_speed(w)
    for J, qi, ai in zip(_cons_jacobian(w, n, GasModel()), q, a):
        lam = np.sort(np.linalg.eigvals(J).real)
        np.testing.assert_allclose(lam, np.sort([qi - ai, qi, qi, qi, qi + ai]), atol=1e-10)
