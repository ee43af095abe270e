import numpy as np
import pytest

from edgefc.euler import directed_flux
from edgefc.mms import (
    MMSField,
    exact_primitive,
    exact_primitive_gradient,
    forcing,
    forcing_gradient,
)


def test_value_at_origin():
    np.testing.assert_allclose(exact_primitive(np.zeros(3)), [1.1, 0.4, 0.3, 0.2, 1.1])


def test_top_face_value():
    x = np.array([1.0, 1.0, 0.001])
    np.testing.assert_allclose(exact_primitive(x), np.array([1.0, 0.3, 0.2, 0.1, 1.0])
                               + 0.1 * np.exp(0.6))


def test_gradient_matches_differences(rng):
    x = rng.uniform([0, 0, 0], [1, 1, 0.001], size=(20, 3))
    g = exact_primitive_gradient(x)
    for d, h in enumerate([1e-6, 1e-6, 1e-9]):
        e = np.zeros(3)
        e[d] = h
        fd = (exact_primitive(x + e) - exact_primitive(x - e)) / (2 * h)
        np.testing.assert_allclose(g[..., d], fd, rtol=1e-7)


def _divergence_fd(x, h=(1e-5, 1e-5, 1e-8)):
    out = 0.0
    for d in range(3):
        e = np.zeros(3)
        e[d] = h[d]
        n = np.eye(3)[d]
        out = out + (directed_flux(exact_primitive(x + e), n)
                     - directed_flux(exact_primitive(x - e), n)) / (2 * h[d])
    return out


def test_forcing_is_flux_divergence(rng):
    x = rng.uniform([0, 0, 0], [1, 1, 0.001], size=(30, 3))
    s = forcing(x)
    np.testing.assert_allclose(s, _divergence_fd(x), rtol=1e-6, atol=1e-6 * np.abs(s).max())


def test_forcing_gradient_matches_differences(rng):
    x = rng.uniform([0, 0, 0], [1, 1, 0.001], size=(10, 3))
    g = forcing_gradient(x)
    for d, h in enumerate([1e-6, 1e-6, 1e-9]):
        e = np.zeros(3)
        e[d] = h
        fd = (forcing(x + e) - forcing(x - e)) / (2 * h)
        np.testing.assert_allclose(g[..., d], fd, rtol=1e-6, atol=1e-8 * np.abs(g).max())


def test_uniform_field_has_no_source():
    field = MMSField(dw=(0.0,) * 5)
    x = np.random.default_rng(0).uniform(size=(5, 3))
    np.testing.assert_array_equal(forcing(x, field), 0.0)


def test_field_validation():
    with pytest.raises(ValueError):
        MMSField(w0=(1.0, 2.0))
