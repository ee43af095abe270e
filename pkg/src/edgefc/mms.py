"""Exponential manufactured solution ``w(x) = w0 + dw * exp(a x + b y + c z)``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .euler import GasModel, flux_jacobian_primitive, prim_to_cons

__all__ = [
    "MMSField",
    "exact_primitive",
    "exact_primitive_gradient",
    "exact_conservative",
    "forcing",
    "forcing_gradient",
]


@dataclass(frozen=True)
class MMSField:
    w0: tuple = (1.0, 0.3, 0.2, 0.1, 1.0)
    dw: tuple = (0.1, 0.1, 0.1, 0.1, 0.1)
    exponents: tuple = (0.2, 0.2, 200.0)

    def __post_init__(self):
        if len(self.w0) != 5 or len(self.dw) != 5 or len(self.exponents) != 3:
            raise ValueError("w0 and dw need 5 entries, exponents 3")

    def _g(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(x @ np.asarray(self.exponents, dtype=float))


def exact_primitive(x, field: MMSField = MMSField()):
    g = field._g(x)
    return np.asarray(field.w0) + np.asarray(field.dw) * g[..., None]


def exact_conservative(x, field: MMSField = MMSField(), gas: GasModel = GasModel()):
    return prim_to_cons(exact_primitive(x, field), gas)


def exact_primitive_gradient(x, field: MMSField = MMSField()):
    """``dw_i/dx_d`` with shape ``(..., 5, 3)``."""
    g = field._g(x)
    return (
        np.asarray(field.dw)[:, None]
        * np.asarray(field.exponents)[None, :]
        * g[..., None, None]
    )


def _source_in_g(g, field: MMSField, gas: GasModel):
    # s = sum_d dF_d/dw . dw * c_d * g = g * J(w, c) dw, with J linear in its direction
    c = np.asarray(field.exponents, dtype=float)
    dw = np.asarray(field.dw, dtype=float)
    w = np.asarray(field.w0) + dw * g[..., None]
    return g[..., None] * np.einsum("...ij,j->...i", flux_jacobian_primitive(w, c, gas), dw)


def forcing(x, field: MMSField = MMSField(), gas: GasModel = GasModel()):
    """Source ``s = div F(w(x))`` by the chain rule through the primitive Jacobians."""
    return _source_in_g(field._g(x), field, gas)


def forcing_gradient(x, field: MMSField = MMSField(), gas: GasModel = GasModel()):
    """Analytic ``grad s``, shape ``(..., 5, 3)``.

    ``s`` is a polynomial of degree four in ``g = exp(a x + b y + c z)``, so
    the five-point derivative in ``g`` below is exact up to rounding, and
    ``grad s = ds/dg * g * (a, b, c)``.
    """
    g = field._g(x)
    h = 0.25 * g
    ds = (
        8.0 * (_source_in_g(g + h, field, gas) - _source_in_g(g - h, field, gas))
        - (_source_in_g(g + 2 * h, field, gas) - _source_in_g(g - 2 * h, field, gas))
    ) / (12.0 * h[..., None])
    return (ds * g[..., None])[..., None] * np.asarray(field.exponents, dtype=float)
