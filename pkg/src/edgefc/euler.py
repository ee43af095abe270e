"""Perfect-gas Euler thermodynamics on stacked states.

States are numpy arrays whose last axis has length 5: primitive
``w = (rho, u, v, w, p)`` or conservative ``u = (rho, rho*u, rho*v, rho*w, rho*E)``.
All functions broadcast over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GasModel",
    "NonPhysicalStateError",
    "prim_to_cons",
    "cons_to_prim",
    "sound_speed",
    "directed_flux",
    "flux_tensor",
    "flux_jacobian_primitive",
    "flux_jvp_primitive",
]


class NonPhysicalStateError(ValueError):
    """Raised when a state has non-positive density or pressure."""


@dataclass(frozen=True)
class GasModel:
    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")


def prim_to_cons(w, gas: GasModel = GasModel()):
    w = np.asarray(w, dtype=float)
    u = np.empty_like(w)
    rho = w[..., 0]
    vel = w[..., 1:4]
    u[..., 0] = rho
    u[..., 1:4] = rho[..., None] * vel
    u[..., 4] = w[..., 4] / (gas.gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1)
    return u


def cons_to_prim(u, gas: GasModel = GasModel(), check: bool = True):
    u = np.asarray(u, dtype=float)
    w = np.empty_like(u)
    rho = u[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        vel = u[..., 1:4] / rho[..., None]
    w[..., 0] = rho
    w[..., 1:4] = vel
    w[..., 4] = (gas.gamma - 1.0) * (u[..., 4] - 0.5 * rho * np.sum(vel * vel, axis=-1))
    if check:
        bad = ~((w[..., 0] > 0.0) & (w[..., 4] > 0.0))
        if np.any(bad):
            raise NonPhysicalStateError(
                f"{int(np.count_nonzero(bad))} state(s) with non-positive density or pressure"
            )
    return w


def sound_speed(w, gas: GasModel = GasModel()):
    w = np.asarray(w, dtype=float)
    return np.sqrt(gas.gamma * w[..., 4] / w[..., 0])


def directed_flux(w, n_hat, gas: GasModel = GasModel()):
    """Physical flux ``F . n_hat``.

    ``n_hat`` need not be normalised; the result is linear in it.
    """
    w = np.asarray(w, dtype=float)
    n_hat = np.asarray(n_hat, dtype=float)
    rho, vel, p = w[..., 0], w[..., 1:4], w[..., 4]
    q = np.sum(vel * n_hat, axis=-1)
    mass = rho * q
    rhoE = p / (gas.gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1)
    f = np.empty(np.broadcast_shapes(w.shape, n_hat.shape[:-1] + (5,)))
    f[..., 0] = mass
    f[..., 1:4] = mass[..., None] * vel + p[..., None] * n_hat
    f[..., 4] = (rhoE + p) * q
    return f


def flux_tensor(w, gas: GasModel = GasModel()):
    """Cartesian flux components, shape ``w.shape[:-1] + (3, 5)``."""
    w = np.asarray(w, dtype=float)
    eye = np.eye(3)
    return np.stack([directed_flux(w, eye[d], gas) for d in range(3)], axis=-2)


def flux_jacobian_primitive(w, n_hat, gas: GasModel = GasModel()):
    """Analytic ``d(F . n_hat) / d(rho, u, v, w, p)``, shape ``(..., 5, 5)``."""
    w = np.asarray(w, dtype=float)
    n_hat = np.asarray(n_hat, dtype=float)
    shape = np.broadcast_shapes(w.shape[:-1], n_hat.shape[:-1])
    w = np.broadcast_to(w, shape + (5,))
    n = np.broadcast_to(n_hat, shape + (3,))
    g = gas.gamma
    rho, vel, p = w[..., 0], w[..., 1:4], w[..., 4]
    q = np.sum(vel * n, axis=-1)
    k = 0.5 * np.sum(vel * vel, axis=-1)
    H = g / (g - 1.0) * p / rho + k

    J = np.zeros(shape + (5, 5))
    J[..., 0, 0] = q
    J[..., 0, 1:4] = rho[..., None] * n
    # momentum: rho*q*vel_i + p*n_i
    J[..., 1:4, 0] = q[..., None] * vel
    J[..., 1:4, 1:4] = rho[..., None, None] * (
        q[..., None, None] * np.eye(3) + vel[..., :, None] * n[..., None, :]
    )
    J[..., 1:4, 4] = n
    # energy: rho*H*q = (g/(g-1) p + rho k) q
    J[..., 4, 0] = k * q
    J[..., 4, 1:4] = rho[..., None] * (q[..., None] * vel + H[..., None] * n)
    J[..., 4, 4] = g / (g - 1.0) * q
    return J


def flux_jvp_primitive(w, n_hat, dw, gas: GasModel = GasModel()):
    """``(d(F . n_hat)/dw) dw`` without forming the Jacobian."""
    w = np.asarray(w, dtype=float)
    dw = np.asarray(dw, dtype=float)
    n = np.asarray(n_hat, dtype=float)
    g = gas.gamma
    rho, vel, p = w[..., 0], w[..., 1:4], w[..., 4]
    drho, dvel, dp = dw[..., 0], dw[..., 1:4], dw[..., 4]
    q = np.sum(vel * n, axis=-1)
    dq = np.sum(dvel * n, axis=-1)
    mass = rho * q
    dmass = drho * q + rho * dq
    v2 = np.sum(vel * vel, axis=-1)
    rhoH = g / (g - 1.0) * p + 0.5 * rho * v2
    drhoH = g / (g - 1.0) * dp + 0.5 * drho * v2 + rho * np.sum(vel * dvel, axis=-1)
    out = np.empty(np.broadcast_shapes(w.shape, dw.shape, n.shape[:-1] + (5,)))
    out[..., 0] = dmass
    out[..., 1:4] = dmass[..., None] * vel + mass[..., None] * dvel + dp[..., None] * n
    out[..., 4] = drhoH * q + rhoH * dq
    return out
