"""Numerical flux functions for the Euler equations.

Every flux takes primitive left/right states ``(..., 5)`` and unit normals
``(..., 3)`` and returns the numerical flux ``(..., 5)``.  Roe is also
available as its central part plus dissipation (:func:`roe_split`), which
the flux-extrapolation scheme needs.
"""
from __future__ import annotations

import numpy as np

from .euler import GasModel, NonPhysicalStateError, directed_flux, sound_speed

__all__ = [
    "FLUXES",
    "get_flux",
    "flux_roe",
    "roe_split",
    "roe_dissipation",
    "roe_abs_jacobian",
    "flux_hllc",
    "flux_ldfss",
]

ENTROPY_FIX = 0.05


def _check(w):
    if not np.all((w[..., 0] > 0.0) & (w[..., 4] > 0.0)):
        raise NonPhysicalStateError("flux evaluated at a non-physical state")


def _roe_average(wL, wR, gas):
    g = gas.gamma
    rt = np.sqrt(wR[..., 0] / wL[..., 0])
    inv = 1.0 / (1.0 + rt)
    HL = g / (g - 1.0) * wL[..., 4] / wL[..., 0] + 0.5 * np.sum(wL[..., 1:4] ** 2, axis=-1)
    HR = g / (g - 1.0) * wR[..., 4] / wR[..., 0] + 0.5 * np.sum(wR[..., 1:4] ** 2, axis=-1)
    rho = rt * wL[..., 0]
    vel = (wL[..., 1:4] + rt[..., None] * wR[..., 1:4]) * inv[..., None]
    H = (HL + rt * HR) * inv
    a = np.sqrt((g - 1.0) * (H - 0.5 * np.sum(vel**2, axis=-1)))
    return rho, vel, H, a


def _harten(lam, delta):
    lam = np.abs(lam)
    safe = np.where(delta > 0.0, delta, 1.0)
    return np.where(lam < delta, 0.5 * (lam**2 + delta**2) / safe, lam)


def _abs_a_times(rho, vel, H, a, n, drho, dvel, dp, entropy_fix):
    """|A_roe| applied to a jump given as primitive differences."""
    qn = np.sum(vel * n, axis=-1)
    dqn = np.sum(dvel * n, axis=-1)
    delta = entropy_fix * a
    ws1 = _harten(qn - a, delta)
    ws2 = np.abs(qn)
    ws3 = _harten(qn + a, delta)
    a2 = a * a
    LdU1 = (dp - rho * a * dqn) / (2.0 * a2)
    LdU2 = drho - dp / a2
    LdU3 = (dp + rho * a * dqn) / (2.0 * a2)

    out = np.empty(np.broadcast_shapes(drho.shape, qn.shape) + (5,))
    c1 = ws1 * LdU1
    c3 = ws3 * LdU3
    c2 = ws2 * LdU2
    shear = ws2 * rho
    out[..., 0] = c1 + c2 + c3
    out[..., 1:4] = (
        (c1 + c2 + c3)[..., None] * vel
        + (c3 - c1)[..., None] * a[..., None] * n
        + shear[..., None] * (dvel - dqn[..., None] * n)
    )
    out[..., 4] = (
        (c1 + c3) * H
        + (c3 - c1) * a * qn
        + c2 * 0.5 * np.sum(vel**2, axis=-1)
        + shear * (np.sum(vel * dvel, axis=-1) - qn * dqn)
    )
    return out


def roe_dissipation(wL, wR, n_hat, gas: GasModel = GasModel(), entropy_fix=ENTROPY_FIX):
    """``0.5 * |A_roe| (u_R - u_L)``."""
    wL = np.asarray(wL, dtype=float)
    wR = np.asarray(wR, dtype=float)
    _check(wL)
    _check(wR)
    rho, vel, H, a = _roe_average(wL, wR, gas)
    d = wR - wL
    return 0.5 * _abs_a_times(
        rho, vel, H, a, np.asarray(n_hat, dtype=float), d[..., 0], d[..., 1:4], d[..., 4],
        entropy_fix,
    )


def roe_split(wL, wR, n_hat, gas: GasModel = GasModel(), entropy_fix=ENTROPY_FIX):
    """Return ``(0.5*(f_L + f_R), 0.5*|A|(u_R - u_L))``; Roe flux is their difference."""
    avg = 0.5 * (directed_flux(wL, n_hat, gas) + directed_flux(wR, n_hat, gas))
    return avg, roe_dissipation(wL, wR, n_hat, gas, entropy_fix)


def flux_roe(wL, wR, n_hat, gas: GasModel = GasModel(), entropy_fix=ENTROPY_FIX):
    avg, diss = roe_split(wL, wR, n_hat, gas, entropy_fix)
    return avg - diss


def roe_abs_jacobian(wL, wR, n_hat, gas: GasModel = GasModel(), entropy_fix=ENTROPY_FIX):
    """Matrix ``|A_roe|`` acting on conservative jumps, shape ``(..., 5, 5)``."""
    wL = np.asarray(wL, dtype=float)
    wR = np.asarray(wR, dtype=float)
    n = np.asarray(n_hat, dtype=float)
    rho, vel, H, a = _roe_average(wL, wR, gas)
    g1 = gas.gamma - 1.0
    out = np.empty(rho.shape + (5, 5))
    # linearised primitive jump for a unit conservative jump e_c at the Roe state
    for c in range(5):
        du = np.zeros(5)
        du[c] = 1.0
        drho = np.full(rho.shape, du[0])
        dvel = (du[1:4] - vel * du[0]) / rho[..., None]
        dp = g1 * (du[4] - np.sum(vel * du[1:4], axis=-1) + 0.5 * np.sum(vel**2, axis=-1) * du[0])
        out[..., :, c] = _abs_a_times(rho, vel, H, a, n, drho, dvel, dp, entropy_fix)
    return out


def flux_hllc(wL, wR, n_hat, gas: GasModel = GasModel()):
    """HLLC with Roe-average based signal speeds (Batten et al.)."""
    wL = np.asarray(wL, dtype=float)
    wR = np.asarray(wR, dtype=float)
    n = np.asarray(n_hat, dtype=float)
    _check(wL)
    _check(wR)
    g = gas.gamma
    rhoL, velL, pL = wL[..., 0], wL[..., 1:4], wL[..., 4]
    rhoR, velR, pR = wR[..., 0], wR[..., 1:4], wR[..., 4]
    qL = np.sum(velL * n, axis=-1)
    qR = np.sum(velR * n, axis=-1)
    aL = sound_speed(wL, gas)
    aR = sound_speed(wR, gas)
    _, vel, _, a = _roe_average(wL, wR, gas)
    q = np.sum(vel * n, axis=-1)
    SL = np.minimum(qL - aL, q - a)
    SR = np.maximum(qR + aR, q + a)
    SM = (rhoR * qR * (SR - qR) - rhoL * qL * (SL - qL) + pL - pR) / (
        rhoR * (SR - qR) - rhoL * (SL - qL)
    )

    fL = directed_flux(wL, n, gas)
    fR = directed_flux(wR, n, gas)

    def star(rho, vel, p, qn, S):
        rhoE = p / (g - 1.0) + 0.5 * rho * np.sum(vel**2, axis=-1)
        pstar = rho * (qn - S) * (qn - SM) + p
        inv = 1.0 / (S - SM)
        u = np.empty(rho.shape + (5,))
        u[..., 0] = rho * (S - qn) * inv
        u[..., 1:4] = (
            (rho * (S - qn))[..., None] * vel + (pstar - p)[..., None] * n
        ) * inv[..., None]
        u[..., 4] = ((S - qn) * rhoE - p * qn + pstar * SM) * inv
        u0 = np.concatenate(
            [rho[..., None], rho[..., None] * vel, rhoE[..., None]], axis=-1
        )
        return u - u0

    with np.errstate(divide="ignore", invalid="ignore"):
        FsL = fL + SL[..., None] * star(rhoL, velL, pL, qL, SL)
        FsR = fR + SR[..., None] * star(rhoR, velR, pR, qR, SR)
    out = np.where((SM >= 0.0)[..., None], FsL, FsR)
    out = np.where((SL >= 0.0)[..., None], fL, out)
    out = np.where((SR <= 0.0)[..., None], fR, out)
    return out


def flux_ldfss(wL, wR, n_hat, gas: GasModel = GasModel()):
    """Baseline LDFSS of Edwards (1997), with equal interface Mach corrections."""
    wL = np.asarray(wL, dtype=float)
    wR = np.asarray(wR, dtype=float)
    n = np.asarray(n_hat, dtype=float)
    _check(wL)
    _check(wR)
    g = gas.gamma
    rhoL, velL, pL = wL[..., 0], wL[..., 1:4], wL[..., 4]
    rhoR, velR, pR = wR[..., 0], wR[..., 1:4], wR[..., 4]
    a_half = 0.5 * (sound_speed(wL, gas) + sound_speed(wR, gas))
    ML = np.sum(velL * n, axis=-1) / a_half
    MR = np.sum(velR * n, axis=-1) / a_half

    alpL = 0.5 * (1.0 + np.sign(ML))
    alpR = 0.5 * (1.0 - np.sign(MR))
    betL = -np.maximum(0.0, 1.0 - np.floor(np.abs(ML)))
    betR = -np.maximum(0.0, 1.0 - np.floor(np.abs(MR)))

    M_half = 0.25 * betL * betR * (np.sqrt(0.5 * (ML**2 + MR**2)) - 1.0) ** 2
    Cp = alpL * (1.0 + betL) * ML - betL * 0.25 * (ML + 1.0) ** 2 - M_half
    Cm = alpR * (1.0 + betR) * MR + betR * 0.25 * (MR - 1.0) ** 2 + M_half
    Dp = alpL * (1.0 + betL) - betL * 0.25 * (ML + 1.0) ** 2 * (2.0 - ML)
    Dm = alpR * (1.0 + betR) - betR * 0.25 * (MR - 1.0) ** 2 * (2.0 + MR)

    HL = g / (g - 1.0) * pL / rhoL + 0.5 * np.sum(velL**2, axis=-1)
    HR = g / (g - 1.0) * pR / rhoR + 0.5 * np.sum(velR**2, axis=-1)
    mL = a_half * rhoL * Cp
    mR = a_half * rhoR * Cm
    out = np.empty(np.broadcast_shapes(ML.shape) + (5,))
    out[..., 0] = mL + mR
    out[..., 1:4] = (
        mL[..., None] * velL + mR[..., None] * velR + (Dp * pL + Dm * pR)[..., None] * n
    )
    out[..., 4] = mL * HL + mR * HR
    return out


FLUXES = {"roe": flux_roe, "hllc": flux_hllc, "ldfss": flux_ldfss}


def get_flux(name: str):
    try:
        return FLUXES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown flux {name!r}; choose from {sorted(FLUXES)}") from None
