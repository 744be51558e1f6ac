"""Angles-only Gauss solver and a scalar-generic universal-variable
Lambert solver.

The Lambert routine accepts either float or Taylor-polynomial endpoint
positions.  With polynomial inputs the universal anomaly is first
converged on the constant parts, then a fixed sweep of full Newton
iterations propagates the expansion through the solution map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import algebra as ag
from .algebra import TaylorPoly, constant_poly
from .astro import (
    MU_EARTH,
    RadarGeometry,
    site_state,
    slant_range_rate,
    stumpff_c2c3,
    stumpff_derivs,
    unit_to_radec,
    vdot,
    vnorm,
)

__all__ = [
    "GaussSolution",
    "LambertSolution",
    "GaussError",
    "LambertError",
    "gauss_solve",
    "lambert_solve",
    "state_to_observables",
    "DEFAULT_RADIUS_BAND_KM",
]

# LEO-focused admissibility band for the Gauss middle geocentric radius.
DEFAULT_RADIUS_BAND_KM = (6528.0, 8378.0)


class GaussError(RuntimeError):
    """Gauss solver failure (singular geometry or no admissible root)."""


class LambertError(RuntimeError):
    """Lambert solver failure (degenerate geometry or non-convergence)."""


@dataclass(frozen=True)
class GaussSolution:
    """Slant ranges from the receiver at the three observation epochs."""

    rho1_km: float
    rho_m_km: float
    rho_N_km: float
    admissible_roots: tuple[float, ...]


@dataclass(frozen=True)
class LambertSolution:
    """Endpoint velocities; entries are floats or TaylorPoly."""

    v1: np.ndarray
    vN: np.ndarray
    z: object = field(repr=False, default=None)


def gauss_solve(
    times: tuple[float, float, float],
    los: tuple[np.ndarray, np.ndarray, np.ndarray],
    site_positions: tuple[np.ndarray, np.ndarray, np.ndarray],
    mu: float = MU_EARTH,
    radius_band_km: tuple[float, float] = DEFAULT_RADIUS_BAND_KM,
) -> GaussSolution:
    """Classical Gauss angles-only solution (no iterative refinement).

    Solves the 8th-degree polynomial for the middle geocentric radius and
    keeps the real positive roots inside the admissibility band; among
    those the root closest to the band midpoint is selected.
    """
    t1, t2, t3 = times
    if not (t1 < t2 < t3):
        raise GaussError("epochs must be strictly increasing")
    L1, L2, L3 = (np.asarray(u, dtype=float) for u in los)
    R1, R2, R3 = (np.asarray(r, dtype=float) for r in site_positions)
    tau1 = t1 - t2
    tau3 = t3 - t2
    tau = tau3 - tau1
    p1 = np.cross(L2, L3)
    p2 = np.cross(L1, L3)
    p3 = np.cross(L1, L2)
    d0 = float(np.dot(L1, p1))
    if abs(d0) < 1e-12:
        raise GaussError("singular geometry: lines of sight are coplanar-degenerate")
    D = np.array([[np.dot(R, p) for p in (p1, p2, p3)] for R in (R1, R2, R3)])
    A = (-D[0, 1] * tau3 / tau + D[1, 1] + D[2, 1] * tau1 / tau) / d0
    B = (
        D[0, 1] * (tau3**2 - tau**2) * tau3 / tau
        + D[2, 1] * (tau**2 - tau1**2) * tau1 / tau
    ) / (6.0 * d0)
    E = float(np.dot(R2, L2))
    R2sq = float(np.dot(R2, R2))
    ca = -(A * A + 2.0 * A * E + R2sq)
    cb = -2.0 * mu * B * (A + E)
    cc = -((mu * B) ** 2)
    roots = np.roots([1.0, 0.0, ca, 0.0, 0.0, cb, 0.0, 0.0, cc])
    real_pos = sorted(
        float(z.real)
        for z in roots
        if abs(z.imag) < 1e-6 * max(1.0, abs(z.real)) and z.real > 0.0
    )
    lo, hi = radius_band_km
    admissible = [r for r in real_pos if lo <= r <= hi]
    if not admissible:
        raise GaussError(
            f"no admissible root: candidates {real_pos} outside band [{lo}, {hi}] km"
        )
    mid = 0.5 * (lo + hi)
    r2 = min(admissible, key=lambda r: abs(r - mid))
    r2c = r2**3
    rho2 = A + mu * B / r2c
    rho1 = (
        (
            6.0 * (D[2, 0] * tau1 / tau3 + D[1, 0] * tau / tau3) * r2c
            + mu * D[2, 0] * (tau**2 - tau1**2) * tau1 / tau3
        )
        / (6.0 * r2c + mu * (tau**2 - tau3**2))
        - D[0, 0]
    ) / d0
    rho3 = (
        (
            6.0 * (D[0, 2] * tau3 / tau1 - D[1, 2] * tau / tau1) * r2c
            + mu * D[0, 2] * (tau**2 - tau3**2) * tau3 / tau1
        )
        / (6.0 * r2c + mu * (tau**2 - tau1**2))
        - D[2, 2]
    ) / d0
    if rho1 <= 0.0 or rho2 <= 0.0 or rho3 <= 0.0:
        raise GaussError(
            f"negative slant range from Gauss solution: ({rho1:.3f}, {rho2:.3f}, {rho3:.3f})"
        )
    return GaussSolution(rho1, rho2, rho3, tuple(real_pos))


# ---------------------------------------------------------------------------
# Lambert, universal variables, zero revolution
# ---------------------------------------------------------------------------


def _const_vec(r) -> np.ndarray:
    return np.array(
        [x.const if isinstance(x, TaylorPoly) else float(x) for x in r]
    )


def _tof_and_slope(z, r1n, r2n, A, smu):
    """Time-of-flight residual pieces F(z) (without the -smu*dt term) and
    dF/dz; scalar-generic."""
    c2, c3 = stumpff_c2c3(z)
    sc2 = ag.sqrt(c2)
    y = r1n + r2n + A * (z * c3 - 1.0) / sc2
    chi2 = y / c2
    chi = ag.sqrt(chi2)
    F = chi * chi2 * c3 + A * ag.sqrt(y)
    c2p, c3p = stumpff_derivs(z, c2, c3)
    yp = A * ((c3 + z * c3p) / sc2 - (z * c3 - 1.0) * c2p / (2.0 * c2 * sc2))
    chi3p = 1.5 * chi * (yp * c2 - y * c2p) / (c2 * c2)
    Fp = chi3p * c3 + chi * chi2 * c3p + A * yp / (2.0 * ag.sqrt(y))
    return F, Fp, y, c2, c3


def lambert_solve(
    r1,
    rN,
    dt: float,
    mu: float = MU_EARTH,
    direction: str = "prograde",
    normal_hint: np.ndarray | None = None,
    max_iter: int = 60,
) -> LambertSolution:
    """Zero-revolution Lambert solution between two position vectors.

    ``direction`` selects the orbital motion sense used to resolve the
    transfer-angle ambiguity; alternatively ``normal_hint`` gives an
    approximate orbit normal and the short/long way is chosen so the
    transfer plane matches it.  Scalar-generic: Taylor-polynomial inputs
    produce Taylor-polynomial velocities.
    """
    if dt <= 0:
        raise LambertError("time of flight must be positive")
    is_da = any(isinstance(x, TaylorPoly) for x in list(r1) + list(rN))
    r1c = _const_vec(r1)
    rNc = _const_vec(rN)
    n1c = float(np.linalg.norm(r1c))
    nNc = float(np.linalg.norm(rNc))
    cosd = float(np.dot(r1c, rNc)) / (n1c * nNc)
    cosd = max(-1.0, min(1.0, cosd))
    if 1.0 - abs(cosd) < 1e-8:
        raise LambertError("transfer angle at 0 or 180 degrees is singular")
    cr = np.cross(r1c, rNc)
    if normal_hint is not None:
        long_way = float(np.dot(cr, normal_hint)) < 0.0
    elif direction == "prograde":
        long_way = cr[2] < 0.0
    elif direction == "retrograde":
        long_way = cr[2] >= 0.0
    else:
        raise ValueError("direction must be 'prograde' or 'retrograde'")
    sign = -1.0 if long_way else 1.0
    smu = math.sqrt(mu)
    target = smu * dt

    # real-valued phase: Newton with bisection safeguard on z
    Ac = sign * math.sqrt(n1c * nNc * (1.0 + cosd))
    z_lo, z_hi = -4.0 * math.pi**2, 4.0 * math.pi**2
    z = 0.0
    converged = False
    for _ in range(max_iter):
        c2, c3 = stumpff_c2c3(z)
        y = n1c + nNc + Ac * (z * c3 - 1.0) / math.sqrt(c2)
        if y <= 0.0:
            z_lo = z
            z = 0.5 * (z_lo + z_hi)
            continue
        F, Fp, y, c2, c3 = _tof_and_slope(z, n1c, nNc, Ac, smu)
        res = F - target
        if res > 0.0:
            z_hi = z
        else:
            z_lo = z
        if abs(res) < 1e-10 * max(1.0, target):
            converged = True
            break
        step = res / Fp
        z_new = z - step
        if not (z_lo < z_new < z_hi):
            z_new = 0.5 * (z_lo + z_hi)
        if abs(z_new - z) < 1e-14 * max(1.0, abs(z)):
            z = z_new
            converged = True
            break
        z = z_new
    if not converged:
        raise LambertError("universal-variable iteration did not converge")

    if not is_da:
        c2, c3 = stumpff_c2c3(z)
        y = n1c + nNc + Ac * (z * c3 - 1.0) / math.sqrt(c2)
        return _lambert_velocities(r1, rN, n1c, nNc, Ac, y, dt, mu, z)

    # polynomial phase: fixed Newton sweep in the full algebra
    n1 = vnorm(r1)
    nN = vnorm(rN)
    cosd_da = vdot(r1, rN) / (n1 * nN)
    A = sign * ag.sqrt(n1 * nN * (1.0 + cosd_da))
    k = next(x for x in list(r1) + list(rN) if isinstance(x, TaylorPoly)).order
    zp = z
    sweeps = max(2, math.ceil(math.log2(k)) + 1)
    for _ in range(sweeps):
        F, Fp, y, c2, c3 = _tof_and_slope(zp, n1, nN, A, smu)
        zp = zp - (F - target) / Fp
    _, _, y, c2, c3 = _tof_and_slope(zp, n1, nN, A, smu)
    return _lambert_velocities(r1, rN, n1, nN, A, y, dt, mu, zp)


def _lambert_velocities(r1, rN, n1, nN, A, y, dt, mu, z) -> LambertSolution:
    f = 1.0 - y / n1
    g = A * ag.sqrt(y / mu)
    gdot = 1.0 - y / nN
    inv_g = 1.0 / g if not isinstance(g, TaylorPoly) else g.reciprocal()
    v1 = (rN - r1 * f) * inv_g
    vN = (rN * gdot - r1) * inv_g
    return LambertSolution(v1=v1, vN=vN, z=z)


def state_to_observables(r, v, geom: RadarGeometry, t: float):
    """Predicted (alpha_deg, delta_deg, range_rate_km_s) from a state.

    Scalar-generic; angles are the inertial LOS direction seen from the
    receiver, the range rate is the bistatic one.
    """
    rs, _ = site_state(geom.receiver, t, geom)
    los = r - rs
    alpha, delta = unit_to_radec(los)
    _, ddot = slant_range_rate(r, v, geom, t)
    return alpha, delta, ddot
