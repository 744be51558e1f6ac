"""Astrodynamics substrate: sites, frames, two-body propagation, elements.

All angle interfaces are in degrees; internals use radians.  Epochs are
plain floats, seconds past the geometry reference epoch.  Functions whose
docstring says "scalar-generic" accept either floats/ndarrays or
:class:`~dopiod.algebra.TaylorPoly` values, so Taylor expansions flow
through unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import algebra as ag
from .algebra import TaylorPoly

__all__ = [
    "MU_EARTH",
    "R_EARTH",
    "OMEGA_EARTH",
    "Site",
    "RadarGeometry",
    "ReducedElements",
    "site_state",
    "azel_to_radec",
    "radec_to_azel",
    "radec_to_unit",
    "unit_to_radec",
    "azel_to_unit_eci",
    "unit_eci_to_azel",
    "taos_frame",
    "los_to_taos_angles",
    "taos_angles_to_los",
    "kepler_propagate",
    "stumpff_c2c3",
    "stumpff_derivs",
    "cart_to_reduced_elements",
    "reduced_elements_to_cart",
    "classical_to_cart",
    "slant_range_rate",
    "wrap_deg",
    "angle_diff_deg",
]

MU_EARTH = 398600.4418  # km^3/s^2
R_EARTH = 6378.137  # km, equatorial
WGS84_F = 1.0 / 298.257223563
OMEGA_EARTH = 7.2921158553e-5  # rad/s


def wrap_deg(x, period: float = 360.0):
    """Wrap angle(s) in degrees to [0, period)."""
    return np.mod(x, period)


def angle_diff_deg(a, b):
    """Shortest signed angular difference a - b in degrees, in (-180, 180]."""
    d = np.mod(np.asarray(a) - np.asarray(b) + 180.0, 360.0) - 180.0
    return d


# ---------------------------------------------------------------------------
# generic 3-vector helpers (float arrays or object arrays of TaylorPoly)
# ---------------------------------------------------------------------------


def vdot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vcross(a, b):
    c0 = a[1] * b[2] - a[2] * b[1]
    c1 = a[2] * b[0] - a[0] * b[2]
    c2 = a[0] * b[1] - a[1] * b[0]
    if isinstance(c0, TaylorPoly):
        return np.array([c0, c1, c2], dtype=object)
    return np.array([c0, c1, c2], dtype=float)


def vnorm(a):
    return ag.sqrt(vdot(a, a))


def vector(x, y, z):
    if isinstance(x, TaylorPoly) or isinstance(y, TaylorPoly) or isinstance(z, TaylorPoly):
        return np.array([x, y, z], dtype=object)
    return np.array([float(x), float(y), float(z)])


# ---------------------------------------------------------------------------
# sites and Earth rotation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Site:
    """Ground site in geodetic coordinates."""

    lat_deg: float
    lon_deg: float
    alt_km: float = 0.0

    def __post_init__(self):
        if abs(self.lat_deg) > 90.0:
            raise ValueError("latitude out of range")

    def ecef(self, spherical: bool = False) -> np.ndarray:
        """Earth-fixed position, WGS84 ellipsoid by default."""
        lat = math.radians(self.lat_deg)
        lon = math.radians(self.lon_deg)
        if spherical:
            r = R_EARTH + self.alt_km
            return np.array(
                [
                    r * math.cos(lat) * math.cos(lon),
                    r * math.cos(lat) * math.sin(lon),
                    r * math.sin(lat),
                ]
            )
        e2 = WGS84_F * (2.0 - WGS84_F)
        n = R_EARTH / math.sqrt(1.0 - e2 * math.sin(lat) ** 2)
        rho = (n + self.alt_km) * math.cos(lat)
        return np.array(
            [
                rho * math.cos(lon),
                rho * math.sin(lon),
                (n * (1.0 - e2) + self.alt_km) * math.sin(lat),
            ]
        )

    def enu_basis(self) -> np.ndarray:
        """Rows: east, north, up unit vectors in the Earth-fixed frame."""
        lat = math.radians(self.lat_deg)
        lon = math.radians(self.lon_deg)
        east = np.array([-math.sin(lon), math.cos(lon), 0.0])
        north = np.array(
            [
                -math.sin(lat) * math.cos(lon),
                -math.sin(lat) * math.sin(lon),
                math.cos(lat),
            ]
        )
        up = np.array(
            [
                math.cos(lat) * math.cos(lon),
                math.cos(lat) * math.sin(lon),
                math.sin(lat),
            ]
        )
        return np.stack([east, north, up])


@dataclass(frozen=True)
class RadarGeometry:
    """Bistatic receiver/transmitter pair under uniform Earth rotation."""

    receiver: Site
    transmitter: Site
    rotation_rate: float = OMEGA_EARTH
    ref_sidereal_rad: float = 0.0
    spherical: bool = False
    mu: float = MU_EARTH

    def __post_init__(self):
        if self.rotation_rate <= 0:
            raise ValueError("rotation rate must be positive")

    def sidereal_angle(self, t: float) -> float:
        return self.ref_sidereal_rad + self.rotation_rate * t

    def to_dict(self) -> dict:
        return {
            "receiver": vars(self.receiver).copy(),
            "transmitter": vars(self.transmitter).copy(),
            "rotation_rate_rad_s": self.rotation_rate,
            "ref_sidereal_rad": self.ref_sidereal_rad,
            "spherical": self.spherical,
            "mu_km3_s2": self.mu,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RadarGeometry":
        return cls(
            receiver=Site(**d["receiver"]),
            transmitter=Site(**d["transmitter"]),
            rotation_rate=d.get("rotation_rate_rad_s", OMEGA_EARTH),
            ref_sidereal_rad=d.get("ref_sidereal_rad", 0.0),
            spherical=d.get("spherical", False),
            mu=d.get("mu_km3_s2", MU_EARTH),
        )


def _rot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def site_state(site: Site, t: float, geom: RadarGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Inertial position/velocity of a co-rotating ground site."""
    r_ecef = site.ecef(geom.spherical)
    rz = _rot_z(geom.sidereal_angle(t))
    r = rz @ r_ecef
    omega = np.array([0.0, 0.0, geom.rotation_rate])
    v = np.cross(omega, r)
    return r, v


# ---------------------------------------------------------------------------
# line-of-sight conversions
# ---------------------------------------------------------------------------


def radec_to_unit(alpha_deg, delta_deg):
    """Unit inertial vector from right ascension / declination (scalar-generic)."""
    a = _to_rad(alpha_deg)
    d = _to_rad(delta_deg)
    cd = ag.cos(d)
    return vector(cd * ag.cos(a), cd * ag.sin(a), ag.sin(d))


def unit_to_radec(u):
    """Right ascension / declination in degrees from a unit vector (scalar-generic)."""
    alpha = ag.atan2(u[1], u[0])
    delta = ag.atan2(u[2], ag.sqrt(u[0] * u[0] + u[1] * u[1]))
    return _to_deg(alpha), _to_deg(delta)


def _to_rad(x):
    return x * (math.pi / 180.0)


def _to_deg(x):
    return x * (180.0 / math.pi)


def azel_to_unit_eci(az_deg, el_deg, site: Site, t: float, geom: RadarGeometry):
    """Unit LOS in the inertial frame from azimuth (clockwise from North)
    and elevation.  Accepts scalars or numpy arrays."""
    a = np.radians(az_deg)
    e = np.radians(el_deg)
    enu = np.stack(
        [np.cos(e) * np.sin(a), np.cos(e) * np.cos(a), np.sin(e) * np.ones_like(a)]
    )
    basis = site.enu_basis()  # rows e, n, u
    ecef = basis.T @ enu
    rz = _rot_z(geom.sidereal_angle(t))
    return rz @ ecef


def unit_eci_to_azel(u, site: Site, t: float, geom: RadarGeometry):
    """Inverse of :func:`azel_to_unit_eci`; returns degrees."""
    rz = _rot_z(geom.sidereal_angle(t))
    ecef = rz.T @ np.asarray(u, dtype=float)
    e, n, up = site.enu_basis() @ ecef
    az = np.degrees(np.arctan2(e, n))
    el = np.degrees(np.arcsin(np.clip(up, -1.0, 1.0)))
    return wrap_deg(az), el


def azel_to_radec(az_deg, el_deg, site: Site, t: float, geom: RadarGeometry):
    """Topocentric right ascension / declination of the LOS, degrees."""
    u = azel_to_unit_eci(az_deg, el_deg, site, t, geom)
    alpha = np.degrees(np.arctan2(u[1], u[0]))
    delta = np.degrees(np.arctan2(u[2], np.hypot(u[0], u[1])))
    return wrap_deg(alpha), delta


def radec_to_azel(alpha_deg, delta_deg, site: Site, t: float, geom: RadarGeometry):
    a = np.radians(alpha_deg)
    d = np.radians(delta_deg)
    u = np.stack([np.cos(d) * np.cos(a), np.cos(d) * np.sin(a), np.sin(d) * np.ones_like(a)])
    return unit_eci_to_azel(u, site, t, geom)


# ---------------------------------------------------------------------------
# tAOS frame (plane of first/last line of sight)
# ---------------------------------------------------------------------------


def taos_frame(los_first: np.ndarray, los_last: np.ndarray) -> np.ndarray:
    """Orthonormal triad (rows x, y, z): x along the first LOS, z normal to
    the plane spanned by first and last LOS."""
    x = np.asarray(los_first, dtype=float)
    x = x / np.linalg.norm(x)
    last = np.asarray(los_last, dtype=float)
    z = np.cross(x, last)
    nz = np.linalg.norm(z)
    if nz < 1e-6 * np.linalg.norm(last):
        raise ValueError("first and last LOS are (nearly) parallel")
    z = z / nz
    y = np.cross(z, x)
    return np.stack([x, y, z])


def los_to_taos_angles(los, frame: np.ndarray):
    """In-plane angle and out-of-plane elevation (degrees) of a unit LOS."""
    u = frame @ np.asarray(los, dtype=float)
    lam = np.degrees(np.arctan2(u[1], u[0]))
    gam = np.degrees(np.arcsin(np.clip(u[2], -1.0, 1.0)))
    return lam, gam


def taos_angles_to_los(lam_deg, gam_deg, frame: np.ndarray):
    lam = np.radians(lam_deg)
    gam = np.radians(gam_deg)
    u = np.stack(
        [np.cos(gam) * np.cos(lam), np.cos(gam) * np.sin(lam), np.sin(gam) * np.ones_like(lam)]
    )
    return frame.T @ u


# ---------------------------------------------------------------------------
# Stumpff functions (scalar-generic)
# ---------------------------------------------------------------------------

_SERIES_TERMS = 9


def _const_of(z) -> float:
    return z.const if isinstance(z, TaylorPoly) else float(z)


def stumpff_c2c3(z):
    """Stumpff C2(z), C3(z); scalar-generic, branch chosen on the value
    (constant part) of z with a Maclaurin series near zero."""
    z0 = _const_of(z)
    if z0 > 1e-4:
        s = ag.sqrt(z)
        c2 = (1.0 - ag.cos(s)) / z
        c3 = (s - ag.sin(s)) / (z * s)
    elif z0 < -1e-4:
        s = ag.sqrt(-z)
        c2 = (ag.cosh(s) - 1.0) / (-z)
        c3 = (ag.sinh(s) - s) / (-z * s)
    else:
        c2, c3 = 0.0, 0.0
        for i in range(_SERIES_TERMS - 1, -1, -1):
            c2 = 1.0 / math.factorial(2 * i + 2) - z * c2
            c3 = 1.0 / math.factorial(2 * i + 3) - z * c3
    return c2, c3


def stumpff_derivs(z, c2, c3):
    """dC2/dz and dC3/dz; closed form away from zero, series otherwise."""
    z0 = _const_of(z)
    if abs(z0) > 1e-4:
        c2p = (1.0 - z * c3 - 2.0 * c2) / (2.0 * z)
        c3p = (c2 - 3.0 * c3) / (2.0 * z)
    else:
        c2p, c3p = 0.0, 0.0
        for i in range(_SERIES_TERMS - 1, 0, -1):
            c2p = -i / math.factorial(2 * i + 2) - z * c2p
            c3p = -i / math.factorial(2 * i + 3) - z * c3p
        c2p, c3p = -c2p, -c3p
    return c2p, c3p


# ---------------------------------------------------------------------------
# two-body propagation (universal variables, real-valued)
# ---------------------------------------------------------------------------


def kepler_propagate(
    r0: np.ndarray, v0: np.ndarray, dt: float, mu: float = MU_EARTH
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate a Cartesian state by dt seconds under two-body dynamics."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    r0 = np.asarray(r0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if dt == 0.0:
        return r0.copy(), v0.copy()
    rn0 = float(np.linalg.norm(r0))
    vr0 = float(np.dot(r0, v0)) / rn0
    alpha = 2.0 / rn0 - float(np.dot(v0, v0)) / mu
    smu = math.sqrt(mu)
    if abs(alpha) > 1e-12:
        chi = smu * abs(alpha) * dt
    else:
        chi = smu * dt / rn0
    for _ in range(50):
        z = alpha * chi * chi
        c2, c3 = stumpff_c2c3(z)
        f = (
            rn0 * vr0 / smu * chi * chi * c2
            + (1.0 - alpha * rn0) * chi**3 * c3
            + rn0 * chi
            - smu * dt
        )
        fp = (
            rn0 * vr0 / smu * chi * (1.0 - z * c3)
            + (1.0 - alpha * rn0) * chi * chi * c2
            + rn0
        )
        dchi = f / fp
        chi -= dchi
        if abs(dchi) < 1e-10 * max(1.0, abs(chi)):
            break
    else:
        raise RuntimeError("universal Kepler iteration did not converge")
    z = alpha * chi * chi
    c2, c3 = stumpff_c2c3(z)
    fl = 1.0 - chi * chi * c2 / rn0
    g = dt - chi**3 * c3 / smu
    r = fl * r0 + g * v0
    rn = float(np.linalg.norm(r))
    fdot = smu / (rn * rn0) * chi * (z * c3 - 1.0)
    gdot = 1.0 - chi * chi * c2 / rn
    v = fdot * r0 + gdot * v0
    return r, v


# ---------------------------------------------------------------------------
# orbital elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedElements:
    """Semi-major axis, eccentricity, inclination, RAAN and argument of
    latitude; the perigee-free element set for near-circular orbits."""

    a_km: float
    e: float
    i_deg: float
    raan_deg: float
    u_deg: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a_km, self.e, self.i_deg, self.raan_deg, self.u_deg])

    @staticmethod
    def names() -> tuple[str, ...]:
        return ("a_km", "e", "i_deg", "raan_deg", "u_deg")


def cart_to_reduced_elements(r, v, mu: float = MU_EARTH):
    """Reduced elements from a Cartesian state (scalar-generic).

    Returns a 5-tuple (a, e, i, raan, u) with angles in degrees; floats are
    wrapped to their canonical ranges.  Equatorial orbits use raan := 0.
    """
    rn = vnorm(r)
    v2 = vdot(v, v)
    h = vcross(r, v)
    hn = vnorm(h)
    if _const_of(hn) <= 1e-9:
        raise ValueError("rectilinear orbit: angular momentum is zero")
    a = 1.0 / (2.0 / rn - v2 / mu)
    evec = (vcross(v, h) * (1.0 / mu)) - r * (1.0 / rn)
    e2 = vdot(evec, evec)
    if isinstance(e2, TaylorPoly):
        e = ag.sqrt(e2) if e2.const > 0 else e2 * 0.0
    else:
        e = math.sqrt(max(e2, 0.0))
    i = ag.acos(h[2] / hn)
    hx, hy = h[0], h[1]
    node_norm2 = hx * hx + hy * hy
    if _const_of(node_norm2) < 1e-18 * _const_of(hn) ** 2:
        # equatorial: node undefined, use the x axis by convention
        raan = 0.0 if not isinstance(hx, TaylorPoly) else hx * 0.0
        nhat = vector(1.0, 0.0, 0.0)
    else:
        raan = ag.atan2(hx, -hy)
        nn = ag.sqrt(node_norm2)
        nhat = vector(-hy / nn, hx / nn, 0.0 * hx if isinstance(hx, TaylorPoly) else 0.0)
    mhat = vcross(h * (1.0 / hn), nhat)
    u = ag.atan2(vdot(r, mhat), vdot(r, nhat))
    i_deg, raan_deg, u_deg = _to_deg(i), _to_deg(raan), _to_deg(u)
    if not isinstance(u_deg, TaylorPoly):
        raan_deg = float(wrap_deg(raan_deg))
        u_deg = float(wrap_deg(u_deg))
        return float(a), float(e), float(i_deg), raan_deg, u_deg
    return a, e, i_deg, raan_deg, u_deg


def classical_to_cart(
    a_km: float,
    e: float,
    i_deg: float,
    raan_deg: float,
    argp_deg: float,
    nu_deg: float,
    mu: float = MU_EARTH,
) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian state from classical Keplerian elements (true anomaly)."""
    if a_km <= 0:
        raise ValueError("only elliptic orbits supported (a > 0)")
    i = math.radians(i_deg)
    raan = math.radians(raan_deg)
    argp = math.radians(argp_deg)
    nu = math.radians(nu_deg)
    p = a_km * (1.0 - e * e)
    rn = p / (1.0 + e * math.cos(nu))
    r_pqw = np.array([rn * math.cos(nu), rn * math.sin(nu), 0.0])
    smup = math.sqrt(mu / p)
    v_pqw = np.array([-smup * math.sin(nu), smup * (e + math.cos(nu)), 0.0])
    cr, sr = math.cos(raan), math.sin(raan)
    ci, si = math.cos(i), math.sin(i)
    cw, sw = math.cos(argp), math.sin(argp)
    rot = np.array(
        [
            [cr * cw - sr * sw * ci, -cr * sw - sr * cw * ci, sr * si],
            [sr * cw + cr * sw * ci, -sr * sw + cr * cw * ci, -cr * si],
            [sw * si, cw * si, ci],
        ]
    )
    return rot @ r_pqw, rot @ v_pqw


def reduced_elements_to_cart(
    el: ReducedElements, mu: float = MU_EARTH
) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`cart_to_reduced_elements` under the convention that
    perigee sits at the ascending node (argument of perigee zero)."""
    return classical_to_cart(el.a_km, el.e, el.i_deg, el.raan_deg, 0.0, el.u_deg, mu)


# ---------------------------------------------------------------------------
# bistatic slant range and range rate
# ---------------------------------------------------------------------------


def slant_range_rate(r, v, geom: RadarGeometry, t: float):
    """Bistatic slant range d and its rate (scalar-generic in the state).

    d is the sum of the receiver and transmitter distances; its rate sums
    the projections of the relative velocities on each leg's unit LOS.
    """
    d = 0.0
    ddot = 0.0
    for site in (geom.receiver, geom.transmitter):
        rs, vs = site_state(site, t, geom)
        rel = r - rs
        leg = vnorm(rel)
        if _const_of(leg) < 1e-6:
            raise ValueError("object coincides with a radar site")
        d = d + leg
        ddot = ddot + vdot(rel, v - vs) / leg
    return d, ddot


def state_elevation_deg(r: np.ndarray, site: Site, t: float, geom: RadarGeometry) -> float:
    """Elevation of an object above a site's horizon, degrees."""
    rs, _ = site_state(site, t, geom)
    los = np.asarray(r, dtype=float) - rs
    az, el = unit_eci_to_azel(los / np.linalg.norm(los), site, t, geom)
    return float(el)
