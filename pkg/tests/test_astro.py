import math

import numpy as np
import pytest

from dopiod.astro import (
    MU_EARTH,
    R_EARTH,
    RadarGeometry,
    ReducedElements,
    Site,
    azel_to_radec,
    azel_to_unit_eci,
    cart_to_reduced_elements,
    classical_to_cart,
    kepler_propagate,
    los_to_taos_angles,
    radec_to_azel,
    radec_to_unit,
    reduced_elements_to_cart,
    site_state,
    slant_range_rate,
    taos_angles_to_los,
    taos_frame,
    unit_to_radec,
)


def make_geom(spherical=False, **kw):
    return RadarGeometry(
        receiver=Site(lat_deg=kw.get("lat", 45.0), lon_deg=kw.get("lon", 7.0), alt_km=0.2),
        transmitter=Site(lat_deg=44.0, lon_deg=5.0, alt_km=0.1),
        spherical=spherical,
    )


def test_site_state_equatorial_reference():
    geom = RadarGeometry(
        receiver=Site(0.0, 0.0, 0.0), transmitter=Site(0.0, 10.0, 0.0), spherical=True
    )
    r, v = site_state(geom.receiver, 0.0, geom)
    assert np.allclose(r, [R_EARTH, 0.0, 0.0], atol=1e-9)
    assert np.isclose(r[2], 0.0)


def test_site_state_pole_is_static():
    geom = RadarGeometry(
        receiver=Site(90.0, 0.0, 0.0), transmitter=Site(0.0, 0.0, 0.0), spherical=True
    )
    _, v = site_state(geom.receiver, 123.0, geom)
    assert np.linalg.norm(v) < 1e-12


def test_site_state_norm_constant_over_time():
    geom = make_geom()
    r0 = np.linalg.norm(site_state(geom.receiver, 0.0, geom)[0])
    for t in np.linspace(0, 86400, 17):
        assert abs(np.linalg.norm(site_state(geom.receiver, t, geom)[0]) - r0) < 1e-9


def test_zenith_declination_spherical():
    geom = make_geom(spherical=True)
    _, dec = azel_to_radec(123.0, 90.0, geom.receiver, 0.0, geom)
    assert np.isclose(dec, geom.receiver.lat_deg, atol=1e-9)


def test_azel_radec_round_trip():
    geom = make_geom()
    rng = np.random.default_rng(2)
    for _ in range(50):
        az, el = rng.uniform(0, 360), rng.uniform(5, 89)
        t = rng.uniform(0, 5000)
        a, d = azel_to_radec(az, el, geom.receiver, t, geom)
        az2, el2 = radec_to_azel(a, d, geom.receiver, t, geom)
        assert abs((az2 - az + 180) % 360 - 180) < 1e-10
        assert abs(el2 - el) < 1e-10


def test_azel_to_eci_matches_rotation_oracle():
    geom = make_geom()
    rng = np.random.default_rng(3)
    basis = geom.receiver.enu_basis()
    for _ in range(200):
        az, el = rng.uniform(0, 360), rng.uniform(0, 90)
        t = rng.uniform(0, 20000)
        azr, elr = math.radians(az), math.radians(el)
        enu = np.array(
            [math.cos(elr) * math.sin(azr), math.cos(elr) * math.cos(azr), math.sin(elr)]
        )
        ecef = basis.T @ enu
        th = geom.sidereal_angle(t)
        rot = np.array(
            [
                [math.cos(th), -math.sin(th), 0.0],
                [math.sin(th), math.cos(th), 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        assert np.allclose(azel_to_unit_eci(az, el, geom.receiver, t, geom), rot @ ecef, atol=1e-12)


def test_radec_unit_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, d = rng.uniform(0, 360), rng.uniform(-89, 89)
        a2, d2 = unit_to_radec(radec_to_unit(a, d))
        assert abs((a2 - a + 180) % 360 - 180) < 1e-12
        assert abs(d2 - d) < 1e-12


def test_taos_frame_simple():
    f = taos_frame(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert np.allclose(f[2], [0, 0, 1])
    assert np.allclose(f @ f.T, np.eye(3), atol=1e-14)


def test_taos_last_los_in_plane():
    rng = np.random.default_rng(5)
    for _ in range(20):
        u1 = rng.normal(size=3)
        u1 /= np.linalg.norm(u1)
        u2 = rng.normal(size=3)
        u2 /= np.linalg.norm(u2)
        if abs(u1 @ u2) > 0.99:
            continue
        f = taos_frame(u1, u2)
        lam, gam = los_to_taos_angles(u2, f)
        sep = math.degrees(math.acos(np.clip(u1 @ u2, -1, 1)))
        assert abs(abs(lam) - sep) < 1e-9
        assert abs(gam) < 1e-9
        lam0, gam0 = los_to_taos_angles(u1, f)
        assert abs(lam0) < 1e-9 and abs(gam0) < 1e-9


def test_taos_angle_round_trip():
    rng = np.random.default_rng(6)
    f = taos_frame(np.array([1.0, 0, 0]), np.array([0.5, 0.8, 0.0]) / np.linalg.norm([0.5, 0.8, 0.0]))
    for _ in range(50):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        lam, gam = los_to_taos_angles(u, f)
        u2 = taos_angles_to_los(lam, gam, f)
        assert np.allclose(u, u2, atol=1e-12)


def test_kepler_periodicity():
    r0 = np.array([7000.0, 0.0, 0.0])
    v0 = np.array([0.0, math.sqrt(MU_EARTH / 7000.0), 0.0])
    T = 2 * math.pi * math.sqrt(7000.0**3 / MU_EARTH)
    r, v = kepler_propagate(r0, v0, T, MU_EARTH)
    assert np.allclose(r, r0, atol=1e-8)
    assert np.allclose(v, v0, atol=1e-10)


def test_kepler_dt_zero_identity():
    r0 = np.array([6800.0, 500.0, 200.0])
    v0 = np.array([0.1, 7.5, 0.5])
    r, v = kepler_propagate(r0, v0, 0.0, MU_EARTH)
    assert np.allclose(r, r0) and np.allclose(v, v0)


def test_kepler_energy_conservation():
    rng = np.random.default_rng(8)
    for _ in range(100):
        r0, v0 = classical_to_cart(
            rng.uniform(6700, 8000),
            rng.uniform(0, 0.05),
            rng.uniform(0, 180),
            rng.uniform(0, 360),
            rng.uniform(0, 360),
            rng.uniform(0, 360),
        )
        E0 = 0.5 * v0 @ v0 - MU_EARTH / np.linalg.norm(r0)
        r, v = kepler_propagate(r0, v0, rng.uniform(10, 4000), MU_EARTH)
        E = 0.5 * v @ v - MU_EARTH / np.linalg.norm(r)
        assert abs(E - E0) <= 1e-10 * abs(E0)


def test_elements_circular_equatorial():
    r = np.array([7000.0, 0.0, 0.0])
    v = np.array([0.0, math.sqrt(MU_EARTH / 7000.0), 0.0])
    a, e, i, raan, u = cart_to_reduced_elements(r, v)
    assert np.isclose(a, 7000.0)
    assert e < 1e-12
    assert np.isclose(i, 0.0)


def test_elements_polar_inclination():
    r = np.array([7000.0, 0.0, 0.0])
    v = np.array([0.0, 0.0, math.sqrt(MU_EARTH / 7000.0)])
    _, _, i, _, _ = cart_to_reduced_elements(r, v)
    assert np.isclose(i, 90.0)


def test_elements_round_trip_population():
    rng = np.random.default_rng(9)
    for _ in range(500):
        el = ReducedElements(
            a_km=rng.uniform(6700, 8000),
            e=rng.uniform(1e-4, 0.05),
            i_deg=rng.uniform(1, 179),
            raan_deg=rng.uniform(0, 360),
            u_deg=rng.uniform(0, 360),
        )
        r, v = reduced_elements_to_cart(el)
        a, e, i, raan, u = cart_to_reduced_elements(r, v)
        assert abs(a - el.a_km) < 1e-6
        assert abs(e - el.e) < 1e-9
        assert abs(i - el.i_deg) < 1e-9
        assert abs((raan - el.raan_deg + 180) % 360 - 180) < 1e-8
        assert abs((u - el.u_deg + 180) % 360 - 180) < 1e-7


def test_slant_range_monostatic_degenerate():
    site = Site(30.0, 10.0, 0.0)
    geom = RadarGeometry(receiver=site, transmitter=site)
    r = np.array([7000.0, 1000.0, 2000.0])
    v = np.array([1.0, 7.0, 0.5])
    rs, vs = site_state(site, 0.0, geom)
    d, dd = slant_range_rate(r, v, geom, 0.0)
    assert np.isclose(d, 2 * np.linalg.norm(r - rs))
    u = (r - rs) / np.linalg.norm(r - rs)
    assert np.isclose(dd, 2 * u @ (v - vs))


def test_corotating_point_zero_range_rate():
    geom = make_geom()
    rs, vs = site_state(geom.receiver, 0.0, geom)
    # a fictitious object glued to the rotating Earth 400 km above the site
    scale = (np.linalg.norm(rs) + 400.0) / np.linalg.norm(rs)
    _, dd = slant_range_rate(rs * scale, vs * scale, geom, 0.0)
    assert abs(dd) < 1e-9


def test_range_rate_matches_finite_difference():
    geom = make_geom()
    rng = np.random.default_rng(10)
    for _ in range(20):
        r0, v0 = classical_to_cart(
            rng.uniform(6800, 7500), 0.01, 70.0, rng.uniform(0, 360), 0.0, rng.uniform(0, 360)
        )
        t, h = 50.0, 1e-3
        rm, vm = kepler_propagate(r0, v0, t - h, MU_EARTH)
        rp, vp = kepler_propagate(r0, v0, t + h, MU_EARTH)
        rc, vc = kepler_propagate(r0, v0, t, MU_EARTH)
        dm, _ = slant_range_rate(rm, vm, geom, t - h)
        dp, _ = slant_range_rate(rp, vp, geom, t + h)
        _, dd = slant_range_rate(rc, vc, geom, t)
        assert abs((dp - dm) / (2 * h) - dd) < 1e-7


def test_geometry_serialization_round_trip():
    geom = make_geom()
    geom2 = RadarGeometry.from_dict(geom.to_dict())
    assert geom2.receiver == geom.receiver
    assert geom2.transmitter == geom.transmitter
    assert geom2.mu == geom.mu


def test_site_validation():
    with pytest.raises(ValueError):
        Site(lat_deg=100.0, lon_deg=0.0)
