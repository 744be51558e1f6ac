import math

import numpy as np
import pytest

from dopiod.algebra import make_variable
from dopiod.astro import (
    MU_EARTH,
    RadarGeometry,
    Site,
    azel_to_radec,
    classical_to_cart,
    kepler_propagate,
    radec_to_unit,
    site_state,
    slant_range_rate,
)
from dopiod.solvers import (
    GaussError,
    LambertError,
    gauss_solve,
    lambert_solve,
    state_to_observables,
)


def make_geom():
    return RadarGeometry(
        receiver=Site(lat_deg=45.0, lon_deg=7.0, alt_km=0.2),
        transmitter=Site(lat_deg=44.0, lon_deg=5.0, alt_km=0.1),
    )


def synth_los(geom, r0, v0, times):
    los, sites = [], []
    for t in times:
        r, _ = kepler_propagate(r0, v0, t, MU_EARTH)
        rs, _ = site_state(geom.receiver, t, geom)
        u = (r - rs) / np.linalg.norm(r - rs)
        los.append(u)
        sites.append(rs)
    return tuple(los), tuple(sites)


def test_gauss_recovers_circular_orbit_ranges():
    geom = make_geom()
    r0, v0 = classical_to_cart(7000.0, 0.0, 60.0, 100.0, 0.0, 48.0)
    T = 2 * math.pi * math.sqrt(7000.0**3 / MU_EARTH)
    times = (0.0, 0.01 * T, 0.02 * T)
    los, sites = synth_los(geom, r0, v0, times)
    sol = gauss_solve(times, los, sites)
    ranges = (sol.rho1_km, sol.rho_m_km, sol.rho_N_km)
    for t, rho, rs in zip(times, ranges, sites):
        r, _ = kepler_propagate(r0, v0, t, MU_EARTH)
        true_rho = np.linalg.norm(r - rs)
        assert abs(rho - true_rho) / true_rho < 0.01


def test_gauss_identical_los_is_singular():
    geom = make_geom()
    u = np.array([0.3, 0.4, np.sqrt(1 - 0.25)])
    rs, _ = site_state(geom.receiver, 0.0, geom)
    with pytest.raises(GaussError):
        gauss_solve((0.0, 10.0, 20.0), (u, u, u), (rs, rs, rs))


def test_gauss_no_admissible_root():
    geom = make_geom()
    r0, v0 = classical_to_cart(7000.0, 0.0, 60.0, 100.0, 0.0, 48.0)
    T = 2 * math.pi * math.sqrt(7000.0**3 / MU_EARTH)
    times = (0.0, 0.01 * T, 0.02 * T)
    los, sites = synth_los(geom, r0, v0, times)
    with pytest.raises(GaussError):
        gauss_solve(times, los, sites, radius_band_km=(40000.0, 50000.0))


def test_lambert_circular_quarter_period():
    T = 2 * math.pi * math.sqrt(7000.0**3 / MU_EARTH)
    vc = math.sqrt(MU_EARTH / 7000.0)
    r1 = np.array([7000.0, 0.0, 0.0])
    rN = np.array([0.0, 7000.0, 0.0])
    sol = lambert_solve(r1, rN, T / 4)
    assert np.isclose(np.linalg.norm(sol.v1), vc, rtol=1e-9)
    assert abs(np.dot(sol.v1, r1)) < 1e-6


def test_lambert_consistency_with_propagation():
    rng = np.random.default_rng(14)
    for _ in range(100):
        a = rng.uniform(6700, 7800)
        r0, v0 = classical_to_cart(
            a, rng.uniform(0, 0.02), rng.uniform(5, 175),
            rng.uniform(0, 360), rng.uniform(0, 360), rng.uniform(0, 360),
        )
        T = 2 * math.pi * math.sqrt(a**3 / MU_EARTH)
        dt = rng.uniform(5 / 360, 170 / 360) * T
        rN, vN = kepler_propagate(r0, v0, dt, MU_EARTH)
        h = np.cross(r0, v0)
        sol = lambert_solve(r0, rN, dt, normal_hint=h)
        assert np.linalg.norm(sol.v1 - v0) <= 1e-9 * np.linalg.norm(v0)
        assert np.linalg.norm(sol.vN - vN) <= 1e-9 * np.linalg.norm(vN)


def test_lambert_rejects_nonpositive_dt():
    r = np.array([7000.0, 0.0, 0.0])
    with pytest.raises(LambertError):
        lambert_solve(r, r + 100.0, 0.0)


def test_lambert_da_constant_part_matches_real():
    r0, v0 = classical_to_cart(7100.0, 0.01, 65.0, 30.0, 10.0, 70.0)
    dt = 300.0
    rN, _ = kepler_propagate(r0, v0, dt, MU_EARTH)
    h = np.cross(r0, v0)
    real = lambert_solve(r0, rN, dt, normal_hint=h)
    eps = 1.0
    r0da = np.array([make_variable(x, 0, eps, 2, 3) for x in r0], dtype=object)
    da = lambert_solve(r0da, rN, dt, normal_hint=h)
    for j in range(3):
        assert np.isclose(da.v1[j].const, real.v1[j], atol=1e-12)


def test_lambert_da_linear_part_matches_finite_differences():
    r0, v0 = classical_to_cart(7100.0, 0.01, 65.0, 30.0, 10.0, 70.0)
    dt = 300.0
    rN, _ = kepler_propagate(r0, v0, dt, MU_EARTH)
    h = np.cross(r0, v0)
    eps = 1.0  # km scale on the first position component
    r0da = np.array(
        [make_variable(x, 0, eps, 2, 3) if j == 0 else x for j, x in enumerate(r0)],
        dtype=object,
    )
    da = lambert_solve(r0da, rN, dt, normal_hint=h)
    step = 1e-3
    rp = r0 + np.array([eps * step, 0, 0])
    rm = r0 - np.array([eps * step, 0, 0])
    vp = lambert_solve(rp, rN, dt, normal_hint=h).v1
    vm = lambert_solve(rm, rN, dt, normal_hint=h).v1
    fd = (vp - vm) / (2 * step)
    for j in range(3):
        lin = da.v1[j].linear_part()[0]
        assert abs(lin - fd[j]) <= 1e-5 * max(1.0, abs(fd[j]))


def test_state_to_observables_matches_composition():
    geom = make_geom()
    r0, v0 = classical_to_cart(7000.0, 0.001, 75.0, 20.0, 0.0, 40.0)
    t = 30.0
    alpha, delta, dd = state_to_observables(r0, v0, geom, t)
    rs, _ = site_state(geom.receiver, t, geom)
    u = (r0 - rs) / np.linalg.norm(r0 - rs)
    assert np.allclose(radec_to_unit(alpha, delta), u, atol=1e-12)
    _, dd_ref = slant_range_rate(r0, v0, geom, t)
    assert np.isclose(dd, dd_ref)


def test_state_to_observables_da_linear_vs_fd():
    geom = make_geom()
    r0, v0 = classical_to_cart(7000.0, 0.001, 75.0, 20.0, 0.0, 40.0)
    t = 30.0
    eps = 0.1
    rda = np.array(
        [make_variable(x, 0, eps, 1, 3) if j == 0 else x for j, x in enumerate(r0)],
        dtype=object,
    )
    a_da, d_da, dd_da = state_to_observables(rda, v0, geom, t)
    step = 1e-3
    dz = np.array([eps * step, 0, 0])
    op = state_to_observables(r0 + dz, v0, geom, t)
    om = state_to_observables(r0 - dz, v0, geom, t)
    for da_out, p, m in zip((a_da, d_da, dd_da), op, om):
        fd = (p - m) / (2 * step)
        assert abs(da_out.linear_part()[0] - fd) <= 1e-5 * max(1.0, abs(fd))
