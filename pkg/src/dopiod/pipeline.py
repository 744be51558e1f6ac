"""Orbit determination pipeline.

Phase 2 refines receiver slant ranges at the first and last track epochs
by a Taylor-map Newton iteration on the bistatic range-rate residuals,
seeding from an angles-only Gauss solution and optionally scanning the
confidence-interval corners of the angular measurements.  Phase 3
re-runs the refined solution under six measurement deviation variables
and expands the reduced orbital elements as a Taylor manifold over the
measurement confidence box, with automatic domain splitting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import algebra as ag
from .algebra import RealInterval, TaylorPoly, make_variable
from .ads import AdsConfig, Manifold, SubDomain, run_ads
from .astro import (
    MU_EARTH,
    R_EARTH,
    RadarGeometry,
    ReducedElements,
    cart_to_reduced_elements,
    kepler_propagate,
    radec_to_unit,
    site_state,
    slant_range_rate,
    vector,
    wrap_deg,
)
from .maps import TaylorMap
from .measproc import PolarTrack
from .solvers import (
    DEFAULT_RADIUS_BAND_KM,
    GaussError,
    LambertError,
    gauss_solve,
    lambert_solve,
    state_to_observables,
)

__all__ = [
    "PipelineError",
    "SolverConfig",
    "Corner",
    "RangePair",
    "Phase2Diagnostics",
    "OrbitSet",
    "enumerate_corners",
    "phase2_refine",
    "phase2_select",
    "phase3_expand",
    "solve_track",
    "evaluate_orbit_set",
]


class PipelineError(RuntimeError):
    """Unrecoverable pipeline failure (no usable range solution)."""


@dataclass(frozen=True)
class SolverConfig:
    """End-to-end solver settings: expansion order, splitting budget and
    tolerances, confidence level, preprocessing mode and iteration
    guards."""

    order: int = 4
    max_splits: int = 5
    tol_a_km: float = 0.01
    tol_e: float = 0.01
    tol_i_deg: float = 1e-5
    tol_raan_deg: float = 1e-5
    tol_u_deg: float = 1e-5
    iota: float = 0.997
    n_mc: int = 1000
    regression_order: int = 2
    mode: str = "raw"
    corner_scan: bool = True
    range_tol_km: float = 1e-6
    max_refine_iter: int = 25
    pair_agreement_km: float = 1.0
    radius_band_km: tuple[float, float] = DEFAULT_RADIUS_BAND_KM
    mu: float = MU_EARTH
    seed: int = 0

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("expansion order must be at least 2")
        if self.mode not in ("raw", "regress"):
            raise ValueError("mode must be 'raw' or 'regress'")
        if not 0.0 < self.iota < 1.0:
            raise ValueError("confidence level must lie in (0, 1)")

    def tolerances(self) -> tuple[float, ...]:
        return (self.tol_a_km, self.tol_e, self.tol_i_deg, self.tol_raan_deg, self.tol_u_deg)


@dataclass(frozen=True)
class Corner:
    """One sign assignment of the angular confidence intervals at the
    first, middle and last epochs (zeros mean the nominal point)."""

    index: int
    signs: tuple[int, ...]  # (alpha1, delta1, alpha_m, delta_m, alpha_N, delta_N)

    @property
    def is_nominal(self) -> bool:
        return all(s == 0 for s in self.signs)


def enumerate_corners(include_nominal: bool = True) -> list[Corner]:
    """Nominal point first, then the 64 interval-corner sign patterns in
    lexicographic order with -1 before +1, over
    (alpha1, delta1, alpha_m, delta_m, alpha_N, delta_N)."""
    corners = []
    if include_nominal:
        corners.append(Corner(0, (0,) * 6))
    base = len(corners)
    for i, signs in enumerate(itertools.product((-1, 1), repeat=6)):
        corners.append(Corner(base + i, signs))
    return corners


@dataclass(frozen=True)
class RangePair:
    """Refined receiver slant ranges at the first/last epochs."""

    rho1_km: float
    rhoN_km: float
    corner: Corner
    iterations: int
    converged: bool
    residual_norm: float = math.nan
    message: str = ""


@dataclass
class Phase2Diagnostics:
    attempted: int = 0
    converged: int = 0
    early_stopped: bool = False
    scores: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    selected_corner: int = -1


def _corner_angles(track: PolarTrack, corner: Corner):
    """(alpha, delta) in degrees at the first/middle/last epochs with the
    corner's confidence-interval offsets applied."""
    idx = (0, track.middle_index, len(track) - 1)
    alphas, deltas = [], []
    for k, i in enumerate(idx):
        sa, sd = corner.signs[2 * k], corner.signs[2 * k + 1]
        alphas.append(track.alpha_deg[i] + sa * track.ci_alpha_deg[i])
        deltas.append(track.delta_deg[i] + sd * track.ci_delta_deg[i])
    return idx, alphas, deltas


def _da_vector(r_site: np.ndarray, rho, unit: np.ndarray):
    return vector(
        r_site[0] + rho * unit[0], r_site[1] + rho * unit[1], r_site[2] + rho * unit[2]
    )


def phase2_refine(
    track: PolarTrack, corner: Corner, cfg: SolverConfig
) -> RangePair:
    """Newton iteration on (rho1, rhoN) matching the measured range rates.

    Each step expands the Lambert transfer between the two endpoint
    positions in Taylor ranges (order ``cfg.order``, two variables),
    inverts the resulting range-rate deviation map and evaluates it at
    the negative residual.  Uses the corner angles only to seed Gauss;
    the Lambert endpoints use the nominal angles.
    """
    geom = track.geometry
    idx, alphas, deltas = _corner_angles(track, corner)
    i1, im, iN = idx
    t1, tm, tN = (track.epochs[i] for i in idx)
    sites = tuple(site_state(geom.receiver, t, geom)[0] for t in (t1, tm, tN))
    los_corner = tuple(radec_to_unit(a, d) for a, d in zip(alphas, deltas))
    try:
        seed = gauss_solve((t1, tm, tN), los_corner, sites, cfg.mu, cfg.radius_band_km)
    except GaussError as exc:
        return RangePair(math.nan, math.nan, corner, 0, False, message=str(exc))
    u1 = radec_to_unit(track.alpha_deg[i1], track.delta_deg[i1])
    uN = radec_to_unit(track.alpha_deg[iN], track.delta_deg[iN])
    rho1, rhoN = seed.rho1_km, seed.rho_N_km
    ddot_meas = (track.rr_kms[i1], track.rr_kms[iN])
    hint = np.cross(sites[0] + rho1 * u1, sites[2] + rhoN * uN)
    dt = tN - t1
    r_lo = R_EARTH + 90.0
    r_hi = 60000.0
    for it in range(1, cfg.max_refine_iter + 1):
        p1 = make_variable(rho1, 0, 1.0, 2, cfg.order)
        pN = make_variable(rhoN, 1, 1.0, 2, cfg.order)
        r1 = _da_vector(sites[0], p1, u1)
        rN = _da_vector(sites[2], pN, uN)
        try:
            lam = lambert_solve(r1, rN, dt, cfg.mu, normal_hint=hint)
            _, dd1 = slant_range_rate(r1, lam.v1, geom, t1)
            _, ddN = slant_range_rate(rN, lam.vN, geom, tN)
            fmap = TaylorMap([dd1.nonconstant(), ddN.nonconstant()])
            gmap = fmap.invert()
        except (LambertError, np.linalg.LinAlgError, ValueError, ZeroDivisionError) as exc:
            return RangePair(rho1, rhoN, corner, it, False, message=str(exc))
        res = np.array([dd1.const - ddot_meas[0], ddN.const - ddot_meas[1]])
        step = gmap.eval(-res)
        rho1 += float(step[0])
        rhoN += float(step[1])
        radii = (
            np.linalg.norm(sites[0] + rho1 * u1),
            np.linalg.norm(sites[2] + rhoN * uN),
        )
        if min(rho1, rhoN) <= 0.0 or min(radii) < r_lo or max(radii) > r_hi:
            return RangePair(rho1, rhoN, corner, it, False, message="iteration diverged")
        if float(np.linalg.norm(step)) < cfg.range_tol_km:
            return RangePair(
                rho1, rhoN, corner, it, True, residual_norm=float(np.linalg.norm(res))
            )
    return RangePair(rho1, rhoN, corner, cfg.max_refine_iter, False, message="max iterations")


def _pair_score(track: PolarTrack, pair: RangePair, cfg: SolverConfig) -> float:
    """Confidence-normalized residual of the pair's implied orbit over
    the whole track (angles in radians)."""
    geom = track.geometry
    t1, tN = track.epochs[0], track.epochs[-1]
    r1 = site_state(geom.receiver, t1, geom)[0] + pair.rho1_km * radec_to_unit(
        track.alpha_deg[0], track.delta_deg[0]
    )
    rN = site_state(geom.receiver, tN, geom)[0] + pair.rhoN_km * radec_to_unit(
        track.alpha_deg[-1], track.delta_deg[-1]
    )
    lam = lambert_solve(r1, rN, tN - t1, cfg.mu, normal_hint=np.cross(r1, rN))
    total = 0.0
    for i, t in enumerate(track.epochs):
        r, v = kepler_propagate(r1, lam.v1, t - t1, cfg.mu)
        alpha, delta, ddot = state_to_observables(r, v, geom, t)
        da = math.radians(wrap_deg(alpha - track.alpha_deg[i], 360.0))
        da = min(abs(da), 2.0 * math.pi - abs(da))
        dd = math.radians(abs(delta - track.delta_deg[i]))
        total += (
            (da / math.radians(track.ci_alpha_deg[i])) ** 2
            + (dd / math.radians(track.ci_delta_deg[i])) ** 2
            + ((ddot - track.rr_kms[i]) / track.ci_rr_kms[i]) ** 2
        )
    return total / len(track)


def phase2_select(
    track: PolarTrack, cfg: SolverConfig
) -> tuple[RangePair, Phase2Diagnostics]:
    """Run the range refinement over the corner list (or the nominal
    point only) and keep the converged pair with the lowest normalized
    track residual.

    Stops early once two converged pairs agree within
    ``cfg.pair_agreement_km`` in the (rho1, rhoN) plane.
    """
    corners = enumerate_corners() if cfg.corner_scan else [Corner(0, (0,) * 6)]
    diag = Phase2Diagnostics()
    converged: list[RangePair] = []
    for corner in corners:
        diag.attempted += 1
        pair = phase2_refine(track, corner, cfg)
        if not pair.converged:
            diag.failures[corner.index] = pair.message
            continue
        diag.converged += 1
        stop = any(
            math.hypot(pair.rho1_km - q.rho1_km, pair.rhoN_km - q.rhoN_km)
            < cfg.pair_agreement_km
            for q in converged
        )
        converged.append(pair)
        if stop:
            diag.early_stopped = True
            break
    if not converged:
        raise PipelineError("range refinement failed on every corner")
    for pair in converged:
        try:
            diag.scores[pair.corner.index] = _pair_score(track, pair, cfg)
        except (LambertError, ValueError) as exc:
            diag.scores[pair.corner.index] = math.inf
            diag.failures[pair.corner.index] = f"scoring: {exc}"
    best = min(converged, key=lambda p: diag.scores[p.corner.index])
    if not math.isfinite(diag.scores[best.corner.index]):
        raise PipelineError("no converged pair could be scored")
    diag.selected_corner = best.corner.index
    return best, diag


@dataclass
class OrbitSet:
    """Taylor manifold mapping normalized measurement deviations at the
    endpoint epochs to reduced orbital elements at the first epoch.

    Deviation variables, each scaled so [-1,1] spans the measurement
    confidence interval: (alpha_1, delta_1, ddot_1, alpha_N, delta_N,
    ddot_N).
    """

    epoch: float
    elements: ReducedElements
    manifold: Manifold
    bounds: tuple[RealInterval, ...]
    ci_scales: tuple[float, ...]
    rho1_km: float
    rhoN_km: float
    diagnostics: Phase2Diagnostics | None = None

    @property
    def n_sets(self) -> int:
        return self.manifold.n_sets

    def predict(self, deviations) -> np.ndarray:
        """Reduced elements for points in the normalized deviation box;
        accepts shape (6,) or (n, 6)."""
        dev = np.asarray(deviations, dtype=float)
        if dev.ndim == 1:
            return self._eval_one(dev)
        return np.stack([self._eval_one(p) for p in dev])

    def _eval_one(self, point) -> np.ndarray:
        out = self.manifold.eval(point)
        out[2:] = wrap_deg(out[2:], 360.0)
        return out

    def to_dict(self) -> dict:
        return {
            "format": "dopiod.orbit_set/1",
            "epoch_s": self.epoch,
            "elements": dict(zip(ReducedElements.names(), self.elements.as_array().tolist())),
            "bounds": [[b.lo, b.hi] for b in self.bounds],
            "ci_scales": list(self.ci_scales),
            "rho1_km": self.rho1_km,
            "rhoN_km": self.rhoN_km,
            "manifold": self.manifold.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrbitSet":
        if d.get("format") != "dopiod.orbit_set/1":
            raise ValueError("unrecognized orbit set format")
        el = ReducedElements(**d["elements"])
        return cls(
            epoch=float(d["epoch_s"]),
            elements=el,
            manifold=Manifold.from_dict(d["manifold"]),
            bounds=tuple(RealInterval(lo, hi) for lo, hi in d["bounds"]),
            ci_scales=tuple(d["ci_scales"]),
            rho1_km=float(d["rho1_km"]),
            rhoN_km=float(d["rhoN_km"]),
        )


def _expansion_generator(track: PolarTrack, pair: RangePair, cfg: SolverConfig):
    """Generator of element maps over sub-domains of the measurement box.

    Internally works in six Taylor variables: four endpoint angle
    deviations (variables 0-3) and two slant-range deviations (4-5).
    Inverting the map from those to (angles, range-rate deviations) and
    composing yields the elements as functions of the external deviation
    variables (alpha1, delta1, ddot1, alphaN, deltaN, ddotN).
    """
    geom = track.geometry
    t1, tN = track.epochs[0], track.epochs[-1]
    dt = tN - t1
    site1 = site_state(geom.receiver, t1, geom)[0]
    siteN = site_state(geom.receiver, tN, geom)[0]
    # external variable order and their physical scales (rad, rad, km/s)
    ci = (
        math.radians(track.ci_alpha_deg[0]),
        math.radians(track.ci_delta_deg[0]),
        track.ci_rr_kms[0],
        math.radians(track.ci_alpha_deg[-1]),
        math.radians(track.ci_delta_deg[-1]),
        track.ci_rr_kms[-1],
    )
    nom = (
        math.radians(track.alpha_deg[0]),
        math.radians(track.delta_deg[0]),
        track.rr_kms[0],
        math.radians(track.alpha_deg[-1]),
        math.radians(track.delta_deg[-1]),
        track.rr_kms[-1],
    )
    u1n = radec_to_unit(track.alpha_deg[0], track.delta_deg[0])
    uNn = radec_to_unit(track.alpha_deg[-1], track.delta_deg[-1])
    hint = np.cross(site1 + pair.rho1_km * u1n, siteN + pair.rhoN_km * uNn)
    nv, k = 6, cfg.order
    # internal variable <- external variable carrying the same angle
    angle_ext = (0, 1, 3, 4)

    def generator(dom: SubDomain) -> TaylorMap:
        c, w = dom.center, dom.half_width
        ang = [
            make_variable(nom[e] + ci[e] * c[e], j, ci[e] * w[e], nv, k)
            for j, e in enumerate(angle_ext)
        ]
        a1, d1, aN, dN = ang
        rho1 = make_variable(pair.rho1_km, 4, 1.0, nv, k)
        rhoN = make_variable(pair.rhoN_km, 5, 1.0, nv, k)
        u1 = vector(ag.cos(d1) * ag.cos(a1), ag.cos(d1) * ag.sin(a1), ag.sin(d1))
        uN = vector(ag.cos(dN) * ag.cos(aN), ag.cos(dN) * ag.sin(aN), ag.sin(dN))
        r1 = _da_vector(site1, rho1, u1)
        rN = _da_vector(siteN, rhoN, uN)
        lam = lambert_solve(r1, rN, dt, cfg.mu, normal_hint=hint)
        _, dd1 = slant_range_rate(r1, lam.v1, geom, t1)
        _, ddN = slant_range_rate(rN, lam.vN, geom, tN)
        ident = [make_variable(0.0, j, 1.0, nv, k) for j in range(nv)]
        fwd = TaylorMap(
            [ident[0], ident[1], ident[2], ident[3], dd1.nonconstant(), ddN.nonconstant()]
        )
        inv = fwd.invert()
        # measured range-rate deviations as polynomials in the external vars
        h_dd1 = make_variable(
            nom[2] + ci[2] * c[2] - dd1.const, 2, ci[2] * w[2], nv, k
        )
        h_ddN = make_variable(
            nom[5] + ci[5] * c[5] - ddN.const, 5, ci[5] * w[5], nv, k
        )
        ext_ident = [make_variable(0.0, j, 1.0, nv, k) for j in range(nv)]
        h = TaylorMap(
            [ext_ident[0], ext_ident[1], ext_ident[3], ext_ident[4], h_dd1, h_ddN]
        )
        g = inv.compose(h, allow_const=True)
        inner = TaylorMap(
            [ext_ident[0], ext_ident[1], ext_ident[3], ext_ident[4], g[4], g[5]]
        )
        state = TaylorMap(list(r1) + list(lam.v1)).compose(inner, allow_const=True)
        a, e, i_deg, raan_deg, u_deg = cart_to_reduced_elements(
            vector(*state.outputs[:3]), vector(*state.outputs[3:]), cfg.mu
        )
        outs = [a, e, i_deg]
        for p in (raan_deg, u_deg):
            # lift atan2 outputs into [0, 360) so constants match the
            # canonical element ranges
            if isinstance(p, TaylorPoly) and p.const < 0:
                p = p + 360.0
            outs.append(p)
        result = TaylorMap(outs)
        if not np.all(np.isfinite(result.coeff_matrix())):
            raise ValueError("non-finite coefficients in element expansion")
        return result

    return generator


def phase3_expand(
    track: PolarTrack, pair: RangePair, cfg: SolverConfig,
    diagnostics: Phase2Diagnostics | None = None,
) -> OrbitSet:
    """Expand the reduced-element solution over the measurement
    confidence box with automatic domain splitting."""
    generator = _expansion_generator(track, pair, cfg)
    ads_cfg = AdsConfig(cfg.tolerances(), cfg.max_splits, cfg.order)
    manifold = run_ads(generator, 6, ads_cfg)
    usable = [e for e in manifold.entries if e.map is not None]
    if not usable:
        raise PipelineError("expansion failed on the whole measurement box")
    origin = manifold.find_entry(np.zeros(6))
    if origin.map is None:
        raise PipelineError("expansion failed on the nominal sub-domain")
    nominal = origin.map.eval(origin.domain.to_local(np.zeros(6)))
    elements = ReducedElements(
        a_km=float(nominal[0]),
        e=float(nominal[1]),
        i_deg=float(wrap_deg(nominal[2], 180.0)),
        raan_deg=float(wrap_deg(nominal[3])),
        u_deg=float(wrap_deg(nominal[4])),
    )
    bounds = []
    for j in range(5):
        b = None
        for entry in usable:
            bj = entry.map[j].bound()
            b = bj if b is None else b.hull(bj)
        bounds.append(b)
    ci = (
        track.ci_alpha_deg[0],
        track.ci_delta_deg[0],
        track.ci_rr_kms[0],
        track.ci_alpha_deg[-1],
        track.ci_delta_deg[-1],
        track.ci_rr_kms[-1],
    )
    return OrbitSet(
        epoch=float(track.epochs[0]),
        elements=elements,
        manifold=manifold,
        bounds=tuple(bounds),
        ci_scales=ci,
        rho1_km=pair.rho1_km,
        rhoN_km=pair.rhoN_km,
        diagnostics=diagnostics,
    )


def solve_track(track: PolarTrack, cfg: SolverConfig | None = None) -> OrbitSet:
    """Full phase 2 + 3 solution from a processed polar track."""
    cfg = cfg or SolverConfig()
    pair, diag = phase2_select(track, cfg)
    return phase3_expand(track, pair, cfg, diag)


def evaluate_orbit_set(orbit_set: OrbitSet, deviations) -> np.ndarray:
    """Reduced elements at normalized measurement deviations in [-1,1]^6."""
    return orbit_set.predict(deviations)
