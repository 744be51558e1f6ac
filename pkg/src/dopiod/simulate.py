"""Synthetic pass generation and solver performance campaigns.

Two-body truth propagation over a bistatic continuous-wave radar
geometry.  Passes are constructed so that the object culminates at a
requested azimuth/elevation over the receiver, which guarantees
visibility while still sampling diverse observation geometries.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .astro import (
    MU_EARTH,
    R_EARTH,
    RadarGeometry,
    ReducedElements,
    Site,
    angle_diff_deg,
    azel_to_unit_eci,
    cart_to_reduced_elements,
    kepler_propagate,
    site_state,
    slant_range_rate,
    state_elevation_deg,
    unit_eci_to_azel,
)
from .measproc import RawTrack, mc_raw_processing, regress_track
from .pipeline import OrbitSet, PipelineError, SolverConfig, solve_track
from .solvers import LambertError

__all__ = [
    "NoiseLevel",
    "noise_ladder",
    "PassSpec",
    "TruthRecord",
    "VisibilityError",
    "example_geometry",
    "generate_pass",
    "sample_pass_specs",
    "PassResult",
    "CampaignResult",
    "run_campaign",
    "ARC_BIN_EDGES",
]

ARC_BIN_EDGES = (0.01, 0.02, 0.03, 0.04, 0.05)


class VisibilityError(RuntimeError):
    """The requested pass has fewer than three visible epochs."""


@dataclass(frozen=True)
class NoiseLevel:
    """1-sigma sensor noise levels; ``scale`` multiplies the injected
    noise (zero gives noiseless measurements with unchanged assumed
    sigmas)."""

    label: str
    sigma_az_deg: float
    sigma_el_deg: float
    sigma_rr_kms: float
    scale: float = 1.0

    def __post_init__(self):
        if min(self.sigma_az_deg, self.sigma_el_deg, self.sigma_rr_kms) <= 0:
            raise ValueError("noise levels must be positive")


def noise_ladder(step: int) -> NoiseLevel:
    """Graded noise levels k1..k10: step i has 10*i millidegree angular
    noise and 0.1*i m/s range-rate noise."""
    if not 1 <= step <= 10:
        raise ValueError("noise ladder steps run from 1 to 10")
    return NoiseLevel(
        label=f"k{step}",
        sigma_az_deg=0.01 * step,
        sigma_el_deg=0.01 * step,
        sigma_rr_kms=1e-4 * step,
    )


def example_geometry() -> RadarGeometry:
    """Illustrative continental bistatic geometry: receiver and
    transmitter a few hundred kilometers apart at mid latitudes."""
    return RadarGeometry(
        receiver=Site(lat_deg=47.35, lon_deg=5.51, alt_km=0.18),
        transmitter=Site(lat_deg=44.08, lon_deg=1.22, alt_km=0.08),
    )


@dataclass(frozen=True)
class PassSpec:
    """Construction parameters for one synthetic pass: orbit size/shape,
    inclination, culmination direction, sampling cadence, arc length as
    a fraction of the period and sensor noise."""

    a_km: float = 7000.0
    e: float = 0.001
    i_deg: float = 80.0
    culm_az_deg: float = 0.0
    culm_el_deg: float = 75.0
    ascending: bool = True
    t_s: float = 5.0
    arc_fraction: float = 0.03
    noise: NoiseLevel = field(default_factory=lambda: noise_ladder(1))
    elevation_mask_deg: float = 10.0
    t_mid: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.a_km * (1.0 - self.e) < R_EARTH + 100.0:
            raise ValueError("perigee below 100 km altitude")
        if not 0.0 <= self.e < 1.0:
            raise ValueError("eccentricity out of range")
        if self.t_s <= 0 or self.arc_fraction <= 0:
            raise ValueError("cadence and arc fraction must be positive")
        if self.culm_el_deg <= self.elevation_mask_deg:
            raise ValueError("culmination elevation below the mask")


@dataclass(frozen=True)
class TruthRecord:
    """True state and reduced elements at the first track epoch."""

    epoch: float
    r1: np.ndarray
    v1: np.ndarray
    elements: ReducedElements

    def to_dict(self) -> dict:
        return {
            "epoch_s": self.epoch,
            "r_km": self.r1.tolist(),
            "v_kms": self.v1.tolist(),
            "elements": dict(zip(ReducedElements.names(), self.elements.as_array().tolist())),
        }


def _culmination_state(spec: PassSpec, geom: RadarGeometry) -> tuple[np.ndarray, np.ndarray]:
    """State at t_mid placing the object (at perigee, radius a(1-e)) on
    the requested az/el line from the receiver, with velocity direction
    chosen to realize the requested inclination."""
    rs, _ = site_state(geom.receiver, spec.t_mid, geom)
    u = azel_to_unit_eci(spec.culm_az_deg, spec.culm_el_deg, geom.receiver, spec.t_mid, geom)
    r_orb = spec.a_km * (1.0 - spec.e)
    b = float(rs @ u)
    disc = b * b + r_orb * r_orb - float(rs @ rs)
    if disc < 0:
        raise VisibilityError("orbit radius below the site horizon ray")
    rho = -b + math.sqrt(disc)
    r0 = rs + rho * u
    rhat = r0 / np.linalg.norm(r0)
    east = np.cross([0.0, 0.0, 1.0], rhat)
    east /= np.linalg.norm(east)
    north = np.cross(rhat, east)
    # velocity v (cos psi * east + sin psi * north) normal to r0; the
    # orbit normal z component (h_z = r v cos i) fixes psi up to the
    # ascending/descending choice
    ci = math.cos(math.radians(spec.i_deg))
    hz_e = np.cross(rhat, east)[2]
    hz_n = np.cross(rhat, north)[2]
    amp = math.hypot(hz_e, hz_n)
    if abs(ci) > amp + 1e-12:
        raise VisibilityError("requested inclination unreachable from this latitude")
    phi = math.atan2(hz_n, hz_e)
    off = math.acos(max(-1.0, min(1.0, ci / amp)))
    psi = phi + (off if spec.ascending else -off)
    that = math.cos(psi) * east + math.sin(psi) * north
    speed = math.sqrt(geom.mu * (2.0 / r_orb - 1.0 / spec.a_km))
    return r0, speed * that


def generate_pass(spec: PassSpec, geom: RadarGeometry) -> tuple[RawTrack, TruthRecord]:
    """Noiseless observables on the cadence grid, thinned by the
    elevation mask, plus injected Gaussian noise per the noise level."""
    r0, v0 = _culmination_state(spec, geom)
    period = 2.0 * math.pi * math.sqrt(spec.a_km**3 / geom.mu)
    arc = spec.arc_fraction * period
    n = int(math.floor(arc / spec.t_s)) + 1
    if n < 3:
        raise VisibilityError("arc too short for the cadence (need 3 epochs)")
    epochs = spec.t_mid + (np.arange(n) - 0.5 * (n - 1)) * spec.t_s
    az = np.empty(n)
    el = np.empty(n)
    rr = np.empty(n)
    visible = np.empty(n, dtype=bool)
    states = []
    for j, t in enumerate(epochs):
        r, v = kepler_propagate(r0, v0, t - spec.t_mid, geom.mu)
        states.append((r, v))
        rs, _ = site_state(geom.receiver, t, geom)
        los = r - rs
        az[j], el[j] = unit_eci_to_azel(los / np.linalg.norm(los), geom.receiver, t, geom)
        _, rr[j] = slant_range_rate(r, v, geom, t)
        visible[j] = el[j] >= spec.elevation_mask_deg
    if visible.sum() < 3:
        raise VisibilityError("fewer than three epochs above the elevation mask")
    rng = np.random.default_rng(spec.seed)
    s = spec.noise.scale
    az = az + s * rng.normal(0.0, spec.noise.sigma_az_deg, n)
    el = el + s * rng.normal(0.0, spec.noise.sigma_el_deg, n)
    rr = rr + s * rng.normal(0.0, spec.noise.sigma_rr_kms, n)
    keep = np.flatnonzero(visible)
    track = RawTrack(
        epochs=epochs[keep],
        az_deg=az[keep],
        el_deg=el[keep],
        rr_kms=rr[keep],
        sigma_az_deg=spec.noise.sigma_az_deg,
        sigma_el_deg=spec.noise.sigma_el_deg,
        sigma_rr_kms=spec.noise.sigma_rr_kms,
        geometry=geom,
    )
    r1, v1 = states[keep[0]]
    elements = ReducedElements(*cart_to_reduced_elements(r1, v1, geom.mu))
    truth = TruthRecord(epoch=float(epochs[keep[0]]), r1=r1, v1=v1, elements=elements)
    return track, truth


def sample_pass_specs(
    n: int,
    noise: NoiseLevel,
    t_s_choices: tuple[float, ...] = (3.0, 5.0, 7.5),
    arc_range: tuple[float, float] = (0.01, 0.05),
    seed: int = 0,
) -> list[PassSpec]:
    """Random low-orbit population: a in [6878, 7578] km, e <= 0.02,
    i in [60, 100] deg, random culmination geometry."""
    rng = np.random.default_rng(seed)
    specs = []
    for j in range(n):
        specs.append(
            PassSpec(
                a_km=float(rng.uniform(6878.0, 7578.0)),
                e=float(rng.uniform(0.0, 0.02)),
                i_deg=float(rng.uniform(60.0, 100.0)),
                culm_az_deg=float(rng.uniform(0.0, 360.0)),
                culm_el_deg=float(rng.uniform(35.0, 85.0)),
                ascending=bool(rng.integers(0, 2)),
                t_s=float(rng.choice(t_s_choices)),
                arc_fraction=float(rng.uniform(*arc_range)),
                noise=noise,
                seed=int(rng.integers(0, 2**31 - 1)),
            )
        )
    return specs


def arc_bin_label(arc_fraction: float) -> str:
    for edge in ARC_BIN_EDGES:
        if arc_fraction <= edge:
            return f"<{edge:g}T"
    return f">{ARC_BIN_EDGES[-1]:g}T"


@dataclass
class PassResult:
    """Per-pass solver outcome and accuracy metrics."""

    spec: PassSpec
    success: bool
    message: str = ""
    wall_s: float = 0.0
    n_sets: int = 0
    errors: np.ndarray | None = None  # |estimate - truth| per element
    bound_half_widths: np.ndarray | None = None
    truth_in_bounds: bool | None = None
    truth: ReducedElements | None = None
    estimate: ReducedElements | None = None

    def to_dict(self) -> dict:
        return {
            "noise": self.spec.noise.label,
            "arc_fraction": self.spec.arc_fraction,
            "arc_bin": arc_bin_label(self.spec.arc_fraction),
            "t_s": self.spec.t_s,
            "success": self.success,
            "message": self.message,
            "wall_s": self.wall_s,
            "n_sets": self.n_sets,
            "errors": None if self.errors is None else self.errors.tolist(),
            "bound_half_widths": (
                None if self.bound_half_widths is None else self.bound_half_widths.tolist()
            ),
            "truth_in_bounds": self.truth_in_bounds,
        }


def _element_errors(est: ReducedElements, truth: ReducedElements) -> np.ndarray:
    return np.array(
        [
            abs(est.a_km - truth.a_km),
            abs(est.e - truth.e),
            abs(angle_diff_deg(est.i_deg, truth.i_deg)),
            abs(angle_diff_deg(est.raan_deg, truth.raan_deg)),
            abs(angle_diff_deg(est.u_deg, truth.u_deg)),
        ]
    )


def _truth_in_bounds(orbit_set: OrbitSet, truth: ReducedElements) -> bool:
    vals = truth.as_array()
    inside = True
    for j, b in enumerate(orbit_set.bounds):
        if j < 2:
            inside &= b.contains(vals[j])
        else:
            inside &= abs(angle_diff_deg(vals[j], b.mid)) <= b.half_width + 1e-12
    return bool(inside)


def run_single_pass(
    spec: PassSpec, geom: RadarGeometry, cfg: SolverConfig
) -> PassResult:
    t_start = time.perf_counter()
    try:
        track, truth = generate_pass(spec, geom)
        if cfg.mode == "regress":
            polar = regress_track(
                track, cfg.iota, cfg.regression_order, cfg.n_mc, cfg.seed
            )
        else:
            polar = mc_raw_processing(track, cfg.iota, cfg.n_mc, cfg.seed)
        orbit_set = solve_track(polar, cfg)
    except (VisibilityError, PipelineError, LambertError, ValueError) as exc:
        return PassResult(
            spec,
            success=False,
            message=f"{type(exc).__name__}: {exc}",
            wall_s=time.perf_counter() - t_start,
        )
    errs = _element_errors(orbit_set.elements, truth.elements)
    bhw = np.array([b.half_width for b in orbit_set.bounds])
    return PassResult(
        spec,
        success=True,
        wall_s=time.perf_counter() - t_start,
        n_sets=orbit_set.n_sets,
        errors=errs,
        bound_half_widths=bhw,
        truth_in_bounds=_truth_in_bounds(orbit_set, truth.elements),
        truth=truth.elements,
        estimate=orbit_set.elements,
    )


@dataclass
class CampaignResult:
    results: list[PassResult]
    wall_s: float

    @property
    def n_passes(self) -> int:
        return len(self.results)

    @property
    def successes(self) -> list[PassResult]:
        return [r for r in self.results if r.success]

    @property
    def success_rate(self) -> float:
        return len(self.successes) / max(1, self.n_passes)

    def error_matrix(self) -> np.ndarray:
        ok = self.successes
        if not ok:
            return np.empty((0, 5))
        return np.stack([r.errors for r in ok])

    def bound_matrix(self) -> np.ndarray:
        ok = self.successes
        if not ok:
            return np.empty((0, 5))
        return np.stack([r.bound_half_widths for r in ok])

    def summary(self) -> dict:
        """Per noise level and arc-length bin: success rate plus mean and
        upper-quartile error and bound half-width per element."""
        groups: dict[tuple[str, str], list[PassResult]] = {}
        for r in self.results:
            key = (r.spec.noise.label, arc_bin_label(r.spec.arc_fraction))
            groups.setdefault(key, []).append(r)
        rows = []
        for (noise, abin), rs in sorted(groups.items()):
            ok = [r for r in rs if r.success]
            row = {
                "noise": noise,
                "arc_bin": abin,
                "n": len(rs),
                "n_success": len(ok),
                "success_rate": len(ok) / len(rs),
            }
            if ok:
                errs = np.stack([r.errors for r in ok])
                bnds = np.stack([r.bound_half_widths for r in ok])
                for j, name in enumerate(ReducedElements.names()):
                    row[f"eps_mean_{name}"] = float(errs[:, j].mean())
                    row[f"eps_q3_{name}"] = float(np.quantile(errs[:, j], 0.75))
                    row[f"b_mean_{name}"] = float(bnds[:, j].mean())
                    row[f"b_q3_{name}"] = float(np.quantile(bnds[:, j], 0.75))
                row["containment_rate"] = float(
                    np.mean([bool(r.truth_in_bounds) for r in ok])
                )
            rows.append(row)
        return {
            "n_passes": self.n_passes,
            "success_rate": self.success_rate,
            "wall_s": self.wall_s,
            "groups": rows,
        }

    def to_dict(self) -> dict:
        return {
            "format": "dopiod.campaign/1",
            "wall_s": self.wall_s,
            "summary": self.summary(),
            "passes": [r.to_dict() for r in self.results],
        }


def run_campaign(
    specs: list[PassSpec],
    geom: RadarGeometry,
    cfg: SolverConfig | None = None,
    jobs: int = 1,
) -> CampaignResult:
    """Solve every pass and collect accuracy/bound statistics.

    ``jobs`` > 1 distributes passes over worker processes; results keep
    the input order either way.
    """
    cfg = cfg or SolverConfig()
    t_start = time.perf_counter()
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_single_pass, specs, itertools.repeat(geom), itertools.repeat(cfg)))
    else:
        results = [run_single_pass(spec, geom, cfg) for spec in specs]
    return CampaignResult(results=results, wall_s=time.perf_counter() - t_start)
