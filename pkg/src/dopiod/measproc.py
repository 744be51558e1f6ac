"""Measurement preprocessing.

Converts raw radar tracks (azimuth, elevation, bistatic range rate plus
sensor noise levels) into topocentric polar tracks (right ascension,
declination, range rate) with per-epoch confidence intervals, either by
Monte Carlo propagation of the raw noise or by polynomial regression in
a frame aligned with the observed arc.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .astro import (
    RadarGeometry,
    azel_to_unit_eci,
    los_to_taos_angles,
    taos_angles_to_los,
    taos_frame,
    wrap_deg,
)

__all__ = [
    "RawTrack",
    "PolarTrack",
    "RegressionFit",
    "mc_raw_processing",
    "fit_regression",
    "regression_ci",
    "regress_track",
]


@dataclass(frozen=True)
class RawTrack:
    """Time series of azimuth/elevation/range-rate measurements from one
    pass, with the (constant) 1-sigma sensor noise levels."""

    epochs: np.ndarray
    az_deg: np.ndarray
    el_deg: np.ndarray
    rr_kms: np.ndarray
    sigma_az_deg: float
    sigma_el_deg: float
    sigma_rr_kms: float
    geometry: RadarGeometry

    def __post_init__(self):
        for name in ("epochs", "az_deg", "el_deg", "rr_kms"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.epochs)
        if n < 3:
            raise ValueError("a track needs at least three epochs")
        if any(len(getattr(self, name)) != n for name in ("az_deg", "el_deg", "rr_kms")):
            raise ValueError("measurement arrays must share the epoch length")
        if np.any(np.diff(self.epochs) <= 0):
            raise ValueError("epochs must be strictly increasing")
        if min(self.sigma_az_deg, self.sigma_el_deg, self.sigma_rr_kms) <= 0:
            raise ValueError("sensor noise levels must be positive")

    def __len__(self) -> int:
        return len(self.epochs)


@dataclass(frozen=True)
class PolarTrack:
    """Processed track: right ascension / declination / range rate with
    per-epoch confidence-interval half-widths at level ``iota``."""

    epochs: np.ndarray
    alpha_deg: np.ndarray
    delta_deg: np.ndarray
    rr_kms: np.ndarray
    ci_alpha_deg: np.ndarray
    ci_delta_deg: np.ndarray
    ci_rr_kms: np.ndarray
    iota: float
    geometry: RadarGeometry

    def __post_init__(self):
        arrays = (
            "epochs",
            "alpha_deg",
            "delta_deg",
            "rr_kms",
            "ci_alpha_deg",
            "ci_delta_deg",
            "ci_rr_kms",
        )
        for name in arrays:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.epochs)
        if n < 3:
            raise ValueError("a track needs at least three epochs")
        if any(len(getattr(self, name)) != n for name in arrays[1:]):
            raise ValueError("measurement arrays must share the epoch length")
        if not 0.0 < self.iota < 1.0:
            raise ValueError("confidence level must lie in (0, 1)")
        if min(
            self.ci_alpha_deg.min(), self.ci_delta_deg.min(), self.ci_rr_kms.min()
        ) <= 0:
            raise ValueError("confidence half-widths must be positive")

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def middle_index(self) -> int:
        return (len(self.epochs) - 1) // 2


def _circular_mean_deg(samples_deg: np.ndarray) -> float:
    ang = np.radians(samples_deg)
    return wrap_deg(np.degrees(np.arctan2(np.sin(ang).mean(), np.cos(ang).mean())))


def _angular_quantile_deg(samples_deg: np.ndarray, center_deg: float, iota: float) -> float:
    d = np.abs(wrap_deg(samples_deg - center_deg, 360.0))
    d = np.minimum(d, 360.0 - d)
    return float(np.quantile(d, iota))


def mc_raw_processing(
    track: RawTrack,
    iota: float = 0.997,
    n_mc: int = 1000,
    seed: int = 0,
) -> PolarTrack:
    """Monte Carlo conversion of az/el noise into right ascension /
    declination confidence intervals.

    At each epoch, ``n_mc`` az/el samples are drawn from the sensor noise
    model and mapped to (alpha, delta); the interval half-width is the
    empirical ``iota`` quantile of angular distances from the circular
    mean.  Range rates pass through with a two-sided Gaussian interval.
    """
    if n_mc < 100:
        raise ValueError("n_mc too small for quantile estimation (need >= 100)")
    rng = np.random.default_rng(seed)
    n = len(track)
    alpha = np.empty(n)
    delta = np.empty(n)
    ci_a = np.empty(n)
    ci_d = np.empty(n)
    site = track.geometry.receiver
    for i in range(n):
        az = track.az_deg[i] + rng.normal(0.0, track.sigma_az_deg, n_mc)
        el = track.el_deg[i] + rng.normal(0.0, track.sigma_el_deg, n_mc)
        u = azel_to_unit_eci(az, el, site, track.epochs[i], track.geometry)
        a = np.degrees(np.arctan2(u[1], u[0]))
        d = np.degrees(np.arctan2(u[2], np.hypot(u[0], u[1])))
        alpha[i] = _circular_mean_deg(a)
        delta[i] = _circular_mean_deg(d)
        ci_a[i] = _angular_quantile_deg(a, alpha[i], iota)
        ci_d[i] = _angular_quantile_deg(d, delta[i], iota)
    k = stats.norm.ppf(0.5 * (1.0 + iota))
    return PolarTrack(
        epochs=track.epochs,
        alpha_deg=alpha,
        delta_deg=delta,
        rr_kms=track.rr_kms.copy(),
        ci_alpha_deg=ci_a,
        ci_delta_deg=ci_d,
        ci_rr_kms=np.full(n, k * track.sigma_rr_kms),
        iota=iota,
        geometry=track.geometry,
    )


@dataclass(frozen=True)
class RegressionFit:
    """Ordinary least-squares polynomial fit of one measurement channel
    against time, with the covariance of the fitted values."""

    order: int
    t0: float
    epochs: np.ndarray
    coeffs: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    sigma2: float
    cov_fitted: np.ndarray

    @property
    def dof(self) -> int:
        return len(self.epochs) - len(self.coeffs)

    def fitted_sigma(self) -> np.ndarray:
        var = np.diag(self.cov_fitted).copy()
        if np.any(var < 0):
            warnings.warn("clipping negative fitted variances to zero", RuntimeWarning)
            var = np.clip(var, 0.0, None)
        return np.sqrt(var)


def fit_regression(values, epochs, t0: float, order: int) -> RegressionFit:
    """Polynomial OLS in powers of (t - t0); errors if the design matrix
    is rank-deficient or leaves no residual degrees of freedom."""
    y = np.asarray(values, dtype=float)
    t = np.asarray(epochs, dtype=float)
    n, p = len(t), order + 1
    if n <= p:
        raise ValueError("need more epochs than polynomial coefficients")
    a = np.vander(t - t0, p, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    if rank < p:
        raise ValueError("rank-deficient regression design matrix")
    fitted = a @ coeffs
    resid = y - fitted
    sigma2 = float(resid @ resid) / (n - p)
    cov_coeffs = sigma2 * np.linalg.inv(a.T @ a)
    cov_fitted = a @ cov_coeffs @ a.T
    return RegressionFit(order, t0, t, coeffs, fitted, resid, sigma2, cov_fitted)


def regression_ci(fit: RegressionFit, iota: float = 0.997) -> np.ndarray:
    """Per-epoch Student-t confidence half-widths for the fitted values."""
    if not 0.0 < iota < 1.0:
        raise ValueError("confidence level must lie in (0, 1)")
    k = stats.t.ppf(0.5 * (1.0 + iota), fit.dof)
    return k * fit.fitted_sigma()


def regress_track(
    track: RawTrack,
    iota: float = 0.997,
    order: int = 2,
    n_mc: int = 1000,
    seed: int = 0,
) -> PolarTrack:
    """Regression-based conversion of a raw track into a polar track.

    The line of sight is expressed in an arc-aligned frame (x along the
    first LOS, z normal to the first/last LOS plane); in-plane and
    out-of-plane angles and the range rate are each fit with a degree
    ``order`` polynomial about the mid-observation time.  Fitted angles
    and their intervals are mapped back to (alpha, delta) by Monte Carlo
    sampling of the fitted-value t distribution; range rates keep their
    regression values and intervals directly.
    """
    rng = np.random.default_rng(seed)
    geom = track.geometry
    site = geom.receiver
    n = len(track)
    los = np.stack(
        [
            azel_to_unit_eci(track.az_deg[i], track.el_deg[i], site, track.epochs[i], geom)
            for i in range(n)
        ],
        axis=1,
    )
    frame = taos_frame(los[:, 0], los[:, -1])
    lam, gam = los_to_taos_angles(los, frame)
    lam = np.unwrap(np.radians(lam))
    lam = np.degrees(lam)
    t0 = 0.5 * (track.epochs[0] + track.epochs[-1])
    fit_lam = fit_regression(lam, track.epochs, t0, order)
    fit_gam = fit_regression(gam, track.epochs, t0, order)
    fit_rr = fit_regression(track.rr_kms, track.epochs, t0, order)
    s_lam = fit_lam.fitted_sigma()
    s_gam = fit_gam.fitted_sigma()
    dof = fit_lam.dof
    alpha = np.empty(n)
    delta = np.empty(n)
    ci_a = np.empty(n)
    ci_d = np.empty(n)
    for i in range(n):
        ls = fit_lam.fitted[i] + s_lam[i] * rng.standard_t(dof, n_mc)
        gs = fit_gam.fitted[i] + s_gam[i] * rng.standard_t(dof, n_mc)
        u = taos_angles_to_los(ls, gs, frame)
        a = np.degrees(np.arctan2(u[1], u[0]))
        d = np.degrees(np.arctan2(u[2], np.hypot(u[0], u[1])))
        alpha[i] = _circular_mean_deg(a)
        delta[i] = _circular_mean_deg(d)
        ci_a[i] = _angular_quantile_deg(a, alpha[i], iota)
        ci_d[i] = _angular_quantile_deg(d, delta[i], iota)
    return PolarTrack(
        epochs=track.epochs,
        alpha_deg=alpha,
        delta_deg=delta,
        rr_kms=fit_rr.fitted.copy(),
        ci_alpha_deg=ci_a,
        ci_delta_deg=ci_d,
        ci_rr_kms=regression_ci(fit_rr, iota),
        iota=iota,
        geometry=track.geometry,
    )
