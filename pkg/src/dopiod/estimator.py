"""Scikit-learn style facade over the full track-to-orbit-set pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .measproc import RawTrack, mc_raw_processing, regress_track
from .pipeline import SolverConfig, solve_track


class DopplerIod(BaseEstimator):
    """Initial orbit determination from angles and range rate.

    Fits a Taylor-polynomial orbit set to a single radar track:
    measurement processing (Monte-Carlo mapping of the raw azimuth /
    elevation noise, or polynomial regression), two-endpoint range
    refinement, and an adaptively split polynomial expansion of the
    reduced orbital elements over the measurement confidence box.

    Parameters mirror :class:`dopiod.pipeline.SolverConfig`.

    Attributes set by :meth:`fit`:

    orbit_set_ : OrbitSet
        The fitted orbit set (nominal elements, manifold, bounds).
    elements_ : ndarray, shape (5,)
        Nominal reduced elements (a [km], e, i, RAAN, u [deg]).
    bounds_ : ndarray, shape (5, 2)
        Per-element enclosure of the orbit set over the confidence box.
    n_sets_ : int
        Number of sub-domains in the fitted manifold.
    """

    def __init__(
        self,
        mode: str = "raw",
        order: int = 4,
        max_splits: int = 5,
        tol_a_km: float = 0.01,
        tol_e: float = 0.01,
        tol_i_deg: float = 1e-5,
        tol_raan_deg: float = 1e-5,
        tol_u_deg: float = 1e-5,
        iota: float = 0.997,
        n_mc: int = 1000,
        regression_order: int = 2,
        corner_scan: bool = True,
        seed: int = 0,
    ):
        self.mode = mode
        self.order = order
        self.max_splits = max_splits
        self.tol_a_km = tol_a_km
        self.tol_e = tol_e
        self.tol_i_deg = tol_i_deg
        self.tol_raan_deg = tol_raan_deg
        self.tol_u_deg = tol_u_deg
        self.iota = iota
        self.n_mc = n_mc
        self.regression_order = regression_order
        self.corner_scan = corner_scan
        self.seed = seed

    def _config(self) -> SolverConfig:
        return SolverConfig(
            mode=self.mode,
            order=self.order,
            max_splits=self.max_splits,
            tol_a_km=self.tol_a_km,
            tol_e=self.tol_e,
            tol_i_deg=self.tol_i_deg,
            tol_raan_deg=self.tol_raan_deg,
            tol_u_deg=self.tol_u_deg,
            iota=self.iota,
            n_mc=self.n_mc,
            regression_order=self.regression_order,
            corner_scan=self.corner_scan,
            seed=self.seed,
        )

    def fit(self, X: RawTrack, y=None) -> "DopplerIod":
        """Fit an orbit set to one raw track.

        X is a :class:`dopiod.measproc.RawTrack`; y is ignored (present
        for scikit-learn API compatibility).
        """
        if not isinstance(X, RawTrack):
            raise TypeError("fit expects a RawTrack")
        if self.mode not in ("raw", "regress"):
            raise ValueError("mode must be 'raw' or 'regress'")
        cfg = self._config()
        if self.mode == "regress":
            polar = regress_track(X, cfg.iota, cfg.regression_order, cfg.n_mc, cfg.seed)
        else:
            polar = mc_raw_processing(X, cfg.iota, cfg.n_mc, cfg.seed)
        self.orbit_set_ = solve_track(polar, cfg)
        self.elements_ = self.orbit_set_.elements.as_array()
        self.bounds_ = np.array([[b.lo, b.hi] for b in self.orbit_set_.bounds])
        self.n_sets_ = self.orbit_set_.n_sets
        return self

    def predict(self, X) -> np.ndarray:
        """Reduced elements for normalized measurement deviations.

        X has shape (n, 6) or (6,): deviations in units of the
        confidence-interval half-widths, within [-1, 1]^6.
        """
        if not hasattr(self, "orbit_set_"):
            raise RuntimeError("estimator is not fitted")
        return self.orbit_set_.predict(X)
