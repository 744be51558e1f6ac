"""Doppler-radar initial orbit determination with Taylor-polynomial
orbit sets and built-in uncertainty bounds."""

from .algebra import (
    RealInterval,
    TaylorPoly,
    TpsAlgebra,
    constant_poly,
    make_variable,
)
from .maps import TaylorMap, identity_map
from .ads import AdsConfig, Manifold, ManifoldEntry, SubDomain, run_ads
from .astro import (
    RadarGeometry,
    ReducedElements,
    Site,
    cart_to_reduced_elements,
    classical_to_cart,
    kepler_propagate,
    reduced_elements_to_cart,
)
from .solvers import (
    GaussError,
    GaussSolution,
    LambertError,
    LambertSolution,
    gauss_solve,
    lambert_solve,
)
from .measproc import (
    PolarTrack,
    RawTrack,
    RegressionFit,
    fit_regression,
    mc_raw_processing,
    regress_track,
    regression_ci,
)
from .pipeline import (
    OrbitSet,
    PipelineError,
    SolverConfig,
    phase2_select,
    phase3_expand,
    solve_track,
)
from .simulate import (
    CampaignResult,
    NoiseLevel,
    PassResult,
    PassSpec,
    VisibilityError,
    example_geometry,
    generate_pass,
    noise_ladder,
    run_campaign,
    run_single_pass,
    sample_pass_specs,
)
from .estimator import DopplerIod

__version__ = "0.1.0"

__all__ = [
    "AdsConfig",
    "CampaignResult",
    "DopplerIod",
    "GaussError",
    "GaussSolution",
    "LambertError",
    "LambertSolution",
    "Manifold",
    "ManifoldEntry",
    "NoiseLevel",
    "OrbitSet",
    "PassResult",
    "PassSpec",
    "PipelineError",
    "PolarTrack",
    "RadarGeometry",
    "RawTrack",
    "RealInterval",
    "ReducedElements",
    "RegressionFit",
    "Site",
    "SolverConfig",
    "SubDomain",
    "TaylorMap",
    "TaylorPoly",
    "TpsAlgebra",
    "VisibilityError",
    "cart_to_reduced_elements",
    "classical_to_cart",
    "constant_poly",
    "example_geometry",
    "fit_regression",
    "gauss_solve",
    "generate_pass",
    "identity_map",
    "kepler_propagate",
    "lambert_solve",
    "make_variable",
    "mc_raw_processing",
    "noise_ladder",
    "phase2_select",
    "phase3_expand",
    "reduced_elements_to_cart",
    "regress_track",
    "regression_ci",
    "run_ads",
    "run_campaign",
    "run_single_pass",
    "sample_pass_specs",
    "solve_track",
]
