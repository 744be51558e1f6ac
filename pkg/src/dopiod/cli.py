"""Command-line interface: simulate passes, solve tracks, evaluate orbit
sets, and run performance campaigns.

Exit codes: 0 success, 1 usage/config error, 2 domain error (e.g. no
visibility), 3 solver failure.  Errors are also emitted as a JSON object
on stderr.  Every option can be set through an environment variable with
the ``DOPIOD_`` prefix (e.g. ``DOPIOD_SOLVE_ORDER=4``).
"""

from __future__ import annotations

import functools
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import io as dio
from .astro import ReducedElements, angle_diff_deg
from .measproc import mc_raw_processing, regress_track
from .pipeline import PipelineError, SolverConfig, solve_track
from .simulate import (
    PassSpec,
    VisibilityError,
    example_geometry,
    generate_pass,
    noise_ladder,
    run_campaign,
    sample_pass_specs,
)
from .solvers import GaussError, LambertError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_SOLVER = 3

CONTEXT_SETTINGS = {"auto_envvar_prefix": "DOPIOD"}


def _fail(code: int, kind: str, message: str):
    json.dump({"error": {"type": kind, "message": message}}, sys.stderr)
    sys.stderr.write("\n")
    sys.exit(code)


def _guarded(fn):
    """Map library exceptions onto the exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except VisibilityError as ex:
            _fail(EXIT_DOMAIN, "visibility", str(ex))
        except (PipelineError, GaussError, LambertError) as ex:
            _fail(EXIT_SOLVER, type(ex).__name__, str(ex))
        except (dio.FormatError, json.JSONDecodeError, FileNotFoundError, ValueError, TypeError) as ex:
            _fail(EXIT_USAGE, type(ex).__name__, str(ex))

    return wrapper


def solver_options(fn):
    opts = [
        click.option("--mode", type=click.Choice(["raw", "regress"]), default="raw", show_default=True),
        click.option("--order", type=int, default=4, show_default=True, help="Taylor expansion order."),
        click.option("--max-splits", type=int, default=5, show_default=True, help="Max splits per direction."),
        click.option("--tol-a", type=float, default=0.01, show_default=True, help="Tolerance on a [km]."),
        click.option("--tol-e", type=float, default=0.01, show_default=True, help="Tolerance on e."),
        click.option("--tol-i", type=float, default=1e-5, show_default=True, help="Tolerance on i [deg]."),
        click.option("--tol-raan", type=float, default=1e-5, show_default=True, help="Tolerance on RAAN [deg]."),
        click.option("--tol-u", type=float, default=1e-5, show_default=True, help="Tolerance on u [deg]."),
        click.option("--iota", type=float, default=0.997, show_default=True, help="Confidence level."),
        click.option("--nmc", type=int, default=1000, show_default=True, help="Monte-Carlo samples."),
        click.option("--regression-order", type=int, default=2, show_default=True),
        click.option("--corner-scan/--center-only", default=True, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _solver_config(kw) -> SolverConfig:
    return SolverConfig(
        mode=kw["mode"],
        order=kw["order"],
        max_splits=kw["max_splits"],
        tol_a_km=kw["tol_a"],
        tol_e=kw["tol_e"],
        tol_i_deg=kw["tol_i"],
        tol_raan_deg=kw["tol_raan"],
        tol_u_deg=kw["tol_u"],
        iota=kw["iota"],
        n_mc=kw["nmc"],
        regression_order=kw["regression_order"],
        corner_scan=kw["corner_scan"],
        seed=kw["seed"],
    )


@click.group(context_settings=CONTEXT_SETTINGS)
def main():
    """Doppler-radar initial orbit determination with uncertainty bounds."""


@main.command()
@click.option("--output", required=True, type=click.Path(), help="Track JSON output path.")
@click.option("--truth-output", type=click.Path(), help="Truth JSON output path.")
@click.option("--geometry", type=click.Path(exists=True), help="Geometry config JSON (default: built-in example).")
@click.option("--a-km", type=float, default=7000.0, show_default=True)
@click.option("--ecc", type=float, default=0.001, show_default=True)
@click.option("--inc", type=float, default=80.0, show_default=True, help="Inclination [deg].")
@click.option("--culm-az", type=float, default=0.0, show_default=True)
@click.option("--culm-el", type=float, default=75.0, show_default=True)
@click.option("--ts", type=float, default=5.0, show_default=True, help="Sampling cadence [s].")
@click.option("--arc-fraction", type=float, default=0.03, show_default=True, help="Arc length / orbital period.")
@click.option("--noise-level", default="k1", show_default=True, help="Noise ladder step k1..k10.")
@click.option("--noise-scale", type=float, default=1.0, show_default=True, help="0 = noiseless with assumed sigmas.")
@click.option("--seed", type=int, default=0, show_default=True)
@_guarded
def simulate(output, truth_output, geometry, a_km, ecc, inc, culm_az, culm_el, ts,
             arc_fraction, noise_level, noise_scale, seed):
    """Generate one synthetic track (and optionally its truth record)."""
    geom, ref = _load_geometry(geometry)
    noise = _parse_noise(noise_level, noise_scale)
    spec = PassSpec(
        a_km=a_km, e=ecc, i_deg=inc, culm_az_deg=culm_az, culm_el_deg=culm_el,
        t_s=ts, arc_fraction=arc_fraction, noise=noise, seed=seed,
    )
    track, truth = generate_pass(spec, geom)
    dio.save_track(output, track, ref)
    if truth_output:
        dio.save_truth(truth_output, truth, ref)
    click.echo(f"wrote {len(track)} epochs to {output}")


def _load_geometry(path):
    if path:
        return dio.load_geometry(path)
    return example_geometry(), dio.DEFAULT_REF_EPOCH


def _parse_noise(label: str, scale: float):
    if not (label.startswith("k") and label[1:].isdigit()):
        raise ValueError("noise level must look like k1..k10")
    step = int(label[1:])
    if not 1 <= step <= 10:
        raise ValueError("noise level must be in k1..k10")
    n = noise_ladder(step)
    from dataclasses import replace

    return replace(n, scale=scale)


@main.command()
@click.option("--input", "input_", required=True, type=click.Path(exists=True), help="Track JSON.")
@click.option("--output", required=True, type=click.Path(), help="Orbit-set JSON output path.")
@solver_options
@_guarded
def solve(input_, output, **kw):
    """Solve a track into an orbit set with bounds."""
    cfg = _solver_config(kw)
    track = dio.load_track(input_)
    t0 = time.perf_counter()
    if cfg.mode == "regress":
        polar = regress_track(track, cfg.iota, cfg.regression_order, cfg.n_mc, cfg.seed)
    else:
        polar = mc_raw_processing(track, cfg.iota, cfg.n_mc, cfg.seed)
    orbit_set = solve_track(polar, cfg)
    wall = time.perf_counter() - t0
    dio.save_orbit_set(output, orbit_set)
    names = ReducedElements.names()
    click.echo("nominal elements:")
    for name, val, b in zip(names, orbit_set.elements.as_array(), orbit_set.bounds):
        click.echo(f"  {name:>8s} = {val: .8g}   b = {0.5 * (b.hi - b.lo):.3e}")
    diag = orbit_set.diagnostics
    if diag is not None:
        click.echo(
            f"corner scan: {diag.converged}/{diag.attempted} converged, "
            f"selected corner {diag.selected_corner}, "
            f"R* = {min(diag.scores.values()):.4g}"
        )
    click.echo(f"N_s = {orbit_set.n_sets}, wall = {wall:.2f} s")


@main.command()
@click.option("--config", type=click.Path(exists=True), help="Campaign config JSON.")
@click.option("--output-prefix", required=True, type=click.Path(), help="Prefix for output JSON/CSV files.")
@click.option("--passes", type=int, default=None, help="Number of passes (overrides config).")
@click.option("--noise-level", default=None, help="Noise ladder step k1..k10 (overrides config).")
@click.option("--ts", type=float, multiple=True, help="Sampling cadences to draw from (overrides config).")
@click.option("--arc-min", type=float, default=None, help="Min arc fraction (overrides config).")
@click.option("--arc-max", type=float, default=None, help="Max arc fraction (overrides config).")
@click.option("--geometry", type=click.Path(exists=True), help="Geometry config JSON.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes.")
@solver_options
@_guarded
def campaign(config, output_prefix, passes, noise_level, ts, arc_min, arc_max, geometry, jobs, **kw):
    """Run a multi-pass campaign and write summary/per-pass tables."""
    cfg = _solver_config(kw)
    doc = json.loads(Path(config).read_text()) if config else {}
    n = passes if passes is not None else int(doc.get("passes", 0))
    if n <= 0:
        raise ValueError("campaign needs a positive number of passes")
    label = noise_level or doc.get("noise_level", "k1")
    noise = _parse_noise(label, float(doc.get("noise_scale", 1.0)))
    ts_choices = tuple(ts) or tuple(doc.get("t_s_choices", (3.0, 5.0, 7.5)))
    arc_range = (
        arc_min if arc_min is not None else float(doc.get("arc_min", 0.01)),
        arc_max if arc_max is not None else float(doc.get("arc_max", 0.05)),
    )
    geom, _ = _load_geometry(geometry)
    specs = sample_pass_specs(n, noise, t_s_choices=ts_choices, arc_range=arc_range, seed=kw["seed"])
    result = run_campaign(specs, geom, cfg, jobs=jobs)
    prefix = Path(output_prefix)
    dio.save_campaign_json(prefix.with_suffix(".json"), result)
    dio.save_campaign_csv(prefix.parent / (prefix.name + "_summary.csv"), result)
    dio.save_pass_table_csv(prefix.parent / (prefix.name + "_passes.csv"), result)
    s = result.summary()
    click.echo(
        f"{s['n_passes']} passes, success rate {s['success_rate']:.2f}, "
        f"wall {s['wall_s']:.1f} s; tables at {prefix}_summary.csv"
    )


@main.command()
@click.option("--input", "input_", required=True, type=click.Path(exists=True), help="Orbit-set JSON.")
@click.option("--truth", type=click.Path(exists=True), help="Truth JSON for error computation.")
@click.option("--samples", type=int, default=0, help="Check N uniform deviation samples against the bounds.")
@click.option("--seed", type=int, default=0, show_default=True)
@_guarded
def evaluate(input_, truth, samples, seed):
    """Report an orbit set's nominal elements, bounds and errors."""
    orbit_set = dio.load_orbit_set(input_)
    names = ReducedElements.names()
    vals = orbit_set.elements.as_array()
    click.echo(f"N_s = {orbit_set.n_sets}")
    for j, name in enumerate(names):
        b = orbit_set.bounds[j]
        click.echo(f"  {name:>8s} = {vals[j]: .8g}   bounds = [{b.lo:.8g}, {b.hi:.8g}]")
    if truth:
        doc = dio.load_truth(truth)
        tru = np.array([doc["elements"][n] for n in names])
        errs = np.abs(vals - tru)
        errs[2:] = np.abs(angle_diff_deg(vals[2:], tru[2:]))
        for name, e in zip(names, errs):
            click.echo(f"  eps_{name} = {e:.3e}")
    if samples > 0:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-1.0, 1.0, size=(samples, 6))
        out = orbit_set.predict(pts)
        inside = np.ones(samples, dtype=bool)
        for j in range(5):
            b = orbit_set.bounds[j]
            if j < 2:
                ok = (out[:, j] >= b.lo) & (out[:, j] <= b.hi)
            else:
                mid, half = 0.5 * (b.lo + b.hi), 0.5 * (b.hi - b.lo)
                ok = np.abs(angle_diff_deg(out[:, j], mid)) <= half
            inside &= ok
        click.echo(f"samples inside bounds: {int(inside.sum())}/{samples}")


if __name__ == "__main__":
    main()
