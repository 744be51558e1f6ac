"""File formats: tracks (JSON/CSV), geometry configs, orbit sets and
campaign tables.

Every JSON document carries a ``format`` tag (``dopiod.<kind>/<version>``);
unknown kinds or versions are rejected.  Epochs are stored as ISO-8601 UTC
strings relative to a reference epoch that anchors the track's internal
second-based timeline.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .astro import RadarGeometry
from .measproc import PolarTrack, RawTrack
from .pipeline import OrbitSet
from .simulate import CampaignResult, TruthRecord

TRACK_FORMAT = "dopiod.track/1"
POLAR_FORMAT = "dopiod.polar_track/1"
GEOMETRY_FORMAT = "dopiod.geometry/1"
TRUTH_FORMAT = "dopiod.truth/1"
CAMPAIGN_FORMAT = "dopiod.campaign/1"

DEFAULT_REF_EPOCH = datetime(2000, 1, 1, 12, 0, 0, tzinfo=timezone.utc)

TRACK_CSV_COLUMNS = (
    "epoch_utc",
    "az_deg",
    "el_deg",
    "rr_kms",
    "sigma_az_deg",
    "sigma_el_deg",
    "sigma_rr_kms",
)


class FormatError(ValueError):
    """Raised for unknown format tags or malformed documents."""


def _check_format(doc: dict, expected: str) -> None:
    tag = doc.get("format")
    if tag != expected:
        raise FormatError(f"expected format {expected!r}, found {tag!r}")


def _require(doc: dict, *fields: str) -> None:
    missing = [f for f in fields if f not in doc]
    if missing:
        raise FormatError(f"missing required field(s): {', '.join(missing)}")


def parse_epoch_utc(text: str) -> datetime:
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_epoch_utc(ref: datetime, seconds: float) -> str:
    return (ref + timedelta(seconds=float(seconds))).isoformat().replace("+00:00", "Z")


def _seconds_since(ref: datetime, text: str) -> float:
    return (parse_epoch_utc(text) - ref).total_seconds()


# ---------------------------------------------------------------------------
# geometry configs


def geometry_to_config(geom: RadarGeometry, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> dict:
    doc = {"format": GEOMETRY_FORMAT, "ref_epoch_utc": format_epoch_utc(ref_epoch, 0.0)}
    doc.update(geom.to_dict())
    return doc


def geometry_from_config(doc: dict) -> tuple[RadarGeometry, datetime]:
    _check_format(doc, GEOMETRY_FORMAT)
    _require(doc, "receiver", "transmitter")
    ref = parse_epoch_utc(doc.get("ref_epoch_utc", format_epoch_utc(DEFAULT_REF_EPOCH, 0.0)))
    return RadarGeometry.from_dict(doc), ref


def save_geometry(path, geom: RadarGeometry, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> None:
    Path(path).write_text(json.dumps(geometry_to_config(geom, ref_epoch), indent=2))


def load_geometry(path) -> tuple[RadarGeometry, datetime]:
    return geometry_from_config(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# raw tracks


def track_to_dict(track: RawTrack, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> dict:
    return {
        "format": TRACK_FORMAT,
        "ref_epoch_utc": format_epoch_utc(ref_epoch, 0.0),
        "geometry": track.geometry.to_dict(),
        "sigma_az_deg": track.sigma_az_deg,
        "sigma_el_deg": track.sigma_el_deg,
        "sigma_rr_kms": track.sigma_rr_kms,
        "records": [
            {
                "epoch_utc": format_epoch_utc(ref_epoch, t),
                "az_deg": float(a),
                "el_deg": float(e),
                "rr_kms": float(rr),
            }
            for t, a, e, rr in zip(track.epochs, track.az_deg, track.el_deg, track.rr_kms)
        ],
    }


def track_from_dict(doc: dict) -> RawTrack:
    _check_format(doc, TRACK_FORMAT)
    _require(doc, "geometry", "sigma_az_deg", "sigma_el_deg", "sigma_rr_kms", "records")
    ref = parse_epoch_utc(doc.get("ref_epoch_utc", format_epoch_utc(DEFAULT_REF_EPOCH, 0.0)))
    recs = doc["records"]
    for r in recs:
        _require(r, "epoch_utc", "az_deg", "el_deg", "rr_kms")
    return RawTrack(
        epochs=[_seconds_since(ref, r["epoch_utc"]) for r in recs],
        az_deg=[r["az_deg"] for r in recs],
        el_deg=[r["el_deg"] for r in recs],
        rr_kms=[r["rr_kms"] for r in recs],
        sigma_az_deg=float(doc["sigma_az_deg"]),
        sigma_el_deg=float(doc["sigma_el_deg"]),
        sigma_rr_kms=float(doc["sigma_rr_kms"]),
        geometry=RadarGeometry.from_dict(doc["geometry"]),
    )


def save_track(path, track: RawTrack, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> None:
    Path(path).write_text(json.dumps(track_to_dict(track, ref_epoch), indent=2))


def load_track(path) -> RawTrack:
    return track_from_dict(json.loads(Path(path).read_text()))


def save_track_csv(path, track: RawTrack, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACK_CSV_COLUMNS)
        for t, a, e, rr in zip(track.epochs, track.az_deg, track.el_deg, track.rr_kms):
            w.writerow(
                [
                    format_epoch_utc(ref_epoch, t),
                    repr(float(a)),
                    repr(float(e)),
                    repr(float(rr)),
                    repr(track.sigma_az_deg),
                    repr(track.sigma_el_deg),
                    repr(track.sigma_rr_kms),
                ]
            )


def load_track_csv(path, geometry: RadarGeometry, ref_epoch: datetime | None = None) -> RawTrack:
    """CSV tracks carry no geometry block, so the site model is supplied
    by the caller (typically from a geometry config)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise FormatError("empty track CSV")
    missing = [c for c in TRACK_CSV_COLUMNS if c not in rows[0]]
    if missing:
        raise FormatError(f"missing required column(s): {', '.join(missing)}")
    ref = ref_epoch or DEFAULT_REF_EPOCH
    return RawTrack(
        epochs=[_seconds_since(ref, r["epoch_utc"]) for r in rows],
        az_deg=[float(r["az_deg"]) for r in rows],
        el_deg=[float(r["el_deg"]) for r in rows],
        rr_kms=[float(r["rr_kms"]) for r in rows],
        sigma_az_deg=float(rows[0]["sigma_az_deg"]),
        sigma_el_deg=float(rows[0]["sigma_el_deg"]),
        sigma_rr_kms=float(rows[0]["sigma_rr_kms"]),
        geometry=geometry,
    )


# ---------------------------------------------------------------------------
# processed (polar) tracks


def polar_track_to_dict(track: PolarTrack, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> dict:
    return {
        "format": POLAR_FORMAT,
        "ref_epoch_utc": format_epoch_utc(ref_epoch, 0.0),
        "geometry": track.geometry.to_dict(),
        "iota": track.iota,
        "records": [
            {
                "epoch_utc": format_epoch_utc(ref_epoch, t),
                "alpha_deg": float(a),
                "delta_deg": float(d),
                "rr_kms": float(rr),
                "ci_alpha_deg": float(ca),
                "ci_delta_deg": float(cd),
                "ci_rr_kms": float(cr),
            }
            for t, a, d, rr, ca, cd, cr in zip(
                track.epochs,
                track.alpha_deg,
                track.delta_deg,
                track.rr_kms,
                track.ci_alpha_deg,
                track.ci_delta_deg,
                track.ci_rr_kms,
            )
        ],
    }


def polar_track_from_dict(doc: dict) -> PolarTrack:
    _check_format(doc, POLAR_FORMAT)
    _require(doc, "geometry", "iota", "records")
    ref = parse_epoch_utc(doc.get("ref_epoch_utc", format_epoch_utc(DEFAULT_REF_EPOCH, 0.0)))
    recs = doc["records"]
    fields = ("alpha_deg", "delta_deg", "rr_kms", "ci_alpha_deg", "ci_delta_deg", "ci_rr_kms")
    for r in recs:
        _require(r, "epoch_utc", *fields)
    return PolarTrack(
        epochs=[_seconds_since(ref, r["epoch_utc"]) for r in recs],
        alpha_deg=[r["alpha_deg"] for r in recs],
        delta_deg=[r["delta_deg"] for r in recs],
        rr_kms=[r["rr_kms"] for r in recs],
        ci_alpha_deg=[r["ci_alpha_deg"] for r in recs],
        ci_delta_deg=[r["ci_delta_deg"] for r in recs],
        ci_rr_kms=[r["ci_rr_kms"] for r in recs],
        iota=float(doc["iota"]),
        geometry=RadarGeometry.from_dict(doc["geometry"]),
    )


def save_polar_track(path, track: PolarTrack, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> None:
    Path(path).write_text(json.dumps(polar_track_to_dict(track, ref_epoch), indent=2))


def load_polar_track(path) -> PolarTrack:
    return polar_track_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# orbit sets, truth records, campaign tables


def save_orbit_set(path, orbit_set: OrbitSet) -> None:
    Path(path).write_text(json.dumps(orbit_set.to_dict(), indent=2))


def load_orbit_set(path) -> OrbitSet:
    doc = json.loads(Path(path).read_text())
    try:
        return OrbitSet.from_dict(doc)
    except ValueError as ex:
        raise FormatError(str(ex)) from ex


def save_truth(path, truth: TruthRecord, ref_epoch: datetime = DEFAULT_REF_EPOCH) -> None:
    doc = {"format": TRUTH_FORMAT, "epoch_utc": format_epoch_utc(ref_epoch, truth.epoch)}
    doc.update(truth.to_dict())
    Path(path).write_text(json.dumps(doc, indent=2))


def load_truth(path) -> dict:
    doc = json.loads(Path(path).read_text())
    _check_format(doc, TRUTH_FORMAT)
    _require(doc, "epoch_s", "r_km", "v_kms", "elements")
    return doc


def save_campaign_json(path, campaign: CampaignResult) -> None:
    Path(path).write_text(json.dumps(campaign.to_dict(), indent=2))


def save_campaign_csv(path, campaign: CampaignResult) -> None:
    """Summary table, one row per (noise level, arc-length bin) group."""
    rows = campaign.summary()["groups"]
    if not rows:
        raise FormatError("campaign produced no groups")
    columns = sorted({k for row in rows for k in row}, key=lambda k: (k not in rows[0], k))
    # keep the identifying columns first
    lead = ["noise", "arc_bin", "n", "n_success", "success_rate"]
    columns = lead + [c for c in columns if c not in lead]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, restval="")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def save_pass_table_csv(path, campaign: CampaignResult) -> None:
    """Per-pass table (one row per simulated pass) for external plotting."""
    dicts = [r.to_dict() for r in campaign.results]
    flat = []
    for d in dicts:
        row = {k: v for k, v in d.items() if not isinstance(v, list)}
        for key in ("errors", "bound_half_widths"):
            vals = d.get(key)
            names = ("a_km", "e", "i_deg", "raan_deg", "u_deg")
            prefix = "eps" if key == "errors" else "b"
            for name, v in zip(names, vals if vals is not None else [np.nan] * 5):
                row[f"{prefix}_{name}"] = v
        flat.append(row)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(flat[0]), restval="")
        w.writeheader()
        for row in flat:
            w.writerow(row)
