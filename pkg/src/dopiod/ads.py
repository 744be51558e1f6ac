"""Automatic domain splitting.

Drives a user-supplied map generator over a binary subdivision of the
normalized box [-1,1]^v, re-expanding until per-output accuracy
tolerances are met or the per-direction split budget is exhausted.  The
result is a manifold: a list of (sub-domain, Taylor map) entries whose
domains partition the box exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import TaylorPoly
from .maps import TaylorMap

__all__ = [
    "SubDomain",
    "ManifoldEntry",
    "Manifold",
    "AdsConfig",
    "truncation_error",
    "choose_split_direction",
    "run_ads",
]


def truncation_error(p: TaylorPoly) -> float:
    """Sum of absolute top-order coefficients: proxy for the next
    Taylor remainder term."""
    mask = p.alg.deg == p.order
    return float(np.abs(p.coeffs[mask]).sum())


def _split_masses(m: TaylorMap, weights=None) -> np.ndarray:
    """Per-variable share of the (optionally weighted) top-order mass."""
    alg = m.alg
    mask = alg.deg == alg.order
    exps = alg.exps[mask].astype(float) / alg.order
    masses = np.zeros(alg.num_vars)
    for j, p in enumerate(m.outputs):
        w = 1.0 if weights is None else float(weights[j])
        masses += w * (np.abs(p.coeffs[mask]) @ exps)
    return masses


def choose_split_direction(m: TaylorMap, weights=None, allowed=None) -> int:
    """Variable with the largest top-order coefficient mass; ties go to
    the lowest index.  ``allowed`` restricts the candidates."""
    masses = _split_masses(m, weights)
    idx = range(m.num_vars) if allowed is None else [i for i in range(m.num_vars) if allowed[i]]
    idx = list(idx)
    if not idx:
        raise ValueError("no splittable variable")
    return max(idx, key=lambda i: (masses[i], -i))


@dataclass(frozen=True)
class SubDomain:
    """Axis-aligned dyadic sub-box of [-1,1]^v."""

    center: tuple[float, ...]
    half_width: tuple[float, ...]
    split_counts: tuple[int, ...]
    path: str = ""

    @classmethod
    def root(cls, num_vars: int) -> "SubDomain":
        return cls((0.0,) * num_vars, (1.0,) * num_vars, (0,) * num_vars)

    @property
    def num_vars(self) -> int:
        return len(self.center)

    def volume(self) -> float:
        return float(np.prod(2.0 * np.asarray(self.half_width)))

    def contains(self, point, slack: float = 1e-12) -> bool:
        p = np.asarray(point, dtype=float)
        c = np.asarray(self.center)
        h = np.asarray(self.half_width)
        return bool(np.all(np.abs(p - c) <= h + slack))

    def to_local(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        return (p - np.asarray(self.center)) / np.asarray(self.half_width)

    def split(self, direction: int) -> tuple["SubDomain", "SubDomain"]:
        c = list(self.center)
        h = list(self.half_width)
        n = list(self.split_counts)
        h[direction] *= 0.5
        n[direction] += 1
        lo, hi = list(c), list(c)
        lo[direction] -= h[direction]
        hi[direction] += h[direction]
        return (
            SubDomain(tuple(lo), tuple(h), tuple(n), self.path + f"{direction}L"),
            SubDomain(tuple(hi), tuple(h), tuple(n), self.path + f"{direction}R"),
        )

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "half_width": list(self.half_width),
            "split_counts": list(self.split_counts),
            "path": self.path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubDomain":
        return cls(
            tuple(d["center"]),
            tuple(d["half_width"]),
            tuple(int(n) for n in d["split_counts"]),
            d.get("path", ""),
        )


CONVERGED = "converged"
BUDGET_EXHAUSTED = "budget_exhausted"
FAILED = "failed"


@dataclass(frozen=True)
class ManifoldEntry:
    domain: SubDomain
    map: TaylorMap | None
    status: str
    errors: tuple[float, ...] | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "status": self.status,
            "errors": list(self.errors) if self.errors is not None else None,
            "message": self.message,
            "map": self.map.to_dict() if self.map is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifoldEntry":
        return cls(
            domain=SubDomain.from_dict(d["domain"]),
            map=TaylorMap.from_dict(d["map"]) if d.get("map") else None,
            status=d["status"],
            errors=tuple(d["errors"]) if d.get("errors") is not None else None,
            message=d.get("message", ""),
        )


@dataclass(frozen=True)
class AdsConfig:
    """Splitting tolerances (physical units, one per map output), the
    per-direction split budget and the expansion order."""

    tolerances: tuple[float, ...]
    max_splits: int = 5
    order: int = 4

    def __post_init__(self):
        if any(t <= 0 for t in self.tolerances):
            raise ValueError("tolerances must be positive")
        if self.max_splits < 0 or self.order < 1:
            raise ValueError("invalid split budget or order")


@dataclass
class Manifold:
    """Union of (sub-domain, Taylor map) pairs covering [-1,1]^v."""

    entries: list[ManifoldEntry]
    config: AdsConfig
    num_vars: int

    @property
    def n_sets(self) -> int:
        return len(self.entries)

    @property
    def all_converged(self) -> bool:
        return all(e.converged for e in self.entries)

    def converged_entries(self) -> list[ManifoldEntry]:
        return [e for e in self.entries if e.converged]

    def find_entry(self, point) -> ManifoldEntry:
        """Covering entry in canonical order (ties to the first)."""
        p = np.asarray(point, dtype=float)
        if np.any(np.abs(p) > 1.0 + 1e-12):
            raise ValueError("point outside the unit box")
        for e in self.entries:
            if e.domain.contains(p):
                return e
        raise RuntimeError("no covering entry (corrupt manifold)")

    def eval(self, point) -> np.ndarray:
        e = self.find_entry(point)
        if e.map is None:
            raise RuntimeError(f"covering entry has no map (status {e.status})")
        return e.map.eval(e.domain.to_local(point))

    def to_dict(self) -> dict:
        return {
            "format": "dopiod.manifold/1",
            "num_vars": self.num_vars,
            "config": {
                "tolerances": list(self.config.tolerances),
                "max_splits": self.config.max_splits,
                "order": self.config.order,
            },
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Manifold":
        if d.get("format", "dopiod.manifold/1") != "dopiod.manifold/1":
            raise ValueError("unrecognized manifold format")
        cfg = AdsConfig(
            tolerances=tuple(d["config"]["tolerances"]),
            max_splits=int(d["config"]["max_splits"]),
            order=int(d["config"]["order"]),
        )
        return cls(
            entries=[ManifoldEntry.from_dict(e) for e in d["entries"]],
            config=cfg,
            num_vars=int(d["num_vars"]),
        )


def run_ads(
    generator: Callable[[SubDomain], TaylorMap],
    num_vars: int,
    cfg: AdsConfig,
) -> Manifold:
    """Recursively split [-1,1]^v until the generator's expansions meet
    the tolerances or the split budget runs out.

    Generator failures on a sub-domain are recorded as failed entries and
    do not abort the run; the domain is retained so the result always
    partitions the box.  Processing order is a deterministic depth-first
    preorder (low half first).
    """
    entries: list[ManifoldEntry] = []
    weights = [1.0 / t for t in cfg.tolerances]
    stack = [SubDomain.root(num_vars)]
    while stack:
        dom = stack.pop()
        try:
            m = generator(dom)
        except Exception as exc:  # noqa: BLE001 - accounted, not fatal
            entries.append(
                ManifoldEntry(dom, None, FAILED, None, f"{type(exc).__name__}: {exc}")
            )
            continue
        if len(m) != len(cfg.tolerances):
            raise ValueError("generator output count does not match tolerances")
        errs = tuple(truncation_error(p) for p in m.outputs)
        if all(e <= t for e, t in zip(errs, cfg.tolerances)):
            entries.append(ManifoldEntry(dom, m, CONVERGED, errs))
            continue
        allowed = [n < cfg.max_splits for n in dom.split_counts]
        if not any(allowed):
            entries.append(ManifoldEntry(dom, m, BUDGET_EXHAUSTED, errs))
            continue
        direction = choose_split_direction(m, weights, allowed)
        lo, hi = dom.split(direction)
        stack.append(hi)
        stack.append(lo)
    return Manifold(entries=entries, config=cfg, num_vars=num_vars)
