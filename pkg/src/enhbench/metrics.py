"""Recognition-improvement metrics over externally produced predictions.

Two top-5 rates per (collection, network) cell: at least one label
synset present (M1) and every label synset present (M2). Comparison
against a baseline uses a threshold over the score difference; ranking
awards one point per cell to the best strictly-improving algorithm.
Rates are exact rationals.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .frames import CropRecord


class PredictionFormatError(ValueError):
    """Malformed prediction record; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class IntegrityError(ValueError):
    """Cross-file inconsistency (unknown crop, label, or cell sets)."""


TOP_K = 5
METRICS = ("m1", "m2")


@dataclass(frozen=True)
class PredictionRecord:
    crop_id: str
    network_id: str
    top5: tuple[tuple[str, float], ...]

    @property
    def synsets(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.top5)


def _validate_prediction(raw: dict, line_no: int) -> PredictionRecord:
    crop_id = raw.get("crop_id")
    network_id = raw.get("network_id")
    preds = raw.get("predictions")
    if not isinstance(crop_id, str) or not crop_id:
        raise PredictionFormatError(line_no, "missing crop_id")
    if not isinstance(network_id, str) or not network_id:
        raise PredictionFormatError(line_no, "missing network_id")
    if not isinstance(preds, list) or len(preds) != TOP_K:
        raise PredictionFormatError(line_no, f"expected exactly {TOP_K} predictions")
    top5 = []
    for p in preds:
        synset = p.get("synset")
        prob = p.get("prob")
        if not isinstance(synset, str) or not synset:
            raise PredictionFormatError(line_no, "prediction missing synset")
        if not isinstance(prob, (int, float)) or not (0.0 <= float(prob) <= 1.0):
            raise PredictionFormatError(line_no, f"probability out of [0,1]: {prob!r}")
        top5.append((synset, float(prob)))
    probs = [p for _, p in top5]
    if any(a < b for a, b in zip(probs, probs[1:])):
        raise PredictionFormatError(line_no, "probabilities must be non-increasing")
    synsets = [s for s, _ in top5]
    if len(set(synsets)) != TOP_K:
        raise PredictionFormatError(line_no, "duplicate synset in top-5")
    return PredictionRecord(crop_id=crop_id, network_id=network_id, top5=tuple(top5))


def load_predictions(path: str | os.PathLike) -> list[PredictionRecord]:
    """Load line-delimited JSON prediction records."""
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PredictionFormatError(line_no, f"bad JSON: {exc}") from exc
            out.append(_validate_prediction(raw, line_no))
    return out


def m1_hit(label_synsets: frozenset[str] | set[str], top5: Sequence[str]) -> bool:
    """True iff at least one label synset appears in the top-5 list."""
    if not label_synsets:
        raise ValueError("label synset set must be non-empty")
    return not frozenset(label_synsets).isdisjoint(top5)


def m2_hit(label_synsets: frozenset[str] | set[str], top5: Sequence[str]) -> bool:
    """True iff every label synset appears in the top-5 list."""
    if not label_synsets:
        raise ValueError("label synset set must be non-empty")
    return frozenset(label_synsets).issubset(top5)


@dataclass(frozen=True)
class MetricReport:
    collection: str
    network: str
    evaluated: int
    skipped: int
    m1_hits: int
    m2_hits: int
    m2_unachievable: int

    def rate(self, metric: str) -> Fraction:
        hits = {"m1": self.m1_hits, "m2": self.m2_hits}[metric]
        return Fraction(hits, self.evaluated) if self.evaluated else Fraction(0)

    def to_json_dict(self) -> dict:
        return {
            "collection": self.collection,
            "network": self.network,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "m1_hits": self.m1_hits,
            "m2_hits": self.m2_hits,
            "m1_rate": float(self.rate("m1")),
            "m2_rate": float(self.rate("m2")),
            "m1_rate_exact": str(self.rate("m1")),
            "m2_rate_exact": str(self.rate("m2")),
            "m2_unachievable": self.m2_unachievable,
        }


def aggregate_rates(
    predictions: Iterable[PredictionRecord],
    manifest: Sequence[CropRecord],
    superclass_map: Mapping[str, frozenset[str]],
) -> list[MetricReport]:
    """Per (collection, network) M1/M2 rates over resolvable predictions.

    Manifest crops with no prediction for a network count as skipped for
    that cell, never as misses. Unknown crop ids or labels are hard
    integrity errors.
    """
    by_crop: dict[str, CropRecord] = {}
    for crop in manifest:
        if crop.crop_id in by_crop:
            raise IntegrityError(f"duplicate crop_id in manifest: {crop.crop_id}")
        by_crop[crop.crop_id] = crop
    crops_per_collection: dict[str, int] = {}
    for crop in manifest:
        if crop.label not in superclass_map:
            raise IntegrityError(f"label {crop.label!r} not in super-class map")
        crops_per_collection[crop.collection] = crops_per_collection.get(crop.collection, 0) + 1

    cells: dict[tuple[str, str], dict] = {}
    seen: set[tuple[str, str]] = set()
    for pred in predictions:
        crop = by_crop.get(pred.crop_id)
        if crop is None:
            raise IntegrityError(f"prediction for unknown crop_id {pred.crop_id!r}")
        key = (pred.crop_id, pred.network_id)
        if key in seen:
            raise IntegrityError(f"duplicate prediction for {key}")
        seen.add(key)
        label_synsets = superclass_map[crop.label]
        cell = cells.setdefault(
            (crop.collection, pred.network_id),
            {"evaluated": 0, "m1": 0, "m2": 0, "m2_unachievable": 0},
        )
        cell["evaluated"] += 1
        ids = pred.synsets
        if m1_hit(label_synsets, ids):
            cell["m1"] += 1
        if len(label_synsets) > TOP_K:
            cell["m2_unachievable"] += 1
        elif m2_hit(label_synsets, ids):
            cell["m2"] += 1
    reports = []
    for (collection, network) in sorted(cells):
        cell = cells[(collection, network)]
        reports.append(
            MetricReport(
                collection=collection,
                network=network,
                evaluated=cell["evaluated"],
                skipped=crops_per_collection.get(collection, 0) - cell["evaluated"],
                m1_hits=cell["m1"],
                m2_hits=cell["m2"],
                m2_unachievable=cell["m2_unachievable"],
            )
        )
    return reports


@dataclass(frozen=True)
class ComparisonCell:
    collection: str
    network: str
    metric: str
    enhanced: Fraction
    baseline: Fraction
    valid: bool

    @property
    def delta(self) -> Fraction:
        return self.enhanced - self.baseline

    def to_json_dict(self) -> dict:
        return {
            "collection": self.collection,
            "network": self.network,
            "metric": self.metric,
            "enhanced_rate": float(self.enhanced),
            "baseline_rate": float(self.baseline),
            "delta": float(self.delta),
            "delta_exact": str(self.delta),
            "valid": self.valid,
        }


@dataclass(frozen=True)
class ComparisonReport:
    epsilon: float
    cells: tuple[ComparisonCell, ...]
    incomparable: tuple[tuple[str, str], ...]

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "cells": [c.to_json_dict() for c in self.cells],
            "incomparable": [list(k) for k in self.incomparable],
        }


def _by_cell(reports: Sequence[MetricReport]) -> dict[tuple[str, str], MetricReport]:
    out = {}
    for r in reports:
        key = (r.collection, r.network)
        if key in out:
            raise IntegrityError(f"duplicate report cell {key}")
        out[key] = r
    return out


def compare(
    enhanced: Sequence[MetricReport],
    baseline: Sequence[MetricReport],
    epsilon: float = 0.0,
) -> ComparisonReport:
    """Per-cell score deltas against the baseline; valid iff delta > epsilon.

    Epsilon lies in [-1, 1]. Cells present in only one report set are
    flagged incomparable rather than scored.
    """
    if not -1.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be within [-1, 1], got {epsilon}")
    enh = _by_cell(enhanced)
    base = _by_cell(baseline)
    shared = sorted(set(enh) & set(base))
    incomparable = sorted(set(enh) ^ set(base))
    cells = []
    for key in shared:
        for metric in METRICS:
            e = enh[key].rate(metric)
            b = base[key].rate(metric)
            cells.append(
                ComparisonCell(
                    collection=key[0],
                    network=key[1],
                    metric=metric,
                    enhanced=e,
                    baseline=b,
                    valid=(e - b) > Fraction(epsilon).limit_denominator(10**12),
                )
            )
    return ComparisonReport(epsilon=epsilon, cells=tuple(cells), incomparable=tuple(incomparable))


@dataclass(frozen=True)
class RankingResult:
    points: dict[str, int]
    cells: tuple[dict, ...]

    def to_json_dict(self) -> dict:
        return {
            "points": dict(sorted(self.points.items())),
            "cells": list(self.cells),
        }


def rank_points(
    algorithms: Mapping[str, Sequence[MetricReport]],
    baseline: Sequence[MetricReport],
    epsilon: float = 0.0,
) -> RankingResult:
    """Count, per algorithm, the cells it wins with a valid score.

    A point is earned in a (collection, network, metric) cell iff the
    algorithm's rate strictly improves on the baseline by more than
    epsilon AND equals the maximum rate among all competitors; exact ties
    award the point to every tied leader.
    """
    if not algorithms:
        raise ValueError("need at least one algorithm")
    base = _by_cell(baseline)
    cell_keys = None
    per_algo = {}
    for name, reports in algorithms.items():
        cells = _by_cell(reports)
        if cell_keys is None:
            cell_keys = set(cells)
        elif set(cells) != cell_keys:
            raise IntegrityError(f"algorithm {name!r} has inconsistent cell set")
        per_algo[name] = cells
    assert cell_keys is not None
    missing = cell_keys - set(base)
    if missing:
        raise IntegrityError(f"baseline missing cells: {sorted(missing)}")

    eps = Fraction(epsilon).limit_denominator(10**12)
    points = {name: 0 for name in per_algo}
    detail = []
    for key in sorted(cell_keys):
        for metric in METRICS:
            b = base[key].rate(metric)
            rates = {name: cells[key].rate(metric) for name, cells in per_algo.items()}
            best = max(rates.values())
            winners = sorted(
                name for name, r in rates.items() if r == best and (r - b) > eps
            )
            for name in winners:
                points[name] += 1
            detail.append(
                {
                    "collection": key[0],
                    "network": key[1],
                    "metric": metric,
                    "baseline_rate": float(b),
                    "rates": {name: float(r) for name, r in sorted(rates.items())},
                    "winners": winners,
                }
            )
    return RankingResult(points=points, cells=tuple(detail))


def load_scores(path: str | os.PathLike) -> dict[str, float]:
    """Load an external per-image scalar score file: {image_id, score} lines."""
    out: dict[str, float] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                image_id = raw["image_id"]
                score = float(raw["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad score line: {exc}") from exc
            if image_id in out:
                raise IntegrityError(f"{path}:{line_no}: duplicate image_id {image_id!r}")
            out[image_id] = score
    return out


def write_reports_json(reports: Sequence[MetricReport], path: str | os.PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    payload = [r.to_json_dict() for r in reports]
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)
