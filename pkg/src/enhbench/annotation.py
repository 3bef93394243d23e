"""VATIC annotation parsing, track grouping, and super-class synset maps.

A VATIC file is plain text with one object annotation per line and ten
whitespace-separated columns::

    track_id xmin ymin xmax ymax frame lost occluded generated "label"

The label is enclosed in double quotes and may contain spaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class VaticParseError(ValueError):
    """Malformed annotation line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TrackError(ValueError):
    """Inconsistent records within one track id."""


class SuperClassMapError(ValueError):
    """Invalid super-class -> synset-set mapping file."""


@dataclass(frozen=True)
class AnnotationRecord:
    track_id: int
    xmin: int
    ymin: int
    xmax: int
    ymax: int
    frame: int
    lost: int
    occluded: int
    generated: int
    label: str

    @property
    def width(self) -> int:
        return self.xmax - self.xmin

    @property
    def height(self) -> int:
        return self.ymax - self.ymin


@dataclass(frozen=True)
class Track:
    track_id: int
    label: str
    records: tuple[AnnotationRecord, ...]


def _parse_line(line: str, line_no: int) -> AnnotationRecord:
    parts = line.split(None, 9)
    if len(parts) != 10:
        raise VaticParseError(line_no, f"expected 10 columns, got {len(parts)}")
    nums = []
    names = ("track_id", "xmin", "ymin", "xmax", "ymax", "frame", "lost", "occluded", "generated")
    for name, tok in zip(names, parts[:9]):
        try:
            nums.append(int(tok))
        except ValueError:
            raise VaticParseError(line_no, f"non-integer {name}: {tok!r}") from None
    track_id, xmin, ymin, xmax, ymax, frame = nums[:6]
    lost, occluded, generated = nums[6:]
    if track_id < 0:
        raise VaticParseError(line_no, f"negative track_id {track_id}")
    if frame < 0:
        raise VaticParseError(line_no, f"negative frame {frame}")
    if xmin > xmax:
        raise VaticParseError(line_no, f"xmin {xmin} > xmax {xmax}")
    if ymin > ymax:
        raise VaticParseError(line_no, f"ymin {ymin} > ymax {ymax}")
    for name, flag in (("lost", lost), ("occluded", occluded), ("generated", generated)):
        if flag not in (0, 1):
            raise VaticParseError(line_no, f"{name} flag must be 0 or 1, got {flag}")
    raw_label = parts[9].rstrip()
    if len(raw_label) < 2 or not (raw_label.startswith('"') and raw_label.endswith('"')):
        raise VaticParseError(line_no, f"label must be quoted, got {raw_label!r}")
    label = raw_label[1:-1]
    if not label:
        raise VaticParseError(line_no, "empty label")
    return AnnotationRecord(
        track_id=track_id,
        xmin=xmin,
        ymin=ymin,
        xmax=xmax,
        ymax=ymax,
        frame=frame,
        lost=lost,
        occluded=occluded,
        generated=generated,
        label=label,
    )


def parse_vatic(text: str) -> list[AnnotationRecord]:
    """Parse VATIC annotation text; all-or-nothing per file.

    Returns one record per non-empty line, in file order. Raises
    VaticParseError (with line number) on the first malformed line.
    """
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        records.append(_parse_line(line, line_no))
    return records


def serialize_vatic(records: list[AnnotationRecord]) -> str:
    """Render records back to VATIC text (single-space separated)."""
    lines = []
    for r in records:
        lines.append(
            f"{r.track_id} {r.xmin} {r.ymin} {r.xmax} {r.ymax} "
            f'{r.frame} {r.lost} {r.occluded} {r.generated} "{r.label}"'
        )
    return "\n".join(lines) + ("\n" if lines else "")


def filter_visible(
    records: list[AnnotationRecord], *, exclude_generated: bool = False
) -> list[AnnotationRecord]:
    """Keep records with lost == 0 and occluded == 0, preserving order.

    Interpolated (generated == 1) boxes are kept by default; pass
    ``exclude_generated=True`` to drop them as well.
    """
    out = [r for r in records if r.lost == 0 and r.occluded == 0]
    if exclude_generated:
        out = [r for r in out if r.generated == 0]
    return out


def group_tracks(records: list[AnnotationRecord]) -> list[Track]:
    """Group records by track id, sorted by frame within each track.

    Tracks are returned ordered by track id. Duplicate (track, frame)
    pairs or conflicting labels within a track raise TrackError.
    """
    by_id: dict[int, list[AnnotationRecord]] = {}
    for r in records:
        by_id.setdefault(r.track_id, []).append(r)
    tracks = []
    for track_id in sorted(by_id):
        recs = sorted(by_id[track_id], key=lambda r: r.frame)
        labels = {r.label for r in recs}
        if len(labels) > 1:
            raise TrackError(f"track {track_id}: conflicting labels {sorted(labels)}")
        frames = [r.frame for r in recs]
        for a, b in zip(frames, frames[1:]):
            if a == b:
                raise TrackError(f"track {track_id}: duplicate frame {a}")
        tracks.append(Track(track_id=track_id, label=recs[0].label, records=tuple(recs)))
    return tracks


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise SuperClassMapError(f"duplicate super-class name {key!r}")
        seen[key] = value
    return seen


def load_superclass_map(path: str | Path) -> dict[str, frozenset[str]]:
    """Load a JSON super-class map: {name: [synset, ...], ...}.

    Every super-class must map to a non-empty list of distinct synset ids.
    Matching against labels elsewhere is case-sensitive and exact.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise SuperClassMapError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SuperClassMapError("super-class map must be a JSON object")
    out: dict[str, frozenset[str]] = {}
    for name, synsets in raw.items():
        if not isinstance(name, str) or not name:
            raise SuperClassMapError(f"invalid super-class name {name!r}")
        if not isinstance(synsets, list) or not synsets:
            raise SuperClassMapError(f"super-class {name!r} must map to a non-empty list")
        if any(not isinstance(s, str) or not s for s in synsets):
            raise SuperClassMapError(f"super-class {name!r} has a non-string synset id")
        if len(set(synsets)) != len(synsets):
            raise SuperClassMapError(f"super-class {name!r} has duplicate synset ids")
        out[name] = frozenset(synsets)
    return out
