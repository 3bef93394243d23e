"""Classifier-ready square crop extraction and manifest building.

Frames live on disk as ``<frames_dir>/<video_id>/<frame:06d>.png``. A
manifest is line-delimited JSON, one crop record per line, ordered by
(video, frame, track) so rebuilds are byte-stable.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .annotation import AnnotationRecord, filter_visible, parse_vatic
from .image import ImageError, ensure_image, read_image


class CropError(ValueError):
    """Contract or geometry violation during crop extraction."""


@dataclass(frozen=True)
class CropRecord:
    crop_id: str
    video_id: str
    frame: int
    track_id: int
    label: str
    x: int
    y: int
    w: int
    h: int
    square: bool
    collection: str = "default"


@dataclass(frozen=True)
class SkipEntry:
    video_id: str
    frame: int
    track_id: int
    reason: str


def crop_geometry(
    frame_w: int, frame_h: int, record: AnnotationRecord, min_side: int = 224
) -> tuple[int, int, int, int, bool]:
    """Compute the square crop rectangle for an annotation.

    The crop is the square of side max(min_side, bbox_w, bbox_h) centered
    on the bbox center, origin floor(center - side/2), translated to stay
    inside the frame. Axes where the frame is smaller than the side span
    the full frame and the crop is flagged non-square.

    Returns (x, y, w, h, square).
    """
    side = max(min_side, record.width, record.height)
    cx = (record.xmin + record.xmax) / 2.0
    cy = (record.ymin + record.ymax) / 2.0
    w = min(side, frame_w)
    h = min(side, frame_h)
    x = int(math.floor(cx - side / 2.0))
    y = int(math.floor(cy - side / 2.0))
    x = max(0, min(x, frame_w - w))
    y = max(0, min(y, frame_h - h))
    return x, y, w, h, (w == side and h == side)


def make_crop_id(video_id: str, frame: int, track_id: int) -> str:
    return f"{video_id}_f{frame:06d}_t{track_id:03d}"


def extract_crop(
    frame: np.ndarray,
    record: AnnotationRecord,
    min_side: int = 224,
    *,
    video_id: str = "",
    collection: str = "default",
) -> tuple[np.ndarray, CropRecord]:
    """Cut the annotation's square crop out of a frame.

    The record must be visible (lost == occluded == 0) and its bbox must
    intersect the frame; no pixels are synthesized, so crops against an
    undersized frame come back flagged non-square.
    """
    frame = ensure_image(frame, name="frame")
    if record.lost or record.occluded:
        raise CropError(f"record track={record.track_id} frame={record.frame} is not visible")
    fh, fw = frame.shape[:2]
    if record.xmax < 0 or record.xmin > fw - 1 or record.ymax < 0 or record.ymin > fh - 1:
        raise CropError(
            f"bbox ({record.xmin},{record.ymin},{record.xmax},{record.ymax}) "
            f"outside {fw}x{fh} frame"
        )
    x, y, w, h, square = crop_geometry(fw, fh, record, min_side)
    crop = frame[y : y + h, x : x + w].copy()
    rec = CropRecord(
        crop_id=make_crop_id(video_id, record.frame, record.track_id),
        video_id=video_id,
        frame=record.frame,
        track_id=record.track_id,
        label=record.label,
        x=x,
        y=y,
        w=w,
        h=h,
        square=square,
        collection=collection,
    )
    return crop, rec


def frame_path(frames_dir: str | os.PathLike, video_id: str, frame: int) -> Path:
    return Path(frames_dir) / video_id / f"{frame:06d}.png"


def find_annotation_files(annotations_dir: str | os.PathLike) -> list[tuple[str, str, Path]]:
    """List (collection, video_id, path) for every ``*.txt`` annotation file.

    Files directly in the directory belong to collection "default"; files
    one level down use the subdirectory name as the collection.
    """
    root = Path(annotations_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"annotations directory not found: {root}")
    out = []
    for path in sorted(root.glob("*.txt")):
        out.append(("default", path.stem, path))
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        for path in sorted(sub.glob("*.txt")):
            out.append((sub.name, path.stem, path))
    return out


def build_manifest(
    annotations_dir: str | os.PathLike,
    frames_dir: str | os.PathLike,
    min_side: int = 224,
    *,
    exclude_generated: bool = False,
) -> tuple[list[CropRecord], list[SkipEntry]]:
    """Resolve visible annotations against frame files into a crop manifest.

    Missing frame files and out-of-frame boxes become skip entries rather
    than errors. Rows are ordered by (video, frame, track).
    """
    crops: list[CropRecord] = []
    skips: list[SkipEntry] = []
    size_cache: dict[Path, tuple[int, int]] = {}
    for collection, video_id, ann_path in find_annotation_files(annotations_dir):
        records = parse_vatic(ann_path.read_text(encoding="utf-8"))
        visible = filter_visible(records, exclude_generated=exclude_generated)
        for rec in sorted(visible, key=lambda r: (r.frame, r.track_id)):
            fpath = frame_path(frames_dir, video_id, rec.frame)
            if fpath not in size_cache:
                if not fpath.is_file():
                    skips.append(SkipEntry(video_id, rec.frame, rec.track_id, "missing-frame"))
                    continue
                try:
                    img = read_image(fpath)
                except ImageError as exc:
                    skips.append(SkipEntry(video_id, rec.frame, rec.track_id, f"unreadable-frame: {exc}"))
                    continue
                size_cache[fpath] = (img.shape[1], img.shape[0])
            fw, fh = size_cache[fpath]
            if rec.xmax < 0 or rec.xmin > fw - 1 or rec.ymax < 0 or rec.ymin > fh - 1:
                skips.append(SkipEntry(video_id, rec.frame, rec.track_id, "bbox-outside-frame"))
                continue
            x, y, w, h, square = crop_geometry(fw, fh, rec, min_side)
            crops.append(
                CropRecord(
                    crop_id=make_crop_id(video_id, rec.frame, rec.track_id),
                    video_id=video_id,
                    frame=rec.frame,
                    track_id=rec.track_id,
                    label=rec.label,
                    x=x,
                    y=y,
                    w=w,
                    h=h,
                    square=square,
                    collection=collection,
                )
            )
    crops.sort(key=lambda c: (c.video_id, c.frame, c.track_id))
    skips.sort(key=lambda s: (s.video_id, s.frame, s.track_id))
    return crops, skips


def write_manifest(crops: list[CropRecord], path: str | os.PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for crop in crops:
            fh.write(json.dumps(asdict(crop), sort_keys=True) + "\n")
    os.replace(tmp, path)


def load_manifest(path: str | os.PathLike) -> list[CropRecord]:
    crops = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                crops.append(CropRecord(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad manifest row: {exc}") from exc
    return crops


def write_skips(skips: list[SkipEntry], path: str | os.PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for skip in skips:
            fh.write(json.dumps(asdict(skip), sort_keys=True) + "\n")
    os.replace(tmp, path)
