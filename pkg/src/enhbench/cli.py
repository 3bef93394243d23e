"""Command-line entry point wiring the harness into reproducible pipelines.

Subcommands: extract, degrade, enhance, evaluate, rank, study serve,
study report. Progress goes to stderr; results only to files; on failure
a machine-readable JSON error summary is printed to stdout.

Exit codes: 0 success, 1 usage, 2 data integrity, 3 runtime.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import enhance, frames, metrics
from .annotation import SuperClassMapError, VaticParseError, load_superclass_map
from .degrade import apply_recipe
from .image import ImageError, read_image, write_image
from .psychstudy import (
    StateLogError,
    StudyError,
    StudyState,
    aggregate_ratings,
    load_study_definition,
)

DEFAULT_SEED = 1729

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTEGRITY = 2
EXIT_RUNTIME = 3

_INTEGRITY_ERRORS = (
    metrics.IntegrityError,
    metrics.PredictionFormatError,
    VaticParseError,
    SuperClassMapError,
    StateLogError,
    FileNotFoundError,
)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _write_json(payload, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _write_jsonl(rows, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _require_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise FileNotFoundError(f"{what} directory not found: {p}")
    return p


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} file not found: {p}")
    return p


def _list_images(src: Path) -> list[Path]:
    return sorted(p for p in src.iterdir() if p.suffix.lower() == ".png")


# ---------------------------------------------------------------------------
# subcommands

def cmd_extract(args) -> int:
    ann_dir = _require_dir(args.annotations, "annotations")
    frames_dir = _require_dir(args.frames, "frames")
    out_dir = Path(args.out)
    crops, skips = frames.build_manifest(
        ann_dir, frames_dir, min_side=args.min_side, exclude_generated=args.exclude_generated
    )
    frames.write_manifest(crops, out_dir / "manifest.jsonl")
    frames.write_skips(skips, out_dir / "skipped.jsonl")
    _progress(f"manifest: {len(crops)} crops, {len(skips)} skipped")
    if not args.no_crops:
        frame_cache: dict[Path, np.ndarray] = {}
        for crop in crops:
            fpath = frames.frame_path(frames_dir, crop.video_id, crop.frame)
            if fpath not in frame_cache:
                frame_cache.clear()  # one decoded frame at a time
                frame_cache[fpath] = read_image(fpath)
            img = frame_cache[fpath]
            patch = img[crop.y : crop.y + crop.h, crop.x : crop.x + crop.w]
            write_image(patch, out_dir / "crops" / f"{crop.crop_id}.png")
        _progress(f"wrote {len(crops)} crop images")
    return EXIT_OK


def _run_batch(src: Path, out_dir: Path, jobs: int, worker) -> int:
    """Apply ``worker(path) -> provenance row`` to every image, in order."""
    images = _list_images(src)
    rows = [None] * len(images)
    failed = 0
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, images))
    else:
        results = [worker(p) for p in images]
    for i, row in enumerate(results):
        rows[i] = row
        if "error" in row:
            failed += 1
    _write_jsonl(rows, out_dir / "provenance.jsonl")
    _progress(f"processed {len(images)} images, {failed} failed")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_degrade(args) -> int:
    src = _require_dir(args.input, "input")
    recipe = json.loads(_require_file(args.recipe, "recipe").read_text(encoding="utf-8"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def worker(path: Path) -> dict:
        try:
            rng = np.random.default_rng([args.seed, zlib.crc32(path.name.encode())])
            result = apply_recipe(read_image(path), recipe, rng)
            write_image(result, out_dir / path.name)
            return {"image": path.name, "sha256": enhance.image_digest(result)}
        except Exception as exc:
            return {"image": path.name, "error": f"{type(exc).__name__}: {exc}"}

    return _run_batch(src, out_dir, args.jobs, worker)


def cmd_enhance(args) -> int:
    src = _require_dir(args.input, "input")
    chain = enhance.load_chain(_require_file(args.chain, "chain config"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def worker(path: Path) -> dict:
        try:
            result, provenance = enhance.run_chain(read_image(path), chain)
            write_image(result, out_dir / path.name)
            return {"image": path.name, "stages": [asdict(p) for p in provenance]}
        except Exception as exc:
            return {"image": path.name, "error": f"{type(exc).__name__}: {exc}"}

    return _run_batch(src, out_dir, args.jobs, worker)


def cmd_evaluate(args) -> int:
    manifest = frames.load_manifest(_require_file(args.manifest, "manifest"))
    superclass_map = load_superclass_map(_require_file(args.superclass_map, "super-class map"))
    enhanced_preds = metrics.load_predictions(_require_file(args.predictions, "predictions"))
    baseline_preds = metrics.load_predictions(_require_file(args.baseline, "baseline predictions"))
    enhanced = metrics.aggregate_rates(enhanced_preds, manifest, superclass_map)
    baseline = metrics.aggregate_rates(baseline_preds, manifest, superclass_map)
    comparison = metrics.compare(enhanced, baseline, epsilon=args.epsilon)
    out_dir = Path(args.out)
    metrics.write_reports_json(enhanced, out_dir / "enhanced_metrics.json")
    metrics.write_reports_json(baseline, out_dir / "baseline_metrics.json")
    _write_json(comparison.to_json_dict(), out_dir / "comparison.json")
    _progress(f"evaluated {len(enhanced)} cells against baseline")
    return EXIT_OK


def cmd_rank(args) -> int:
    algo_paths = {}
    for spec_arg in args.algorithm:
        if "=" not in spec_arg:
            raise UsageError(f"--algorithm expects NAME=PREDICTIONS_FILE, got {spec_arg!r}")
        name, _, pred_path = spec_arg.partition("=")
        algo_paths[name] = pred_path
    manifest = frames.load_manifest(_require_file(args.manifest, "manifest"))
    superclass_map = load_superclass_map(_require_file(args.superclass_map, "super-class map"))
    baseline = metrics.aggregate_rates(
        metrics.load_predictions(_require_file(args.baseline, "baseline predictions")),
        manifest,
        superclass_map,
    )
    algorithms = {
        name: metrics.aggregate_rates(
            metrics.load_predictions(_require_file(pred_path, f"predictions for {name}")),
            manifest,
            superclass_map,
        )
        for name, pred_path in algo_paths.items()
    }
    result = metrics.rank_points(algorithms, baseline, epsilon=args.epsilon)
    _write_json(result.to_json_dict(), Path(args.out))
    _progress("points: " + ", ".join(f"{k}={v}" for k, v in sorted(result.points.items())))
    return EXIT_OK


def cmd_study(args) -> int:
    study = load_study_definition(_require_file(args.study, "study definition"))
    state = StudyState(study, args.state)
    if args.study_action == "serve":
        import uvicorn

        from .service import create_app

        app = create_app(
            study,
            state,
            image_root=args.images,
            frontend_root=args.frontend,
        )
        _progress(f"serving study {study.study_id!r} on {args.host}:{args.port}")
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return EXIT_OK
    report = aggregate_ratings(study, state)
    _write_json(report.to_json_dict(), Path(args.out))
    _progress(
        f"report: {len(report.pair_ratings)} pairs from "
        f"{report.validated_sessions} validated sessions"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="enhbench", description=__doc__)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="global RNG seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for batch subcommands")
    parser.add_argument("--config", default=None, help="JSON file with default argument values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="build crop manifest and crop images")
    p.add_argument("--annotations", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-side", type=int, default=224)
    p.add_argument("--exclude-generated", action="store_true")
    p.add_argument("--no-crops", action="store_true", help="write only the manifest")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("degrade", help="apply a degradation recipe to a directory")
    p.add_argument("--input", required=True)
    p.add_argument("--recipe", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("enhance", help="apply an enhancement chain to a directory")
    p.add_argument("--input", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("evaluate", help="M1/M2 rates and baseline comparison")
    p.add_argument("--predictions", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--superclass-map", required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="cross-algorithm points ranking")
    p.add_argument("--algorithm", action="append", required=True, metavar="NAME=FILE")
    p.add_argument("--baseline", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--superclass-map", required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("study", help="serve or report a rating study")
    study_sub = p.add_subparsers(dest="study_action", required=True)
    ps = study_sub.add_parser("serve")
    ps.add_argument("--study", required=True)
    ps.add_argument("--state", required=True)
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--port", type=int, default=8765)
    ps.add_argument("--images", default=None)
    ps.add_argument("--frontend", default=None)
    ps.set_defaults(func=cmd_study)
    pr = study_sub.add_parser("report")
    pr.add_argument("--study", required=True)
    pr.add_argument("--state", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_study)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    defaults = json.loads(_require_file(args.config, "config").read_text(encoding="utf-8"))
    if not isinstance(defaults, dict):
        raise UsageError("config file must hold a JSON object")
    for key, value in defaults.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)


def _error_summary(code: int, exc: BaseException) -> None:
    print(
        json.dumps(
            {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}},
            sort_keys=True,
        )
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
        return args.func(args)
    except UsageError as exc:
        _error_summary(EXIT_USAGE, exc)
        return EXIT_USAGE
    except _INTEGRITY_ERRORS as exc:
        _error_summary(EXIT_INTEGRITY, exc)
        return EXIT_INTEGRITY
    except (StudyError, ImageError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        _error_summary(EXIT_RUNTIME, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
