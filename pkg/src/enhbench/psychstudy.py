"""Pairwise perceptual rating study: scheduling, responses, aggregation.

A study presents original/enhanced image pairs plus three sentinel pairs
per session. Raters pick one of five labels, converted to ordinals 1-5
(1-2 improvement, 3 imperceptible, 4-5 deterioration). Workers failing
two or more of their three sentinels are discarded. Per-pair ratings are
means over validated workers, summarized in 0.25-wide bins over [1, 5].

State is an append-only response log replayed at startup, so aggregation
is invariant to service restarts and response arrival order.
"""

from __future__ import annotations

import json
import math
import os
import random
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

SENTINEL_CLASSES = ("improvement", "no-change", "deterioration")
SENTINELS_PER_SESSION = 3
ORDINALS = (1, 2, 3, 4, 5)

DEFAULT_LABELS = (
    "Significantly improved",
    "Slightly improved",
    "No perceivable difference",
    "Slightly worse",
    "Significantly worse",
)


class StudyError(ValueError):
    """Invalid study definition or request against the study state."""


class StateLogError(ValueError):
    """Corrupt state log; names the offending line."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class NoValidatedSessionsError(StudyError):
    pass


@dataclass(frozen=True)
class PairDef:
    pair_id: str
    original: str
    enhanced: str


@dataclass(frozen=True)
class SentinelDef:
    pair_id: str
    original: str
    enhanced: str
    expected: str

    def __post_init__(self):
        if self.expected not in SENTINEL_CLASSES:
            raise StudyError(f"sentinel {self.pair_id}: bad expected class {self.expected!r}")


@dataclass(frozen=True)
class ScheduledItem:
    item_id: str
    pair_id: str
    is_sentinel: bool
    expected: str | None
    swapped: bool
    left: str
    right: str


@dataclass(frozen=True)
class SessionPlan:
    session_id: str
    items: tuple[ScheduledItem, ...]

    def item(self, item_id: str) -> ScheduledItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise StudyError(f"item {item_id!r} not in session {self.session_id}")


@dataclass(frozen=True)
class StudyDefinition:
    study_id: str
    pairs: tuple[PairDef, ...]
    sentinels: tuple[SentinelDef, ...]
    ratings_per_pair: int
    session_rated: int
    seed: int
    labels: tuple[str, ...] = DEFAULT_LABELS
    sessions: tuple[SessionPlan, ...] = field(default=())

    def session(self, session_id: str) -> SessionPlan:
        for s in self.sessions:
            if s.session_id == session_id:
                return s
        raise StudyError(f"unknown session {session_id!r}")


def build_study(
    study_id: str,
    pairs: list[PairDef],
    sentinels: list[SentinelDef],
    ratings_per_pair: int = 20,
    session_rated: int = 100,
    seed: int = 0,
    swapped_fraction: float = 0.0,
    labels: tuple[str, ...] = DEFAULT_LABELS,
) -> StudyDefinition:
    """Schedule sessions so every pair reaches its target rating count.

    Each session holds up to ``session_rated`` distinct rated pairs plus
    three sentinels, interleaved in seeded-random order. Scheduling is
    fully deterministic for a given seed.
    """
    if not pairs:
        raise StudyError("study needs at least one pair")
    if len(sentinels) < SENTINELS_PER_SESSION:
        raise StudyError(f"study needs at least {SENTINELS_PER_SESSION} sentinels")
    if ratings_per_pair < 1 or session_rated < 1:
        raise StudyError("ratings_per_pair and session_rated must be >= 1")
    if len(labels) != 5:
        raise StudyError("exactly five labels are required")
    if len({p.pair_id for p in pairs}) != len(pairs):
        raise StudyError("duplicate pair ids")
    if len({s.pair_id for s in sentinels}) != len(sentinels):
        raise StudyError("duplicate sentinel ids")

    rng = random.Random(seed)
    order = list(pairs)
    rng.shuffle(order)
    n_pairs = len(order)
    rated_per = min(session_rated, n_pairs)
    total_slots = n_pairs * ratings_per_pair
    n_sessions = math.ceil(total_slots / rated_per)

    sessions = []
    for s in range(n_sessions):
        count = min(rated_per, total_slots - s * rated_per)
        rated = [order[(s * rated_per + i) % n_pairs] for i in range(count)]
        chosen = rng.sample(sentinels, SENTINELS_PER_SESSION)
        entries: list[tuple[PairDef | SentinelDef, bool]] = [(p, False) for p in rated]
        entries += [(sd, True) for sd in chosen]
        rng.shuffle(entries)
        session_id = f"{study_id}-s{s:03d}"
        items = []
        for idx, (pair, is_sentinel) in enumerate(entries):
            swapped = (not is_sentinel) and rng.random() < swapped_fraction
            left, right = (pair.enhanced, pair.original) if swapped else (pair.original, pair.enhanced)
            items.append(
                ScheduledItem(
                    item_id=f"{session_id}-i{idx:03d}",
                    pair_id=pair.pair_id,
                    is_sentinel=is_sentinel,
                    expected=pair.expected if is_sentinel else None,
                    swapped=swapped,
                    left=left,
                    right=right,
                )
            )
        sessions.append(SessionPlan(session_id=session_id, items=tuple(items)))
    return StudyDefinition(
        study_id=study_id,
        pairs=tuple(pairs),
        sentinels=tuple(sentinels),
        ratings_per_pair=ratings_per_pair,
        session_rated=session_rated,
        seed=seed,
        labels=tuple(labels),
        sessions=tuple(sessions),
    )


def load_study_definition(path: str | os.PathLike) -> StudyDefinition:
    """Build a study from its JSON definition file."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        pairs = [PairDef(p["pair_id"], p["original"], p["enhanced"]) for p in raw["pairs"]]
        sentinels = [
            SentinelDef(s["pair_id"], s["original"], s["enhanced"], s["expected"])
            for s in raw["sentinels"]
        ]
        return build_study(
            study_id=raw["study_id"],
            pairs=pairs,
            sentinels=sentinels,
            ratings_per_pair=int(raw.get("ratings_per_pair", 20)),
            session_rated=int(raw.get("session_rated", 100)),
            seed=int(raw.get("seed", 0)),
            swapped_fraction=float(raw.get("swapped_fraction", 0.0)),
            labels=tuple(raw.get("labels", DEFAULT_LABELS)),
        )
    except (KeyError, TypeError) as exc:
        raise StudyError(f"bad study definition {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# runtime state

class StudyState:
    """Session assignment and response recording over an append-only log.

    All mutations are serialized under a lock and appended to
    ``<state_dir>/responses.log`` before being applied, so a replay after
    restart reconstructs the identical state.
    """

    def __init__(self, study: StudyDefinition, state_dir: str | os.PathLike):
        self.study = study
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.state_dir / "responses.log"
        self._lock = threading.Lock()
        self.assigned: dict[str, str] = {}  # session_id -> worker_id
        self.responses: dict[tuple[str, str], int] = {}  # (session, item) -> ordinal
        self._replay()

    def _replay(self) -> None:
        if not self.log_path.is_file():
            return
        with self.log_path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StateLogError(str(self.log_path), line_no, f"bad JSON: {exc}") from exc
                kind = event.get("event")
                try:
                    if kind == "assign":
                        self._apply_assign(event["session"], event["worker"])
                    elif kind == "response":
                        self._apply_response(event["session"], event["item"], int(event["ordinal"]))
                    else:
                        raise StudyError(f"unknown event kind {kind!r}")
                except (StudyError, KeyError) as exc:
                    raise StateLogError(str(self.log_path), line_no, str(exc)) from exc

    def _append(self, event: dict) -> None:
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- assignment

    def _apply_assign(self, session_id: str, worker_id: str) -> None:
        self.study.session(session_id)  # existence check
        if session_id in self.assigned:
            raise StudyError(f"session {session_id} already assigned")
        self.assigned[session_id] = worker_id

    def session_complete(self, session_id: str) -> bool:
        plan = self.study.session(session_id)
        return all((session_id, it.item_id) in self.responses for it in plan.items)

    def worker_open_sessions(self, worker_id: str) -> list[str]:
        return [
            sid
            for sid, wid in self.assigned.items()
            if wid == worker_id and not self.session_complete(sid)
        ]

    def assign_session(self, worker_id: str) -> SessionPlan:
        """Atomically hand the next unassigned session to a worker."""
        if not worker_id:
            raise StudyError("worker_id must be non-empty")
        with self._lock:
            if self.worker_open_sessions(worker_id):
                raise StudyError(f"worker {worker_id!r} already has an open session")
            plan = next(
                (s for s in self.study.sessions if s.session_id not in self.assigned), None
            )
            if plan is None:
                raise StudyError("study fully subscribed")
            self._append(
                {
                    "event": "assign",
                    "session": plan.session_id,
                    "worker": worker_id,
                    "ts": time.time(),
                }
            )
            self._apply_assign(plan.session_id, worker_id)
            return plan

    # -- responses

    def _apply_response(self, session_id: str, item_id: str, ordinal: int) -> None:
        if session_id not in self.assigned:
            raise StudyError(f"session {session_id!r} not assigned")
        self.study.session(session_id).item(item_id)  # membership check
        if ordinal not in ORDINALS:
            raise StudyError(f"ordinal out of range: {ordinal}")
        key = (session_id, item_id)
        if key in self.responses:
            raise StudyError(f"duplicate response for {item_id}")
        self.responses[key] = ordinal

    def record_response(self, session_id: str, item_id: str, label_index: int) -> int:
        """Record one response; returns the stored ordinal (1-5)."""
        if not isinstance(label_index, int) or not 0 <= label_index <= 4:
            raise StudyError(f"label_index must be 0..4, got {label_index!r}")
        ordinal = label_index + 1
        with self._lock:
            # validate before persisting so the log never holds bad events
            if session_id not in self.assigned:
                raise StudyError(f"session {session_id!r} not assigned")
            self.study.session(session_id).item(item_id)
            if (session_id, item_id) in self.responses:
                raise StudyError(f"duplicate response for {item_id}")
            self._append(
                {
                    "event": "response",
                    "session": session_id,
                    "item": item_id,
                    "ordinal": ordinal,
                    "ts": time.time(),
                }
            )
            self._apply_response(session_id, item_id, ordinal)
        return ordinal


# ---------------------------------------------------------------------------
# validation and aggregation

def _effective_ordinal(item: ScheduledItem, ordinal: int) -> int:
    return 6 - ordinal if item.swapped else ordinal


def sentinel_correct(expected: str, ordinal: int) -> bool:
    """Band check: improvement 1-2, no-change exactly 3, deterioration 4-5."""
    if expected == "improvement":
        return ordinal in (1, 2)
    if expected == "no-change":
        return ordinal == 3
    if expected == "deterioration":
        return ordinal in (4, 5)
    raise StudyError(f"unknown sentinel class {expected!r}")


def validate_worker(study: StudyDefinition, state: StudyState, session_id: str) -> bool:
    """Keep (True) iff at least 2 of the session's 3 sentinels are correct."""
    plan = study.session(session_id)
    if not state.session_complete(session_id):
        raise StudyError(f"session {session_id} is incomplete")
    correct = 0
    for item in plan.items:
        if not item.is_sentinel:
            continue
        ordinal = _effective_ordinal(item, state.responses[(session_id, item.item_id)])
        if sentinel_correct(item.expected, ordinal):
            correct += 1
    return correct >= 2


RATING_BIN_WIDTH = 0.25
RATING_BINS = 16  # [1, 5] in 0.25 steps


def rating_bin(value: float | Fraction) -> int:
    """Bin index in [0, 15] for bins [lo, lo+0.25) over [1, 5], last closed."""
    v = Fraction(value) if not isinstance(value, Fraction) else value
    if v < 1 or v > 5:
        raise ValueError(f"rating {float(v)} outside [1, 5]")
    idx = int((v - 1) / Fraction(1, 4))
    return min(idx, RATING_BINS - 1)


@dataclass(frozen=True)
class PairRating:
    pair_id: str
    count: int
    mean: float
    mean_exact: str
    mean_bin: int
    classification: str  # improvement | imperceptible | deterioration
    histogram: tuple[int, ...]  # per-response counts, 0.25-wide bins

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "count": self.count,
            "mean": self.mean,
            "mean_exact": self.mean_exact,
            "mean_bin": self.mean_bin,
            "classification": self.classification,
            "histogram": list(self.histogram),
        }


@dataclass(frozen=True)
class StudyReport:
    pair_ratings: tuple[PairRating, ...]
    validated_sessions: int
    discarded_sessions: int
    improvement_pairs: int
    imperceptible_pairs: int
    deterioration_pairs: int
    mean_bin_distribution: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {
            "pair_ratings": [p.to_json_dict() for p in self.pair_ratings],
            "validated_sessions": self.validated_sessions,
            "discarded_sessions": self.discarded_sessions,
            "improvement_pairs": self.improvement_pairs,
            "imperceptible_pairs": self.imperceptible_pairs,
            "deterioration_pairs": self.deterioration_pairs,
            "mean_bin_distribution": list(self.mean_bin_distribution),
        }


def aggregate_ratings(study: StudyDefinition, state: StudyState) -> StudyReport:
    """Aggregate validated complete sessions into per-pair ratings.

    Ratings on swapped presentations are mirrored (6 - r) before use.
    A pair mean below 3 counts as improvement, above 3 as deterioration,
    and exactly 3 as imperceptible (compared exactly, not in floats).
    """
    validated = []
    discarded = 0
    for session_id in state.assigned:
        if not state.session_complete(session_id):
            continue
        if validate_worker(study, state, session_id):
            validated.append(session_id)
        else:
            discarded += 1
    if not validated:
        raise NoValidatedSessionsError("no validated sessions")

    ordinals: dict[str, list[int]] = {}
    for session_id in sorted(validated):
        plan = study.session(session_id)
        for item in plan.items:
            if item.is_sentinel:
                continue
            r = _effective_ordinal(item, state.responses[(session_id, item.item_id)])
            ordinals.setdefault(item.pair_id, []).append(r)

    ratings = []
    class_counts = {"improvement": 0, "imperceptible": 0, "deterioration": 0}
    mean_bins = [0] * RATING_BINS
    for pair in study.pairs:
        values = ordinals.get(pair.pair_id)
        if not values:
            continue
        mean = Fraction(sum(values), len(values))
        if mean < 3:
            classification = "improvement"
        elif mean > 3:
            classification = "deterioration"
        else:
            classification = "imperceptible"
        class_counts[classification] += 1
        hist = [0] * RATING_BINS
        for v in values:
            hist[rating_bin(v)] += 1
        bin_idx = rating_bin(mean)
        mean_bins[bin_idx] += 1
        ratings.append(
            PairRating(
                pair_id=pair.pair_id,
                count=len(values),
                mean=float(mean),
                mean_exact=str(mean),
                mean_bin=bin_idx,
                classification=classification,
                histogram=tuple(hist),
            )
        )
    return StudyReport(
        pair_ratings=tuple(ratings),
        validated_sessions=len(validated),
        discarded_sessions=discarded,
        improvement_pairs=class_counts["improvement"],
        imperceptible_pairs=class_counts["imperceptible"],
        deterioration_pairs=class_counts["deterioration"],
        mean_bin_distribution=tuple(mean_bins),
    )


def audit_schedule(study: StudyDefinition, state: StudyState) -> dict[str, int]:
    """Validated response count per pair, for overshoot auditing."""
    counts = {p.pair_id: 0 for p in study.pairs}
    for session_id in state.assigned:
        if not state.session_complete(session_id):
            continue
        if not validate_worker(study, state, session_id):
            continue
        for item in study.session(session_id).items:
            if not item.is_sentinel and (session_id, item.item_id) in state.responses:
                counts[item.pair_id] += 1
    return counts
