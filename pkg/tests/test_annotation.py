import pytest
from hypothesis import given
from hypothesis import strategies as st

from enhbench.annotation import (
    AnnotationRecord,
    SuperClassMapError,
    TrackError,
    VaticParseError,
    filter_visible,
    group_tracks,
    load_superclass_map,
    parse_vatic,
    serialize_vatic,
)

SAMPLE = '0 10 20 110 120 5 0 0 1 "car"\n'


def test_parse_single_line():
    (rec,) = parse_vatic(SAMPLE)
    assert rec == AnnotationRecord(0, 10, 20, 110, 120, 5, 0, 0, 1, "car")


def test_parse_empty_file():
    assert parse_vatic("") == []
    assert parse_vatic("\n\n  \n") == []


def test_parse_three_lines_two_tracks():
    text = (
        '0 0 0 10 10 1 0 0 0 "car"\n'
        '0 1 1 11 11 2 0 0 0 "car"\n'
        '1 5 5 20 20 1 0 0 0 "bus"\n'
    )
    records = parse_vatic(text)
    assert len(records) == 3
    assert [r.track_id for r in records] == [0, 0, 1]
    tracks = group_tracks(records)
    assert len(tracks) == 2
    assert sorted(len(t.records) for t in tracks) == [1, 2]


def test_label_with_spaces_and_tabs():
    (rec,) = parse_vatic('3\t1 2 3\t4 9 0 1 0 "fire truck"\n')
    assert rec.label == "fire truck"
    assert rec.occluded == 1


@pytest.mark.parametrize(
    "line,fragment",
    [
        ('0 1 2 3 4 5 0 0 "car"', "10 columns"),
        ('0 1 2 3 4 5 0 0 1 2 "car"', "quoted"),
        ('a 1 2 3 4 5 0 0 1 "car"', "track_id"),
        ('0 9 2 3 4 5 0 0 1 "car"', "xmin"),
        ('0 1 9 3 4 5 0 0 1 "car"', "ymin"),
        ('0 1 2 3 4 5 2 0 1 "car"', "lost"),
        ('0 1 2 3 4 5 0 0 1 car', "quoted"),
        ('0 1 2 3 4 5 0 0 1 ""', "empty label"),
    ],
)
def test_parse_errors(line, fragment):
    with pytest.raises(VaticParseError) as err:
        parse_vatic(line + "\n")
    assert fragment in str(err.value)
    assert err.value.line_no == 1


def test_parse_error_line_number_and_atomicity():
    text = '0 1 2 3 4 5 0 0 1 "ok"\nbad line\n'
    with pytest.raises(VaticParseError) as err:
        parse_vatic(text)
    assert err.value.line_no == 2


def test_filter_visible():
    records = parse_vatic(
        '0 1 2 3 4 1 1 0 0 "a"\n'
        '1 1 2 3 4 1 0 0 0 "b"\n'
        '2 1 2 3 4 1 0 1 0 "c"\n'
        '3 1 2 3 4 1 0 0 1 "d"\n'
    )
    visible = filter_visible(records)
    assert [r.label for r in visible] == ["b", "d"]
    assert [r.label for r in filter_visible(records, exclude_generated=True)] == ["b"]


def test_group_tracks_sorts_frames():
    text = '7 0 0 1 1 5 0 0 0 "x"\n7 0 0 1 1 2 0 0 0 "x"\n7 0 0 1 1 9 0 0 0 "x"\n'
    (track,) = group_tracks(parse_vatic(text))
    assert [r.frame for r in track.records] == [2, 5, 9]


def test_group_tracks_duplicate_frame():
    text = '7 0 0 1 1 5 0 0 0 "x"\n7 0 0 1 1 5 0 0 0 "x"\n'
    with pytest.raises(TrackError, match="duplicate frame"):
        group_tracks(parse_vatic(text))


def test_group_tracks_label_conflict():
    text = '7 0 0 1 1 5 0 0 0 "x"\n7 0 0 1 1 6 0 0 0 "y"\n'
    with pytest.raises(TrackError, match="conflicting labels"):
        group_tracks(parse_vatic(text))


record_strategy = st.builds(
    AnnotationRecord,
    track_id=st.integers(0, 5),
    xmin=st.integers(0, 50),
    ymin=st.integers(0, 50),
    xmax=st.integers(50, 100),
    ymax=st.integers(50, 100),
    frame=st.integers(0, 10_000),
    lost=st.integers(0, 1),
    occluded=st.integers(0, 1),
    generated=st.integers(0, 1),
    label=st.text(
        st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" -_"),
        min_size=1,
        max_size=12,
    ).filter(lambda s: s.strip() == s and s),
)


@given(st.lists(record_strategy, max_size=40))
def test_roundtrip_and_filter_idempotence(records):
    assert parse_vatic(serialize_vatic(records)) == records
    once = filter_visible(records)
    assert filter_visible(once) == once
    assert once == [r for r in records if r.lost == 0 and r.occluded == 0]


@given(st.lists(record_strategy, max_size=30), st.randoms(use_true_random=False))
def test_group_tracks_order_invariant(records, rnd):
    # distinct (track, frame) and consistent labels per track
    seen, labels, unique = set(), {}, []
    for r in records:
        key = (r.track_id, r.frame)
        if key in seen:
            continue
        seen.add(key)
        fixed_label = labels.setdefault(r.track_id, r.label)
        unique.append(
            AnnotationRecord(
                r.track_id, r.xmin, r.ymin, r.xmax, r.ymax,
                r.frame, r.lost, r.occluded, r.generated, fixed_label,
            )
        )
    shuffled = list(unique)
    rnd.shuffle(shuffled)
    assert group_tracks(shuffled) == group_tracks(unique)


def test_superclass_map_roundtrip(tmp_path):
    path = tmp_path / "map.json"
    path.write_text('{"car": ["n02958343", "n03594945", "n04285008"], "bus": ["n04487081"]}')
    scm = load_superclass_map(path)
    assert scm["car"] == frozenset({"n02958343", "n03594945", "n04285008"})
    assert len(scm["bus"]) == 1


def test_superclass_map_37_entries(tmp_path):
    import json

    payload = {f"class{i:02d}": [f"n{i:08d}", f"n{i + 100:08d}"] for i in range(37)}
    path = tmp_path / "map.json"
    path.write_text(json.dumps(payload))
    assert len(load_superclass_map(path)) == 37


@pytest.mark.parametrize(
    "payload,fragment",
    [
        ('{"chart": []}', "non-empty"),
        ('{"a": ["x"], "a": ["y"]}', "duplicate super-class"),
        ('{"a": ["x", "x"]}', "duplicate synset"),
        ('{"a": [3]}', "non-string"),
        ('["x"]', "JSON object"),
    ],
)
def test_superclass_map_errors(tmp_path, payload, fragment):
    path = tmp_path / "map.json"
    path.write_text(payload)
    with pytest.raises(SuperClassMapError, match=fragment):
        load_superclass_map(path)
