import json
import math

import numpy as np
import pytest

from linefollower.track import BUNDLED, Track, load_track


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_tracks_load_closed(name):
    t = load_track(name)
    assert t.closed and t.name == name
    assert math.dist(t.points[0], t.points[-1]) <= 1e-9
    assert t.n_segments >= 8
    assert np.all(np.diff(t.segment_marks) > 0)
    assert t.segment_marks[-1] == pytest.approx(t.length)


def test_track_sizes():
    assert load_track("oval_simple").length == pytest.approx(4.913, abs=1e-3)
    assert load_track("complex_01").n_segments == 32


@pytest.mark.parametrize("name", BUNDLED)
def test_reversed_is_isometric_twin(name):
    t = load_track(name)
    r = t.reversed()
    assert r.length == pytest.approx(t.length, abs=1e-12)
    assert r.n_segments == t.n_segments
    assert np.array_equal(r.points, t.points[::-1])
    assert t.reversed() is r


def test_default_marks_are_waypoints():
    t = Track([[0, 0], [1, 0], [1, 2]])
    assert list(t.segment_marks) == [1.0, 3.0]
    assert t.start_heading == pytest.approx(-math.pi / 2)


@pytest.mark.parametrize("kwargs", [
    dict(points=[[0, 0]]),
    dict(points=[[0, 0], [0, 0], [1, 1]]),
    dict(points=[[0, 0], [1, 0], [1, 1]], closed=True),
    dict(points=[[0, 0], [1, 0]], line_width=0.0),
    dict(points=[[0, 0], [1, 0]], segment_marks=[0.6, 0.5]),
    dict(points=[[0, 0], [1, 0]], segment_marks=[2.0]),
])
def test_invalid_tracks_rejected(kwargs):
    with pytest.raises(ValueError):
        Track(**kwargs)


def test_json_round_trip(tmp_path):
    t = load_track("complex_01")
    path = tmp_path / "t.json"
    t.save(path)
    u = load_track(path)
    assert np.array_equal(u.points, t.points)
    assert np.array_equal(u.segment_marks, t.segment_marks)
    assert (u.line_width, u.closed) == (t.line_width, t.closed)
    data = json.loads(path.read_text())
    assert set(data) >= {"points", "line_width", "closed", "segment_marks"}


def test_point_at_endpoints():
    t = Track([[0, 0], [3, 4]])
    assert t.point_at(0) == (0.0, 0.0)
    assert t.point_at(2.5) == pytest.approx((1.5, 2.0))
    assert t.point_at(99) == (3.0, 4.0)


def test_missing_track_file():
    with pytest.raises(FileNotFoundError):
        load_track("no_such_track.json")
