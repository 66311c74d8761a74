"""Polyline line tracks and their JSON file format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

BUNDLED = ("oval_simple", "complex_01")
CLOSE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Track:
    """A line course.

    ``segment_marks`` are cumulative arc lengths; crossing mark ``k`` completes
    segment ``k + 1``.  The last mark is the end of the course.
    """

    points: np.ndarray
    line_width: float = 0.02
    closed: bool = False
    segment_marks: np.ndarray | None = None
    name: str = ""
    xs: np.ndarray = field(init=False, repr=False)
    ys: np.ndarray = field(init=False, repr=False)
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("track needs at least 2 points of shape (n, 2)")
        seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        if np.any(seg <= 0.0):
            raise ValueError("consecutive track points must be distinct")
        if self.closed and math.dist(pts[0], pts[-1]) > CLOSE_TOL:
            raise ValueError("closed track must end at its first point")
        if not self.line_width > 0.0:
            raise ValueError("line_width must be positive")
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        if self.segment_marks is None:
            marks = cum[1:].copy()
        else:
            marks = np.asarray(self.segment_marks, dtype=float)
            if marks.ndim != 1 or len(marks) < 1 or np.any(np.diff(marks) <= 0.0):
                raise ValueError("segment_marks must be a strictly increasing list")
            if marks[0] <= 0.0 or marks[-1] > cum[-1] + 1e-9:
                raise ValueError("segment_marks must lie inside (0, length]")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "segment_marks", marks)
        object.__setattr__(self, "xs", np.ascontiguousarray(pts[:, 0]))
        object.__setattr__(self, "ys", np.ascontiguousarray(pts[:, 1]))
        object.__setattr__(self, "cum", cum)

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    @property
    def n_segments(self) -> int:
        return len(self.segment_marks)

    @property
    def start_heading(self) -> float:
        """Heading (from +y, counter-clockwise) of the first track segment."""
        dx, dy = self.points[1] - self.points[0]
        return math.atan2(-dx, dy)

    def reversed(self) -> "Track":
        """The same course driven the other way (built once, then reused)."""
        twin = self.__dict__.get("_reversed")
        if twin is None:
            marks = self.length - self.segment_marks[::-1]
            # drop the mark that lands on 0 and close the course at the full length
            marks = np.concatenate((marks[marks > 1e-12], [self.length]))
            marks = np.unique(marks)
            twin = Track(self.points[::-1].copy(), self.line_width, self.closed, marks, self.name)
            object.__setattr__(self, "_reversed", twin)
        return twin

    def point_at(self, s: float) -> tuple[float, float]:
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum, s, side="right")) - 1
        i = min(i, len(self.points) - 2)
        t = (s - self.cum[i]) / (self.cum[i + 1] - self.cum[i])
        p = self.points[i] + t * (self.points[i + 1] - self.points[i])
        return float(p[0]), float(p[1])

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "points": [[float(x), float(y)] for x, y in self.points],
            "line_width": self.line_width,
            "closed": self.closed,
            "segment_marks": [float(m) for m in self.segment_marks],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "Track":
        return cls(
            points=np.asarray(data["points"], dtype=float),
            line_width=float(data.get("line_width", 0.02)),
            closed=bool(data.get("closed", False)),
            segment_marks=data.get("segment_marks"),
            name=data.get("name", name),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def load_track(name_or_path: str | Path) -> Track:
    """Load a bundled track by id or a JSON track file by path."""
    key = str(name_or_path)
    if key in BUNDLED:
        text = resources.files("linefollower").joinpath(f"tracks/{key}.json").read_text()
        return Track.from_dict(json.loads(text), name=key)
    path = Path(key)
    if not path.is_file():
        raise FileNotFoundError(f"no bundled track or file named {key!r}")
    return Track.from_dict(json.loads(path.read_text()), name=path.stem)
