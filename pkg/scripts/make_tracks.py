"""Regenerate the bundled track files from turtle-style piece lists.

    python scripts/make_tracks.py [--plot]

Each course is a closed loop of straights and circular arcs.  Two straights
are marked free (``None`` length); their lengths are solved so the loop closes.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from linefollower.track import Track

OUT = Path(__file__).resolve().parents[1] / "src" / "linefollower" / "tracks"
ARC_STEP = 0.02

# ("S", length) straight; ("L"/"R", radius, degrees) arc turning left/right
OVAL = [
    ("S", 0.6), ("L", 0.4, 180), ("S", 1.2), ("L", 0.4, 180), ("S", 0.6),
]

COMPLEX = [
    ("S", None),
    ("L", 0.35, 90),
    ("S", 0.35),
    ("R", 0.30, 90),
    ("S", 0.25),
    ("L", 0.28, 180),          # hairpin
    ("S", 2.0),
    ("R", 0.25, 60),           # S-curve
    ("L", 0.25, 60),
    ("S", 0.20),
    ("L", 0.40, 90),
    ("S", None),
    ("L", 0.30, 90),
    ("S", 0.30),
    ("R", 0.28, 180),          # hairpin
    ("S", 0.25),
    ("L", 0.30, 180),          # hairpin
    ("S", 0.20),
    ("R", 0.30, 45),           # S-curve
    ("L", 0.30, 45),
    ("S", 0.30),
    ("L", 0.35, 90),
]


def trace(pieces, free=(0.0, 0.0)):
    x = y = 0.0
    th = 0.0  # travel direction, radians from +x
    pts = [(x, y)]
    k = 0
    for piece in pieces:
        if piece[0] == "S":
            length = piece[1]
            if length is None:
                length = free[k]
                k += 1
            if length <= 0:
                continue
            x += length * math.cos(th)
            y += length * math.sin(th)
            pts.append((x, y))
        else:
            kind, radius, deg = piece
            turn = math.radians(deg) * (1 if kind == "L" else -1)
            n = max(2, math.ceil(radius * abs(turn) / ARC_STEP))
            side = 1 if kind == "L" else -1
            cx = x - side * radius * math.sin(th)
            cy = y + side * radius * math.cos(th)
            start = th - side * math.pi / 2
            for i in range(1, n + 1):
                phi = start + turn * i / n
                pts.append((cx + radius * math.cos(phi), cy + radius * math.sin(phi)))
            x, y = pts[-1]
            th += turn
    return np.array(pts)


def solve_free(pieces):
    base = trace(pieces)[-1]
    e1 = trace(pieces, (1.0, 0.0))[-1] - base
    e2 = trace(pieces, (0.0, 1.0))[-1] - base
    u = np.linalg.solve(np.column_stack([e1, e2]), -base)
    if np.any(u <= 0):
        raise SystemExit(f"course cannot close with positive straights: {u}")
    return tuple(u)


def build(name, pieces, n_segments, line_width=0.02):
    free = solve_free(pieces) if any(p[0] == "S" and p[1] is None for p in pieces) else (0, 0)
    pts = trace(pieces, free)
    pts[-1] = pts[0]
    keep = np.concatenate(([True], np.hypot(*np.diff(pts, axis=0).T) > 1e-9))
    pts = pts[keep]
    pts = np.round(pts, 12)
    pts[-1] = pts[0]
    length = float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))
    marks = [length * (k + 1) / n_segments for k in range(n_segments)]
    marks[-1] = length
    return Track(pts, line_width, True, marks, name)


def clearance(track, skip=0.6):
    """Smallest distance between track points further apart than ``skip`` in arc length."""
    p, s = track.points[:-1], track.cum[:-1]
    d = np.hypot(p[:, None, 0] - p[None, :, 0], p[:, None, 1] - p[None, :, 1])
    ds = np.abs(s[:, None] - s[None, :])
    ds = np.minimum(ds, track.length - ds)
    return float(d[ds > skip].min())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    tracks = [build("oval_simple", OVAL, 8), build("complex_01", COMPLEX, 32)]
    for t in tracks:
        t.save(OUT / f"{t.name}.json")
        print(f"{t.name}: {len(t.points)} points, length {t.length:.3f} m, "
              f"{t.n_segments} segments, clearance {clearance(t):.3f} m")
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, len(tracks), figsize=(12, 6))
        for ax, t in zip(axes, tracks):
            ax.plot(t.xs, t.ys, "-k")
            ax.plot(t.xs[0], t.ys[0], "or")
            ax.set_aspect("equal")
            ax.set_title(t.name)
        fig.savefig("/tmp/tracks.png", dpi=80)


if __name__ == "__main__":
    main()
