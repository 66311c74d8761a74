"""Static SVG charts: score per episode with a moving average, and driven paths
over the track.

The files are plain text built with fixed number formatting, so the same input
always produces the same bytes.
"""
from __future__ import annotations

import logging
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

log = logging.getLogger(__name__)

WIDTH, HEIGHT = 720, 420
MARGIN = dict(left=64, right=20, top=36, bottom=52)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(v: float) -> str:
    return f"{v:.2f}"


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean over up to ``window`` samples (shorter at the start)."""
    v = np.asarray(values, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    c = np.concatenate(([0.0], np.cumsum(v)))
    idx = np.arange(1, len(v) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return [float(t) for t in np.arange(start, hi + 0.5 * step, step) if t <= hi + 1e-9]


class _Frame:
    def __init__(self, x_range, y_range, equal=False):
        (self.x0, self.x1), (self.y0, self.y1) = x_range, y_range
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        if equal:
            # same scale on both axes; pad the shorter range
            sx = (self.x1 - self.x0) / self.pw
            sy = (self.y1 - self.y0) / self.ph
            s = max(sx, sy)
            cx, cy = 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)
            self.x0, self.x1 = cx - 0.5 * s * self.pw, cx + 0.5 * s * self.pw
            self.y0, self.y1 = cy - 0.5 * s * self.ph, cy + 0.5 * s * self.ph

    def px(self, x):
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (self.y1 - y) / (self.y1 - self.y0) * self.ph

    def polyline(self, xs, ys, color, width=1.0, extra=""):
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys))
        return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{extra} '
                f'points="{pts}"/>')


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]


def _axes(fr: _Frame, xlabel: str, ylabel: str, xticks, yticks) -> list[str]:
    left, top = MARGIN["left"], MARGIN["top"]
    bottom = HEIGHT - MARGIN["bottom"]
    right = WIDTH - MARGIN["right"]
    out = [f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
           'fill="none" stroke="#333"/>']
    for t in xticks:
        x = _f(fr.px(t))
        out.append(f'<line x1="{x}" y1="{bottom}" x2="{x}" y2="{bottom + 5}" stroke="#333"/>')
        out.append(f'<text x="{x}" y="{bottom + 18}" text-anchor="middle">{t:g}</text>')
    for t in yticks:
        y = _f(fr.py(t))
        out.append(f'<line x1="{left - 5}" y1="{y}" x2="{left}" y2="{y}" stroke="#333"/>')
        out.append(f'<line x1="{left}" y1="{y}" x2="{right}" y2="{y}" stroke="#eee"/>')
        out.append(f'<text x="{left - 8}" y="{y}" text-anchor="end" dy="4">{t:g}</text>')
    out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    cy = (top + bottom) / 2
    out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {cy:.1f})">{escape(ylabel)}</text>')
    return out


def score_chart_svg(episodes, scores, window: int = 100, title: str = "Score per episode") -> str:
    """Raw scores in light grey and their trailing ``window``-episode mean on top."""
    ep = np.asarray(episodes, dtype=float)
    sc = np.asarray(scores, dtype=float)
    if len(ep) == 0:
        raise ValueError("no records to plot")
    avg = moving_average(sc, window)
    x0, x1 = float(ep[0]), float(ep[-1])
    if x1 == x0:
        x1 = x0 + 1.0
    lo, hi = float(min(sc.min(), 0.0)), float(sc.max())
    pad = 0.05 * (hi - lo or 1.0)
    fr = _Frame((x0, x1), (lo - pad, hi + pad))
    out = _header(title)
    out += _axes(fr, "episode", "score", _nice_ticks(x0, x1), _nice_ticks(lo - pad, hi + pad))
    out.append(fr.polyline(ep, sc, "#bbbbbb", 0.8))
    out.append(fr.polyline(ep, avg, PALETTE[0], 2.0))
    lx = WIDTH - MARGIN["right"] - 170
    out.append(f'<line x1="{lx}" y1="48" x2="{lx + 20}" y2="48" stroke="#bbbbbb"/>')
    out.append(f'<text x="{lx + 26}" y="52">score</text>')
    out.append(f'<line x1="{lx}" y1="64" x2="{lx + 20}" y2="64" stroke="{PALETTE[0]}" '
               'stroke-width="2"/>')
    out.append(f'<text x="{lx + 26}" y="68">{window}-episode mean</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trajectory_svg(track, paths, labels=None, title: str | None = None) -> str:
    """Track centre line (drawn at its real width) with driven paths on top.

    ``paths`` is a list of ``(xs, ys)`` pairs in metres.
    """
    pts = np.asarray(track.points, dtype=float)
    allx = [pts[:, 0]] + [np.asarray(p[0], dtype=float) for p in paths]
    ally = [pts[:, 1]] + [np.asarray(p[1], dtype=float) for p in paths]
    xs, ys = np.concatenate(allx), np.concatenate(ally)
    pad = 0.1
    fr = _Frame((float(xs.min()) - pad, float(xs.max()) + pad),
                (float(ys.min()) - pad, float(ys.max()) + pad), equal=True)
    out = _header(title or f"Track {track.name or ''}".strip())
    out += _axes(fr, "x [m]", "y [m]", _nice_ticks(fr.x0, fr.x1), _nice_ticks(fr.y0, fr.y1))
    line_px = max(track.line_width / (fr.x1 - fr.x0) * fr.pw, 1.0)
    cx, cy = list(pts[:, 0]), list(pts[:, 1])
    if track.closed:
        cx.append(cx[0])
        cy.append(cy[0])
    out.append(fr.polyline(cx, cy, "#222222", round(line_px, 2), ' stroke-linejoin="round"'))
    for k, (px, py) in enumerate(paths):
        out.append(fr.polyline(px, py, PALETTE[k % len(PALETTE)], 1.2, ' stroke-opacity="0.85"'))
    if labels:
        for k, lab in enumerate(labels):
            y = 48 + 16 * k
            lx = WIDTH - MARGIN["right"] - 170
            out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 20}" y2="{y}" '
                       f'stroke="{PALETTE[k % len(PALETTE)]}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 26}" y="{y + 4}">{escape(str(lab))}</text>')
    sx, sy = fr.px(pts[0, 0]), fr.py(pts[0, 1])
    out.append(f'<circle cx="{_f(sx)}" cy="{_f(sy)}" r="4" fill="none" stroke="#000"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plots(records, out_dir, track=None, trajectories=None, labels=None,
               window: int = 100) -> list[Path]:
    """Write ``scores.svg`` (and ``trajectory.svg`` when paths are given).

    Returns the written paths; with no records nothing is written.
    """
    out = Path(out_dir)
    written = []
    if not records:
        log.warning("no episode records; skipping plots")
        return written
    out.mkdir(parents=True, exist_ok=True)
    path = out / "scores.svg"
    path.write_text(score_chart_svg([r.episode for r in records], [r.score for r in records],
                                    window))
    written.append(path)
    if track is not None and trajectories:
        path = out / "trajectory.svg"
        paths = [(t.x, t.y) for t in trajectories]
        path.write_text(trajectory_svg(track, paths, labels))
        written.append(path)
    return written
