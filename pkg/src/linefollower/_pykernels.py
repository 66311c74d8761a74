"""Pure-Python versions of the per-step kernels.

Operation order mirrors ``_ckernels.pyx`` so both backends produce the same
doubles.  The numpy prefilters only prune candidates conservatively.
"""
import math

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(angle):
    r = math.remainder(angle, TWO_PI)
    if r <= -math.pi:
        r = math.pi
    return r


def _pivot(w_rt, on_right, a, b, r, ts):
    mag = abs(w_rt) * (r / a) * ts
    h = math.sin(0.5 * mag)
    s = math.sin(mag)
    G = math.sqrt((0.5 * b) * (0.5 * b) + a * a * h * h + 0.5 * a * b * s)
    x_org = -(G * s)
    y_org = G * math.cos(mag) - 0.5 * b
    alpha = mag
    if not on_right:
        x_org = -x_org
        alpha = -alpha
    if w_rt < 0.0:
        x_org = -x_org
        y_org = -y_org
        alpha = -alpha
    return x_org, y_org, alpha


def step_pose(x, y, d, w_l, w_r, a, b, r, ts):
    cd = math.cos(d)
    sd = math.sin(d)
    if w_l * w_r >= 0.0:
        lo = abs(w_l)
        hi = abs(w_r)
        on_right = hi > lo
        if on_right:
            w_rt = hi - lo
        else:
            w_rt = lo - hi
            lo = hi
        if w_l != 0.0:
            sgn = 1.0 if w_l > 0.0 else -1.0
        elif w_r > 0.0:
            sgn = 1.0
        elif w_r < 0.0:
            sgn = -1.0
        else:
            sgn = 0.0
        v_f = (sgn * lo) * r
        x_f = -sd * v_f * ts
        y_f = cd * v_f * ts
        if w_l < 0.0 or w_r < 0.0:
            w_rt = -w_rt
        x_org, y_org, alpha = _pivot(w_rt, on_right, a, b, r, ts)
        x_rot = x_org * cd - y_org * sd
        y_rot = x_org * sd + y_org * cd
        return (x_f + x_rot + x, y_f + y_rot + y, normalize_angle(d + alpha))
    x_org, y_org, alpha = _pivot(w_r + w_l, w_r > 0.0, a, b, r, ts)
    sgn_r = 1.0 if w_r > 0.0 else -1.0
    w_trn = -sgn_r * min(w_r, w_l)
    alpha_trn = (2.0 * r / a) * w_trn * ts
    x_rot = x_org * cd - y_org * sd
    y_rot = x_org * sd + y_org * cd
    return (x_rot + x, y_rot + y, normalize_angle(alpha + alpha_trn + d))


def _seg_d2(px, py, x0, y0, x1, y1):
    dx = x1 - x0
    dy = y1 - y0
    t = ((px - x0) * dx + (py - y0) * dy) / (dx * dx + dy * dy)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    qx = px - (x0 + t * dx)
    qy = py - (y0 + t * dy)
    return qx * qx + qy * qy, t


def sense(x, y, d, xs, ys, count, span, fwd, half_lw, mask):
    """Fill ``mask`` with 1 where a sensor sees the line; return (n_active, index_sum)."""
    cd = math.cos(d)
    sd = math.sin(d)
    cx = x - fwd * sd
    cy = y + fwd * cd
    reach = 0.5 * span + half_lw
    x0, x1 = xs[:-1], xs[1:]
    y0, y1 = ys[:-1], ys[1:]
    near = (
        (np.minimum(x0, x1) - reach <= cx) & (np.maximum(x0, x1) + reach >= cx)
        & (np.minimum(y0, y1) - reach <= cy) & (np.maximum(y0, y1) + reach >= cy)
    )
    cand = [(float(x0[i]), float(y0[i]), float(x1[i]), float(y1[i]))
            for i in np.flatnonzero(near)]
    lim = half_lw * half_lw
    pitch = span / (count - 1)
    n = 0
    total = 0
    for i in range(count):
        xi = -0.5 * span + i * pitch
        sx = x + (xi * cd - fwd * sd)
        sy = y + (xi * sd + fwd * cd)
        hit = 0
        for sx0, sy0, sx1, sy1 in cand:
            if _seg_d2(sx, sy, sx0, sy0, sx1, sy1)[0] <= lim:
                hit = 1
                break
        mask[i] = hit
        if hit:
            n += 1
            total += i
    return n, total


def project(x, y, xs, ys, cum, s_prev, window, closed, length):
    """Arc length of the closest track point within ``window`` of ``s_prev``."""
    c0, c1 = cum[:-1], cum[1:]
    near = (c1 >= s_prev - window) & (c0 <= s_prev + window)
    if closed:
        near |= (c1 >= s_prev - window + length) & (c0 <= s_prev + window + length)
        near |= (c1 >= s_prev - window - length) & (c0 <= s_prev + window - length)
    best_d2 = math.inf
    best_s = s_prev
    for i in np.flatnonzero(near):
        i = int(i)
        d2, t = _seg_d2(x, y, float(xs[i]), float(ys[i]), float(xs[i + 1]), float(ys[i + 1]))
        s = float(c0[i]) + t * (float(c1[i]) - float(c0[i]))
        ds = s - s_prev
        if closed:
            ds = math.remainder(ds, length)
        if abs(ds) <= window and d2 < best_d2:
            best_d2 = d2
            best_s = s
    return best_s


RUNNING, COMPLETED, LOST_TRACK, WRONG_DIRECTION, TIMEOUT = range(5)
NO_SIDE, LEFT_SIDE, RIGHT_SIDE = 0, 1, 2


class SimCore:
    """One robot on one track: kinematic step, sensing, reward and progress
    bookkeeping fused into a single call per sampling period."""

    def __init__(self, xs, ys, cum, marks, closed, line_width, a, b, r, w_max, ts,
                 count, span, fwd, k_lost, k_rev, max_steps, window):
        self.xs = np.ascontiguousarray(xs, dtype=float)
        self.ys = np.ascontiguousarray(ys, dtype=float)
        self.cum = np.ascontiguousarray(cum, dtype=float)
        self.marks = [float(m) for m in marks]
        self.closed = bool(closed)
        self.length = float(self.cum[-1])
        self.half_lw = 0.5 * line_width
        self.a, self.b, self.r, self.w_max, self.ts = a, b, r, w_max, ts
        self.count, self.span, self.fwd = count, span, fwd
        self.pitch = span / (count - 1)
        self.e_max = math.atan((0.5 * span) / fwd)
        self.k_lost, self.k_rev, self.max_steps, self.window = k_lost, k_rev, max_steps, window
        self.mask = np.zeros(count, dtype=np.uint8)
        self.reset(float(self.xs[0]), float(self.ys[0]), 0.0)

    def reset(self, x, y, d):
        self.x, self.y, self.d = x, y, normalize_angle(d)
        self.outcome = RUNNING
        self.step_count = 0
        self.segments_done = 0
        self.lost_steps = 0
        self.reverse_steps = 0
        self.last_side = NO_SIDE
        s = project(x, y, self.xs, self.ys, self.cum, 0.0, self.window, self.closed, self.length)
        self.s_proj = s
        self.progress = math.remainder(s, self.length) if self.closed else s
        self.best_progress = self.progress if self.progress > 0.0 else 0.0
        self._observe()
        return self.state

    def _observe(self):
        n, total = sense(self.x, self.y, self.d, self.xs, self.ys, self.count, self.span,
                         self.fwd, self.half_lw, self.mask)
        if n:
            c = total / n
            lat = -0.5 * self.span + c * self.pitch
            self.error = math.atan(-lat / self.fwd)
            if lat < 0.0:
                self.last_side = LEFT_SIDE
            elif lat > 0.0:
                self.last_side = RIGHT_SIDE
            k = int(math.floor(c + 0.5))
            self.state = k if k < self.count else self.count - 1
            self.lost = False
        else:
            self.lost = True
            if self.last_side == LEFT_SIDE:
                self.error = self.e_max
                self.state = self.count
            elif self.last_side == RIGHT_SIDE:
                self.error = -self.e_max
                self.state = self.count + 1
            else:
                self.error = 0.0
                self.state = self.count + 1

    def step(self, w_l, w_r):
        """Returns ``(state, error, reward, outcome)`` after one period."""
        m = self.w_max
        w_l = -m if w_l < -m else (m if w_l > m else w_l)
        w_r = -m if w_r < -m else (m if w_r > m else w_r)
        self.x, self.y, self.d = step_pose(self.x, self.y, self.d, w_l, w_r,
                                           self.a, self.b, self.r, self.ts)
        e_prev = self.error
        self._observe()
        e = self.error
        reward = (abs(e_prev) - abs(e)) + (w_l + w_r) / (2.0 * m) - self.ts * abs(e)
        s = project(self.x, self.y, self.xs, self.ys, self.cum, self.s_proj, self.window,
                    self.closed, self.length)
        ds = s - self.s_proj
        if self.closed:
            ds = math.remainder(ds, self.length)
        self.s_proj = s
        self.progress += ds
        self.step_count += 1
        if self.progress > self.best_progress:
            self.best_progress = self.progress
            marks = self.marks
            n = self.segments_done
            while n < len(marks) and marks[n] <= self.best_progress:
                n += 1
            self.segments_done = n
        self.reverse_steps = self.reverse_steps + 1 if ds < 0.0 else 0
        self.lost_steps = self.lost_steps + 1 if self.lost else 0
        if self.segments_done >= len(self.marks):
            self.outcome = COMPLETED
        elif self.lost_steps >= self.k_lost:
            self.outcome = LOST_TRACK
        elif self.reverse_steps >= self.k_rev:
            self.outcome = WRONG_DIRECTION
        elif self.step_count >= self.max_steps:
            self.outcome = TIMEOUT
        return self.state, e, reward, self.outcome
