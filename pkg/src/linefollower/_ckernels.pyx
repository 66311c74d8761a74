# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels; same arithmetic as ``_pykernels``."""

from libc.math cimport sin, cos, sqrt, fabs, INFINITY

cdef extern from "math.h" nogil:
    double remainder(double x, double y)

cdef double PI = 3.141592653589793
cdef double TWO_PI = 2.0 * 3.141592653589793


cdef inline double _normalize(double angle) nogil:
    cdef double r = remainder(angle, TWO_PI)
    if r <= -PI:
        r = PI
    return r


def normalize_angle(double angle):
    return _normalize(angle)


cdef inline void _pivot(double w_rt, bint on_right, double a, double b, double r,
                        double ts, double* x_org, double* y_org, double* alpha) nogil:
    cdef double mag = fabs(w_rt) * (r / a) * ts
    cdef double h = sin(0.5 * mag)
    cdef double s = sin(mag)
    cdef double G = sqrt((0.5 * b) * (0.5 * b) + a * a * h * h + 0.5 * a * b * s)
    x_org[0] = -(G * s)
    y_org[0] = G * cos(mag) - 0.5 * b
    alpha[0] = mag
    if not on_right:
        x_org[0] = -x_org[0]
        alpha[0] = -alpha[0]
    if w_rt < 0.0:
        x_org[0] = -x_org[0]
        y_org[0] = -y_org[0]
        alpha[0] = -alpha[0]


cdef void _step(double x, double y, double d, double w_l, double w_r,
                double a, double b, double r, double ts,
                double* xo, double* yo, double* do) nogil:
    cdef double cd = cos(d)
    cdef double sd = sin(d)
    cdef double lo, hi, w_rt, sgn, v_f, x_f, y_f, x_org, y_org, alpha
    cdef double x_rot, y_rot, sgn_r, w_trn, alpha_trn, m
    cdef bint on_right
    if w_l * w_r >= 0.0:
        lo = fabs(w_l)
        hi = fabs(w_r)
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
        _pivot(w_rt, on_right, a, b, r, ts, &x_org, &y_org, &alpha)
        x_rot = x_org * cd - y_org * sd
        y_rot = x_org * sd + y_org * cd
        xo[0] = x_f + x_rot + x
        yo[0] = y_f + y_rot + y
        do[0] = _normalize(d + alpha)
        return
    _pivot(w_r + w_l, w_r > 0.0, a, b, r, ts, &x_org, &y_org, &alpha)
    sgn_r = 1.0 if w_r > 0.0 else -1.0
    m = w_r if w_r <= w_l else w_l
    w_trn = -sgn_r * m
    alpha_trn = (2.0 * r / a) * w_trn * ts
    x_rot = x_org * cd - y_org * sd
    y_rot = x_org * sd + y_org * cd
    xo[0] = x_rot + x
    yo[0] = y_rot + y
    do[0] = _normalize(alpha + alpha_trn + d)


def step_pose(double x, double y, double d, double w_l, double w_r,
              double a, double b, double r, double ts):
    cdef double xo, yo, do
    _step(x, y, d, w_l, w_r, a, b, r, ts, &xo, &yo, &do)
    return xo, yo, do


cdef inline double _seg_d2(double px, double py, double x0, double y0,
                           double x1, double y1, double* t_out) nogil:
    cdef double dx = x1 - x0
    cdef double dy = y1 - y0
    cdef double t = ((px - x0) * dx + (py - y0) * dy) / (dx * dx + dy * dy)
    cdef double qx, qy
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    qx = px - (x0 + t * dx)
    qy = py - (y0 + t * dy)
    t_out[0] = t
    return qx * qx + qy * qy


def sense(double x, double y, double d, const double[::1] xs, const double[::1] ys,
          int count, double span, double fwd, double half_lw, unsigned char[::1] mask):
    cdef long total = 0
    cdef int n = _sense(x, y, d, xs, ys, count, span, fwd, half_lw, mask, &total)
    return n, total


cdef int _sense(double x, double y, double d, const double[::1] xs, const double[::1] ys,
                int count, double span, double fwd, double half_lw, unsigned char[::1] mask,
                long* total_out) noexcept:
    cdef double cd = cos(d)
    cdef double sd = sin(d)
    cdef double cx = x - fwd * sd
    cdef double cy = y + fwd * cd
    cdef double reach = 0.5 * span + half_lw
    cdef double lim = half_lw * half_lw
    cdef double pitch = span / (count - 1)
    cdef Py_ssize_t nseg = xs.shape[0] - 1
    cdef Py_ssize_t i, j, k, ncand = 0
    cdef double x0, x1, y0, y1, xi, sx, sy, t
    cdef int n = 0
    cdef long total = 0
    cdef unsigned char hit
    cdef Py_ssize_t cand_buf[512]
    cdef Py_ssize_t* cand = cand_buf
    cdef bint overflow = False
    for j in range(nseg):
        x0 = xs[j]; x1 = xs[j + 1]; y0 = ys[j]; y1 = ys[j + 1]
        if (x0 if x0 < x1 else x1) - reach <= cx and (x1 if x0 < x1 else x0) + reach >= cx \
                and (y0 if y0 < y1 else y1) - reach <= cy and (y1 if y0 < y1 else y0) + reach >= cy:
            if ncand < 512:
                cand[ncand] = j
                ncand += 1
            else:
                overflow = True
    for i in range(count):
        xi = -0.5 * span + i * pitch
        sx = x + (xi * cd - fwd * sd)
        sy = y + (xi * sd + fwd * cd)
        hit = 0
        if overflow:
            for j in range(nseg):
                if _seg_d2(sx, sy, xs[j], ys[j], xs[j + 1], ys[j + 1], &t) <= lim:
                    hit = 1
                    break
        else:
            for k in range(ncand):
                j = cand[k]
                if _seg_d2(sx, sy, xs[j], ys[j], xs[j + 1], ys[j + 1], &t) <= lim:
                    hit = 1
                    break
        mask[i] = hit
        if hit:
            n += 1
            total += i
    total_out[0] = total
    return n


def project(double x, double y, const double[::1] xs, const double[::1] ys,
            const double[::1] cum, double s_prev, double window, bint closed, double length):
    return _project(x, y, xs, ys, cum, s_prev, window, closed, length)


cdef double _project(double x, double y, const double[::1] xs, const double[::1] ys,
                     const double[::1] cum, double s_prev, double window, bint closed,
                     double length) noexcept:
    cdef Py_ssize_t nseg = xs.shape[0] - 1
    cdef Py_ssize_t i
    cdef double best_d2 = INFINITY
    cdef double best_s = s_prev
    cdef double c0, c1, d2, t, s, ds
    cdef bint near
    for i in range(nseg):
        c0 = cum[i]
        c1 = cum[i + 1]
        near = c1 >= s_prev - window and c0 <= s_prev + window
        if closed and not near:
            near = (c1 >= s_prev - window + length and c0 <= s_prev + window + length) or \
                   (c1 >= s_prev - window - length and c0 <= s_prev + window - length)
        if not near:
            continue
        d2 = _seg_d2(x, y, xs[i], ys[i], xs[i + 1], ys[i + 1], &t)
        s = c0 + t * (c1 - c0)
        ds = s - s_prev
        if closed:
            ds = remainder(ds, length)
        if fabs(ds) <= window and d2 < best_d2:
            best_d2 = d2
            best_s = s
    return best_s


import numpy as np
from libc.math cimport atan, floor

cdef enum:
    RUNNING = 0
    COMPLETED = 1
    LOST_TRACK = 2
    WRONG_DIRECTION = 3
    TIMEOUT = 4
    NO_SIDE = 0
    LEFT_SIDE = 1
    RIGHT_SIDE = 2


cdef class SimCore:
    """One robot on one track: kinematic step, sensing, reward and progress
    bookkeeping fused into a single call per sampling period."""

    cdef public object xs, ys, cum, mask
    cdef double[::1] _xs, _ys, _cum, _marks
    cdef unsigned char[::1] _mask
    cdef public bint closed, lost
    cdef public double length, half_lw, a, b, r, w_max, ts, span, fwd, pitch, e_max, window
    cdef public int count, k_lost, k_rev, max_steps
    cdef public double x, y, d, s_proj, progress, best_progress, error
    cdef public int outcome, step_count, segments_done, lost_steps, reverse_steps
    cdef public int last_side, state
    cdef int n_marks

    def __init__(self, xs, ys, cum, marks, closed, double line_width, double a, double b,
                 double r, double w_max, double ts, int count, double span, double fwd,
                 int k_lost, int k_rev, int max_steps, double window):
        self.xs = np.ascontiguousarray(xs, dtype=float)
        self.ys = np.ascontiguousarray(ys, dtype=float)
        self.cum = np.ascontiguousarray(cum, dtype=float)
        self._xs = self.xs
        self._ys = self.ys
        self._cum = self.cum
        self._marks = np.ascontiguousarray(marks, dtype=float)
        self.n_marks = self._marks.shape[0]
        self.closed = closed
        self.length = self._cum[self._cum.shape[0] - 1]
        self.half_lw = 0.5 * line_width
        self.a = a; self.b = b; self.r = r; self.w_max = w_max; self.ts = ts
        self.count = count; self.span = span; self.fwd = fwd
        self.pitch = span / (count - 1)
        self.e_max = atan((0.5 * span) / fwd)
        self.k_lost = k_lost; self.k_rev = k_rev; self.max_steps = max_steps
        self.window = window
        self.mask = np.zeros(count, dtype=np.uint8)
        self._mask = self.mask
        self.reset(self._xs[0], self._ys[0], 0.0)

    @property
    def marks(self):
        return list(np.asarray(self._marks))

    def reset(self, double x, double y, double d):
        self.x = x; self.y = y; self.d = _normalize(d)
        self.outcome = RUNNING
        self.step_count = 0
        self.segments_done = 0
        self.lost_steps = 0
        self.reverse_steps = 0
        self.last_side = NO_SIDE
        cdef double s = _project(x, y, self._xs, self._ys, self._cum, 0.0, self.window,
                                self.closed, self.length)
        self.s_proj = s
        self.progress = remainder(s, self.length) if self.closed else s
        self.best_progress = self.progress if self.progress > 0.0 else 0.0
        self._observe()
        return self.state

    cdef void _observe(self):
        cdef long total = 0
        cdef double c, lat
        cdef int k
        cdef int n = _sense(self.x, self.y, self.d, self._xs, self._ys, self.count, self.span,
                         self.fwd, self.half_lw, self._mask, &total)
        if n:
            c = <double>total / n
            lat = -0.5 * self.span + c * self.pitch
            self.error = atan(-lat / self.fwd)
            if lat < 0.0:
                self.last_side = LEFT_SIDE
            elif lat > 0.0:
                self.last_side = RIGHT_SIDE
            k = <int>floor(c + 0.5)
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

    def step(self, double w_l, double w_r):
        """Returns ``(state, error, reward, outcome)`` after one period."""
        cdef double m = self.w_max
        cdef double e_prev, e, reward, s, ds
        cdef double xo, yo, do
        cdef int n
        w_l = -m if w_l < -m else (m if w_l > m else w_l)
        w_r = -m if w_r < -m else (m if w_r > m else w_r)
        _step(self.x, self.y, self.d, w_l, w_r, self.a, self.b, self.r, self.ts, &xo, &yo, &do)
        self.x = xo; self.y = yo; self.d = do
        e_prev = self.error
        self._observe()
        e = self.error
        reward = (fabs(e_prev) - fabs(e)) + (w_l + w_r) / (2.0 * m) - self.ts * fabs(e)
        s = _project(self.x, self.y, self._xs, self._ys, self._cum, self.s_proj, self.window,
                    self.closed, self.length)
        ds = s - self.s_proj
        if self.closed:
            ds = remainder(ds, self.length)
        self.s_proj = s
        self.progress += ds
        self.step_count += 1
        if self.progress > self.best_progress:
            self.best_progress = self.progress
            n = self.segments_done
            while n < self.n_marks and self._marks[n] <= self.best_progress:
                n += 1
            self.segments_done = n
        self.reverse_steps = self.reverse_steps + 1 if ds < 0.0 else 0
        self.lost_steps = self.lost_steps + 1 if self.lost else 0
        if self.segments_done >= self.n_marks:
            self.outcome = COMPLETED
        elif self.lost_steps >= self.k_lost:
            self.outcome = LOST_TRACK
        elif self.reverse_steps >= self.k_rev:
            self.outcome = WRONG_DIRECTION
        elif self.step_count >= self.max_steps:
            self.outcome = TIMEOUT
        return self.state, e, reward, self.outcome
