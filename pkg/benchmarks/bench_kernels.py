"""Time the compiled and pure-Python kernels side by side.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports microseconds per call for the single kernels and for a full
``SimCore.step`` on the complex track, and checks that both backends return
identical numbers on the same inputs.
"""
import argparse
import math
import random
import timeit

import numpy as np

from linefollower import _pykernels
from linefollower.track import load_track

try:
    from linefollower import _ckernels
except ImportError:
    _ckernels = None


def _core(mod, track):
    core = mod.SimCore(track.xs, track.ys, track.cum, track.segment_marks, track.closed,
                       track.line_width, 0.20, 0.25, 0.025, 20 * math.pi, 0.01,
                       32, 0.20, 0.125, 50, 100, 20_000, 0.25)
    x0, y0 = track.point_at(0.0)
    core.reset(x0, y0, track.start_heading)
    return core


def cases(mod, track):
    """name -> zero-argument callable exercising one kernel of ``mod``."""
    x0, y0 = track.point_at(0.0)
    d0 = track.start_heading
    mask = np.zeros(32, dtype=np.uint8)
    core = _core(mod, track)
    rng = random.Random(0)

    def sim_step():
        if core.outcome:
            core.reset(x0, y0, d0)
        core.step(50.0 + 12.0 * rng.random(), 50.0 + 12.0 * rng.random())

    return {
        "step_pose same-sign": lambda: mod.step_pose(x0, y0, d0, 40.0, 55.0, 0.2, 0.25, 0.025, 0.01),
        "step_pose opposite": lambda: mod.step_pose(x0, y0, d0, -20.0, 55.0, 0.2, 0.25, 0.025, 0.01),
        "sense (32 sensors)": lambda: mod.sense(x0, y0, d0, track.xs, track.ys, 32, 0.2, 0.125,
                                                0.5 * track.line_width, mask),
        "project": lambda: mod.project(x0, y0, track.xs, track.ys, track.cum, 0.0, 0.25,
                                       track.closed, track.length),
        "SimCore.step": sim_step,
    }


def check_agreement(track, n=2000):
    rng = random.Random(1)
    ca, cb = _core(_pykernels, track), _core(_ckernels, track)
    for _ in range(n):
        w = (62.8 * rng.uniform(-0.2, 1.0), 62.8 * rng.uniform(-0.2, 1.0))
        if ca.step(*w) != cb.step(*w):
            return False
        if ca.outcome:
            x0, y0 = track.point_at(0.0)
            ca.reset(x0, y0, track.start_heading)
            cb.reset(x0, y0, track.start_heading)
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--track", default="complex_01")
    args = ap.parse_args()
    track = load_track(args.track)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    timings = {}
    for label, mod in backends:
        for name, fn in cases(mod, track).items():
            number = 2000 if label == "python" else 20000
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            timings.setdefault(name, {})[label] = best * 1e6
    print(f"{'kernel':<22}" + "".join(f"{lab + ' [us]':>14}" for lab, _ in backends)
          + (f"{'speed-up':>10}" if _ckernels else ""))
    for name, t in timings.items():
        line = f"{name:<22}" + "".join(f"{t[lab]:>14.2f}" for lab, _ in backends)
        if _ckernels:
            line += f"{t['python'] / t['cython']:>9.1f}x"
        print(line)
    if _ckernels:
        print("identical SimCore trajectories:", check_agreement(track))
    else:
        print("compiled extension not built; only the Python backend was timed")


if __name__ == "__main__":
    main()
