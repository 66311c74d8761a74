"""Grid search for the proportional controller's gain and cruise speed.

Each (kp, base_fraction) pair is scored by greedy runs on the training track in
both directions; the winner is the pair with the highest mean score among those
that complete every run.  The chosen values are the defaults in
``PControllerConfig``.

    python scripts/tune_p.py [--track oval_simple] [--trials 4]
"""
import argparse
import itertools

import numpy as np

from linefollower.agents import PController, PControllerConfig
from linefollower.harness import RunConfig, evaluate

KP_GRID = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
BASE_GRID = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--track", default="oval_simple")
    ap.add_argument("--trials", type=int, default=4)
    args = ap.parse_args()
    cfg = RunConfig(controller="P", track=args.track)
    results = []
    for kp, base in itertools.product(KP_GRID, BASE_GRID):
        ev = evaluate(PController(PControllerConfig(kp, base)), args.track, args.trials, cfg)
        done = all(r.outcome == "completed" for r in ev.records)
        results.append((done, float(np.mean(ev.scores)), kp, base))
        print(f"kp={kp:<5} base={base:<4} completed={done!s:<5} mean={np.mean(ev.scores):8.3f}")
    done, mean, kp, base = max(results)
    print(f"\nbest: kp={kp} base_fraction={base} mean score {mean:.3f} (all completed: {done})")


if __name__ == "__main__":
    main()
