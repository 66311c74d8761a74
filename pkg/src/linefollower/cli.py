"""``linefollower`` command: train, eval, compare and simulate.

Configs are INI files.  Every key is optional and falls back to the default
listed by ``linefollower <command> --help``; unknown sections or keys are
rejected.  Each command writes the fully resolved config next to its outputs
as ``config.cfg``, so any run can be repeated from that file alone.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import sys
from pathlib import Path

from . import kernels
from .agents import load_checkpoint
from .harness import (
    CURVE_HEADER, RunConfig, Rngs, Trajectory, compare, evaluate, make_controller, make_env,
    run_episode, train,
)
from .plots import emit_plots, trajectory_svg

log = logging.getLogger("linefollower")

SECTIONS = {
    "run": ("controller", "episodes", "track", "eval_track", "seed", "trials"),
    "agent": ("alpha", "gamma", "epsilon", "beta", "t_floor", "per_step_temperature",
              "miso_actions", "kp", "base_fraction"),
    "robot": ("a", "b", "r", "motor_rpm", "t_s", "sensors"),
    "environment": ("line_width", "max_steps", "k_lost", "k_rev", "noise", "random_start"),
}
DEFAULT_OUT = "lf_output"


class UsageError(Exception):
    """Bad invocation; reported with exit status 2."""


def _convert(name: str, text: str, kind):
    kind = {"int": int, "float": float, "str": str, "bool": bool}.get(kind, kind)
    if kind is bool:
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{name}: expected a boolean, got {text!r}")
    try:
        return kind(text.strip())
    except ValueError:
        raise UsageError(f"{name}: expected {kind.__name__}, got {text!r}") from None


def read_config(path: str | os.PathLike | None, **overrides) -> RunConfig:
    """Build a RunConfig from an INI file plus non-None keyword overrides."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {p}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise UsageError(f"{p}: {exc}") from None
        types = RunConfig.field_types()
        for section in parser.sections():
            if section not in SECTIONS:
                raise UsageError(f"{p}: unknown section [{section}]")
            for key, text in parser.items(section):
                if key not in SECTIONS[section]:
                    raise UsageError(f"{p}: unknown key {key!r} in [{section}]")
                values[key] = _convert(key, text, types[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def write_config(config: RunConfig, path: str | os.PathLike) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    data = config.as_dict()
    for section, keys in SECTIONS.items():
        parser[section] = {k: (repr(data[k]) if isinstance(data[k], float) else str(data[k]))
                           for k in keys}
    with open(path, "w") as fh:
        parser.write(fh)


def _defaults_epilog() -> str:
    d = RunConfig().as_dict()
    lines = ["config keys and defaults:"]
    for section, keys in SECTIONS.items():
        lines.append(f"  [{section}]")
        lines += [f"    {k} = {d[k]}" for k in keys]
    return "\n".join(lines)


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("LF_RL_OUT") or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    config = read_config(args.config, seed=args.seed, episodes=args.episodes, track=args.track)
    out = _out_dir(args.out)
    write_config(config, out / "config.cfg")
    log.info("training %s on %s for %d episodes (seed %d, %s kernels)", config.controller,
             config.track, config.episodes, config.seed, kernels.BACKEND)

    def progress(rec):
        if rec.episode % max(1, config.episodes // 10) == 0:
            log.info("episode %d: score %.3f (%s)", rec.episode, rec.score, rec.outcome)

    records, agent = train(config, out, callback=progress)
    print(f"wrote {out / 'curve.csv'} and {out / 'agent.ckpt'}")
    if args.plot:
        track = config.load_track()
        traj = []
        evaluate(agent, track, 1, config, trajectories=traj)
        for p in emit_plots(records, out, track, traj, ["greedy run"]):
            print(f"wrote {p}")
    return 0


def _write_eval(records, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial"] + CURVE_HEADER[1:])
        for r in records:
            w.writerow(r.row())


def cmd_eval(args) -> int:
    config = read_config(args.config, seed=args.seed, trials=args.trials)
    agent = load_checkpoint(args.checkpoint)
    track_name = args.track or config.eval_track
    out = _out_dir(args.out)
    write_config(config, out / "config.cfg")
    traj = [] if args.plot else None
    ev = evaluate(agent, config.load_track(track_name), config.trials, config,
                  trajectories=traj)
    for r in ev.records:
        print(f"trial {r.episode}: score {r.score:.4f} ({r.outcome}, {r.segments} segments, "
              f"{r.elapsed_s:.2f} s)")
    print(f"best of {config.trials}: {ev.best:.4f}")
    _write_eval(ev.records, out / "eval.csv")
    print(f"wrote {out / 'eval.csv'}")
    if args.plot:
        track = config.load_track(track_name)
        labels = [f"trial {r.episode}" for r in ev.records]
        path = out / "trajectory.svg"
        path.write_text(trajectory_svg(track, [(t.x, t.y) for t in traj], labels))
        print(f"wrote {path}")
    return 0


def cmd_compare(args) -> int:
    if len(args.config) < 2:
        raise UsageError("compare needs at least two --config files")
    configs = [read_config(p) for p in args.config]
    labels = [Path(p).stem for p in args.config]
    if len(set(labels)) != len(labels):
        labels = [f"{lab}#{i}" for i, lab in enumerate(labels)]
    out = _out_dir(args.out)
    for lab, cfg in zip(labels, configs):
        write_config(cfg, out / f"config_{lab}.cfg")
    result = compare(configs, args.seeds, args.eval_track, args.jobs, labels)
    result.write_csv(out / "compare.csv")
    print(result.table())
    print("ranking: " + " > ".join(result.ranking()))
    print(f"wrote {out / 'compare.csv'}")
    if args.plot:
        for (lab, seed), records in result.curves.items():
            emit_plots(records, out / f"{lab}_seed{seed}")
    return 0


def cmd_simulate(args) -> int:
    config = read_config(args.config, seed=args.seed)
    agent = load_checkpoint(args.checkpoint) if args.checkpoint else make_controller(config)
    track = config.load_track(args.track or config.track)
    out = _out_dir(args.out)
    write_config(config, out / "config.cfg")
    traj = Trajectory()
    rngs = Rngs.from_seed(config.seed, purpose=2)
    env = make_env(config, track)
    rec = run_episode(config, agent, track, rngs, False, 1, env, traj)
    with open(out / "trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "x", "y"])
        for k, (x, y) in enumerate(zip(traj.x, traj.y)):
            w.writerow([k, repr(x), repr(y)])
    print(f"{agent.kind}: score {rec.score:.4f} ({rec.outcome}, {rec.segments} segments, "
          f"{rec.steps} steps)")
    print(f"wrote {out / 'trajectory.csv'}")
    if args.plot:
        path = out / "trajectory.svg"
        path.write_text(trajectory_svg(track, [(traj.x, traj.y)], [agent.kind]))
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    ap = argparse.ArgumentParser(prog="linefollower", description=__doc__.splitlines()[0],
                                 epilog=_defaults_epilog(), formatter_class=fmt)
    ap.add_argument("-v", "--verbose", action="store_true", help="progress logging")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="INI config file")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--out", help=f"output directory (default $LF_RL_OUT or ./{DEFAULT_OUT})")
        p.add_argument("--plot", action="store_true", help="also write SVG charts")

    p = sub.add_parser("train", help="train a controller", epilog=_defaults_epilog(),
                       formatter_class=fmt)
    common(p, config_required=True)
    p.add_argument("--episodes", type=int, help="override [run] episodes")
    p.add_argument("--track", help="override [run] track (bundled id or JSON path)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="greedy best-of-N runs of a checkpoint",
                       epilog=_defaults_epilog(), formatter_class=fmt)
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--track", help="track to drive (default [run] eval_track)")
    p.add_argument("--trials", type=int, help="override [run] trials")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="train several configs over seeds and rank them")
    p.add_argument("--config", action="append", default=[], required=True,
                   help="config file; give two or more")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--eval-track", help="held-out track (default each config's eval_track)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="drive one greedy episode and record the path",
                       epilog=_defaults_epilog(), formatter_class=fmt)
    common(p)
    p.add_argument("--checkpoint", help="trained controller (default: fresh one from config)")
    p.add_argument("--track", help="track to drive (default [run] track)")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)  # exits 2 on bad flags
    if args.command is None:
        ap.print_usage(sys.stderr)
        print("linefollower: error: a command is required", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"linefollower: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, FloatingPointError) as exc:
        print(f"linefollower: {args.command} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
