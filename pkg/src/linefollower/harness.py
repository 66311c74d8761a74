"""Episode runner, training loop, greedy evaluation and controller comparison."""
from __future__ import annotations

import csv
import logging
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .agents import (
    CONTROLLERS, ActionSet, Controller, PController, PControllerConfig, QMimo, QMiso,
    save_checkpoint,
)
from .environment import (
    COMPLETED, OUTCOMES, LineFollowerEnv, SensorArray, Termination, randomize_direction,
    score_value,
)
from .kinematics import RobotGeometry, StepConfig
from .track import Track, load_track

log = logging.getLogger(__name__)

CURVE_HEADER = ["episode", "score", "outcome", "segments", "elapsed_s", "steps", "explore_rate"]
COMPARE_HEADER = ["controller", "seed", "best_score", "median_score"]
STREAMS = ("direction", "exploration", "noise", "start")


@dataclass(frozen=True)
class RunConfig:
    controller: str = "sa_q_miso"
    episodes: int = 2000
    track: str = "oval_simple"
    eval_track: str = "complex_01"
    seed: int = 0
    # learning
    alpha: float = 0.01
    gamma: float = 0.99
    epsilon: float = 0.1
    beta: float = 0.01
    t_floor: float = 1e-3
    per_step_temperature: bool = False
    miso_actions: str = ""
    # P controller
    kp: float = 4.0
    base_fraction: float = 1.0
    # robot and world
    a: float = 0.20
    b: float = 0.25
    r: float = 0.025
    motor_rpm: float = 600.0
    t_s: float = 0.01
    sensors: int = 32
    line_width: float = 0.0
    max_steps: int = 20_000
    k_lost: int = 50
    k_rev: int = 100
    noise: float = 0.0
    random_start: bool = True
    trials: int = 5

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValueError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not self.t_s > 0.0:
            raise ValueError("t_s must be positive")
        if self.max_steps < 1 or self.k_lost < 1 or self.k_rev < 1:
            raise ValueError("step caps must be >= 1")

    @property
    def geometry(self) -> RobotGeometry:
        return RobotGeometry.from_rpm(self.a, self.b, self.r, self.motor_rpm)

    @property
    def step_config(self) -> StepConfig:
        return StepConfig(self.t_s)

    @property
    def termination(self) -> Termination:
        return Termination(self.k_lost, self.k_rev, self.max_steps)

    def sensor_array(self) -> SensorArray:
        return SensorArray.for_geometry(self.geometry, self.sensors)

    def load_track(self, name: str | None = None) -> Track:
        t = load_track(name or self.track)
        if self.line_width > 0.0:
            t = Track(t.points, self.line_width, t.closed, t.segment_marks, t.name)
        return t

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_types(cls) -> dict:
        return {f.name: f.type for f in fields(cls)}


@dataclass
class EpisodeRecord:
    episode: int
    score: float
    outcome: str
    segments: int
    elapsed_s: float
    steps: int
    explore_rate: float

    def row(self) -> list:
        return [self.episode, repr(self.score), self.outcome, self.segments,
                repr(self.elapsed_s), self.steps, repr(self.explore_rate)]


@dataclass
class Rngs:
    """Independent named streams, so enabling noise leaves exploration untouched.

    The streams are ``random.Random`` instances: the episode loop draws one or
    two scalars per step, where the stdlib generator is roughly ten times
    cheaper per call than a numpy Generator.  Seeds come from a numpy
    ``SeedSequence`` so the children are well separated.
    """

    direction: random.Random
    exploration: random.Random
    noise: random.Random
    start: random.Random

    @classmethod
    def from_seed(cls, seed: int, purpose: int = 0) -> "Rngs":
        children = np.random.SeedSequence([seed, purpose]).spawn(len(STREAMS))
        return cls(*(random.Random(int.from_bytes(c.generate_state(4).tobytes(), "little"))
                     for c in children))


def make_controller(config: RunConfig) -> Controller:
    n_states = config.sensors + 2
    kind = config.controller
    if kind == "P":
        return PController(PControllerConfig(config.kp, config.base_fraction))
    if kind == "sa_q_mimo":
        return QMimo(n_states, ActionSet.mimo21(), config.alpha, config.gamma, config.beta,
                     config.t_floor, config.per_step_temperature)
    actions = (ActionSet.parse("miso", config.miso_actions) if config.miso_actions
               else ActionSet.miso9())
    return QMiso(n_states, actions, "sa" if kind == "sa_q_miso" else "eps", config.alpha,
                 config.gamma, config.epsilon, config.beta, config.t_floor,
                 config.per_step_temperature)


def make_env(config: RunConfig, track: Track) -> LineFollowerEnv:
    return LineFollowerEnv(track, config.geometry, config.step_config, config.sensor_array(),
                           config.termination, config.noise)


@dataclass
class Trajectory:
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)


def run_episode(
    config: RunConfig,
    agent: Controller,
    track: Track,
    rngs: Rngs,
    train: bool = True,
    episode: int = 1,
    env: LineFollowerEnv | None = None,
    trajectory: Trajectory | None = None,
) -> EpisodeRecord:
    """Run one episode from the start point; learning updates only when ``train``.

    The direction of travel is drawn from ``rngs.direction`` and the start pose
    gets a lateral offset within one line width.
    """
    course = randomize_direction(track, rngs.direction)
    env = env or make_env(config, course)
    env.track = course
    lateral = 0.0
    if config.random_start:
        lateral = rngs.start.uniform(-1.0, 1.0) * course.line_width
    s = env.reset(env.start_pose(lateral))
    core = env.core
    if trajectory is not None:
        trajectory.x.append(core.x)
        trajectory.y.append(core.y)
    # hot loop: bind everything local
    act, learn, step = agent.act, agent.learn, core.step
    rng = rngs.exploration
    noise_rng = rngs.noise if config.noise > 0.0 else None
    w_max = env.geom.w_max
    timeout = OUTCOMES.index("timeout")
    e = core.error
    explored = 0
    outcome = 0
    while not outcome:
        a, y_l, y_r, was_explored = act(s, e, rng, train)
        if noise_rng is None:
            s_next, e, r, outcome = step(y_l * w_max, y_r * w_max)
        else:
            s_next, e, r, outcome = step(*env.wheel_speeds(y_l, y_r, noise_rng))
        if was_explored:
            explored += 1
        if train:
            # a timeout is a truncation, not a terminal state
            learn(s, a, r, s_next, outcome != 0 and outcome != timeout)
        if trajectory is not None:
            trajectory.x.append(core.x)
            trajectory.y.append(core.y)
        s = s_next
    steps = core.step_count
    if train:
        agent.end_episode(steps)
    elapsed = steps * config.t_s
    return EpisodeRecord(
        episode=episode,
        score=score_value(core.segments_done, elapsed),
        outcome=OUTCOMES[outcome],
        segments=core.segments_done,
        elapsed_s=elapsed,
        steps=steps,
        explore_rate=explored / steps,
    )


def write_curve(records: list[EpisodeRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for rec in records:
            w.writerow(rec.row())


def read_curve(path: str | Path) -> list[EpisodeRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        EpisodeRecord(int(r["episode"]), float(r["score"]), r["outcome"], int(r["segments"]),
                      float(r["elapsed_s"]), int(r["steps"]), float(r["explore_rate"]))
        for r in rows
    ]


def train(
    config: RunConfig,
    out_dir: str | Path | None = None,
    agent: Controller | None = None,
    callback=None,
) -> tuple[list[EpisodeRecord], Controller]:
    """Train for ``config.episodes`` episodes.

    With ``out_dir`` the learning curve is appended to ``curve.csv`` after every
    episode and the final controller is written to ``agent.ckpt``.
    """
    track = config.load_track()
    agent = agent or make_controller(config)
    rngs = Rngs.from_seed(config.seed)
    env = make_env(config, track)
    records: list[EpisodeRecord] = []
    fh = writer = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fh = open(out / "curve.csv", "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
    try:
        for ep in range(1, config.episodes + 1):
            rec = run_episode(config, agent, track, rngs, True, ep, env)
            records.append(rec)
            if writer is not None:
                try:
                    writer.writerow(rec.row())
                    fh.flush()
                except OSError as exc:
                    raise OSError(f"writing learning curve failed at episode {ep}: {exc}") from exc
            if callback is not None:
                callback(rec)
    finally:
        if fh is not None:
            fh.close()
    if out_dir is not None:
        save_checkpoint(agent, Path(out_dir) / "agent.ckpt")
    return records, agent


@dataclass
class Evaluation:
    best: float
    scores: list[float]
    records: list[EpisodeRecord]


def evaluate(
    agent: Controller,
    track: Track | str,
    trials: int = 5,
    config: RunConfig | None = None,
    seed: int | None = None,
    trajectories: list | None = None,
) -> Evaluation:
    """Greedy runs without learning; reports every score and the best one."""
    config = config or RunConfig()
    if isinstance(track, str):
        track = config.load_track(track)
    rngs = Rngs.from_seed(config.seed if seed is None else seed, purpose=1)
    env = make_env(config, track)
    records = []
    for k in range(1, trials + 1):
        traj = Trajectory() if trajectories is not None else None
        records.append(run_episode(config, agent, track, rngs, False, k, env, traj))
        if traj is not None:
            trajectories.append(traj)
    scores = [r.score for r in records]
    return Evaluation(max(scores), scores, records)


@dataclass
class Comparison:
    controllers: list[str]
    seeds: list[int]
    best: np.ndarray               # controllers x seeds, best-of-trials score
    median: np.ndarray             # controllers x seeds, median of trials
    curves: dict = field(default_factory=dict)

    @property
    def medians(self) -> dict[str, float]:
        return {c: float(np.median(self.best[i])) for i, c in enumerate(self.controllers)}

    def ranking(self) -> list[str]:
        m = self.medians
        return sorted(self.controllers, key=lambda c: -m[c])

    def rows(self) -> list[list]:
        return [[c, seed, repr(float(self.best[i, j])), repr(float(self.median[i, j]))]
                for i, c in enumerate(self.controllers) for j, seed in enumerate(self.seeds)]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COMPARE_HEADER)
            w.writerows(self.rows())

    def table(self) -> str:
        head = f"{'controller':<12}" + "".join(f"{'seed ' + str(s):>12}" for s in self.seeds)
        lines = [head + f"{'median':>12}"]
        for i, c in enumerate(self.controllers):
            lines.append(f"{c:<12}" + "".join(f"{v:>12.3f}" for v in self.best[i])
                         + f"{self.medians[c]:>12.3f}")
        return "\n".join(lines)


def _train_and_eval(args):
    config, eval_track = args
    records, agent = train(config)
    ev = evaluate(agent, eval_track, config.trials, config)
    return records, ev


def compare(
    configs: list[RunConfig],
    seeds: list[int],
    eval_track: str | None = None,
    jobs: int = 1,
    labels: list[str] | None = None,
) -> Comparison:
    """Train every config under every seed, then score best-of-trials greedy runs
    on the held-out track."""
    if len(configs) < 2:
        raise ValueError("compare needs at least two configs")
    labels = labels or [c.controller for c in configs]
    tasks = [(replace(c, seed=s), eval_track or c.eval_track) for c in configs for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_train_and_eval, tasks))
    else:
        results = [_train_and_eval(t) for t in tasks]
    best = np.zeros((len(configs), len(seeds)))
    median = np.zeros_like(best)
    curves = {}
    for k, (records, ev) in enumerate(results):
        i, j = divmod(k, len(seeds))
        best[i, j] = ev.best
        median[i, j] = float(np.median(ev.scores))
        curves[(labels[i], seeds[j])] = records
    return Comparison(labels, list(seeds), best, median, curves)


def completed(records: list[EpisodeRecord]) -> bool:
    return any(r.outcome == COMPLETED for r in records)


def window_means(values, width: int = 100) -> list[float]:
    v = np.asarray(values, dtype=float)
    return [float(v[i:i + width].mean()) for i in range(0, len(v) - width + 1, width)]


def trend_slope(values) -> float:
    y = np.asarray(values, dtype=float)
    x = np.arange(1, len(y) + 1, dtype=float)
    return float(np.polyfit(x, y, 1)[0]) if len(y) > 1 else math.nan
