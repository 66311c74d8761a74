"""Tabular controllers: P baseline and one-step Q-learning with epsilon-greedy or
simulated-annealing action selection, in single- and two-table form."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

CHECKPOINT_MAGIC = "linefollower-checkpoint"
CHECKPOINT_VERSION = 1

MISO9 = tuple((float(yl), float(yr)) for yl in (-1, 0, 1) for yr in (-1, 0, 1))
MIMO21 = tuple(round(-1.0 + 0.1 * k, 10) for k in range(21))

CONTROLLERS = ("P", "eps_q_miso", "sa_q_miso", "sa_q_mimo")


@dataclass(frozen=True)
class ActionSet:
    """Wheel-speed fractions.

    ``miso``: each action is a ``(y_l, y_r)`` pair.  ``mimo``: each action is a
    single fraction and every wheel picks its own.
    """

    kind: str
    actions: tuple

    def __post_init__(self):
        if self.kind not in ("miso", "mimo"):
            raise ValueError(f"unknown action set kind {self.kind!r}")
        if not self.actions:
            raise ValueError("empty action set")
        flat = [v for a in self.actions for v in (a if self.kind == "miso" else (a,))]
        if any(not -1.0 <= v <= 1.0 for v in flat):
            raise ValueError("action fractions must lie in [-1, 1]")

    def __len__(self):
        return len(self.actions)

    @classmethod
    def miso9(cls) -> "ActionSet":
        return cls("miso", MISO9)

    @classmethod
    def mimo21(cls) -> "ActionSet":
        return cls("mimo", MIMO21)

    @classmethod
    def parse(cls, kind: str, text: str) -> "ActionSet":
        """``"-1:-1 0:1 ..."`` for miso, ``"-1 -0.5 0 ..."`` for mimo."""
        items = text.split()
        if kind == "miso":
            return cls(kind, tuple(tuple(float(v) for v in it.split(":")) for it in items))
        return cls(kind, tuple(float(v) for v in items))

    def format(self) -> str:
        if self.kind == "miso":
            return " ".join(f"{yl!r}:{yr!r}" for yl, yr in self.actions)
        return " ".join(repr(v) for v in self.actions)


class QTable:
    """State-by-action value table with its learning rate and discount.

    Rows are plain lists of floats: the per-step operations touch one row at
    a time, and list access is cheaper than numpy scalar indexing.
    """

    def __init__(self, n_states: int, n_actions: int, alpha: float = 0.01,
                 gamma: float = 0.99, values=None):
        if not 0.0 < alpha <= 1.0:
            raise ValueError("learning rate must be in (0, 1]")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("discount must be in [0, 1]")
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        if values is None:
            values = np.zeros((n_states, n_actions))
        values = np.array(values, dtype=float)
        if values.shape != (n_states, n_actions):
            raise ValueError(f"values shape {values.shape} != {(n_states, n_actions)}")
        self._rows = values.tolist()
        self._shape = (n_states, n_actions)

    @property
    def values(self) -> np.ndarray:
        """A fresh array snapshot; edits to it do not reach the table."""
        return np.array(self._rows, dtype=float)

    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    def __getitem__(self, idx):
        if isinstance(idx, tuple):
            s, a = idx
            return self._rows[s][a]
        return np.array(self._rows[idx], dtype=float)

    def set(self, s: int, a: int, value: float) -> None:
        _check(self, s, a)
        self._rows[s][a] = float(value)

    def copy(self) -> "QTable":
        return QTable(*self.shape, self.alpha, self.gamma, self._rows)


def _check(table: QTable, s: int, a: int | None = None) -> None:
    n_s, n_a = table.shape
    if not 0 <= s < n_s:
        raise IndexError(f"state {s} out of range [0, {n_s})")
    if a is not None and not 0 <= a < n_a:
        raise IndexError(f"action {a} out of range [0, {n_a})")


def q_update(table: QTable, s: int, a: int, r: float, s_next: int,
             terminal: bool = False, alpha: float | None = None) -> float:
    """One-step Q-learning backup of ``Q(s, a)`` in place; returns the new value.

    A terminal transition bootstraps from zero.
    """
    _check(table, s, a)
    _check(table, s_next)
    return _backup(table, s, a, r, s_next, terminal, table.alpha if alpha is None else alpha)


def _backup(table, s, a, r, s_next, terminal, lr):
    row = table._rows[s]
    q = row[a]
    target = r if terminal else r + table.gamma * max(table._rows[s_next])
    new = q + lr * (target - q)
    if new != new:
        raise FloatingPointError(
            f"Q({s},{a}) became NaN (q={q}, r={r}, target={target}); check alpha/gamma/reward scale")
    row[a] = new
    return new


def greedy_action(table: QTable, s: int) -> int:
    """Arg-max of the row; ties go to the lowest index."""
    row = table._rows[s]
    return row.index(max(row))


def epsilon_greedy_select(table: QTable, s: int, epsilon: float, rng) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    row = table._rows[s]
    return _eps_pick(row, row.index(max(row)), epsilon, rng)


def _draw_index(rng, n: int) -> int:
    # one uniform draw; works for numpy Generators and random.Random alike
    return int(rng.random() * n)


def _eps_pick(row, greedy, epsilon, rng):
    if rng.random() < epsilon:
        return _draw_index(rng, len(row))
    return greedy


@dataclass
class SASchedule:
    """Annealing clock: ``T = max(1 / (beta * t), t_floor)``; ``T0 = 1/beta`` before ``t = 1``."""

    beta: float = 0.01
    t: int = 0
    t_floor: float = 1e-3

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if not self.t_floor > 0.0:
            raise ValueError("t_floor must be positive")


def temperature(schedule: SASchedule) -> float:
    if schedule.t <= 0:
        return max(1.0 / schedule.beta, schedule.t_floor)
    return max(1.0 / (schedule.beta * schedule.t), schedule.t_floor)


def sa_accept_probability(gap: float, temp: float) -> float:
    return 1.0 if gap >= 0.0 else math.exp(gap / temp)


def sa_select(table: QTable, s: int, temp: float | SASchedule, rng) -> int:
    """Propose a uniform random action and keep it with probability
    ``exp((Q(s,a_r) - Q(s,a_o)) / T)``; otherwise take the greedy action."""
    if isinstance(temp, SASchedule):
        temp = temperature(temp)
    if not temp > 0.0:
        raise ValueError("temperature must be positive")
    row = table._rows[s]
    return _sa_pick(row, row.index(max(row)), temp, rng)


def _sa_pick(row, greedy, temp, rng):
    a_r = _draw_index(rng, len(row))
    sigma = rng.random()
    if sigma < math.exp((row[a_r] - row[greedy]) / temp):
        return a_r
    return greedy


@dataclass(frozen=True)
class PControllerConfig:
    kp: float = 4.0
    base_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.base_fraction <= 1.0:
            raise ValueError("base_fraction must be in (0, 1]")


def _clamp(v: float) -> float:
    return -1.0 if v < -1.0 else (1.0 if v > 1.0 else v)


def p_control(e: float, cfg: PControllerConfig) -> tuple[float, float]:
    """Wheel fractions for error angle ``e``; a line on the left (e > 0) speeds
    up the right wheel so the robot turns left."""
    u = cfg.kp * e
    return _clamp(cfg.base_fraction - u), _clamp(cfg.base_fraction + u)


def mimo_select(tables: tuple[QTable, QTable], s: int, temp: float | SASchedule,
                rngs) -> tuple[int, int]:
    """Each wheel's table picks independently.  ``rngs`` is one generator or a pair."""
    if not isinstance(rngs, (tuple, list)):
        rngs = (rngs, rngs)
    return sa_select(tables[0], s, temp, rngs[0]), sa_select(tables[1], s, temp, rngs[1])


def mimo_update(tables: tuple[QTable, QTable], s: int, actions: tuple[int, int], r: float,
                s_next: int, terminal: bool = False) -> tuple[float, float]:
    """Both tables learn from the same shared reward and transition."""
    return (q_update(tables[0], s, actions[0], r, s_next, terminal),
            q_update(tables[1], s, actions[1], r, s_next, terminal))


# ---------------------------------------------------------------------------
# controllers used by the episode runner


class Decision(NamedTuple):
    action: object
    y_l: float
    y_r: float
    explored: bool


class Controller:
    """``act`` picks wheel fractions; ``learn`` sees each transition while training."""

    kind = ""

    def act(self, s: int, e: float, rng, explore: bool) -> Decision:
        raise NotImplementedError

    def learn(self, s, action, r, s_next, terminal) -> None:
        pass

    def end_episode(self, steps: int) -> None:
        pass

    # checkpoint hooks
    def params(self) -> dict:
        return {}

    def tables(self) -> list[QTable]:
        return []


class PController(Controller):
    kind = "P"

    def __init__(self, cfg: PControllerConfig = PControllerConfig()):
        self.cfg = cfg

    def act(self, s, e, rng, explore):
        y_l, y_r = p_control(e, self.cfg)
        return Decision(None, y_l, y_r, False)

    def params(self):
        return {"kp": self.cfg.kp, "base_fraction": self.cfg.base_fraction}


class ConstantController(Controller):
    """Always outputs the same fractions (test fixture and sanity baseline)."""

    kind = "constant"

    def __init__(self, y_l: float = 0.0, y_r: float = 0.0):
        self.y = (y_l, y_r)

    def act(self, s, e, rng, explore):
        return Decision(None, self.y[0], self.y[1], False)


class _Annealed:
    """Mixin holding the SA clock.  Every learning step ticks it; ``T`` is
    refreshed after each episode unless ``per_step`` is set."""

    def _init_schedule(self, beta, t_floor, per_step, steps=0):
        self.schedule = SASchedule(beta=beta, t=steps, t_floor=t_floor)
        self.per_step = per_step
        self.temp = temperature(self.schedule)

    def _tick(self):
        sched = self.schedule
        sched.t += 1
        if self.per_step:
            self.temp = temperature(sched)

    def end_episode(self, steps):
        self.temp = temperature(self.schedule)


class QMiso(_Annealed, Controller):
    """One table over joint ``(y_l, y_r)`` actions, epsilon-greedy or SA exploration."""

    def __init__(self, n_states: int, actions: ActionSet | None = None, policy: str = "sa",
                 alpha: float = 0.01, gamma: float = 0.99, epsilon: float = 0.1,
                 beta: float = 0.01, t_floor: float = 1e-3, per_step: bool = False,
                 steps: int = 0, table: QTable | None = None):
        if policy not in ("sa", "eps"):
            raise ValueError(f"unknown policy {policy!r}")
        self.actions = actions or ActionSet.miso9()
        if self.actions.kind != "miso":
            raise ValueError("QMiso needs a miso action set")
        self.policy = policy
        self.kind = "sa_q_miso" if policy == "sa" else "eps_q_miso"
        self.epsilon = epsilon
        self.table = table or QTable(n_states, len(self.actions), alpha, gamma)
        self._init_schedule(beta, t_floor, per_step, steps)

    def act(self, s, e, rng, explore):
        row = self.table._rows[s]
        greedy = row.index(max(row))
        if not explore:
            a = greedy
        elif self.policy == "sa":
            a = _sa_pick(row, greedy, self.temp, rng)
        else:
            a = _eps_pick(row, greedy, self.epsilon, rng)
        y_l, y_r = self.actions.actions[a]
        return Decision(a, y_l, y_r, a != greedy)

    def learn(self, s, action, r, s_next, terminal):
        self._tick()
        t = self.table
        _backup(t, s, action, r, s_next, terminal, t.alpha)

    def params(self):
        p = {"alpha": self.table.alpha, "gamma": self.table.gamma, "steps": self.schedule.t}
        if self.policy == "sa":
            p.update(beta=self.schedule.beta, t_floor=self.schedule.t_floor,
                     per_step=int(self.per_step))
        else:
            p.update(epsilon=self.epsilon)
        return p

    def tables(self):
        return [self.table]


class QMimo(_Annealed, Controller):
    """Two tables, one per wheel, each choosing its own fraction by SA."""

    kind = "sa_q_mimo"

    def __init__(self, n_states: int, actions: ActionSet | None = None,
                 alpha: float = 0.01, gamma: float = 0.99, beta: float = 0.01,
                 t_floor: float = 1e-3, per_step: bool = False, steps: int = 0,
                 tables: tuple[QTable, QTable] | None = None):
        self.actions = actions or ActionSet.mimo21()
        if self.actions.kind != "mimo":
            raise ValueError("QMimo needs a mimo action set")
        k = len(self.actions)
        self.pair = tables or (QTable(n_states, k, alpha, gamma), QTable(n_states, k, alpha, gamma))
        self._init_schedule(beta, t_floor, per_step, steps)

    def act(self, s, e, rng, explore):
        row_l = self.pair[0]._rows[s]
        row_r = self.pair[1]._rows[s]
        g_l = row_l.index(max(row_l))
        g_r = row_r.index(max(row_r))
        if explore:
            a_l = _sa_pick(row_l, g_l, self.temp, rng)
            a_r = _sa_pick(row_r, g_r, self.temp, rng)
        else:
            a_l, a_r = g_l, g_r
        vals = self.actions.actions
        return Decision((a_l, a_r), vals[a_l], vals[a_r], a_l != g_l or a_r != g_r)

    def learn(self, s, action, r, s_next, terminal):
        self._tick()
        left, right = self.pair
        _backup(left, s, action[0], r, s_next, terminal, left.alpha)
        _backup(right, s, action[1], r, s_next, terminal, right.alpha)

    def params(self):
        return {"alpha": self.pair[0].alpha, "gamma": self.pair[0].gamma,
                "steps": self.schedule.t, "beta": self.schedule.beta,
                "t_floor": self.schedule.t_floor, "per_step": int(self.per_step)}

    def tables(self):
        return list(self.pair)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(ctrl: Controller, path: str | Path) -> None:
    """Versioned text file: header lines ``key value``, then each table row-major."""
    tabs = ctrl.tables()
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}", f"controller {ctrl.kind}"]
    for k, v in ctrl.params().items():
        lines.append(f"{k} {v!r}")
    if tabs:
        lines.append(f"action_kind {ctrl.actions.kind}")
        lines.append(f"action_values {ctrl.actions.format()}")
        n_s, n_a = tabs[0].shape
        lines += [f"states {n_s}", f"actions {n_a}", f"tables {len(tabs)}"]
    else:
        lines.append("tables 0")
    for i, t in enumerate(tabs):
        lines.append(f"table {i}")
        for row in t._rows:
            lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path: str | Path) -> Controller:
    lines = Path(path).read_text().splitlines()
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a controller checkpoint")
    if int(magic[1]) != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {magic[1]}")
    head: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("table "):
        key, _, val = lines[i].partition(" ")
        head[key] = val
        i += 1
    kind = head["controller"]
    if kind == "P":
        return PController(PControllerConfig(float(head["kp"]), float(head["base_fraction"])))
    n_s, n_a, n_t = int(head["states"]), int(head["actions"]), int(head["tables"])
    alpha, gamma = float(head["alpha"]), float(head["gamma"])
    tabs = []
    for _ in range(n_t):
        i += 1
        rows = [[float(v) for v in lines[i + j].split()] for j in range(n_s)]
        tabs.append(QTable(n_s, n_a, alpha, gamma, rows))
        i += n_s
    actions = ActionSet.parse(head["action_kind"], head["action_values"])
    steps = int(head.get("steps", "0"))
    if kind == "sa_q_mimo":
        return QMimo(n_s, actions, alpha, gamma, float(head["beta"]), float(head["t_floor"]),
                     bool(int(head["per_step"])), steps, tables=(tabs[0], tabs[1]))
    if kind == "sa_q_miso":
        return QMiso(n_s, actions, "sa", alpha, gamma, beta=float(head["beta"]),
                     t_floor=float(head["t_floor"]), per_step=bool(int(head["per_step"])),
                     steps=steps, table=tabs[0])
    if kind == "eps_q_miso":
        return QMiso(n_s, actions, "eps", alpha, gamma, epsilon=float(head["epsilon"]),
                     steps=steps, table=tabs[0])
    raise ValueError(f"{path}: unknown controller {kind!r}")
