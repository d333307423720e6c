"""Random-scheduler simulation loop, census bookkeeping and stop conditions."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from . import core
from .core import A, INHIBITOR, LEADER, COIN, W, interact
from .params import CFG_BACKUP_ONLY, CFG_N, ProtocolParams
from .rng import draw_pair, seed_state

# census layout
C_ROLE = 0  # 6 slots, one per role
C_ALIVE = 6
C_ACTIVE = 7
C_PASSIVE = 8
C_ACTIVE_CNTPOS = 9
C_VOID_FALSE = 10
C_INH_STOPPED = 11
C_COIN_STOPPED = 12
C_COIN_LEVEL = 16  # 64 slots, exact coin levels
C_INH_DRAG = 80  # 64 slots, exact inhibitor drag
C_LEADER_DRAG = 144  # 64 slots, exact drag of alive leaders
C_ACTIVE_CNT = 208  # 256 slots, counter value of active leaders
C_LEN = 464

# marks: first interaction index at which something happened (-1 = never)
M_SINGLE_ACTIVE = 0
M_SINGLE_ALIVE = 1
M_RESOLVED = 2
M_EPOCH2_END = 3
M_EPOCH2_SURVIVORS = 4
M_FIRST_PASS0 = 5
M_SAFETY = 6
M_PASS0_TOTAL = 7
M_LEADERS_SEEN = 8
M_EPOCH2_NO_ACTIVE = 9
M_FIRST_DRAG = 16  # 64 slots
M_LEN = 80

# trace event kinds
EV_ROUND = 0
EV_EPOCH = 1
EV_ELIM = 2
EV_DRAG = 3
EV_SAFETY = 4
EVENT_NAMES = ("round-boundary", "epoch-transition", "elimination", "drag-advance",
               "safety-violation")

# loop exit status
ST_STOP = 0
ST_CHUNK = 1
ST_TRACE_FULL = 2
ST_SAFETY = 3


class Stop(enum.IntEnum):
    MAX_INTERACTIONS = 0
    SINGLE_ALIVE = 1
    SINGLE_ACTIVE = 2
    ALL_PASSIVE_RESOLVED = 3
    EPOCH2_END = 4
    ROUNDS = 5
    DRAG = 6  # first active leader reaches drag ``StopCondition.level``


@njit(cache=True)
def _census_apply(census, s, sign):
    r = core.role(s)
    census[C_ROLE + r] += sign
    if r == COIN:
        census[C_COIN_LEVEL + core.level(s)] += sign
        if core.mode(s) == 1:
            census[C_COIN_STOPPED] += sign
    elif r == INHIBITOR:
        census[C_INH_DRAG + core.drag(s)] += sign
        if core.mode(s) == 1:
            census[C_INH_STOPPED] += sign
    elif r == LEADER:
        lm = core.leadermode(s)
        if core.void(s) == 0:
            census[C_VOID_FALSE] += sign
        if lm != W:
            census[C_ALIVE] += sign
            census[C_LEADER_DRAG + core.drag(s)] += sign
            if lm == A:
                census[C_ACTIVE] += sign
                census[C_ACTIVE_CNT + core.cnt(s)] += sign
                if core.cnt(s) > 0:
                    census[C_ACTIVE_CNTPOS] += sign
            else:
                census[C_PASSIVE] += sign


@njit(cache=True)
def census_scan(agents):
    census = np.zeros(C_LEN, dtype=np.int64)
    for s in agents:
        _census_apply(census, s, 1)
    return census


@njit(cache=True)
def _emit(trace, ntrace, kind, t, agent, payload):
    if ntrace[0] < trace.shape[0]:
        k = ntrace[0]
        trace[k, 0] = kind
        trace[k, 1] = t
        trace[k, 2] = agent
        trace[k, 3] = payload
        ntrace[0] = k + 1


@njit(cache=True)
def _track(agents, idx, old, new, census, marks, t, trace, ntrace, tracing):
    _census_apply(census, old, -1)
    _census_apply(census, new, 1)
    agents[idx] = new
    if core.role(new) != LEADER:
        return
    if core.role(old) != LEADER:
        marks[M_LEADERS_SEEN] = 1
        return
    d_old, d_new = core.drag(old), core.drag(new)
    if d_new > d_old and core.leadermode(new) == A:
        if marks[M_FIRST_DRAG + d_new] < 0:
            marks[M_FIRST_DRAG + d_new] = t
        if tracing:
            _emit(trace, ntrace, EV_DRAG, t, idx, d_new)
    lm_old, lm_new = core.leadermode(old), core.leadermode(new)
    if tracing and lm_new != lm_old:
        _emit(trace, ntrace, EV_ELIM, t, idx, lm_new)


@njit(cache=True)
def _stop_reached(code, arg, census, marks):
    if code == 1:
        return marks[M_SINGLE_ALIVE] >= 0
    if code == 2:
        return marks[M_SINGLE_ACTIVE] >= 0
    if code == 3:
        return marks[M_RESOLVED] >= 0
    if code == 4:
        return marks[M_EPOCH2_END] >= 0
    if code == 5:
        return marks[M_PASS0_TOTAL] >= arg
    if code == 6:
        return marks[M_FIRST_DRAG + arg] >= 0
    return False


# Not cached on disk: numba's cache does not notice edits to core.py.
@njit
def run_kernel(agents, census, marks, rngs, cfg, t, t_end, stop_code, stop_arg,
               bin_width, bin_pass0, bin_alive, bin_active, bin_void_false,
               trace, ntrace, tracing):
    """Step until the stop condition holds, ``t_end`` is hit or the trace fills.

    Returns (status, t). Bins are indexed by t // bin_width and must cover
    [t, t_end).
    """
    n = cfg[CFG_N]
    backup_only = cfg[CFG_BACKUP_ONLY]
    if _stop_reached(stop_code, stop_arg, census, marks):
        return ST_STOP, t
    while t < t_end:
        if tracing and ntrace[0] + 8 > trace.shape[0]:
            return ST_TRACE_FULL, t
        ri, ii = draw_pair(rngs, n)
        r_old = agents[ri]
        i_old = agents[ii]
        r_new, i_new, cls = interact(r_old, i_old, cfg)
        b = t // bin_width
        t += 1
        if cls == core.PASS0:
            marks[M_PASS0_TOTAL] += 1
            bin_pass0[b] += 1
            if marks[M_FIRST_PASS0] < 0:
                marks[M_FIRST_PASS0] = t
            if tracing:
                _emit(trace, ntrace, EV_ROUND, t, ri, core.phase(r_new))
        if r_new != r_old:
            _track(agents, ri, r_old, r_new, census, marks, t, trace, ntrace, tracing)
        if i_new != i_old:
            _track(agents, ii, i_old, i_new, census, marks, t, trace, ntrace, tracing)
        if (t % bin_width) == 0 or r_new != r_old or i_new != i_old:
            bin_alive[b] = census[C_ALIVE]
            bin_active[b] = census[C_ACTIVE]
            bin_void_false[b] = census[C_VOID_FALSE]
        if marks[M_LEADERS_SEEN] == 1:
            alive = census[C_ALIVE]
            settled = census[C_ROLE + core.ZERO] == 0
            if alive == 0:
                marks[M_SAFETY] = t
                if tracing:
                    _emit(trace, ntrace, EV_SAFETY, t, ri, 0)
                return ST_SAFETY, t
            if settled:
                if alive == 1 and marks[M_SINGLE_ALIVE] < 0:
                    marks[M_SINGLE_ALIVE] = t
                active = census[C_ACTIVE]
                if active == 1 and marks[M_SINGLE_ACTIVE] < 0:
                    marks[M_SINGLE_ACTIVE] = t
                if (active == 1 and census[C_PASSIVE] == 0 and marks[M_RESOLVED] < 0):
                    marks[M_RESOLVED] = t
                if (not backup_only and census[C_ACTIVE_CNTPOS] == 0
                        and marks[M_EPOCH2_END] < 0):
                    marks[M_EPOCH2_END] = t
                    marks[M_EPOCH2_SURVIVORS] = active
                    if active == 0:
                        marks[M_EPOCH2_NO_ACTIVE] = 1
                    if tracing:
                        _emit(trace, ntrace, EV_EPOCH, t, ri, 3)
        if _stop_reached(stop_code, stop_arg, census, marks):
            return ST_STOP, t
    return ST_CHUNK, t


def initial_agents(params: ProtocolParams) -> np.ndarray:
    if params.backup_only:
        s = core.new_leader(np.int64(0), params.cnt_start)
        return np.full(params.n, s, dtype=np.int64)
    return np.zeros(params.n, dtype=np.int64)


@dataclass
class StopCondition:
    kind: Stop
    limit: int | None = None  # interaction budget; None means unbounded
    rounds: int = 1  # only for Stop.ROUNDS
    level: int = 1  # only for Stop.DRAG

    def __post_init__(self):
        if self.kind == Stop.DRAG and not 1 <= self.level < 64:
            raise ValueError("drag level must be in [1, 63]")
        if self.limit is not None and self.limit <= 0:
            raise ValueError("interaction limit must be positive")
        if self.kind == Stop.MAX_INTERACTIONS and self.limit is None:
            raise ValueError("MAX_INTERACTIONS needs a limit")


@dataclass
class TraceEvent:
    kind: str
    interaction: int
    agent: int
    payload: int

    def to_json(self) -> str:
        return json.dumps(self.__dict__, separators=(",", ":"))


class SafetyViolation(RuntimeError):
    pass


@dataclass
class TrialRecord:
    seed: int
    params: dict
    interactions: int
    parallel_time: float
    exhausted: bool
    safety_violation: bool
    t_single_active: int | None
    t_single_alive: int | None
    t_resolved: int | None
    epoch1_end: int | None
    epoch2_end: int | None
    epoch3_end: int | None
    epoch2_survivors: int | None
    first_drag: list[int | None]
    rounds: list[int]
    epoch3_rounds: int | None
    coin_fraction: float
    final_census: dict

    @property
    def stabilization_parallel_time(self) -> float | None:
        if self.t_single_alive is None:
            return None
        return self.t_single_alive / self.params["n"]

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["stabilization_parallel_time"] = self.stabilization_parallel_time
        return d


_CHUNK = 1 << 24


class SimState:
    """A population plus the scheduler's RNG and bookkeeping arrays."""

    def __init__(self, params: ProtocolParams, seed: int, trace_sink: Callable | None = None,
                 trace_capacity: int = 1 << 16):
        self.params = params
        self.seed = seed
        self.cfg = params.to_array()
        self.agents = initial_agents(params)
        self.rng = seed_state(seed)
        self.census = census_scan(self.agents)
        self.marks = np.full(M_LEN, -1, dtype=np.int64)
        self.marks[M_PASS0_TOTAL] = 0
        self.marks[M_LEADERS_SEEN] = 1 if params.backup_only else 0
        self.interactions = 0
        self.bin_width = max(1, params.n // 16)
        self._nbins = 0
        self.bin_pass0 = np.zeros(0, dtype=np.int64)
        self.bin_alive = np.zeros(0, dtype=np.int64)
        self.bin_active = np.zeros(0, dtype=np.int64)
        self.bin_void_false = np.zeros(0, dtype=np.int64)
        self.trace_sink = trace_sink
        self.trace = np.zeros((trace_capacity if trace_sink else 1, 4), dtype=np.int64)
        self.ntrace = np.zeros(1, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.params.n

    def _ensure_bins(self, t_end: int):
        need = (t_end + self.bin_width - 1) // self.bin_width + 1
        if need <= self._nbins:
            return
        cap = max(need, 2 * self._nbins)
        grow = cap - self._nbins
        self.bin_pass0 = np.concatenate([self.bin_pass0, np.zeros(grow, np.int64)])
        self.bin_alive = np.concatenate([self.bin_alive, np.full(grow, -1, np.int64)])
        self.bin_active = np.concatenate([self.bin_active, np.full(grow, -1, np.int64)])
        self.bin_void_false = np.concatenate([self.bin_void_false, np.full(grow, -1, np.int64)])
        self._nbins = cap

    def _flush_trace(self):
        k = int(self.ntrace[0])
        if self.trace_sink is not None:
            for kind, t, agent, payload in self.trace[:k]:
                self.trace_sink(TraceEvent(EVENT_NAMES[kind], int(t), int(agent), int(payload)))
        self.ntrace[0] = 0

    def advance(self, stop: Stop = Stop.MAX_INTERACTIONS, limit: int | None = None,
                stop_arg: int = 0) -> int:
        """Run the kernel; returns the exit status of the last chunk."""
        t_stop = None if limit is None else self.interactions + limit
        while True:
            t_end = self.interactions + _CHUNK
            if t_stop is not None:
                t_end = min(t_end, t_stop)
            if t_end <= self.interactions:
                return ST_CHUNK
            self._ensure_bins(t_end)
            status, t = run_kernel(
                self.agents, self.census, self.marks, self.rng, self.cfg,
                self.interactions, t_end, int(stop), stop_arg, self.bin_width,
                self.bin_pass0, self.bin_alive, self.bin_active, self.bin_void_false,
                self.trace, self.ntrace, self.trace_sink is not None)
            self.interactions = int(t)
            if self.trace_sink is not None:
                self._flush_trace()
            if status == ST_TRACE_FULL:
                continue
            if status != ST_CHUNK:
                return status
            if t_stop is not None and self.interactions >= t_stop:
                return ST_CHUNK

    def step(self) -> "SimState":
        self.advance(Stop.MAX_INTERACTIONS, 1)
        return self

    def status(self) -> dict:
        return detect_stabilization(self)

    def check_census(self) -> bool:
        return bool(np.array_equal(census_scan(self.agents), self.census))

    def census_dict(self) -> dict:
        c = self.census
        phi, psi = self.params.phi, self.params.psi
        return {
            "roles": {name: int(c[C_ROLE + k]) for k, name in enumerate(core.ROLE_NAMES)},
            "alive": int(c[C_ALIVE]),
            "active": int(c[C_ACTIVE]),
            "passive": int(c[C_PASSIVE]),
            "coin_levels": [int(v) for v in c[C_COIN_LEVEL:C_COIN_LEVEL + phi + 1]],
            "inhibitor_drags": [int(v) for v in c[C_INH_DRAG:C_INH_DRAG + psi + 1]],
            "leader_drags": [int(v) for v in c[C_LEADER_DRAG:C_LEADER_DRAG + psi + 1]],
        }

    def copy(self) -> "SimState":
        other = SimState.__new__(SimState)
        other.__dict__.update(self.__dict__)
        for name in ("cfg", "agents", "rng", "census", "marks", "bin_pass0", "bin_alive",
                     "bin_active", "bin_void_false", "trace", "ntrace"):
            setattr(other, name, getattr(self, name).copy())
        return other


def new_population(params: ProtocolParams, seed: int, **kw) -> SimState:
    return SimState(params, seed, **kw)


def step(state: SimState) -> SimState:
    return state.step()


def detect_stabilization(state: SimState) -> dict:
    alive = int(state.census[C_ALIVE])
    settled = int(state.census[C_ROLE + core.ZERO]) == 0
    return {
        "alive": alive,
        "active": int(state.census[C_ACTIVE]),
        "stabilized": alive == 1 and settled,
        "safety_violation": state.marks[M_SAFETY] >= 0,
    }


def _mark(state: SimState, slot: int) -> int | None:
    v = int(state.marks[slot])
    return None if v < 0 else v


def run_until(state: SimState, cond: StopCondition, rounds_gap: float = 2.0
              ) -> tuple[SimState, TrialRecord]:
    """Step ``state`` until ``cond`` first holds; returns the state and its record.

    Budget exhaustion is reported through ``TrialRecord.exhausted``; a
    safety violation raises ``SafetyViolation`` only from the CLI layer, here
    it is flagged on the record.
    """
    from .analytics import build_record  # late import: analytics depends on engine

    stop_arg = 0
    if cond.kind == Stop.ROUNDS:
        stop_arg = int(cond.rounds * state.n - state.n // 32)
    elif cond.kind == Stop.DRAG:
        stop_arg = cond.level
    status = state.advance(cond.kind, cond.limit, stop_arg)
    exhausted = status == ST_CHUNK
    if cond.kind == Stop.MAX_INTERACTIONS:
        exhausted = True
    return state, build_record(state, exhausted=exhausted, rounds_gap=rounds_gap)


def run_trial(params: ProtocolParams, seed: int, cond: StopCondition,
              trace_sink: Callable | None = None) -> TrialRecord:
    state = new_population(params, seed, trace_sink=trace_sink)
    return run_until(state, cond)[1]
