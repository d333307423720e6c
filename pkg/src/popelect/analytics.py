"""Census histograms, round reconstruction, aggregation and analytic oracles."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import core
from .engine import (
    C_COIN_LEVEL,
    C_INH_DRAG,
    C_INH_STOPPED,
    C_ROLE,
    M_EPOCH2_END,
    M_EPOCH2_SURVIVORS,
    M_FIRST_DRAG,
    M_RESOLVED,
    M_SAFETY,
    M_SINGLE_ACTIVE,
    M_SINGLE_ALIVE,
    SimState,
    TrialRecord,
)


@dataclass
class LevelHistogram:
    exact: list[int]
    population: int  # size of the sub-population being histogrammed
    stopped: int | None = None

    @property
    def cumulative(self) -> list[int]:
        """Number of agents that reached each level or higher."""
        return [int(v) for v in np.cumsum(self.exact[::-1])[::-1]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["level", "exact", "cumulative"])
        for lvl, (e, c) in enumerate(zip(self.exact, self.cumulative)):
            w.writerow([lvl, e, c])
        return buf.getvalue()


def coin_census(state: SimState) -> LevelHistogram:
    c = state.census
    exact = [int(v) for v in c[C_COIN_LEVEL:C_COIN_LEVEL + state.params.phi + 1]]
    return LevelHistogram(exact, int(c[C_ROLE + core.COIN]))


def drag_census(state: SimState) -> LevelHistogram:
    c = state.census
    exact = [int(v) for v in c[C_INH_DRAG:C_INH_DRAG + state.params.psi + 1]]
    return LevelHistogram(exact, int(c[C_ROLE + core.INHIBITOR]), int(c[C_INH_STOPPED]))


# ------------------------------------------------------------------ rounds

@dataclass
class Round:
    start: int  # first interaction of the pass-through-0 wave
    end: int  # last interaction of the wave
    boundary: int  # interaction at which half of the wave had passed
    passes: int
    alive: int  # census at the boundary
    active: int
    void: bool  # no leader carried a heads broadcast just before the wave


@dataclass
class RoundTimeline:
    rounds: list[Round]
    stragglers: int  # pass-through-0 events outside any full wave

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["round", "start", "end", "boundary", "passes", "alive", "active", "void"])
        for k, r in enumerate(self.rounds):
            w.writerow([k + 1, r.start, r.end, r.boundary, r.passes, r.alive, r.active,
                        int(r.void)])
        return buf.getvalue()


def _ffill(a: np.ndarray, init: int) -> np.ndarray:
    out = a.copy()
    last = init
    for k in range(len(out)):
        if out[k] < 0:
            out[k] = last
        else:
            last = out[k]
    return out


def round_timeline(state: SimState, gap: float = 2.0) -> RoundTimeline:
    """Cluster pass-through-0 events into global rounds.

    Two nonempty bins belong to the same wave unless separated by more than
    ``gap * n`` quiet interactions. Waves holding fewer than n/2 events are
    counted as stragglers rather than rounds.
    """
    n, bw = state.n, state.bin_width
    nb = state.interactions // bw + 1
    counts = state.bin_pass0[:nb]
    alive = _ffill(state.bin_alive[:nb], -1)
    active = _ffill(state.bin_active[:nb], -1)
    void_false = _ffill(state.bin_void_false[:nb], 0)
    gap_bins = max(1, int(gap * n / bw))
    nz = np.flatnonzero(counts)
    rounds, stragglers = [], 0
    if len(nz) == 0:
        return RoundTimeline(rounds, 0)
    breaks = np.flatnonzero(np.diff(nz) > gap_bins)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [len(nz) - 1]])
    for s, e in zip(starts, ends):
        b0, b1 = nz[s], nz[e]
        seg = counts[b0:b1 + 1]
        total = int(seg.sum())
        if total < n // 2:
            stragglers += total
            continue
        half = b0 + int(np.searchsorted(np.cumsum(seg), total / 2))
        prev = max(b0 - 1, 0)
        rounds.append(Round(start=int(b0 * bw), end=int((b1 + 1) * bw), boundary=int(half * bw),
                            passes=total, alive=int(alive[half]), active=int(active[half]),
                            void=bool(void_false[prev] == 0)))
    return RoundTimeline(rounds, stragglers)


def _m(state: SimState, slot: int) -> int | None:
    v = int(state.marks[slot])
    return None if v < 0 else v


def epoch_boundaries(state: SimState, timeline: RoundTimeline | None = None):
    """(epoch 1 end, epoch 2 end, epoch 3 end); None where undefined."""
    if state.params.backup_only:
        return None, None, _m(state, M_SINGLE_ALIVE)
    timeline = timeline or round_timeline(state)
    e1 = timeline.rounds[0].boundary if timeline.rounds else None
    return e1, _m(state, M_EPOCH2_END), _m(state, M_SINGLE_ALIVE)


def epoch3_round_count(state: SimState, timeline: RoundTimeline) -> int | None:
    """Rounds of the final epoch needed to get down to one active candidate."""
    e2 = _m(state, M_EPOCH2_END)
    t1 = _m(state, M_SINGLE_ACTIVE)
    if e2 is None or t1 is None:
        return None
    if t1 <= e2:
        return 0
    return 1 + sum(1 for r in timeline.rounds if e2 < r.start < t1)


def build_record(state: SimState, exhausted: bool, rounds_gap: float = 2.0) -> TrialRecord:
    timeline = round_timeline(state, rounds_gap)
    e1, e2, e3 = epoch_boundaries(state, timeline)
    psi = state.params.psi
    first_drag = [None if v < 0 else int(v)
                  for v in state.marks[M_FIRST_DRAG:M_FIRST_DRAG + psi + 1]]
    if not state.params.backup_only and state.marks[M_FIRST_DRAG] < 0:
        first_drag[0] = 1  # the first leader exists from the first interaction on
    census = state.census_dict()
    return TrialRecord(
        seed=state.seed,
        params=state.params.to_dict(),
        interactions=state.interactions,
        parallel_time=state.interactions / state.n,
        exhausted=exhausted,
        safety_violation=bool(state.marks[M_SAFETY] >= 0),
        t_single_active=_m(state, M_SINGLE_ACTIVE),
        t_single_alive=_m(state, M_SINGLE_ALIVE),
        t_resolved=_m(state, M_RESOLVED),
        epoch1_end=e1,
        epoch2_end=e2,
        epoch3_end=e3,
        epoch2_survivors=_m(state, M_EPOCH2_SURVIVORS),
        first_drag=first_drag,
        rounds=[r.boundary for r in timeline.rounds],
        epoch3_rounds=None if state.params.backup_only else epoch3_round_count(state, timeline),
        coin_fraction=census["roles"]["Coin"] / state.n,
        final_census=census,
    )


# -------------------------------------------------------------- aggregation

@dataclass
class AggregateStats:
    params: dict
    trials: int
    completed: int
    exhausted: int
    safety_violations: int
    mean_time: float | None
    median_time: float | None
    quantiles: dict = field(default_factory=dict)
    mean_interactions: float | None = None
    median_epoch2_survivors: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def aggregate(trials: list[TrialRecord]) -> AggregateStats:
    if not trials:
        raise ValueError("need at least one trial")
    params = trials[0].params
    if any(t.params != params for t in trials):
        raise ValueError("trials were run with different parameters")
    times = np.array([t.stabilization_parallel_time for t in trials
                      if t.stabilization_parallel_time is not None])
    inters = np.array([t.t_single_alive for t in trials if t.t_single_alive is not None])
    surv = [t.epoch2_survivors for t in trials if t.epoch2_survivors is not None]
    q = {}
    if len(times):
        q = {str(p): float(np.quantile(times, p)) for p in (0.05, 0.5, 0.95)}
    return AggregateStats(
        params=params,
        trials=len(trials),
        completed=len(times),
        exhausted=sum(t.exhausted for t in trials),
        safety_violations=sum(t.safety_violation for t in trials),
        mean_time=float(times.mean()) if len(times) else None,
        median_time=float(np.median(times)) if len(times) else None,
        quantiles=q,
        mean_interactions=float(inters.mean()) if len(inters) else None,
        median_epoch2_survivors=float(np.median(surv)) if surv else None,
    )


# ------------------------------------------------------------------ oracles

def backup_expected_interactions(n: int, k0: int) -> float:
    """Expected interactions for the seniority backup rule alone to go from k0 alive to 1.

    With k alive agents an interaction removes one with probability
    k(k-1)/(n(n-1)), so the waits are geometric and the sum telescopes to
    n(n-1)(1 - 1/k0).
    """
    if not 1 <= k0 <= n:
        raise ValueError("need 1 <= k0 <= n")
    return float(Fraction(n * (n - 1)) * (1 - Fraction(1, k0)))


def round_model_oracle(f0: int, p: float, trials: int, seed: int) -> np.ndarray:
    """Samples of B, the number of rounds the abstract elimination chain needs.

    Each round every remaining candidate draws heads with probability p. If
    nobody does the round is void; otherwise only the heads survive.
    """
    if not 0 < p < 1 or f0 < 1:
        raise ValueError("need 0 < p < 1 and f0 >= 1")
    rng = np.random.default_rng(seed)
    out = np.zeros(trials, dtype=np.int64)
    for k in range(trials):
        f, b = f0, 0
        while f > 1:
            heads = rng.binomial(f, p)
            if heads > 0:
                f = heads
            b += 1
        out[k] = b
    return out
