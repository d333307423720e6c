"""Readable view of a packed agent word, mostly for tests and trace dumps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core


@dataclass(frozen=True)
class AgentState:
    role: int = core.ZERO
    phase: int = 0
    injunta: bool = False
    level: int = 0  # coin level, or drag for inhibitors and leaders
    stop: bool = False
    high: bool = False
    cnt: int = 0
    leadermode: int = core.A
    flip: int = core.NONE
    void: bool = False

    @property
    def drag(self) -> int:
        return self.level

    def pack(self) -> int:
        s = np.int64(self.role)
        s = core.with_phase(s, self.phase)
        s = core.with_timemode(s, int(self.injunta))
        if self.role in (core.COIN, core.INHIBITOR, core.LEADER):
            s = core.with_level(s, self.level)
        if self.role in (core.COIN, core.INHIBITOR):
            s = core.with_mode(s, int(self.stop))
        if self.role == core.INHIBITOR:
            s = core.with_elev(s, int(self.high))
        if self.role == core.LEADER:
            s = core.with_cnt(s, self.cnt)
            s = core.with_leadermode(s, self.leadermode)
            s = core.with_flip(s, self.flip)
            s = core.with_void(s, int(self.void))
        return int(s)

    @classmethod
    def unpack(cls, s: int) -> "AgentState":
        s = np.int64(s)
        r = int(core.role(s))
        kw = dict(role=r, phase=int(core.phase(s)), injunta=bool(core.timemode(s)))
        if r in (core.COIN, core.INHIBITOR, core.LEADER):
            kw["level"] = int(core.level(s))
        if r in (core.COIN, core.INHIBITOR):
            kw["stop"] = bool(core.mode(s))
        if r == core.INHIBITOR:
            kw["high"] = bool(core.elev(s))
        if r == core.LEADER:
            kw.update(cnt=int(core.cnt(s)), leadermode=int(core.leadermode(s)),
                      flip=int(core.flip(s)), void=bool(core.void(s)))
        return cls(**kw)

    def __str__(self) -> str:
        name = core.ROLE_NAMES[self.role]
        if self.role == core.COIN:
            body = f"level={self.level}, {'stop' if self.stop else 'adv'}"
        elif self.role == core.INHIBITOR:
            body = (f"drag={self.level}, {'stop' if self.stop else 'adv'}, "
                    f"{'high' if self.high else 'low'}")
        elif self.role == core.LEADER:
            body = (f"{'APW'[self.leadermode]}, cnt={self.cnt}, "
                    f"{('none', 'heads', 'tails')[self.flip]}, void={self.void}, drag={self.level}")
        else:
            body = ""
        tm = "injunta" if self.injunta else "follower"
        return f"{name}<{body}>@{self.phase}/{tm}"


def coin(level=0, stop=False, phase=0, injunta=False) -> AgentState:
    return AgentState(core.COIN, phase, injunta, level, stop)


def inhibitor(drag=0, stop=False, high=False, phase=0) -> AgentState:
    return AgentState(core.INHIBITOR, phase, False, drag, stop, high)


def leader(leadermode=core.A, cnt=0, flip=core.NONE, void=True, drag=0, phase=0) -> AgentState:
    return AgentState(core.LEADER, phase, False, drag, cnt=cnt, leadermode=leadermode,
                      flip=flip, void=void)


def plain(role=core.ZERO, phase=0) -> AgentState:
    return AgentState(role, phase)
