"""Packed agent states and the composed transition function.

Every agent is a single int64 word:

    bits 0-2    role (ZERO, X, D, COIN, INHIBITOR, LEADER)
    bits 3-10   clock phase
    bit  11     timemode (1 = injunta)
    bits 12-17  drag (inhibitor, leader) or level (coin)
    bit  18     mode (coin, inhibitor; 1 = stop)
    bit  19     elev (inhibitor; 1 = high)
    bits 20-27  cnt (leader)
    bits 28-29  leadermode (A, P, W)
    bits 30-31  flip (NONE, HEADS, TAILS)
    bit  32     void (leader; 1 = true)

All rule functions are compiled with numba and are pure: they take packed
words and return packed words. They are also callable from plain Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .params import (
    CFG_BACKUP_ONLY,
    CFG_BACKUP_RULE,
    CFG_DRAG_FINAL_ONLY,
    CFG_DRAG_NONCOIN,
    CFG_GAMMA,
    CFG_PHI,
    CFG_PSI,
    CFG_SENIORITY_CNT,
)

ZERO, X, D, COIN, INHIBITOR, LEADER = 0, 1, 2, 3, 4, 5
ROLE_NAMES = ("Zero", "X", "D", "Coin", "Inhibitor", "Leader")

FOLLOWER, INJUNTA = 0, 1
ADV, STOP = 0, 1
LOW, HIGH = 0, 1
A, P, W = 0, 1, 2
NONE, HEADS, TAILS = 0, 1, 2

PASS0, PASSHALF, EARLY, LATE, OTHER = 0, 1, 2, 3, 4
CLASS_NAMES = ("Pass0", "PassHalf", "Early", "Late", "Other")

_ROLE_MASK = 0x7
_PHASE_SHIFT, _PHASE_MASK = 3, 0xFF
_TM_SHIFT = 11
_LVL_SHIFT, _LVL_MASK = 12, 0x3F
_MODE_SHIFT = 18
_ELEV_SHIFT = 19
_CNT_SHIFT, _CNT_MASK = 20, 0xFF
_LM_SHIFT = 28
_FLIP_SHIFT = 30
_VOID_SHIFT = 32


# ---------------------------------------------------------------- accessors

@njit(cache=True, inline="always")
def role(s):
    return s & _ROLE_MASK


@njit(cache=True, inline="always")
def phase(s):
    return (s >> _PHASE_SHIFT) & _PHASE_MASK


@njit(cache=True, inline="always")
def timemode(s):
    return (s >> _TM_SHIFT) & 1


@njit(cache=True, inline="always")
def level(s):
    """Coin level; for inhibitors and leaders the same bits hold drag."""
    return (s >> _LVL_SHIFT) & _LVL_MASK


@njit(cache=True, inline="always")
def drag(s):
    return (s >> _LVL_SHIFT) & _LVL_MASK


@njit(cache=True, inline="always")
def mode(s):
    return (s >> _MODE_SHIFT) & 1


@njit(cache=True, inline="always")
def elev(s):
    return (s >> _ELEV_SHIFT) & 1


@njit(cache=True, inline="always")
def cnt(s):
    return (s >> _CNT_SHIFT) & _CNT_MASK


@njit(cache=True, inline="always")
def leadermode(s):
    return (s >> _LM_SHIFT) & 3


@njit(cache=True, inline="always")
def flip(s):
    return (s >> _FLIP_SHIFT) & 3


@njit(cache=True, inline="always")
def void(s):
    return (s >> _VOID_SHIFT) & 1


@njit(cache=True, inline="always")
def _set(s, shift, mask, v):
    return (s & ~(np.int64(mask) << shift)) | (np.int64(v) << shift)


@njit(cache=True, inline="always")
def with_phase(s, v):
    return _set(s, _PHASE_SHIFT, _PHASE_MASK, v)


@njit(cache=True, inline="always")
def with_timemode(s, v):
    return _set(s, _TM_SHIFT, 1, v)


@njit(cache=True, inline="always")
def with_level(s, v):
    return _set(s, _LVL_SHIFT, _LVL_MASK, v)


@njit(cache=True, inline="always")
def with_drag(s, v):
    return _set(s, _LVL_SHIFT, _LVL_MASK, v)


@njit(cache=True, inline="always")
def with_mode(s, v):
    return _set(s, _MODE_SHIFT, 1, v)


@njit(cache=True, inline="always")
def with_elev(s, v):
    return _set(s, _ELEV_SHIFT, 1, v)


@njit(cache=True, inline="always")
def with_cnt(s, v):
    return _set(s, _CNT_SHIFT, _CNT_MASK, v)


@njit(cache=True, inline="always")
def with_leadermode(s, v):
    return _set(s, _LM_SHIFT, 3, v)


@njit(cache=True, inline="always")
def with_flip(s, v):
    return _set(s, _FLIP_SHIFT, 3, v)


@njit(cache=True, inline="always")
def with_void(s, v):
    return _set(s, _VOID_SHIFT, 1, v)


@njit(cache=True, inline="always")
def with_role(s, r):
    """Change role, keeping only the clock fields."""
    clock = s & ((np.int64(_PHASE_MASK) << _PHASE_SHIFT) | (np.int64(1) << _TM_SHIFT))
    return clock | r


@njit(cache=True, inline="always")
def is_alive(s):
    return role(s) == LEADER and leadermode(s) != W


@njit(cache=True)
def new_leader(s, cnt_start):
    out = with_role(s, LEADER)
    out = with_cnt(out, cnt_start)
    return with_void(out, 1)


# ------------------------------------------------------------ clock arithmetic

@njit(cache=True)
def mod_add(x, y, gamma):
    return (x + y) % gamma


@njit(cache=True)
def mod_max(x, y, gamma):
    """Wrap-aware maximum: plain max when the values are within half a cycle."""
    if abs(x - y) <= gamma // 2:
        return max(x, y)
    return min(x, y)


@njit(cache=True)
def classify(old, new, gamma):
    half = gamma // 2
    if new < old:
        return PASS0
    if old < half <= new:
        return PASSHALF
    if new < half and old < half:
        return EARLY
    if old >= half and new >= half:
        return LATE
    return OTHER


@njit(cache=True)
def clock_update(responder, initiator_phase, gamma):
    """Advance the responder's clock; returns (new state, interaction class)."""
    t1 = phase(responder)
    if timemode(responder) == INJUNTA:
        t = mod_max(t1, mod_add(initiator_phase, 1, gamma), gamma)
    else:
        t = mod_max(t1, initiator_phase, gamma)
    return with_phase(responder, t), classify(t1, t, gamma)


# -------------------------------------------------------------------- rules

@njit(cache=True)
def apply_init_rules(responder, initiator, cnt_start):
    r1 = role(responder)
    r2 = role(initiator)
    if r1 == ZERO and r2 == ZERO:
        return with_role(responder, X), new_leader(initiator, cnt_start)
    if r1 == X and r2 == X:
        return with_role(responder, COIN), with_role(initiator, INHIBITOR)
    return responder, initiator


@njit(cache=True)
def apply_deactivation(responder, cls):
    r = role(responder)
    if cls == PASS0 and (r == ZERO or r == X):
        return with_role(responder, D)
    return responder


@njit(cache=True)
def apply_coin_rules(responder, initiator, phi):
    if role(responder) != COIN or mode(responder) == STOP:
        return responder
    x = level(responder)
    if role(initiator) != COIN or level(initiator) < x:
        return with_mode(responder, STOP)
    if x < phi:
        out = with_level(responder, x + 1)
        if x + 1 == phi:
            out = with_mode(out, STOP)
            out = with_timemode(out, INJUNTA)
        return out
    return responder


@njit(cache=True)
def apply_inhibitor_drag(responder, initiator, cls, psi, advance_on_noncoin):
    """Synthetic coin-flip preprocessing of an inhibitor's drag, late half only.

    By default a flip succeeds when the partner is a coin (success probability
    close to the coin fraction, giving drag histogram ~ 4^-l). With
    ``advance_on_noncoin`` the opposite convention is used.
    """
    if role(responder) != INHIBITOR or mode(responder) == STOP or cls != LATE:
        return responder
    success = role(initiator) == COIN
    if advance_on_noncoin:
        success = not success
    if not success:
        return with_mode(responder, STOP)
    x = drag(responder) + 1
    out = with_drag(responder, x)
    if x >= psi:
        out = with_mode(out, STOP)
    return out


@njit(cache=True)
def apply_inhibitor_signal(responder, initiator):
    if role(responder) != INHIBITOR or elev(responder) == HIGH:
        return responder
    x = drag(responder)
    r2 = role(initiator)
    if (r2 == LEADER and mode(responder) == STOP and leadermode(initiator) == A
            and drag(initiator) == x):
        return with_elev(responder, HIGH)
    if r2 == INHIBITOR and elev(initiator) == HIGH and drag(initiator) == x:
        return with_elev(responder, HIGH)
    return responder


@njit(cache=True)
def apply_leader_reset(responder, cls):
    if role(responder) != LEADER or cls != PASS0:
        return responder
    out = with_flip(responder, NONE)
    out = with_void(out, 1)
    c = cnt(out)
    if c >= 1:
        out = with_cnt(out, c - 1)
    return out


@njit(cache=True)
def gamma_schedule(c, phi):
    """Coin level used in a round with counter value ``c``."""
    if c == 2 * phi + 3 or c < 0 or c > 2 * phi + 3:
        raise ValueError("no coin is flipped at this counter value")
    if c == 0:
        return 0
    return min((c + 1) // 2, phi)


@njit(cache=True)
def apply_leader_flip(responder, initiator, cls, phi):
    if (role(responder) != LEADER or cls != EARLY or leadermode(responder) != A
            or flip(responder) != NONE or cnt(responder) == 2 * phi + 3):
        return responder
    t = gamma_schedule(cnt(responder), phi)
    if role(initiator) == COIN and level(initiator) >= t:
        return with_void(with_flip(responder, HEADS), 0)
    return with_flip(responder, TAILS)


@njit(cache=True)
def apply_void_epidemic(responder, initiator, cls):
    if (role(responder) != LEADER or role(initiator) != LEADER or cls != LATE
            or void(initiator) == 1):
        return responder
    if void(responder) == 0:
        return responder
    out = with_void(responder, 0)
    if leadermode(responder) == A and flip(responder) == TAILS:
        out = with_leadermode(out, P)
    return out


@njit(cache=True)
def apply_drag_advance(responder, initiator, psi, final_epoch_only=False):
    """Leader drag increment; optionally only once the round counter ran out."""
    if role(responder) != LEADER or role(initiator) != INHIBITOR:
        return responder
    if final_epoch_only and cnt(responder) != 0:
        return responder
    x = drag(responder)
    if (leadermode(responder) == A and flip(responder) == HEADS and x < psi
            and drag(initiator) == x and elev(initiator) == HIGH):
        return with_drag(responder, x + 1)
    return responder


@njit(cache=True)
def apply_drag_kill(responder, initiator):
    if role(responder) != LEADER or role(initiator) != LEADER:
        return responder
    y = drag(initiator)
    if drag(responder) < y:
        return with_drag(with_leadermode(responder, W), y)
    return responder


_FLIP_RANK = (1, 2, 0)  # indexed by NONE, HEADS, TAILS


@njit(cache=True)
def seniority_compare(a, b, use_cnt):
    """Return 1 if ``a`` is more senior, -1 if ``b`` is, 0 on a tie."""
    da, db = drag(a), drag(b)
    if da != db:
        return 1 if da > db else -1
    ma, mb = leadermode(a), leadermode(b)
    if ma != mb:
        return 1 if ma < mb else -1  # A outranks P outranks W
    if use_cnt:
        ca, cb = cnt(a), cnt(b)
        if ca != cb:
            return 1 if ca < cb else -1
    fa, fb = _FLIP_RANK[flip(a)], _FLIP_RANK[flip(b)]
    if fa != fb:
        return 1 if fa > fb else -1
    return 0


@njit(cache=True)
def apply_backup(responder, initiator, use_cnt):
    if not (is_alive(responder) and is_alive(initiator)):
        return responder, initiator
    if seniority_compare(responder, initiator, use_cnt) > 0:
        return responder, with_leadermode(initiator, W)
    return with_leadermode(responder, W), initiator


# ----------------------------------------------------------------- pipeline

@njit(cache=True)
def interact(responder, initiator, cfg):
    """One ordered interaction. Returns (responder', initiator', class).

    Stages after the first read the initiator as it was before the
    interaction. An interaction that fires a role-split rule does nothing
    else: freshly created agents start clean.
    """
    if cfg[CFG_BACKUP_ONLY]:
        r, i = apply_backup(responder, initiator, cfg[CFG_SENIORITY_CNT])
        return r, i, OTHER
    gamma, phi, psi = cfg[CFG_GAMMA], cfg[CFG_PHI], cfg[CFG_PSI]

    r, cls = clock_update(responder, phase(initiator), gamma)
    r2, i2 = apply_init_rules(r, initiator, 2 * phi + 3)
    if r2 != r or i2 != initiator:
        return r2, i2, cls
    rr = role(r)
    if rr == ZERO or rr == X:
        return apply_deactivation(r, cls), initiator, cls
    if rr == COIN:
        return apply_coin_rules(r, initiator, phi), initiator, cls
    if rr == INHIBITOR:
        r = apply_inhibitor_drag(r, initiator, cls, psi, cfg[CFG_DRAG_NONCOIN])
        return apply_inhibitor_signal(r, initiator), initiator, cls
    if rr != LEADER:
        return r, initiator, cls
    r = apply_leader_reset(r, cls)
    r = apply_leader_flip(r, initiator, cls, phi)
    r = apply_void_epidemic(r, initiator, cls)
    r = apply_drag_advance(r, initiator, psi, cfg[CFG_DRAG_FINAL_ONLY])
    r = apply_drag_kill(r, initiator)
    if cfg[CFG_BACKUP_RULE]:
        r, initiator = apply_backup(r, initiator, cfg[CFG_SENIORITY_CNT])
    return r, initiator, cls
