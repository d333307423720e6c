"""Protocol parameters and their derived defaults."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

# Indices into the flat int64 config vector handed to the compiled kernel.
CFG_N = 0
CFG_GAMMA = 1
CFG_PHI = 2
CFG_PSI = 3
CFG_BACKUP_ONLY = 4
CFG_DRAG_NONCOIN = 5
CFG_SENIORITY_CNT = 6
CFG_BACKUP_RULE = 7
CFG_DRAG_FINAL_ONLY = 8
CFG_LEN = 9

MAX_GAMMA = 256
MAX_LEVEL = 63


def default_phi(n: int) -> int:
    """Coin-level cap: floor(log2 log2 n) - 3, clamped to at least 1."""
    return max(1, math.floor(math.log2(math.log2(n))) - 3)


def default_psi(n: int) -> int:
    return max(1, math.ceil(math.log2(math.log2(n))))


@dataclass(frozen=True)
class ProtocolParams:
    """Population size plus clock / coin / drag constants.

    ``phi`` and ``psi`` default to the log-log formulas when left as None.
    ``phi_overridden`` is recorded so experiment output can flag test-only
    overrides.
    """

    n: int
    gamma: int = 32
    phi: int | None = None
    psi: int | None = None
    backup_only: bool = False
    drag_advance_on_noncoin: bool = False
    seniority_uses_cnt: bool = True
    backup_rule: bool = True
    drag_final_epoch_only: bool = True
    phi_overridden: bool = field(default=False, init=False)
    psi_overridden: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"population needs at least 2 agents, got n={self.n}")
        if self.gamma < 8 or self.gamma % 4 != 0 or self.gamma > MAX_GAMMA:
            raise ValueError(f"gamma must be a multiple of 4 in [8, {MAX_GAMMA}], got {self.gamma}")
        if self.phi is None:
            object.__setattr__(self, "phi", default_phi(self.n))
        else:
            object.__setattr__(self, "phi_overridden", self.phi != default_phi(self.n))
        if self.psi is None:
            object.__setattr__(self, "psi", default_psi(self.n))
        else:
            object.__setattr__(self, "psi_overridden", self.psi != default_psi(self.n))
        if not 1 <= self.phi <= MAX_LEVEL:
            raise ValueError(f"phi must be in [1, {MAX_LEVEL}], got {self.phi}")
        if not 1 <= self.psi <= MAX_LEVEL:
            raise ValueError(f"psi must be in [1, {MAX_LEVEL}], got {self.psi}")
        if 2 * self.phi + 3 > 255:
            raise ValueError("phi too large for the leader round counter")

    @property
    def cnt_start(self) -> int:
        return 2 * self.phi + 3

    def to_array(self) -> np.ndarray:
        cfg = np.zeros(CFG_LEN, dtype=np.int64)
        cfg[CFG_N] = self.n
        cfg[CFG_GAMMA] = self.gamma
        cfg[CFG_PHI] = self.phi
        cfg[CFG_PSI] = self.psi
        cfg[CFG_BACKUP_ONLY] = int(self.backup_only)
        cfg[CFG_DRAG_NONCOIN] = int(self.drag_advance_on_noncoin)
        cfg[CFG_SENIORITY_CNT] = int(self.seniority_uses_cnt)
        cfg[CFG_BACKUP_RULE] = int(self.backup_rule)
        cfg[CFG_DRAG_FINAL_ONLY] = int(self.drag_final_epoch_only)
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)
