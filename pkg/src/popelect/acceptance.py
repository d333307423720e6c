"""The validation suite: each criterion runs its own seeded trials and reports pass/fail.

Trials that several criteria share (the n = 2^16 set) are computed once per
``Suite`` and reused. Seeds come from ``derive_seed`` so any reported trial
can be replayed on its own.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import tolerances as tol
from .analytics import backup_expected_interactions, coin_census, drag_census, round_model_oracle
from .engine import Stop, StopCondition, new_population, run_trial, run_until
from .params import ProtocolParams
from .rng import derive_seed, draw_pair, seed_state

REFERENCE_SEED = 20240611
ALL_CRITERIA = tuple(range(1, 12))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:>2} {verdict}  {self.name}: {self.summary}"


# ------------------------------------------------------------ trial workers

def _snapshot(state) -> dict:
    roles = state.census_dict()["roles"]
    return {
        "interactions": state.interactions,
        "roles": roles,
        "coins": coin_census(state).cumulative,
        "drags": drag_census(state).cumulative,
        "inhibitors": roles["Inhibitor"],
        "inhibitors_stopped": drag_census(state).stopped,
    }


def _trial(job: dict) -> dict:
    """Run one trial through a sequence of stop conditions.

    ``job`` keys: n, seed, params (ProtocolParams kwargs), snapshots (round
    counts to capture census at), stops (list of (Stop name, level)),
    budget (parallel time per stop).
    """
    n = job["n"]
    params = ProtocolParams(n, **job.get("params", {}))
    state = new_population(params, job["seed"])
    limit = job.get("budget", tol.STABILIZE_BUDGET) * n
    snaps, exhausted = {}, {}
    for r in job.get("snapshots", ()):
        _, rec = run_until(state, StopCondition(Stop.ROUNDS, tol.FIRST_ROUND_BUDGET * n, rounds=r))
        snaps[r] = _snapshot(state)
        exhausted[f"rounds{r}"] = rec.exhausted
    rec = None
    for kind, level in job.get("stops", ()):
        _, rec = run_until(state, StopCondition(Stop[kind], limit, level=level))
        exhausted[kind] = rec.exhausted
        if rec.safety_violation:
            break
    return {"seed": job["seed"], "record": rec.to_dict() if rec else None,
            "snapshots": snaps, "exhausted": exhausted}


def default_workers() -> int:
    env = os.environ.get("POPELECT_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_jobs(jobs: list[dict], workers: int | None = None) -> list[dict]:
    """Run jobs in a process pool; results come back in job order."""
    workers = workers or default_workers()
    if workers == 1 or len(jobs) == 1:
        return [_trial(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_trial, jobs, chunksize=1))


def seeds_for(tag: int, count: int, master: int = REFERENCE_SEED) -> list[int]:
    base = derive_seed(master, tag)
    return [derive_seed(base, k) for k in range(count)]


# -------------------------------------------------------------------- suite

class Suite:
    """Holds the configuration and the shared trial cache for one validation run.

    ``trials`` scales every per-n trial count down (or up) from the stated
    value; leaving it as None runs the suite at full scale.
    """

    def __init__(self, trials: int | None = None, master_seed: int = REFERENCE_SEED,
                 workers: int | None = None, variant: dict | None = None, log=None):
        self.trials = trials
        self.master = master_seed
        self.workers = workers
        self.variant = variant or {}
        self.log = log or (lambda msg: None)
        self._cache: dict = {}

    def count(self, stated: int) -> int:
        return stated if self.trials is None else self.trials

    def _jobs(self, key, n, count, **job):
        if key not in self._cache:
            self.log(f"running {count} trials: {key}")
            seeds = seeds_for(hash_tag(key), count, self.master)
            jobs = [dict(job, n=n, seed=s) for s in seeds]
            self._cache[key] = run_jobs(jobs, self.workers)
        return self._cache[key]

    # shared sets ---------------------------------------------------------
    def main_set(self):
        """n = 2^16: census snapshots, full stabilization, then drag up to 4."""
        n = tol.MAIN_N
        psi = ProtocolParams(n, **self.variant).psi
        return self._jobs(("main", n, tuple(sorted(self.variant.items()))), n,
                          self.count(tol.MAIN_TRIALS), params=self.variant,
                          snapshots=(1, 2), stops=[("SINGLE_ALIVE", 1), ("DRAG", psi)],
                          budget=tol.DRAG_BUDGET)

    def stabilize_set(self, n):
        if n == tol.MAIN_N:
            return self.main_set()
        return self._jobs(("stabilize", n, tuple(sorted(self.variant.items()))), n,
                          self.count(tol.SCALING_TRIALS), params=self.variant,
                          stops=[("SINGLE_ALIVE", 1)])

    # criteria ------------------------------------------------------------
    def run(self, which=ALL_CRITERIA) -> list[CriterionResult]:
        if not which:
            raise ValueError("no criteria selected")
        bad = [c for c in which if c not in ALL_CRITERIA]
        if bad:
            raise ValueError(f"unknown criteria: {bad}")
        return [getattr(self, f"criterion_{c}")() for c in which]

    def criterion_1(self) -> CriterionResult:
        per_n, ok = {}, True
        for n in tol.UNIQUE_NS:
            res = self.stabilize_set(n)
            recs = [r["record"] for r in res]
            unique = sum(1 for r in recs
                         if r["t_single_alive"] is not None and r["final_census"]["alive"] == 1)
            safety = sum(r["safety_violation"] for r in recs)
            per_n[n] = {"trials": len(recs), "unique": unique, "safety_violations": safety}
            ok &= unique == len(recs) and safety == 0
        summ = ", ".join(f"n={n}: {v['unique']}/{v['trials']} unique, {v['safety_violations']} unsafe"
                         for n, v in per_n.items())
        return CriterionResult(1, "unique leader and safety", ok, summ, per_n)

    def criterion_2(self) -> CriterionResult:
        per_n, ok = {}, True
        for n in tol.BACKUP_NS:
            count = self.count(tol.BACKUP_TRIALS)
            seeds = seeds_for(hash_tag(("backup", n)), count, self.master)
            p = ProtocolParams(n, backup_only=True)
            t = [run_trial(p, s, StopCondition(Stop.SINGLE_ALIVE, 10**9)).t_single_alive
                 for s in seeds]
            mean = float(np.mean(t))
            oracle = backup_expected_interactions(n, n)
            rel = mean / oracle - 1
            per_n[n] = {"mean": mean, "oracle": oracle, "rel_err": rel}
            ok &= abs(rel) <= tol.BACKUP_REL_TOL
        summ = ", ".join(f"n={n}: mean {v['mean']:.0f} vs {v['oracle']:.0f} ({v['rel_err']:+.2%})"
                         for n, v in per_n.items())
        return CriterionResult(2, "backup-only oracle", ok, summ, per_n)

    def criterion_3(self) -> CriterionResult:
        n = tol.MAIN_N
        bound = tol.ROLE_SPLIT_SLACK * n / math.log2(n)
        good, worst = 0, [0.0, 0.0, 0.0]
        for r in self.main_set():
            roles = r["snapshots"][1]["roles"]
            dev = [abs(roles["Coin"] - n / 4), abs(roles["Inhibitor"] - n / 4),
                   roles["Zero"] + roles["X"] + roles["D"]]
            worst = [max(a, b) for a, b in zip(worst, dev)]
            good += all(d <= bound for d in dev)
        total = len(self.main_set())
        ok = good >= tol.PASS_FRACTION * total
        summ = (f"{good}/{total} trials in band (bound {bound:.0f}; worst coin dev {worst[0]:.0f}, "
                f"inhibitor dev {worst[1]:.0f}, uninitialised {worst[2]:.0f})")
        return CriterionResult(3, "role split", ok, summ, {"good": good, "worst": worst})

    def criterion_4(self) -> CriterionResult:
        n = tol.CASCADE_N
        res = self._jobs(("cascade", n), n, self.count(tol.MAIN_TRIALS),
                         params={"phi": tol.CASCADE_PHI}, snapshots=(1,))
        floor = n ** tol.CASCADE_MIN_EXPONENT
        good, ratios = 0, []
        for r in res:
            c = r["snapshots"][1]["coins"]
            checked, fine = 0, True
            for lvl in range(len(c) - 1):
                if c[lvl] < floor:
                    continue
                q = c[lvl] / n
                ratio = c[lvl + 1] / (q * q * n)
                ratios.append((lvl, ratio))
                checked += 1
                fine &= tol.CASCADE_LOW <= ratio <= tol.CASCADE_HIGH
            good += fine and checked > 0
        ok = good >= tol.PASS_FRACTION * len(res)
        by_lvl = {}
        for lvl, x in ratios:
            by_lvl.setdefault(lvl, []).append(x)
        spans = ", ".join(f"l={lvl}: [{min(v):.2f}, {max(v):.2f}]" for lvl, v in sorted(by_lvl.items()))
        summ = f"{good}/{len(res)} trials in band; ratio C(l+1)/(q^2 n) ranges {spans}"
        return CriterionResult(4, "coin cascade", ok, summ, {"good": good})

    def criterion_5(self) -> CriterionResult:
        n = tol.MAIN_N
        lo, hi = n ** tol.JUNTA_LOW_EXP, n ** tol.JUNTA_HIGH_EXP
        sizes = [r["snapshots"][1]["coins"][-1] for r in self.main_set()]
        good = sum(lo <= s <= hi for s in sizes)
        ok = good >= tol.PASS_FRACTION * len(sizes)
        summ = (f"{good}/{len(sizes)} junta sizes in [{lo:.0f}, {hi:.0f}] "
                f"(observed {min(sizes)}..{max(sizes)})")
        return CriterionResult(5, "junta size", ok, summ, {"sizes": sizes})

    def _drag_hist_good(self, results):
        good, worst = 0, 0.0
        for r in results:
            snap = r["snapshots"][2]
            ni, d = snap["inhibitors"], snap["drags"]
            fine = True
            for lvl in tol.DRAG_HIST_LEVELS:
                got = d[lvl] if lvl < len(d) else 0
                rel = got / (ni * 4.0 ** -lvl) - 1
                worst = max(worst, abs(rel))
                fine &= abs(rel) <= tol.DRAG_HIST_REL_TOL
            good += fine
        return good, worst

    def criterion_6(self) -> CriterionResult:
        base = self.main_set()
        good, worst = self._drag_hist_good(base)
        n = tol.MAIN_N
        variant = self._jobs(("drag-noncoin", n), n, self.count(tol.MAIN_TRIALS),
                             params={"drag_advance_on_noncoin": True}, snapshots=(1, 2))
        vgood, vworst = self._drag_hist_good(variant)
        need = tol.PASS_FRACTION * len(base)
        ok = good >= need and vgood < tol.PASS_FRACTION * len(variant)
        summ = (f"default rule {good}/{len(base)} in band (worst rel dev {worst:.2f}); "
                f"printed variant {vgood}/{len(variant)} in band (worst {vworst:.2f}, must fail)")
        return CriterionResult(6, "inhibitor drag histogram", ok, summ,
                               {"good": good, "variant_good": vgood})

    def criterion_7(self) -> CriterionResult:
        med = {}
        for n in tol.SURVIVOR_NS:
            if n == tol.MAIN_N:
                res = self.main_set()
            else:
                res = self._jobs(("epoch2", n, tuple(sorted(self.variant.items()))), n,
                                 self.count(tol.MAIN_TRIALS), params=self.variant,
                                 stops=[("EPOCH2_END", 1)])
            surv = [r["record"]["epoch2_survivors"] for r in res]
            surv = [s for s in surv if s is not None]
            med[n] = float(np.median(surv)) / math.log2(n) if surv else math.inf
        vals = list(med.values())
        ok = all(b <= a for a, b in zip(vals, vals[1:]))
        summ = ", ".join(f"n=2^{int(math.log2(n))}: {v:.4f}" for n, v in med.items())
        return CriterionResult(7, "epoch-2 survivors / log n non-increasing", ok, summ, med)

    def criterion_8(self) -> CriterionResult:
        rows = {}
        for n in tol.SCALING_NS:
            t = [r["record"]["stabilization_parallel_time"] for r in self.stabilize_set(n)]
            t = [x for x in t if x is not None]
            m = float(np.median(t)) if t else math.inf
            L = math.log2(n)
            rows[n] = {"median": m, "per_log2": m / L**2, "per_loglog": m / (L * math.log2(L))}
        a = [v["per_log2"] for v in rows.values()]
        b = [v["per_loglog"] for v in rows.values()]
        ok_a = all(y < x for x, y in zip(a, a[1:]))
        spread = max(b) / min(b)
        ok_b = spread <= tol.SCALING_MAX_RATIO
        summ = (f"(a) t/log^2 n {'decreasing' if ok_a else 'NOT strictly decreasing'}: "
                + " ".join(f"{x:.2f}" for x in a)
                + f"; (b) max/min t/(log n loglog n) = {spread:.2f}"
                + f" ({'<=' if ok_b else '>'} {tol.SCALING_MAX_RATIO})")
        return CriterionResult(8, "scaling sweep", ok_a and ok_b, summ,
                               {"rows": rows, "a": ok_a, "b": ok_b, "spread": spread})

    def criterion_9(self) -> CriterionResult:
        ratios = {lvl: [] for lvl in tol.DRAG_RATIO_LEVELS}
        missing = 0
        for r in self.main_set():
            fd = r["record"]["first_drag"]
            T = [fd[k + 1] - fd[k] if fd[k + 1] is not None and fd[k] is not None else None
                 for k in range(len(fd) - 1)]
            for lvl in tol.DRAG_RATIO_LEVELS:
                if lvl + 1 < len(T) and T[lvl] and T[lvl + 1] is not None:
                    ratios[lvl].append(T[lvl + 1] / T[lvl])
                else:
                    missing += 1
        med = {lvl: float(np.median(v)) if v else math.nan for lvl, v in ratios.items()}
        ok = all(tol.DRAG_RATIO_LOW <= m <= tol.DRAG_RATIO_HIGH for m in med.values())
        summ = ", ".join(f"median T{lvl + 1}/T{lvl} = {m:.3g}" for lvl, m in med.items())
        if missing:
            summ += f" ({missing} ratios unavailable)"
        return CriterionResult(9, "drag slowdown", ok, summ, {"medians": med})

    def criterion_10(self) -> CriterionResult:
        count = self.count(tol.ROUND_ORACLE_SAMPLES)
        means = [float(round_model_oracle(f0, tol.ROUND_ORACLE_P, count, self.master + f0).mean())
                 for f0 in tol.ROUND_ORACLE_F0]
        steps = np.diff(means)
        ok_a = bool(np.all(steps <= tol.ROUND_ORACLE_MAX_STEP))
        sim, oracle = [], []
        rng_seed = derive_seed(self.master, 10)
        for k, r in enumerate(self.main_set()):
            rec = r["record"]
            f0, e3 = rec["epoch2_survivors"], rec["epoch3_rounds"]
            if f0 is None or e3 is None or f0 < 1:
                continue
            sim.append(e3)
            p = rec["coin_fraction"]  # level-0 flips: heads iff the partner is any coin
            oracle.extend(round_model_oracle(f0, p, 20, derive_seed(rng_seed, k)).tolist())
        if sim:
            pval = float(stats.mannwhitneyu(sim, oracle, alternative="two-sided").pvalue)
        else:
            pval = 0.0
        ok_b = pval > tol.ROUND_TEST_ALPHA
        summ = (f"oracle mean B per doubling {' '.join(f'{s:.2f}' for s in steps)} "
                f"({'<=' if ok_a else '>'} {tol.ROUND_ORACLE_MAX_STEP}); simulated epoch-3 rounds "
                f"mean {np.mean(sim) if sim else math.nan:.2f} vs oracle "
                f"{np.mean(oracle) if oracle else math.nan:.2f}, Mann-Whitney p = {pval:.3g}"
                f" (reject at 1%: {pval < 0.01})")
        return CriterionResult(10, "round-model oracle", ok_a and ok_b, summ,
                               {"means": means, "p_value": pval, "a": ok_a, "b": ok_b})

    def criterion_11(self) -> CriterionResult:
        checks = {}
        for n, p in ((1024, ProtocolParams(1024)), (64, ProtocolParams(64, backup_only=True))):
            seed = derive_seed(self.master, n)
            s1, r1 = run_until(new_population(p, seed), StopCondition(Stop.SINGLE_ALIVE, 10**9))
            s2, r2 = run_until(new_population(p, seed), StopCondition(Stop.SINGLE_ALIVE, 10**9))
            checks[f"replay n={n}"] = (r1.to_dict() == r2.to_dict()
                                       and s1.agents.tobytes() == s2.agents.tobytes())
        s = seed_state(derive_seed(self.master, 11))
        counts = np.zeros((tol.CHI_N, tol.CHI_N), dtype=np.int64)
        for _ in range(tol.CHI_DRAWS):
            a, b = draw_pair(s, tol.CHI_N)
            counts[a, b] += 1
        diag_ok = bool(np.all(np.diag(counts) == 0))
        pval = float(stats.chisquare(counts[~np.eye(tol.CHI_N, dtype=bool)]).pvalue)
        checks["chi-square"] = diag_ok and pval > tol.CHI_MIN_P
        ok = all(checks.values())
        summ = ", ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items())
        summ += f" (p = {pval:.3f})"
        return CriterionResult(11, "determinism and uniformity", ok, summ, checks)


def hash_tag(key) -> int:
    """Stable small integer from a cache key (Python's hash() is salted per process)."""
    h = 0
    for ch in repr(key):
        h = (h * 131 + ord(ch)) & 0xFFFFFFFF
    return h
