import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from popelect import ProtocolParams, Stop, StopCondition, new_population, run_trial, run_until
from popelect.analytics import (
    LevelHistogram,
    aggregate,
    backup_expected_interactions,
    coin_census,
    drag_census,
    round_model_oracle,
    round_timeline,
)


def _chain_expectation(n, k0):
    """Expected absorption time of the alive-count chain, solved numerically."""
    # states k = 1..k0; T_k = 1 + (1 - q_k) T_k + q_k T_{k-1}
    q = np.array([k * (k - 1) / (n * (n - 1)) for k in range(k0 + 1)])
    A = np.zeros((k0, k0))
    b = np.ones(k0)
    for k in range(2, k0 + 1):
        A[k - 1, k - 1] = q[k]
        A[k - 1, k - 2] = -q[k]
    A[0, 0], b[0] = 1.0, 0.0
    return np.linalg.solve(A, b)[-1]


@pytest.mark.parametrize("n,k0", [(2, 2), (8, 8), (64, 64), (64, 5), (128, 128)])
def test_backup_oracle_matches_chain(n, k0):
    assert backup_expected_interactions(n, k0) == pytest.approx(_chain_expectation(n, k0))


def test_backup_oracle_sum_form():
    for n in (64, 128):
        s = sum(Fraction(n * (n - 1), k * (k - 1)) for k in range(2, n + 1))
        assert backup_expected_interactions(n, n) == float(s) == (n - 1) ** 2


def test_backup_oracle_bounds():
    assert backup_expected_interactions(10, 1) == 0
    with pytest.raises(ValueError):
        backup_expected_interactions(10, 11)


def test_round_oracle_trivial():
    assert np.all(round_model_oracle(1, 0.25, 50, 0) == 0)
    with pytest.raises(ValueError):
        round_model_oracle(8, 1.0, 1, 0)


def _round_chain_mean(f0, p):
    e = np.zeros(f0 + 1)
    for f in range(2, f0 + 1):
        pm = stats.binom.pmf(np.arange(f + 1), f, p)
        e[f] = (1 + np.dot(pm[1:f], e[1:f])) / (1 - pm[0] - pm[f])
    return e[f0]


@pytest.mark.parametrize("f0,p", [(2, 0.25), (8, 0.25), (32, 0.5)])
def test_round_oracle_mean(f0, p):
    s = round_model_oracle(f0, p, 20000, 1)
    exact = _round_chain_mean(f0, p)
    assert abs(s.mean() - exact) < 4 * s.std() / np.sqrt(len(s))


def test_histogram_cumulative_and_csv():
    h = LevelHistogram([5, 3, 2, 0], population=10)
    assert h.cumulative == [10, 5, 2, 0]
    rows = list(csv.reader(io.StringIO(h.to_csv())))
    assert rows[0] == ["level", "exact", "cumulative"]
    assert rows[2] == ["1", "3", "5"]


@pytest.fixture(scope="module")
def finished_state():
    s = new_population(ProtocolParams(4096), 17)
    run_until(s, StopCondition(Stop.SINGLE_ALIVE, limit=10**9))
    return s


def test_histograms_monotone(finished_state):
    c = coin_census(finished_state)
    d = drag_census(finished_state)
    for h in (c, d):
        cum = h.cumulative
        assert all(x >= y for x, y in zip(cum, cum[1:]))
        assert cum[0] == h.population


def test_timeline(finished_state):
    tl = round_timeline(finished_state)
    assert len(tl.rounds) >= 3
    b = [r.boundary for r in tl.rounds]
    assert b == sorted(b) and len(set(b)) == len(b)
    assert all(r.passes >= finished_state.n // 2 for r in tl.rounds)
    rows = list(csv.reader(io.StringIO(tl.to_csv())))
    assert len(rows) == len(tl.rounds) + 1


def test_aggregate():
    p = ProtocolParams(64, backup_only=True)
    recs = [run_trial(p, s, StopCondition(Stop.SINGLE_ALIVE, limit=10**6)) for s in range(20)]
    agg = aggregate(recs)
    assert agg.trials == agg.completed == 20
    assert agg.quantiles["0.05"] <= agg.quantiles["0.5"] <= agg.quantiles["0.95"]
    assert json.loads(agg.to_json())["safety_violations"] == 0


def test_aggregate_rejects_bad_input():
    with pytest.raises(ValueError):
        aggregate([])
    a = run_trial(ProtocolParams(8, backup_only=True), 0, StopCondition(Stop.SINGLE_ALIVE))
    b = run_trial(ProtocolParams(16, backup_only=True), 0, StopCondition(Stop.SINGLE_ALIVE))
    with pytest.raises(ValueError):
        aggregate([a, b])
