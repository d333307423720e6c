"""Acceptance suite at full stated scale.

Each test prints one ``criterion N PASS|FAIL`` line; the lines are repeated
in the terminal summary so they survive output capture.
"""

import pytest

from popelect.acceptance import Suite

RESULTS = []

pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def suite():
    return Suite(log=print)


def _check(suite, number):
    res = suite.run([number])[0]
    RESULTS.append(res.line())
    print(res.line())
    assert res.passed, res.summary


def test_criterion_01_unique_leader_and_safety(suite):
    _check(suite, 1)


def test_criterion_02_backup_only_oracle(suite):
    _check(suite, 2)


def test_criterion_03_role_split(suite):
    _check(suite, 3)


def test_criterion_04_coin_cascade(suite):
    _check(suite, 4)


def test_criterion_05_junta_size(suite):
    _check(suite, 5)


def test_criterion_06_inhibitor_histogram(suite):
    _check(suite, 6)


def test_criterion_07_epoch2_survivors(suite):
    _check(suite, 7)


def test_criterion_08_scaling(suite):
    _check(suite, 8)


def test_criterion_09_drag_slowdown(suite):
    _check(suite, 9)


def test_criterion_10_round_model_oracle(suite):
    _check(suite, 10)


def test_criterion_11_determinism_and_uniformity(suite):
    _check(suite, 11)
