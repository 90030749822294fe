"""Runs every exit criterion at its stated tolerance, one pass/fail line each."""
import pytest

from qbus.acceptance import CHECKS


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__ for c in CHECKS])
def test_criterion(check):
    result = check()
    print(result.line())
    assert result.passed, result.line()
