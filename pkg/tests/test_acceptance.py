"""Acceptance gate: every criterion at its pinned tolerance and budget.

Each test prints one pass/fail line; ``gouruin validate --suite all`` runs
the same functions.
"""

import pytest

from gouruin import acceptance


@pytest.mark.parametrize("number", sorted(acceptance._CRITERIA))
def test_criterion(number, capsys):
    result = acceptance._CRITERIA[number](acceptance.DEFAULT_SEED)
    status = "PASS" if result.passed else "FAIL"
    with capsys.disabled():
        print(f"\n[acceptance] {result.name}: {status} "
              f"({result.elapsed:.2f}s / {result.budget:.0f}s) {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"
