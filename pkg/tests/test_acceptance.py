"""Verification suite: every criterion runs at its pinned tolerance.

Each test prints its pass/fail line so `pytest -s tests/test_acceptance.py`
doubles as the human-readable report (the `ergotrans verify` command emits
the same lines).
"""

import pytest

from ergotrans.accept import CRITERIA


@pytest.mark.parametrize("label,check", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(label, check):
    result = check()
    print(result.line())
    assert result.passed, result.line()
