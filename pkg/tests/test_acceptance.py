"""Acceptance criteria 1-9 at full sample counts; one PASS/FAIL line per criterion."""

from __future__ import annotations

import pytest

from matreg import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
