"""Acceptance criteria 1 to 13 at their stated tolerances.

Every criterion prints one PASS/FAIL line; the lines are also collected and
repeated in the terminal summary under "acceptance criteria".
"""

import pytest

from outwave import verify

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(verify.CRITERIA))
def test_criterion(number):
    res = verify.CRITERIA[number]()
    line = f"{res.line()}  ({res.seconds:.1f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, line
