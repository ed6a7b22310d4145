"""The ten acceptance criteria, one test each.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible with ``-s``
and repeated in the terminal summary).  Run this file directly to get the
ten lines without pytest.
"""
import sys

import pytest

from smero.verify import CRITERIA, run_criterion

try:
    from conftest import record_criterion
except ImportError:  # executed as a script from elsewhere
    def record_criterion(line):
        pass


@pytest.mark.parametrize("number", [n for n, _, _ in CRITERIA], ids=[t for _, t, _ in CRITERIA])
def test_criterion(number):
    result = run_criterion(number)
    print(result.line())
    record_criterion(result.line())
    assert result.passed, result.detail


if __name__ == "__main__":
    results = [run_criterion(n) for n, _, _ in CRITERIA]
    for r in results:
        print(r.line(), flush=True)
    sys.exit(0 if all(r.passed for r in results) else 1)
