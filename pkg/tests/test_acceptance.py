"""Every acceptance criterion at its stated tolerance and time limit.

Each test prints one "[PASS] n name (seconds)" or "[FAIL] ..." line; the lines
are collected into an "acceptance criteria" section of the pytest summary.
"""
import json
import os

import pytest

from cusptaylor.acceptance import CRITERIA, run_criterion

SEED = int(os.environ.get("CUSPTAYLOR_SEED", "0"))
SLOW = {5, 6, 7, 10, 11}


@pytest.mark.parametrize("criterion", [
    pytest.param(c, id=f"c{c.number:02d}", marks=[pytest.mark.slow] if c.number in SLOW else [])
    for c in CRITERIA
])
def test_criterion(criterion, acceptance_log):
    result = run_criterion(criterion, seed=SEED, workers=os.cpu_count())
    line = result.line()
    print(line)
    acceptance_log.append(line)
    assert result.passed, json.dumps(result.to_dict(), default=str)[:2000]
