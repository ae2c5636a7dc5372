"""The fourteen acceptance criteria at full size and their stated tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line with its runtime against
the budget; a criterion only passes if its checks hold within the budget.
"""
import pytest

from ilwlab.experiments import CRITERIA


@pytest.mark.slow
@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(cid, capsys):
    result = CRITERIA[cid](quick=False)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.details
