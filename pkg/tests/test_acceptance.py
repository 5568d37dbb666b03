"""Acceptance suite: every criterion at its stated tolerance, one summary line each."""
from __future__ import annotations

import json

import pytest

from permshape.stats import FAIL
from permshape.verify import CRITERIA


@pytest.mark.parametrize("key", list(CRITERIA), ids=lambda k: f"criterion_{k}")
def test_criterion(key, capsys):
    verdict = CRITERIA[key]()
    line = f"criterion {key} ({verdict.name}): {verdict.status.upper()} {json.dumps(verdict.to_dict()['details'], sort_keys=True)}"
    with capsys.disabled():
        print("\n" + line)
    assert verdict.status != FAIL, line
