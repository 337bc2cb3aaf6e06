from __future__ import annotations

import pytest

from clockauction.acceptance import CRITERIA

from conftest import ACCEPTANCE_ROWS


@pytest.mark.parametrize("cid", sorted(CRITERIA), ids=lambda c: f"criterion_{c}")
def test_criterion(cid):
    rows = CRITERIA[cid]()
    assert rows
    for r in rows:
        line = f"{'PASS' if r.passed else 'FAIL'}  {r.name}  {r.detail}"
        ACCEPTANCE_ROWS.append(line)
        print(line)
    failed = [r.name for r in rows if not r.passed]
    assert not failed, f"failed rows: {failed}"
