"""Acceptance suite: every numbered criterion at its stated tolerance, one line each."""
import pytest

from fractrans.harness.acceptance import CRITERIA, criterion_line, run_criterion


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("acceptance"))


@pytest.mark.slow
@pytest.mark.parametrize("number", [n for n, _, _ in CRITERIA])
def test_criterion(number, out_dir, capsys):
    passed, recs = run_criterion(number, out_dir)
    with capsys.disabled():
        print("\n" + criterion_line(number, passed, recs))
    failures = [f"{r.run_id}: {v.name} value={v.value} threshold={v.threshold}"
                for r in recs for v in r.verdicts if v.status == "fail"]
    failures += [f"{r.run_id}: {r.error.splitlines()[0]}" for r in recs if r.error]
    assert passed, "; ".join(failures)
