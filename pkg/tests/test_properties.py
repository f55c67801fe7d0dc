import pytest

from tagperm.properties import SUITES, run_suite


@pytest.mark.parametrize("name", sorted(SUITES))
def test_small_runs_pass(name):
    iterations = {"crypto": 20, "efficiency": 2, "decoy": 100}.get(name, 20)
    report = run_suite(name, "toy", seed=1, iterations=iterations)
    assert report.passed, [c for c in report.checks if not c.passed]


def test_suite_is_deterministic():
    a = run_suite("lemma4", "toy", seed=3, iterations=30)
    b = run_suite("lemma4", "toy", seed=3, iterations=30)
    assert [c.to_doc() for c in a.checks] == [c.to_doc() for c in b.checks]


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_suite("lemma9")
    with pytest.raises(ValueError):
        run_suite("lemma1", iterations=0)
