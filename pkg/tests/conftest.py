import pytest

from tsk_cvh.harness import ExperimentConfig


def small_config(seed=0, **kw):
    base = dict(seed=seed, folds=3, inner_folds=2, rule_grid=(3,), hidden_fractions=(0.5,),
                lambda1_grid=(1.0,), lambda2_grid=(0.1,), lambda3_grid=(0.1,),
                beta_grid=(0.01,), max_outer_iter=20, nmf_max_iter=100)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture
def tiny_config():
    return small_config


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _CRITERIA[num] = (status, text, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status, text, secs = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {text}  ({secs:.1f} s)")
