"""Collects one PASS/FAIL line per acceptance criterion and prints them in the summary."""

import time

import pytest

_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


class _Criterion:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.start = time.perf_counter()
        self.details = []

    def note(self, text):
        self.details.append(text)

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def check_time(self):
        assert self.elapsed <= self.limit, f"took {self.elapsed:.1f} s, limit {self.limit} s"


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number, title, limit = marker.args
    c = _Criterion(number, title, limit)
    yield c
    rep = getattr(request.node, "rep_call", None)
    status = "PASS" if rep is not None and rep.passed else "FAIL"
    extra = f"; {'; '.join(c.details)}" if c.details else ""
    _LINES.append((number, f"{status} criterion {number}: {title} ({c.elapsed:.1f} s, limit {limit} s){extra}"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, limit): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
