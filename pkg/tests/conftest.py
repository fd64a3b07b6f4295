import pytest

_ACCEPTANCE = {}


class CriterionLog:
    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.passed = False
        self.detail = "did not complete"
        _ACCEPTANCE[number] = self

    def record(self, passed, detail):
        self.passed = bool(passed)
        self.detail = detail
        return self.passed


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    return CriterionLog(*marker.args)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        c = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if c.passed else 'FAIL'} criterion {number} ({c.title}): {c.detail}")
