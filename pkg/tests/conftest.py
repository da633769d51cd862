import pytest

_ACCEPTANCE = {}


class Recorder:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def __call__(self, number, ok, detail):
        _ACCEPTANCE[number] = (ok, detail)
        return ok


@pytest.fixture(scope="session")
def acceptance():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        verdict = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"criterion {number:2d}: {verdict:12s} {detail}")
