import contextlib
import time

import pytest

_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Context manager that records one PASS/FAIL line for an acceptance criterion.

    Inside the block, ``notes.append(...)`` adds measured values to the line.
    Exceptions still propagate, so the test itself fails as usual.
    """
    lines = request.config.stash[_VERDICTS]

    @contextlib.contextmanager
    def record(number, title):
        notes = []
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield notes
            status = "PASS"
        except BaseException as exc:
            notes.append(str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
            raise
        finally:
            notes.append("%.2fs" % (time.perf_counter() - start))
            line = "criterion %2d %s: %s (%s)" % (number, status, title, "; ".join(notes))
            lines.append(line)
            print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
