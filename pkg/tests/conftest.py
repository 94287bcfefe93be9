import pytest

_VERDICTS: dict[str, tuple[bool, str]] = {}


class AcceptanceRecorder:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def record(self, key: str, passed: bool, detail: str) -> None:
        _VERDICTS[key] = (passed, detail)
        print(f"{key}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_VERDICTS, key=lambda k: int(k[2:])):
        passed, detail = _VERDICTS[key]
        terminalreporter.write_line(f"{key}: {'PASS' if passed else 'FAIL'} - {detail}")
