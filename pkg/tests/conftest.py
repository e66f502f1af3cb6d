_criterion_lines: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _criterion_lines[number] = (
        f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criterion_lines):
        terminalreporter.write_line(_criterion_lines[number])
