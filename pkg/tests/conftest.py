import checks


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if checks.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in checks.VERDICTS:
            terminalreporter.write_line(line)
