import acceptance_log


def _order(key):
    head = key.split(".")[0]
    return (int(head) if head.isdigit() else 99, key)


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(acceptance_log.RESULTS, key=_order):
        terminalreporter.write_line(acceptance_log.RESULTS[key])
