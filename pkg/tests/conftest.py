import sys


def pytest_terminal_summary(terminalreporter):
    # criterion verdicts must be readable on a plain pytest run, where
    # fd-level capture swallows anything the passing tests printed
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for line in verdicts:
            terminalreporter.write_line(line)
