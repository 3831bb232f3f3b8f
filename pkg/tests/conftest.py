"""Collects outcomes of tests marked ``criterion`` and prints one line per criterion."""
from collections import OrderedDict

_TITLES = {}
_OUTCOMES = OrderedDict()


def _criterion(item):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return None
    number, title = mark.args
    _TITLES[number] = title
    return number


def pytest_collection_modifyitems(items):
    for item in items:
        number = _criterion(item)
        if number is not None:
            item.user_properties.append(("criterion", number))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES.setdefault(number, []).append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        results = _OUTCOMES[number]
        failed = [nid.split("::")[-1] for nid, outcome in results if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        line = f"ACCEPTANCE C{number} {status}  {_TITLES[number]}  ({len(results) - len(failed)}/{len(results)} checks)"
        if failed:
            line += "  failing: " + ", ".join(failed)
        terminalreporter.write_line(line)
