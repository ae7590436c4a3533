import pathlib

import pytest

from loopbound.ir import load

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"

# criterion number -> [title, node id, outcome]
_criteria = {}


def corpus_files():
    return sorted(p for p in CORPUS.iterdir() if p.suffix in (".fg", ".loopc"))


def load_corpus(name: str):
    return load(str(CORPUS / name), ignore_array_writes=True)


@pytest.fixture
def criterion(request):
    """Register the running test as the check for an acceptance criterion."""

    def record(number: int, title: str):
        _criteria[number] = [title, request.node.nodeid, "NOT RUN"]
    return record


def pytest_runtest_makereport(item, call):
    if call.when != "call":
        return
    for entry in _criteria.values():
        if entry[1] == item.nodeid:
            entry[2] = "PASS" if call.excinfo is None else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, _, outcome = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {outcome}  {title}")
