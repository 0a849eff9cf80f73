from pathlib import Path
import sys

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lemmadisamb.analysis import load_lexicon  # noqa: E402
from lemmadisamb.corpus import read_conllu  # noqa: E402
from lemmadisamb.dictionary import load_dictionary  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def table1():
    """Sentence, analyzer and dictionary of the worked prompt example."""
    sentence = read_conllu(FIXTURES / "table1.conllu", "sms")[0]
    return (
        sentence,
        load_lexicon(FIXTURES / "table1_lexicon.tsv"),
        load_dictionary(FIXTURES / "table1_dictionary.tsv", "Skolt Sami", "Finnish"),
    )


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::test_criterion_")[1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda n: int(n.split("_")[0])):
        number, _, label = name.partition("_")
        verdict = "PASS" if _acceptance[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {label.replace('_', ' '):<28} {verdict}")
