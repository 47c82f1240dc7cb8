import pytest

from ratproofs.circuits import parse_circuit, threshold_circuit
from ratproofs.corpus import generate_corpus

ACCEPTANCE_LINES: list[str] = []


def circ(text: str):
    return parse_circuit(text.replace(" / ", "\n"))


@pytest.fixture(scope="session")
def or2():
    return circ("inputs 2 / g1 = OR x1 x2 / output g1")


@pytest.fixture(scope="session")
def and2():
    return circ("inputs 2 / g1 = AND x1 x2 / output g1")


@pytest.fixture(scope="session")
def xor2():
    return circ("inputs 2 / g1 = XOR x1 x2 / output g1")


@pytest.fixture(scope="session")
def five_eighths():
    return threshold_circuit(3, 5)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(seed=11, count=40, max_n=4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
