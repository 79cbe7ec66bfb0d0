import numpy as np
import pytest

from netdecide.graph import ThreeGroupSpec, build_explicit


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def twelve_spec():
    # two informed groups that do not listen to each other
    return ThreeGroupSpec.z2(4, 4, informed_link=0.0)


@pytest.fixture
def five_node_graph():
    a = np.zeros((5, 5))
    a[1, 0] = a[2, 1] = a[3, 2] = a[0, 3] = 1.0
    a[0, 2] = a[2, 0] = 1.0
    a[4, 3] = a[2, 4] = 0.5
    a[3, 2] += 0.5
    return build_explicit(a)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report(request):
    """Record one criterion line; printed now and again in the terminal summary."""

    def emit(number, name, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(line)
