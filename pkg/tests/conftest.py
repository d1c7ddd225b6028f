import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from pxgl.graph import Graph, degree_features  # noqa: E402

settings.register_profile("pxgl", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("pxgl")

ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


def make_graph(edges, n=None, **kwargs):
    n = n if n is not None else 1 + max(max(e) for e in edges)
    return Graph.from_edges(n, edges, **kwargs)


def random_graph(rng, n_min=3, n_max=10, p=None, graph_id=0, label=None):
    n = int(rng.integers(n_min, n_max + 1))
    p = rng.uniform(0.15, 0.7) if p is None else p
    a = np.triu((rng.random((n, n)) < p).astype(np.uint8), 1)
    a = a + a.T
    return Graph(a, degree_features(a), id=graph_id, label=label)


@pytest.fixture
def triangle():
    return make_graph([(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return make_graph([(0, 1), (1, 2)])
