import numpy as np
import pytest

from psgraph import named_graph
from psgraph.spectral import eigh_decompose

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def petersen():
    return named_graph("petersen")


@pytest.fixture(scope="session")
def k4():
    return named_graph("k4")


@pytest.fixture(scope="session")
def cube():
    return named_graph("cube")


def eigvec(g, lam, col=0):
    """Unit eigenvector from the eigenspace nearest lam, with its parameter."""
    spaces = eigh_decompose(g)
    sp = min(spaces, key=lambda s: abs(s.lam - lam))
    return sp.basis[:, col], sp.parameter


def admissible_vectors(g):
    out = []
    for sp in eigh_decompose(g):
        if sp.parameter.admissible:
            for j in range(sp.multiplicity):
                out.append((sp.basis[:, j], sp.parameter, sp.lam))
    return out


def rel(a, b):
    d = max(abs(a), abs(b))
    return abs(a - b) / d if d > 0 else 0.0


def brute_adjacency(g):
    a = np.zeros((g.vertex_count, g.vertex_count))
    for u, v in g.undirected_edges():
        a[u, v] = a[v, u] = 1
    return a
