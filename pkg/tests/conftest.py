import numpy as np
import pytest

from gramforge.graphs import Graph
from gramforge.partial import PartialMatrix, project_to_graph


def rand_partial_ktree(rng, n, k, keep=0.7):
    """Random k-tree on ``n`` nodes with each edge kept with probability ``keep``."""
    edges = {(i, j) for i in range(k + 1) for j in range(i + 1, k + 1)}
    cliques = [tuple(range(k + 1))]
    for v in range(k + 1, n):
        c = cliques[rng.integers(len(cliques))]
        sub = tuple(int(u) for u in rng.choice(c, size=k, replace=False))
        edges.update((min(u, v), max(u, v)) for u in sub)
        cliques.append(sub + (v,))
    return Graph(n, [e for e in edges if rng.random() < keep])


def rand_graph(rng, n, p=0.5):
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p])


def wishart(rng, n, r=None):
    B = rng.standard_normal((n, n if r is None else r))
    return B @ B.T


def unit_rows(rng, n, k):
    P = rng.standard_normal((n, k))
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def rand_partial(rng, G, r=None):
    return project_to_graph(wishart(rng, G.n, r), G)


def unit_zero(G):
    """Unit diagonal, zero on every edge."""
    return PartialMatrix(G, {**{(i, i): 1.0 for i in range(G.n)}, **{e: 0.0 for e in G.edges}})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion; printed in the summary."""
    label = request.node.function.__doc__.strip().splitlines()[0]
    ACCEPTANCE[request.node.name] = f"FAIL  {label}"
    info = {}
    yield info
    if getattr(request.node, "rep_call", None) is not None and request.node.rep_call.passed:
        detail = ", ".join(f"{k}={v}" for k, v in info.items())
        ACCEPTANCE[request.node.name] = f"PASS  {label}" + (f"  [{detail}]" if detail else "")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE.values(), key=lambda s: s[6:]):
            terminalreporter.write_line(line)
