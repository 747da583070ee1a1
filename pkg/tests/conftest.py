import numpy as np
import pytest
import scipy.sparse as sp

from orgmod.graph import Graph


def random_graph(rng, n, p=0.3, weighted=True, loops=False):
    """Random symmetric graph with positive total weight."""
    while True:
        mask = np.triu(rng.random((n, n)) < p, 0 if loops else 1)
        w = np.where(mask, rng.uniform(0.5, 3.0, (n, n)) if weighted else 1.0, 0.0)
        w = w + np.triu(w, 1).T
        if w.sum() > 0:
            return Graph(sp.csr_matrix(w))


def dense_b(graph):
    """Zero-diagonal modularity matrix, materialized."""
    w = graph.weights.toarray()
    k = w.sum(axis=1)
    two_m = w.sum()
    b = (w - np.outer(k, k) / two_m) / two_m
    np.fill_diagonal(b, 0.0)
    return b


def brute_modularity(graph, assignment, s=None):
    """Double loop over all vertex pairs, i = j included."""
    w = graph.weights.toarray()
    k = w.sum(axis=1)
    two_m = w.sum()
    c = int(max(assignment)) + 1
    s = np.eye(c) if s is None else s
    total = 0.0
    n = len(assignment)
    for i in range(n):
        for j in range(n):
            total += s[assignment[i], assignment[j]] * (w[i, j] - k[i] * k[j] / two_m)
    return total / two_m


def two_triangles():
    from orgmod.graph import build_graph

    return build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def karate_square_prior(lam):
    """2x2 prior of the Karate experiments: adjacent corners share ``lam``, opposite corners 0."""
    from orgmod.prior import build_grid, custom_prior

    s = np.full((4, 4), float(lam))
    np.fill_diagonal(s, 1.0)
    s[0, 3] = s[3, 0] = s[1, 2] = s[2, 1] = 0.0
    return custom_prior(build_grid(2, 2), s)


# --- acceptance reporting -------------------------------------------------

_CRITERIA = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key, title = mark.args
    if call.when == "setup" and call.excinfo is not None:
        status = "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL"
    elif call.when == "call":
        if call.excinfo is None:
            status = "PASS"
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            status = "SKIP"
        else:
            status = "FAIL"
    else:
        return
    prev = _CRITERIA.get(key, (title, []))
    prev[1].append((item.name, status))
    _CRITERIA[key] = prev


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=int):
        title, results = _CRITERIA[key]
        statuses = {s for _, s in results}
        if "FAIL" in statuses:
            overall = "FAIL"
        elif statuses == {"SKIP"}:
            overall = "SKIP"
        else:
            overall = "PASS"
        failed = [n for n, s in results if s == "FAIL"]
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{overall} criterion {key}: {title}{extra}")
