import numpy as np
import pytest
import scipy.optimize

from kvextend.graph import Kind, OperatorGraph

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def monotone_map(rng, n):
    """A random monotone map: PSD-plus-skew linear part plus a coordinatewise tanh."""
    L = rng.normal(size=(n, n))
    K = rng.normal(size=(n, n))
    M = 0.3 * L @ L.T + 0.1 * np.eye(n) + 0.5 * (K - K.T)
    b = rng.normal(size=n)
    return lambda x: M @ x + b + np.tanh(x)


def random_monotone(rng, n, m, spread=1.5) -> OperatorGraph:
    f = monotone_map(rng, n)
    xs = spread * rng.normal(size=(m, n))
    return OperatorGraph.from_arrays(Kind.MONOTONE, xs, np.array([f(x) for x in xs]))


def random_nonexpansive(rng, n, m, spread=2.0) -> OperatorGraph:
    """Samples of ``x -> c + 0.9 R clip(x)`` with ``R`` orthogonal."""
    R, _ = np.linalg.qr(rng.normal(size=(n, n)))
    c = rng.normal(size=n)
    xs = spread * rng.normal(size=(m, n))
    ys = c + 0.9 * np.clip(xs, -1.0, 1.0) @ R.T
    return OperatorGraph.from_arrays(Kind.NONEXPANSIVE, xs, ys)


def hull_distance_bound(points, p) -> float:
    """Upper bound on the distance from ``p`` to ``conv(points)``.

    A heavily weighted sum-to-one row turns the projection into an NNLS
    problem; the normalized weights give a feasible hull point, so the
    reported distance can only overestimate.
    """
    V = np.atleast_2d(np.asarray(points, float))
    p = np.asarray(p, float)
    w = 1e6
    A = np.vstack([V.T, w * np.ones(len(V))])
    lam, _ = scipy.optimize.nnls(A, np.concatenate([p, [w]]))
    lam = lam / lam.sum()
    return float(np.linalg.norm(V.T @ lam - p))


def first_order_gap(qp, w, radius=1.0) -> float:
    """``-min <grad f(w), v - w>`` over feasible ``v`` with ``|v - w|_inf <= radius``.

    Zero (up to round-off) exactly when ``w`` is optimal for the convex QP.
    Solved by HiGHS, so it shares nothing with the package's solver.
    """
    from kvextend.solvers import Block

    grad = qp.H @ w + qp.g
    Aall, ball = qp.all_equalities()
    bounds = []
    start = 0
    for kind, size in qp.blocks:
        for j in range(start, start + size):
            lo = w[j] - radius
            if kind is not Block.FREE:
                lo = max(lo, 0.0)
            bounds.append((lo, w[j] + radius))
        start += size
    res = scipy.optimize.linprog(grad, A_eq=Aall if Aall.size else None,
                                 b_eq=ball if Aall.size else None, bounds=bounds,
                                 method="highs")
    assert res.status == 0, res.message
    return float(grad @ w - res.fun)
