import numpy as np
import pytest

from kvextend.extension import build_constrained, build_plain
from kvextend.graph import OperatorGraph
from kvextend.oracles import grid_psi
from kvextend.proximal import (
    Certificate,
    graph_member,
    membership_gap,
    psi_eval,
    psi_solve,
    verify_certificate,
)

from conftest import random_monotone

ZERO = OperatorGraph.from_pairs("monotone", [([0], [0])])
SHIFT = OperatorGraph.from_pairs("monotone", [([1], [3])])
ID2 = OperatorGraph.from_pairs("monotone", [([0], [0]), ([1], [1])])


def prog(g):
    return build_plain(g).prog


def test_single_point_values():
    v, cert = psi_eval(prog(ZERO), [1], [1])
    assert float(v) == pytest.approx(1.0, abs=1e-9)
    assert cert.valid
    v, _ = psi_eval(prog(ZERO), [1], [-1])
    assert float(v) > -1 + 1e-3


def test_two_point_midpoint():
    v, cert = psi_eval(prog(ID2), [0.5], [0.5])
    assert float(v) == pytest.approx(0.25, abs=1e-9)
    assert cert.valid and verify_certificate(prog(ID2), cert).ok


def test_graph_member_examples():
    p = prog(SHIFT)
    for x in (-5, 0, 7):
        assert graph_member(p, [x], [x + 2])
    assert not graph_member(p, [0], [0])


def test_data_pairs_are_members(rng):
    for _ in range(6):
        g = random_monotone(rng, int(rng.integers(1, 4)), int(rng.integers(1, 6)))
        p = prog(g)
        for a, s in zip(g.x, g.y):
            assert graph_member(p, a, s)


def test_certificate_examples():
    p = prog(ZERO)
    _, cert = psi_eval(p, [2], [2])
    assert verify_certificate(p, cert).ok
    # x1 - x2 = 1 but x1* - x2* = 0
    bad = Certificate(np.array([1.0]), np.array([1.0]), np.array([0.0]), np.array([1.0]), 0, 0)
    rep = verify_certificate(p, bad)
    assert not rep.ok and rep.details["linear_gap"] == pytest.approx(1.0)


def test_fenchel_gap_one_is_invalid():
    # phi(1, 1) = max(0, 1) = 1 and phi*(0, 0) = 0 with zero pairing terms
    p = prog(ID2)
    cert = Certificate(np.array([1.0]), np.array([1.0]), np.array([0.0]), np.array([0.0]), 0, 0)
    rep = verify_certificate(p, cert)
    assert rep.details["linear_gap"] == 0.0
    assert rep.details["fenchel_gap"] == pytest.approx(1.0, abs=1e-9)
    assert not rep.ok


def test_certificate_off_conjugate_domain():
    p = prog(SHIFT)
    cert = Certificate(np.array([1.0]), np.array([3.0]), np.array([0.0]), np.array([2.0]), 0, 0)
    rep = verify_certificate(p, cert)
    assert rep.details["fenchel_gap"] == np.inf and not rep.ok


def test_psi_above_pairing(rng):
    for _ in range(5):
        g = random_monotone(rng, int(rng.integers(1, 4)), int(rng.integers(1, 6)))
        p = prog(g)
        for _ in range(20):
            x, xs = 2 * rng.normal(size=g.dim), 2 * rng.normal(size=g.dim)
            assert membership_gap(p, x, xs) >= -1e-8


def test_gap_identity(rng):
    # objective - pairing = fenchel/2 + |(x1 - x2) - (x1* - x2*)|^2 / 8 at any decomposition
    for _ in range(4):
        g = random_monotone(rng, 2, 4)
        p = prog(g)
        for _ in range(10):
            x, xs = 2 * rng.normal(size=2), 2 * rng.normal(size=2)
            r = psi_solve(p, x, xs)
            c = r.certificate
            assert r.gap == pytest.approx(0.5 * c.fenchel_gap + c.linear_gap ** 2 / 8, abs=1e-8)


def test_members_form_monotone_set(rng):
    g = random_monotone(rng, 2, 4)
    e = build_plain(g)
    pts = []
    for x in 3 * rng.normal(size=(12, 2)):
        u = e.resolvent(x)
        assert graph_member(e.prog, u, x - u)
        pts.append((u, x - u))
    for i in range(len(pts)):
        for j in range(i):
            assert (pts[i][0] - pts[j][0]) @ (pts[i][1] - pts[j][1]) >= -1e-7


def test_certificate_soundness_both_ways(rng):
    for _ in range(3):
        g = random_monotone(rng, 2, 4)
        e = build_plain(g)
        for x in 3 * rng.normal(size=(8, 2)):
            u = e.resolvent(x)
            on = psi_solve(e.prog, u, x - u)
            assert on.gap <= 1e-7 and verify_certificate(e.prog, on.certificate).ok
            off = psi_solve(e.prog, u, x - u + rng.normal(size=2))
            if off.gap > 1e-5:
                assert not verify_certificate(e.prog, off.certificate).ok


def test_constrained_infinite_outside():
    e = build_constrained(ID2)
    v, cert = psi_eval(e.prog, [1.5], [0.0])
    assert not v.is_finite and cert is None
    assert graph_member(e.prog, [1.0], [5.0])


@pytest.mark.parametrize("pairs", [
    [([0], [0])],
    [([0], [0]), ([1], [1])],
    [([0], [0]), ([1], [2]), ([-1], [-1])],
    [([-1], [-2]), ([0.5], [0.0]), ([2], [1.0]), ([3], [4.0])],
])
def test_matches_refined_grid(rng, pairs):
    g = OperatorGraph.from_pairs("monotone", pairs)
    p = prog(g)
    for x, xs in 1.5 * rng.normal(size=(4, 2)):
        v, _ = psi_eval(p, [x], [xs])
        assert abs(float(v) - grid_psi(g, [x], [xs], refine=8).value) <= 1e-5


def test_grid_examples():
    assert grid_psi(ZERO, [1], [1]).value == pytest.approx(1.0)
    assert grid_psi(ZERO, [1], [0]).value > 0.2
    r = grid_psi(ID2, [0.5], [0.5])
    assert abs(r.value - 0.25) <= r.error
