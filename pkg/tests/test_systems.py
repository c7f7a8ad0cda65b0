import json
from fractions import Fraction

import numpy as np
import pytest

from sympsurf.core import SympContext
from sympsurf.invariants import is_positive_quadruple
from sympsurf.surface import (
    a2_arrows,
    a3_arrows,
    face_cycle,
    once_punctured_torus,
    pair_of_pants,
    polygon,
)
from sympsurf.systems import (
    FramedTwistedSystem,
    a2_matrix,
    a3_matrix,
    corner_system,
)


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def ones_system(tri, n):
    """Corner blocks Id, edge blocks Id."""
    corners = {a: np.eye(n) for a in a3_arrows(tri)}
    edges = {e: np.eye(n) for e in tri.internal_edges}
    return corner_system(tri, corners, edges)


def diag_edge_system(tri, n, rng):
    """Corner blocks Id, positive diagonal edge blocks."""
    corners = {a: np.eye(n) for a in a3_arrows(tri)}
    edges = {
        e: np.diag(rng.uniform(0.4, 2.5, size=n)) for e in tri.internal_edges
    }
    return corner_system(tri, corners, edges)


def negative_line_system(tri):
    """n = 1 with every corner block -1 and corner form -1; still twisted."""
    corners = {a: -np.eye(1) for a in a3_arrows(tri)}
    forms = {a: -np.eye(1) for a in a3_arrows(tri)}
    edges = {e: np.eye(1) for e in tri.internal_edges}
    return corner_system(tri, corners, edges, corner_forms=forms)


def test_block_builders():
    B = np.array([[2.0, 1.0], [0.0, 3.0]])
    G = a2_matrix(B)
    assert np.allclose(G[2:, :2], B)
    assert np.allclose(G[:2, 2:], -np.linalg.inv(B).T)
    assert np.allclose(G[:2, :2], 0) and np.allclose(G[2:, 2:], 0)
    C = np.array([[1.0, 0.5], [-0.5, 1.0]])
    M = np.array([[2.0, 0.3], [0.3, 1.0]])
    H = a3_matrix(C, M)
    assert np.allclose(H[2:, :2], C)
    assert np.allclose(H[:2, :2], M @ C)
    assert np.allclose(H[:2, 2:], -np.linalg.inv(C).T)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ones_system_validates(n):
    for tri in (once_punctured_torus(), pair_of_pants(), polygon(5)):
        sys = ones_system(tri, n)
        rep = sys.validate()
        assert rep["max"] < 1e-12, rep


def test_validate_catches_broken_cycle():
    tri = once_punctured_torus()
    sys = ones_system(tri, 2)
    sys.G[("A3", 0, 1)] = a3_matrix(2.0 * np.eye(2))
    rep = sys.validate()
    assert rep["three_cycles"] > 0.5


def test_missing_arrow_rejected():
    tri = polygon(4)
    with pytest.raises(ValueError, match="missing matrix"):
        FramedTwistedSystem(tri, 1, {})


def test_block_access_and_corner_form():
    tri = once_punctured_torus()
    rng = np.random.default_rng(5)
    sys = diag_edge_system(tri, 2, rng)
    for a in a3_arrows(tri):
        assert np.allclose(sys.corner_block(a), np.eye(2))
        assert np.allclose(sys.corner_form(a), np.eye(2))
    for a in a2_arrows(tri):
        B = sys.edge_block(a)
        assert np.allclose(B, np.diag(np.diag(B)))
    with pytest.raises(ValueError, match="not an edge arrow"):
        sys.edge_block(("A3", 0, 0))
    with pytest.raises(ValueError, match="not a face arrow"):
        sys.corner_block(("A2", 0, 0))


def test_two_and_three_cycles_via_holonomy():
    tri = pair_of_pants()
    sys = ones_system(tri, 2)
    minus = -np.eye(4)
    for f in range(tri.num_faces):
        assert np.allclose(sys.holonomy(face_cycle(tri, f)), minus)
    from sympsurf.surface import arrow_reverse

    for a in a2_arrows(tri):
        assert np.allclose(sys.holonomy([a, arrow_reverse(tri, a)]), minus)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_toledo_ones(n):
    for tri, chi in ((once_punctured_torus(), -1), (pair_of_pants(), -1)):
        sys = ones_system(tri, n)
        for f in range(tri.num_faces):
            assert sys.mu_T(f) == n
        assert sys.toledo() == Fraction(n * chi)
        assert sys.is_maximal()


def test_toledo_negative_corner_system():
    tri = once_punctured_torus()
    sys = negative_line_system(tri)
    assert sys.validate()["max"] < 1e-12
    assert sys.mu_T(0) == -1 and sys.mu_T(1) == -1
    assert sys.toledo() == Fraction(1)
    assert not sys.is_maximal()
    # bound |T| <= n * |euler_bar|
    assert abs(sys.toledo()) <= 1 * abs(tri.euler_bar)


def test_toledo_needs_closed_surface():
    sys = ones_system(polygon(4), 1)
    with pytest.raises(ValueError, match="without boundary"):
        sys.toledo()


def test_mu_T_disagreement_detected():
    tri = once_punctured_torus()
    sys = ones_system(tri, 1)
    sys.G[("A3", 0, 1)] = a3_matrix(-np.eye(1), -np.eye(1))
    with pytest.raises(ValueError, match="disagree"):
        sys.mu_T(0)


def test_vertex_cross_ratio_diagonal_oracle(rng):
    tri = once_punctured_torus()
    n = 3
    sys = diag_edge_system(tri, n, rng)
    for f, s in tri.sides:
        partner = tri.partner((f, s))
        B_in = sys.edge_block(("A2",) + partner)
        expect = np.linalg.inv(B_in @ B_in.T)
        assert np.allclose(sys.vertex_cross_ratio((f, s)), expect, atol=1e-9)


def test_vertex_cross_ratio_general_edge_blocks(rng):
    tri = pair_of_pants()
    n = 2
    corners = {a: np.eye(n) for a in a3_arrows(tri)}
    edges = {}
    for e in tri.internal_edges:
        B = rng.normal(size=(n, n))
        while abs(np.linalg.det(B)) < 0.3:
            B = rng.normal(size=(n, n))
        edges[e] = B
    sys = corner_system(tri, corners, edges)
    assert sys.validate()["max"] < 1e-10
    for f, s in tri.sides:
        partner = tri.partner((f, s))
        B_in = sys.edge_block(("A2",) + partner)
        expect = np.linalg.inv(B_in @ B_in.T)
        assert np.allclose(sys.vertex_cross_ratio((f, s)), expect, atol=1e-8)


def test_framing_quadruple_positive_for_ones():
    tri = once_punctured_torus()
    sys = ones_system(tri, 2)
    ctx = SympContext(2)
    for side in tri.sides:
        assert is_positive_quadruple(sys.framing_quadruple(side), ctx)


def test_cross_ratio_spectrum_gauge_invariant(rng):
    tri = once_punctured_torus()
    n = 2
    sys = diag_edge_system(tri, n, rng)
    u_map = {}
    for side in tri.sides:
        U = rng.normal(size=(n, n))
        while abs(np.linalg.det(U)) < 0.3:
            U = rng.normal(size=(n, n))
        u_map[side] = U
    gauged = sys.gauge(u_map)
    assert gauged.validate()["max"] < 1e-8
    for side in tri.sides:
        a = np.sort(np.linalg.eigvals(sys.vertex_cross_ratio(side)).real)
        b = np.sort(np.linalg.eigvals(gauged.vertex_cross_ratio(side)).real)
        assert np.allclose(a, b, atol=1e-7)


def test_gauge_preserves_invariants(rng):
    tri = pair_of_pants()
    n = 2
    sys = ones_system(tri, n)
    u_map = {side: np.linalg.qr(rng.normal(size=(n, n)))[0] for side in tri.sides}
    gauged = sys.gauge(u_map)
    assert gauged.validate()["max"] < 1e-10
    assert gauged.toledo() == sys.toledo()
    assert gauged.is_maximal()
    for f in range(tri.num_faces):
        assert gauged.mu_T(f) == sys.mu_T(f)


def test_gauge_composition(rng):
    tri = once_punctured_torus()
    n = 2
    sys = diag_edge_system(tri, n, rng)
    u1 = {side: np.eye(n) + 0.3 * rng.normal(size=(n, n)) for side in tri.sides}
    u2 = {side: np.eye(n) + 0.3 * rng.normal(size=(n, n)) for side in tri.sides}
    once = sys.gauge(u1).gauge(u2)
    combined = sys.gauge({side: u1[side] @ u2[side] for side in tri.sides})
    for a in once.G:
        assert np.allclose(once.G[a], combined.G[a], atol=1e-9)


def test_corner_angle_invariant_diagonal_gauge(rng):
    tri = once_punctured_torus()
    n = 2
    th = rng.uniform(0, 2 * np.pi, size=(tri.num_faces, 2))
    corners = {}
    for f in range(tri.num_faces):
        x0 = rotation(th[f, 0])
        x2 = rotation(th[f, 1])
        corners[("A3", f, 0)] = x0
        corners[("A3", f, 2)] = x2
        corners[("A3", f, 1)] = np.linalg.inv(x2 @ x0)
    edges = {e: np.diag(rng.uniform(0.5, 2.0, size=n)) for e in tri.internal_edges}
    sys = corner_system(tri, corners, edges)
    assert sys.validate()["max"] < 1e-10
    for a in a3_arrows(tri):
        assert np.allclose(sys.corner_angle_invariant(a), corners[a])


def test_corner_angle_invariant_rejects_bad_gauge(rng):
    tri = once_punctured_torus()
    sys = diag_edge_system(tri, 2, rng)
    off = {e: np.array([[1.0, 0.7], [0.0, 1.0]]) for e in tri.internal_edges}
    bad = corner_system(tri, {a: np.eye(2) for a in a3_arrows(tri)}, off)
    with pytest.raises(ValueError, match="diagonal gauge"):
        bad.corner_angle_invariant(("A3", 0, 0))
    neg = negative_line_system(tri)
    with pytest.raises(ValueError, match="diagonal gauge"):
        neg.corner_angle_invariant(("A3", 0, 0))
    # the good one passes
    for a in a3_arrows(tri):
        sys.corner_angle_invariant(a)


def test_boundary_holonomy_fixes_bottom_framing():
    n = 2
    for tri in (once_punctured_torus(), pair_of_pants()):
        sys = ones_system(tri, n)
        ctx = SympContext(n)
        seen = set()
        for f, c in tri.sides:
            orbit = tri.corner_orbit(f, c)
            if orbit in seen:
                continue
            seen.add(orbit)
            H = sys.boundary_holonomy(f, c)
            assert np.allclose(H.T @ ctx.J @ H, ctx.J, atol=1e-10)
            assert np.linalg.norm(H[:n, n:]) < 1e-10


def test_boundary_holonomy_gauge_conjugation(rng):
    tri = pair_of_pants()
    n = 2
    sys = diag_edge_system(tri, n, rng)
    u_map = {side: np.eye(n) + 0.25 * rng.normal(size=(n, n)) for side in tri.sides}
    gauged = sys.gauge(u_map)
    f, c = 0, 0
    U = u_map[(f, c)]
    psi = np.block(
        [[U, np.zeros((n, n))], [np.zeros((n, n)), np.linalg.inv(U).T]]
    )
    H = sys.boundary_holonomy(f, c)
    Hg = gauged.boundary_holonomy(f, c)
    assert np.allclose(Hg, np.linalg.solve(psi, H @ psi), atol=1e-8)


def test_json_round_trip(rng):
    tri = pair_of_pants()
    sys = diag_edge_system(tri, 2, rng)
    text = sys.to_json()
    data = json.loads(text)
    assert set(data) == {"n", "quiver_ref", "G"}
    back = FramedTwistedSystem.from_json(text)
    assert back.n == sys.n
    assert back.tri.gluing == sys.tri.gluing
    for a in sys.G:
        assert np.allclose(back.G[a], sys.G[a])
