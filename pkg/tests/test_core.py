import numpy as np
import pytest

from sympsurf.core import (
    DecoratedLagrangian,
    Lagrangian,
    LiftedLagrangian,
    SympContext,
    graph_lagrangian,
    horizontal_lagrangian,
    is_symplectic,
    lag_angles,
    lift,
    maslov_form,
    maslov_index,
    omega,
    random_decorated,
    random_lagrangian,
    random_symplectic,
    same_subspace,
    shift_theta,
    souriau_index,
    standard_J,
    to_unitary,
    transverse,
    validate_lift,
    vertical_lagrangian,
)

from conftest import make_ctx


def span_ef(cols, n):
    """Column block from a list of (e-part, f-part) coefficient pairs."""
    out = np.zeros((2 * n, len(cols)))
    for j, (a, b) in enumerate(cols):
        out[:n, j] = a
        out[n:, j] = b
    return out


def test_standard_form_matrix():
    for n in (1, 2, 5):
        J = standard_J(n)
        assert np.array_equal(J.T, -J)
        assert np.allclose(J @ J, -np.eye(2 * n))


def test_omega_on_standard_basis():
    ctx = make_ctx(3)
    E = np.vstack([np.eye(3), np.zeros((3, 3))])
    F = np.vstack([np.zeros((3, 3)), np.eye(3)])
    assert np.allclose(omega(ctx, E, F), np.eye(3))
    assert np.allclose(omega(ctx, E, E), 0)
    assert np.allclose(omega(ctx, F, F), 0)


def test_is_symplectic_examples():
    ctx = make_ctx(2)
    assert is_symplectic(np.eye(4), ctx)
    assert is_symplectic(ctx.J, ctx)
    assert not is_symplectic(2.0 * np.eye(4), ctx)
    with pytest.raises(ValueError):
        is_symplectic(np.eye(3), ctx)


def test_random_symplectic_is_symplectic(rng):
    for n in (1, 2, 3):
        ctx = make_ctx(n)
        for _ in range(5):
            assert is_symplectic(random_symplectic(ctx, rng), ctx)


def test_lagrangian_validation():
    ctx = make_ctx(2)
    with pytest.raises(ValueError):
        # not isotropic: e1, f1
        Lagrangian(span_ef([(np.array([1, 0]), np.zeros(2)), (np.zeros(2), np.array([1, 0]))], 2), ctx)
    with pytest.raises(ValueError):
        Lagrangian(np.zeros((4, 2)), ctx)
    L = Lagrangian(span_ef([(np.array([2, 0]), np.zeros(2)), (np.array([0, 3]), np.zeros(2))], 2), ctx)
    # canonicalized to an orthonormal block
    assert np.allclose(L.span.T @ L.span, np.eye(2))


def test_random_lagrangian_isotropy(rng):
    for n in (1, 2, 4):
        ctx = make_ctx(n)
        L = random_lagrangian(ctx, rng)
        assert np.linalg.norm(L.span.T @ ctx.J @ L.span) < 1e-12
        Z = to_unitary(L, ctx)
        assert np.allclose(Z.conj().T @ Z, np.eye(n))


def test_transverse_examples(rng):
    ctx = make_ctx(2)
    E, F = horizontal_lagrangian(ctx), vertical_lagrangian(ctx)
    assert transverse(E, F, ctx)
    assert not transverse(E, E, ctx)
    ctx1 = make_ctx(1)
    L1 = Lagrangian(np.array([[1.0], [0.0]]), ctx1)
    L2 = Lagrangian(np.array([[1.0], [1e-15]]), ctx1)
    assert not transverse(L1, L2, ctx1)


def test_same_subspace(rng):
    ctx = make_ctx(3)
    L = random_lagrangian(ctx, rng)
    g = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    assert same_subspace(L, Lagrangian(L.span @ g, ctx), ctx)
    assert not same_subspace(L, random_lagrangian(ctx, rng), ctx)


def test_maslov_form_scalar_examples():
    ctx = make_ctx(1)
    e = DecoratedLagrangian(np.array([[1.0], [0.0]]), ctx)
    f = Lagrangian(np.array([[0.0], [1.0]]), ctx)
    plus = Lagrangian(np.array([[1.0], [1.0]]), ctx)
    minus = Lagrangian(np.array([[1.0], [-1.0]]), ctx)
    assert np.allclose(maslov_form(e, plus, f, ctx), [[1.0]])
    assert np.allclose(maslov_form(e, minus, f, ctx), [[-1.0]])


def test_maslov_form_recovers_graph_matrix(rng):
    ctx = make_ctx(2)
    S = rng.standard_normal((2, 2))
    S = 0.5 * (S + S.T)
    E = DecoratedLagrangian(np.vstack([np.eye(2), np.zeros((2, 2))]), ctx)
    F = vertical_lagrangian(ctx)
    M = graph_lagrangian(S, ctx)
    assert np.allclose(maslov_form(E, M, F, ctx), S, atol=1e-10)


def test_maslov_form_transversality_errors():
    ctx = make_ctx(1)
    e = DecoratedLagrangian(np.array([[1.0], [0.0]]), ctx)
    f = Lagrangian(np.array([[0.0], [1.0]]), ctx)
    with pytest.raises(ValueError):
        maslov_form(e, f, f, ctx)
    with pytest.raises(ValueError):
        maslov_form(e, f, e.lagrangian, ctx)


def test_maslov_index_examples():
    ctx = make_ctx(1)
    e = Lagrangian(np.array([[1.0], [0.0]]), ctx)
    f = Lagrangian(np.array([[0.0], [1.0]]), ctx)
    d = Lagrangian(np.array([[1.0], [1.0]]), ctx)
    assert maslov_index(e, d, f, ctx) == 1
    assert maslov_index(f, d, e, ctx) == -1
    ctx2 = make_ctx(2)
    M = graph_lagrangian(np.diag([1.0, -1.0]), ctx2)
    E2, F2 = horizontal_lagrangian(ctx2), vertical_lagrangian(ctx2)
    assert maslov_index(E2, M, F2, ctx2) == 0


def test_maslov_index_degenerate_triples():
    ctx = make_ctx(1)
    e = Lagrangian(np.array([[1.0], [0.0]]), ctx)
    f = Lagrangian(np.array([[0.0], [1.0]]), ctx)
    assert maslov_index(e, e, f, ctx) == 0
    assert maslov_index(e, f, f, ctx) == 0


def test_maslov_cocycle_and_invariance(ctx, rng):
    for _ in range(50):
        Ls = [random_lagrangian(ctx, rng) for _ in range(4)]
        mu = lambda i, j, k: maslov_index(Ls[i], Ls[j], Ls[k], ctx)
        assert mu(0, 1, 2) - mu(0, 1, 3) + mu(0, 2, 3) - mu(1, 2, 3) == 0
        g = random_symplectic(ctx, rng)
        gL = [Lagrangian(g @ L.span, ctx) for L in Ls]
        assert maslov_index(gL[0], gL[1], gL[2], ctx) == mu(0, 1, 2)
        m = mu(0, 1, 2)
        assert -ctx.n <= m <= ctx.n
        if all(
            transverse(Ls[i], Ls[j], ctx) for i in range(3) for j in range(i + 1, 3)
        ):
            assert (m - ctx.n) % 2 == 0


def test_lag_angles_examples():
    ctx = make_ctx(3)
    assert np.allclose(lag_angles(vertical_lagrangian(ctx), ctx), np.pi / 2)
    assert np.allclose(lag_angles(horizontal_lagrangian(ctx), ctx), 0.0)
    ctx1 = make_ctx(1)
    d = Lagrangian(np.array([[1.0], [1.0]]), ctx1)
    assert np.allclose(lag_angles(d, ctx1), np.pi / 4)


def test_lag_angles_count_intersection(rng):
    ctx = make_ctx(3)
    # graph Lagrangians meet span(e) trivially; mixed block has a 1-dim meet
    span = np.zeros((6, 3))
    span[0, 0] = 1.0  # e1
    span[4, 1] = 1.0  # f2
    span[2, 2] = span[5, 2] = 1.0  # e3 + f3
    phi = lag_angles(Lagrangian(span, ctx), ctx)
    assert np.allclose(phi, [0.0, np.pi / 4, np.pi / 2])


def test_lift_and_shift():
    ctx = make_ctx(2)
    L0 = horizontal_lagrangian(ctx)
    F = vertical_lagrangian(ctx)
    assert lift(L0, 0, ctx).theta == pytest.approx(0.0)
    assert lift(F, 0, ctx).theta == pytest.approx(ctx.n * np.pi / 2)
    M = graph_lagrangian(np.diag([1.0, 2.0]), ctx)
    assert lift(M, 3, ctx).theta - lift(M, 0, ctx).theta == pytest.approx(3 * np.pi)
    lt = lift(M, 0, ctx)
    assert shift_theta(lt, 0) == lt
    assert shift_theta(shift_theta(lt, 1), 2).theta == pytest.approx(lt.theta + 3 * np.pi)
    validate_lift(shift_theta(lt, 5), ctx)
    with pytest.raises(ValueError):
        validate_lift(LiftedLagrangian(M, lt.theta + 0.3), ctx)


def test_souriau_transverse_example():
    ctx = make_ctx(1)
    lt0 = lift(horizontal_lagrangian(ctx), 0, ctx)
    for phi in (0.3, 1.1, np.pi / 2, 2.8):
        M = Lagrangian(np.array([[np.cos(phi)], [np.sin(phi)]]), ctx)
        assert souriau_index(lt0, lift(M, 0, ctx), ctx) == 1


def test_souriau_antisymmetry_and_shift(ctx, rng):
    for _ in range(25):
        lt1 = lift(random_lagrangian(ctx, rng), int(rng.integers(-2, 3)), ctx)
        lt2 = lift(random_lagrangian(ctx, rng), int(rng.integers(-2, 3)), ctx)
        m = souriau_index(lt1, lt2, ctx)
        assert souriau_index(lt2, lt1, ctx) == -m
        # one deck transformation adds 2
        assert souriau_index(lt1, shift_theta(lt2, 1), ctx) == m + 2
        assert souriau_index(shift_theta(lt1, 1), lt2, ctx) == m - 2


def test_souriau_maslov_identity(ctx, rng):
    for _ in range(25):
        lts = [lift(random_lagrangian(ctx, rng), int(rng.integers(-1, 2)), ctx) for _ in range(3)]
        mu = maslov_index(lts[0].lag, lts[1].lag, lts[2].lag, ctx)
        total = (
            souriau_index(lts[0], lts[1], ctx)
            + souriau_index(lts[1], lts[2], ctx)
            + souriau_index(lts[2], lts[0], ctx)
        )
        assert total == mu


def test_souriau_non_transverse_pairs(ctx, rng):
    # pairs with a common subspace still get an integer index, antisymmetric
    L = random_lagrangian(ctx, rng)
    lt1 = lift(L, 0, ctx)
    lt2 = lift(L, 2, ctx)
    assert souriau_index(lt1, lt2, ctx) == -souriau_index(lt2, lt1, ctx)
    # index of a lift against itself is antisymmetric hence zero
    assert souriau_index(lt1, lt1, ctx) == 0
    assert souriau_index(lt1, lt2, ctx) == souriau_index(lt1, lt1, ctx) + 4


def test_decorated_basis_is_preserved(rng):
    ctx = make_ctx(2)
    V = random_decorated(ctx, rng)
    assert V.basis.shape == (4, 2)
    # decoration is not orthonormalized
    g = np.array([[2.0, 0.0], [1.0, 1.0]])
    W = DecoratedLagrangian(V.basis @ g, ctx)
    assert np.allclose(W.basis, V.basis @ g)
    assert same_subspace(V.lagrangian, W.lagrangian, ctx)
