import numpy as np
import pytest

from sympsurf.pairforms import (
    AutStructure,
    DNData,
    ENData,
    antidiagonal,
    automorphism_structure,
    canonical_jordan,
    canonical_pair,
    classify_pair,
    cone_dimension,
    dual_pair_check,
    iota,
    jordan_block,
    make_endata,
    phi_block,
    psi_block,
    realify_form,
    realify_linear,
    realize_maslov_pair,
    signature_of_C,
    transition_phi,
)


def aut_dim_brute(C, D):
    """Nullity of {A : A^T C + C A = 0 and A^T D + D A = 0}."""
    n = C.shape[0]
    cols = []
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            cols.append(np.concatenate([(E.T @ C + C @ E).ravel(), (E.T @ D + D @ E).ravel()]))
    M = np.array(cols).T
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(sv > 1e-9 * sv[0]))
    return n * n - rank


def random_endata(rng, max_total=6):
    """Random block data with well separated eigenvalues and sizes <= 3."""
    lams = list(1.0 + 0.7 * np.arange(6))
    rng.shuffle(lams)
    blocks, total = [], 0
    while total < max_total - 1 and lams:
        size = int(rng.integers(1, min(3, max_total - total) + 1))
        eps = int(rng.choice([1, -1]))
        lam = lams.pop() * rng.choice([1.0, -1.0])
        blocks.append((eps, lam, size))
        total += size
    complexes = []
    if total + 2 <= max_total and rng.random() < 0.6:
        half = 1 if total + 4 > max_total or rng.random() < 0.5 else 2
        complexes.append((rng.uniform(-2, 2) + 1j * rng.uniform(0.5, 2.0), half))
        total += 2 * half
    return make_endata(blocks, complexes)


def test_small_builders():
    assert np.array_equal(jordan_block(3, 2.0), [[2, 1, 0], [0, 2, 1], [0, 0, 2]])
    assert np.array_equal(antidiagonal(2), [[0, 1], [1, 0]])
    z = 1.0 + 2.0j
    assert np.allclose(realify_linear([[z]]), [[1, -2], [2, 1]])
    assert np.allclose(realify_form([[z]]), [[1, -2], [-2, -1]])
    # realification of a product matches the product of realifications
    A = np.array([[1 + 1j, 2.0], [0.5j, -1.0]])
    B = np.array([[2.0, 1j], [1.0, 1 - 1j]])
    assert np.allclose(realify_linear(A @ B), realify_linear(A) @ realify_linear(B))


def test_phi_block_closed_form():
    for lam in (2.0, -3.0):
        want = np.sqrt(abs(lam)) * np.array([[0.0, 1.0], [1.0, 1.0 / (2 * lam)]])
        assert np.allclose(phi_block(2, lam), want)
    assert np.allclose(phi_block(1, -4.0), [[2.0]])
    # Phi blocks are symmetric
    assert np.allclose(phi_block(3, 1.7), phi_block(3, 1.7).T)
    assert np.allclose(psi_block(2, 0.3 + 1.2j), psi_block(2, 0.3 + 1.2j).T)


def test_canonical_pair_scalar_families():
    # one block per family, eigenvalue signs forced by the family
    en = make_endata([(1, 2.0, 1), (1, -2.0, 1), (-1, -3.0, 1), (-1, 3.0, 1)])
    C, D = canonical_pair(en)
    assert np.allclose(C, np.diag([1.0, 1.0, -1.0, -1.0]))
    assert np.allclose(D, np.diag([2.0, -2.0, 3.0, -3.0]))
    assert signature_of_C(en) == 0
    assert cone_dimension(en) == 4


def test_dual_identities_scalar():
    # single positive block: Phi^T D^-1 Phi = |lam|/lam = 1 exactly
    en = make_endata([(1, 2.5, 1)])
    r1, r2 = dual_pair_check(en)
    assert r1 < 1e-14 and r2 < 1e-14
    # mixed family: the identity swaps the two middle families
    en2 = make_endata([(1, -2.0, 1)])
    Ci, _ = canonical_pair(iota(en2))
    assert np.allclose(Ci, [[-1.0]])
    r1, r2 = dual_pair_check(en2)
    assert r1 < 1e-14 and r2 < 1e-14


def test_dual_identities_random(rng):
    for _ in range(20):
        en = random_endata(rng)
        r1, r2 = dual_pair_check(en)
        assert r1 < 1e-10 and r2 < 1e-10
        phi = transition_phi(en)
        assert np.allclose(transition_phi(iota(en)).T, phi)
        assert iota(iota(en)) == en


def test_canonical_jordan(rng):
    en = random_endata(rng)
    C, D = canonical_pair(en)
    assert np.allclose(np.linalg.solve(C, D), canonical_jordan(en))


def test_classify_pair_diag_example():
    en, P = classify_pair(np.diag([1.0, -1.0]), np.eye(2))
    assert en.dn == DNData(n11=(1,), n1m=(), nm1=(1,), nmm=(), m2=())
    assert en.lam11 == (1.0,) and en.lamm1 == (-1.0,)
    C, D = canonical_pair(en)
    assert np.allclose(P.T @ np.diag([1.0, -1.0]) @ P, C)
    assert np.allclose(P.T @ P, D)


def test_classify_pair_round_trip(rng):
    for _ in range(25):
        en0 = random_endata(rng)
        C0, D0 = canonical_pair(en0)
        n = en0.total_size
        T = np.eye(n) + 0.4 * rng.standard_normal((n, n))
        b0, b1 = T.T @ C0 @ T, T.T @ D0 @ T
        en, P = classify_pair(b0, b1, cluster_tol=1e-3)
        assert en.dn == en0.dn
        for a, b in (
            (en.lam11, en0.lam11),
            (en.lam1m, en0.lam1m),
            (en.lamm1, en0.lamm1),
            (en.lammm, en0.lammm),
            (en.lamC, en0.lamC),
        ):
            assert np.allclose(a, b, atol=1e-7)
        C, D = canonical_pair(en)
        assert np.linalg.norm(P.T @ b0 @ P - C) < 1e-7 * max(1, np.linalg.norm(b0))
        assert np.linalg.norm(P.T @ b1 @ P - D) < 1e-7 * max(1, np.linalg.norm(b1))


def test_classify_pair_errors():
    with pytest.raises(ValueError, match="singular"):
        classify_pair(np.eye(2), np.diag([1.0, 0.0]))
    with pytest.raises(ValueError, match="symmetric"):
        classify_pair(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))
    with pytest.raises(ValueError, match="unstable"):
        # clusters {0.9, 1.1} vs {3.0} merge at this tolerance but the
        # merged cluster is too wide relative to the remaining gap
        classify_pair(np.eye(3), np.diag([0.9, 1.1, 3.0]), cluster_tol=0.15)


def test_classify_separates_close_but_resolvable(rng):
    b1 = np.diag([1.0, 1.0 + 3e-3, 2.0])
    en, _ = classify_pair(np.eye(3), b1, cluster_tol=1e-6)
    assert en.dn.n11 == (1, 1, 1)


def test_realize_maslov_pair():
    for n in (1, 2, 3, 4):
        for s in range(-n, n + 1):
            for sp in range(-n, n + 1):
                if (s - n) % 2 or (sp - n) % 2 or abs(s + sp) // 2 + abs(s - sp) // 2 > n:
                    continue
                en = realize_maslov_pair(s, sp, n)
                C, D = canonical_pair(en)
                assert en.total_size == n
                assert signature_of_C(en) == s
                evC = np.linalg.eigvalsh(C)
                evD = np.linalg.eigvalsh(D)
                assert int(np.sum(evC > 0) - np.sum(evC < 0)) == s
                assert int(np.sum(evD > 0) - np.sum(evD < 0)) == sp
    with pytest.raises(ValueError, match="parity"):
        realize_maslov_pair(1, 1, 2)
    with pytest.raises(ValueError, match="realizable"):
        realize_maslov_pair(5, 1, 3)


def test_cone_dimension():
    en = make_endata([(1, 1.0, 1), (1, 1.0, 1)], [(1j, 1)])
    assert cone_dimension(en) == 4
    assert cone_dimension(en.dn) == 4


AUT_CASES = [
    # (real blocks, complex blocks, expected total dim)
    ([(1, 1.0, 1), (1, 1.0, 1)], [], 1),  # O(2)
    ([(1, 1.0, 1), (-1, 1.0, 1)], [], 1),  # O(1,1)
    ([(1, 1.0, 2)], [], 0),  # single Jordan block
    ([(1, 1.0, 2), (1, 1.0, 1)], [], 1),
    ([(1, 1.0, 2), (1, 1.0, 2)], [], 2),
    ([(1, 1.0, 1), (1, 2.0, 1)], [], 0),  # distinct eigenvalues do not interact
    ([(1, 1.0, 3), (-1, 1.0, 1), (1, -2.0, 1)], [], 1),
    ([], [(1j, 1)], 0),
    ([], [(1j, 1), (1j, 1)], 2),  # complex orthogonal group O(2,C)
    ([], [(1j, 2), (1j, 1)], 2),
    ([(1, 1.0, 1)], [(0.5 + 1j, 1)], 0),
]


@pytest.mark.parametrize("real_blocks,cx_blocks,want", AUT_CASES)
def test_automorphism_structure_vs_brute_force(real_blocks, cx_blocks, want):
    en = make_endata(real_blocks, cx_blocks)
    aut = automorphism_structure(en)
    C, D = canonical_pair(en)
    assert aut.total_dim == aut_dim_brute(C, D) == want
    assert aut.levi_dim + aut.unipotent_dim == aut.total_dim
    assert aut.unipotent_dim >= 0


def test_automorphism_structure_random(rng):
    for _ in range(15):
        en = random_endata(rng)
        aut = automorphism_structure(en)
        C, D = canonical_pair(en)
        assert aut.total_dim == aut_dim_brute(C, D)


def test_automorphism_levi_detail():
    en = make_endata([(1, 1.0, 2), (1, 1.0, 2), (-1, 1.0, 2), (1, 1.0, 1)])
    aut = automorphism_structure(en)
    assert (2, 1, 2) in aut.levi and (1, 0, 1) in aut.levi
    # O(2,1) contributes 3, and min-size sums give the rest
    assert aut.levi_dim == 3
    assert aut.total_dim == 3 * 2 + 3 * 1  # three pairs of 2-blocks, three (2,1) pairs
