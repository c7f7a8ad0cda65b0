"""Invariants of Lagrangian tuples: matrix cross ratios, positive quadruples
and their standard bases, angle invariants of quintuples, matrix
lambda-lengths with the Ptolemy and triangle relations, and triples encoded
by orthogonal matrices with C B A = -Id."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DecoratedLagrangian,
    Lagrangian,
    graph_transfer,
    is_symplectic,
    maslov_form,
    _span,
    same_subspace,
    signature,
    transverse,
)


@dataclass(frozen=True)
class Quadruple:
    """Ordered quadruple (L1, M1, L2, M2) of Lagrangians.

    Transversality requirements vary per operation and are checked there.
    """

    L1: Lagrangian
    M1: Lagrangian
    L2: Lagrangian
    M2: Lagrangian


@dataclass(frozen=True)
class PositiveQuadrupleCert:
    """Certificate of positivity: a symplectic basis (columns e then f) with
    L1 = span(e), L2 = span(f), M1 = span(e + f), M2 = span(e - f Lambda),
    where Lambda is positive diagonal with nondecreasing entries."""

    basis: np.ndarray
    Lambda: np.ndarray

    @property
    def e(self):
        n = self.basis.shape[0] // 2
        return self.basis[:, :n]

    @property
    def f(self):
        n = self.basis.shape[0] // 2
        return self.basis[:, n:]


def _coords_in(basis, vectors):
    """Coordinates of columns in a full-column-rank basis block."""
    sol, _, _, _ = np.linalg.lstsq(basis, vectors, rcond=None)
    return sol


def cross_ratio(q, basis_of_L1, ctx):
    """Matrix of the cross-ratio map of (L1, M1, L2, M2) in a basis of L1.

    The map sends v in L1 to -T2(T1(v)) where T1(v) is the element of L2 with
    v + T1(v) in M1 and T2(w) the element of L1 with w + T2(w) in M2.
    """
    if not isinstance(basis_of_L1, DecoratedLagrangian):
        raise TypeError("basis_of_L1 must be a DecoratedLagrangian")
    if not same_subspace(basis_of_L1.lagrangian, q.L1, ctx):
        raise ValueError("given basis does not span L1")
    if not transverse(q.L1, q.L2, ctx):
        raise ValueError("L1 and L2 are not transverse")
    V = basis_of_L1.basis
    W = graph_transfer(V, q.M1, q.L2, ctx)
    X = graph_transfer(W, q.M2, q.L1, ctx)
    return _coords_in(V, -X)


def is_positive_quadruple(q, ctx):
    """Whether both Maslov forms (L1, M1, L2) and (L2, M2, L1) are positive
    definite.  False (not an error) when a required transversality fails."""
    try:
        b1 = maslov_form(DecoratedLagrangian(_span(q.L1), ctx), q.M1, q.L2, ctx)
        b2 = maslov_form(DecoratedLagrangian(_span(q.L2), ctx), q.M2, q.L1, ctx)
    except ValueError:
        return False
    for b in (b1, b2):
        w = np.linalg.eigvalsh(b)
        if w[0] <= ctx.tol * max(1.0, abs(w[-1])):
            return False
    return True


def validate_certificate(q, cert, ctx):
    """Max residual of the standard-position conditions of a certificate."""
    n = ctx.n
    e, f, lam = cert.e, cert.f, cert.Lambda
    res = [np.linalg.norm(cert.basis.T @ ctx.J @ cert.basis - ctx.J)]
    for block, target in (
        (e, q.L1),
        (f, q.L2),
        (e + f, q.M1),
        (e - f * lam[None, :], q.M2),
    ):
        Q = _span(target)
        proj = Q @ (Q.T @ block)
        res.append(np.linalg.norm(block - proj) / max(1.0, np.linalg.norm(block)))
    if np.any(lam <= 0) or np.any(np.diff(lam) < -ctx.tol):
        res.append(np.inf)
    return float(max(res))


def standard_basis_positive(q, ctx):
    """Standard-position symplectic basis and the diagonal invariant Lambda
    of a positive quadruple.

    The basis is unique up to replacing (e, f) by (e h, f h) with h orthogonal
    and commuting with Lambda; Lambda itself is a complete invariant.
    """
    if not is_positive_quadruple(q, ctx):
        raise ValueError("quadruple is not positive")
    V0 = DecoratedLagrangian(_span(q.L1), ctx)
    beta = maslov_form(V0, q.M1, q.L2, ctx)
    R = cross_ratio(q, V0, ctx)
    C = np.linalg.cholesky(beta).T  # upper triangular, beta = C^T C
    S = C @ R @ np.linalg.solve(C, np.eye(ctx.n))
    S = 0.5 * (S + S.T)
    d, U = np.linalg.eigh(S)
    order = np.argsort(-d)  # cross-ratio eigenvalues nonincreasing
    d, U = d[order], U[:, order]
    if d[-1] <= 0:
        raise ValueError("cross ratio is not positive definite on a positive quadruple")
    E = np.linalg.solve(C, U)
    e = V0.basis @ E
    f = graph_transfer(e, q.M1, q.L2, ctx)
    cert = PositiveQuadrupleCert(basis=np.hstack([e, f]), Lambda=1.0 / d)
    resid = validate_certificate(q, cert, ctx)
    if resid > 1e4 * ctx.tol:
        raise ArithmeticError(f"standard basis residual too large ({resid:.3e})")
    return cert


def swap_certificate(cert, ctx):
    """Standard basis for the swapped quadruple (L2, M2, L1, M1): the pair
    (f u, -e u^{-1}) with u = Lambda^{1/2}, with the same Lambda."""
    u = np.sqrt(cert.Lambda)
    return PositiveQuadrupleCert(
        basis=np.hstack([cert.f * u[None, :], -cert.e / u[None, :]]),
        Lambda=cert.Lambda.copy(),
    )


def angle_invariant(La, Mc, Lb, Lc, Mb, ctx):
    """Orthogonal matrix relating the standard bases of the two positive
    quadruples (La, Lb, Lc, Mb) and (Lb, Lc, La, Mc) inside a quintuple.

    With (e_b, f_b) standard for the first and (e_c, f_c) for the second,
    both f_c and e_b span La and the result A solves f_c = e_b A.  It is well
    defined only up to diagonal-sign style factors: Stab(Lambda_b) on the
    left and Stab(Lambda_c) on the right.  Returns (A, Lambda_b, Lambda_c).
    """
    cert_b = standard_basis_positive(Quadruple(La, Lb, Lc, Mb), ctx)
    cert_c = standard_basis_positive(Quadruple(Lb, Lc, La, Mc), ctx)
    A = _coords_in(cert_b.e, cert_c.f)
    if np.linalg.norm(A.T @ A - np.eye(ctx.n)) > 1e5 * ctx.tol:
        raise ArithmeticError("angle invariant representative is not orthogonal")
    return A, cert_b.Lambda, cert_c.Lambda


def canonical_angle_invariant(A, lam_b, lam_c, ctx):
    """Double-coset representative of an angle invariant when both Lambda
    spectra are simple: the lexicographically largest diag(+-1) A diag(+-1).

    Raises when either Lambda has repeated entries (the stabilizers are then
    positive dimensional and no finite canonicalization applies).
    """
    for lam in (lam_b, lam_c):
        if np.min(np.diff(np.sort(lam))) <= 1e2 * ctx.tol * max(1.0, np.max(lam)):
            raise ValueError("indeterminate: repeated Lambda entries")
    n = A.shape[0]
    best = None
    for mask_l in range(1 << n):
        dl = np.array([1.0 if mask_l & (1 << i) else -1.0 for i in range(n)])
        for mask_r in range(1 << n):
            dr = np.array([1.0 if mask_r & (1 << i) else -1.0 for i in range(n)])
            cand = dl[:, None] * A * dr[None, :]
            key = tuple(np.round(cand.ravel(), 9))
            if best is None or key > best[0]:
                best = (key, cand)
    return best[1]


def lambda_length(v, w, ctx):
    """n x n matrix of symplectic pairings omega(v_i, w_j) of two decorated
    Lagrangians; invertible exactly when the subspaces are transverse."""
    return v.basis.T @ ctx.J @ w.basis


def decompose_in_frame(v1, v2, v3, ctx):
    """Unique (A, B) with v2 = v1 A + v3 B, for v1 transverse to v3.

    A = L31^{-1} L32 and B = L13^{-1} L12 in lambda-length notation.
    """
    L31 = lambda_length(v3, v1, ctx)
    L13 = lambda_length(v1, v3, ctx)
    if abs(np.linalg.det(L31)) <= ctx.tol:
        raise ValueError("outer decorated Lagrangians are not transverse")
    A = np.linalg.solve(L31, lambda_length(v3, v2, ctx))
    B = np.linalg.solve(L13, lambda_length(v1, v2, ctx))
    resid = np.linalg.norm(v2.basis - v1.basis @ A - v3.basis @ B)
    if resid > 1e3 * ctx.tol * max(1.0, np.linalg.norm(v2.basis)):
        raise ArithmeticError(f"frame decomposition residual {resid:.3e}")
    return A, B


def check_triangle_relation(v1, v2, v3, ctx):
    """Residual of L23 L13^{-1} L12 + L21 L31^{-1} L32 = 0.

    Expanding v2 in the frame (v1, v3) shows the left side equals the matrix
    of omega restricted to v2's subspace, so it vanishes for Lagrangian
    decorations."""
    L13 = lambda_length(v1, v3, ctx)
    L31 = lambda_length(v3, v1, ctx)
    if abs(np.linalg.det(L13)) <= ctx.tol:
        raise ValueError("v1 and v3 are not transverse")
    t1 = lambda_length(v2, v3, ctx) @ np.linalg.solve(L13, lambda_length(v1, v2, ctx))
    t2 = lambda_length(v2, v1, ctx) @ np.linalg.solve(L31, lambda_length(v3, v2, ctx))
    return float(np.linalg.norm(t1 + t2))


def check_ptolemy(v1, v2, v3, v4, ctx):
    """Residual of the Ptolemy relation
    L24 = L23 L13^{-1} L14 + L21 L31^{-1} L34 (v1 transverse to v3)."""
    L13 = lambda_length(v1, v3, ctx)
    L31 = lambda_length(v3, v1, ctx)
    if abs(np.linalg.det(L13)) <= ctx.tol:
        raise ValueError("v1 and v3 are not transverse")
    lhs = lambda_length(v2, v4, ctx)
    rhs = lambda_length(v2, v3, ctx) @ np.linalg.solve(L13, lambda_length(v1, v4, ctx))
    rhs = rhs + lambda_length(v2, v1, ctx) @ np.linalg.solve(L31, lambda_length(v3, v4, ctx))
    return float(np.linalg.norm(lhs - rhs))


def maslov_via_lambda(v1, v2, v3, ctx):
    """Maslov index of a pairwise transverse triple from lambda-lengths:
    the signature of L12 L32^{-1} L31 (a symmetric matrix)."""
    L32 = lambda_length(v3, v2, ctx)
    if abs(np.linalg.det(L32)) <= ctx.tol:
        raise ValueError("v2 and v3 are not transverse")
    P = lambda_length(v1, v2, ctx) @ np.linalg.solve(L32, lambda_length(v3, v1, ctx))
    sym_defect = np.linalg.norm(P - P.T) / max(1.0, np.linalg.norm(P))
    if sym_defect > 1e4 * ctx.tol:
        raise ArithmeticError("lambda-length Maslov matrix is not symmetric")
    return signature(P, ctx)


def cross_ratio_via_lambda(v1, v2, v3, v4, ctx):
    """Cross ratio of (L1, L2, L3, L4) in the basis v1 from lambda-lengths:
    -L41^{-1} L43 L23^{-1} L21."""
    L41 = lambda_length(v4, v1, ctx)
    L23 = lambda_length(v2, v3, ctx)
    for name, mat in (("L41", L41), ("L23", L23)):
        if abs(np.linalg.det(mat)) <= ctx.tol:
            raise ValueError(f"singular {name}: required transversality fails")
    return -np.linalg.solve(L41, lambda_length(v4, v3, ctx)) @ np.linalg.solve(
        L23, lambda_length(v2, v1, ctx)
    )


def _chain_matrix(X):
    n = X.shape[0]
    T = np.zeros((2 * n, 2 * n))
    T[:n, :n] = X
    T[:n, n:] = -X
    T[n:, :n] = X
    return T


def triple_from_CBA(A, B, C, base, ctx):
    """Pairwise transverse Lagrangian triple encoded by orthogonal matrices
    with C B A = -Id, chained from a symplectic base basis (e | f).

    Convention: (e_a, f_a) = base, (e_c, f_c) = (e_a, f_a) T_B and
    (e_b, f_b) = (e_c, f_c) T_A with T_X = [[X, -X], [X, 0]], which encodes
    f_b = -e_c A, f_c = -e_a B, f_a = -e_b C.  Returned in the order
    (La, Lb, Lc, basis_a, basis_b, basis_c); the Maslov index of
    (La, Lb, Lc) is -n for A = B = Id, C = -Id (and +n after reversal).
    """
    n = ctx.n
    A, B, C = (np.asarray(m, dtype=float) for m in (A, B, C))
    for name, X in (("A", A), ("B", B), ("C", C)):
        if np.linalg.norm(X.T @ X - np.eye(n)) > 1e2 * ctx.tol:
            raise ValueError(f"{name} is not orthogonal")
    if np.linalg.norm(C @ B @ A + np.eye(n)) > 1e2 * ctx.tol:
        raise ValueError("C B A = -Id fails")
    base = np.asarray(base, dtype=float)
    if not is_symplectic(base, ctx):
        raise ValueError("base is not a symplectic basis")
    basis_a = base
    basis_c = basis_a @ _chain_matrix(B)
    basis_b = basis_c @ _chain_matrix(A)
    La = Lagrangian(basis_a[:, :n], ctx)
    Lb = Lagrangian(basis_b[:, :n], ctx)
    Lc = Lagrangian(basis_c[:, :n], ctx)
    return La, Lb, Lc, basis_a, basis_b, basis_c


def cba_from_triple(basis_a, basis_b, basis_c, ctx):
    """Recover (A, B, C) from chained symplectic bases of a triple, through
    f_b = -e_c A, f_c = -e_a B, f_a = -e_b C."""
    n = ctx.n
    A = -_coords_in(basis_c[:, :n], basis_b[:, n:])
    B = -_coords_in(basis_a[:, :n], basis_c[:, n:])
    C = -_coords_in(basis_b[:, :n], basis_a[:, n:])
    return A, B, C


def make_positive_quadruple(basis, lam, ctx):
    """Positive quadruple in standard position for a symplectic basis
    (e | f) and positive diagonal entries lam."""
    n = ctx.n
    basis = np.asarray(basis, dtype=float)
    lam = np.asarray(lam, dtype=float)
    e, f = basis[:, :n], basis[:, n:]
    return Quadruple(
        L1=Lagrangian(e, ctx),
        M1=Lagrangian(e + f, ctx),
        L2=Lagrangian(f, ctx),
        M2=Lagrangian(e - f * lam[None, :], ctx),
    )
