"""Symplectic vector space primitives.

Dense-matrix tools for the standard symplectic form on R^{2n}: Lagrangian
subspaces, Maslov forms and indices, canonical angles relative to the
horizontal Lagrangian, lifts to the universal cover of the Lagrangian
Grassmannian, and the Souriau index of pairs of lifts.

Conventions used throughout the package:

* the form is omega(x, y) = x^T J y with J = [[0, I], [-I, 0]], so the first
  n coordinates are the "e" block and the last n the "f" block;
* Lagrangians are 2n x n column blocks;
* the complex model identifies v = (a; b) with z = a + i b, which makes the
  basis (e_1 .. e_n) a real form and U(n) the stabilizer of the metric pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


def standard_J(n):
    """Matrix of the standard symplectic form, block form [[0, I], [-I, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


@dataclass(frozen=True)
class SympContext:
    """Half-dimension and the numerical tolerance shared by all operations.

    The tolerance is applied in an absolute-plus-relative fashion: residuals
    are measured against tol * (1 + scale of the data).
    """

    n: int
    tol: float = 1e-9

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("half-dimension n must be a positive integer")
        if not (self.tol > 0):
            raise ValueError("tolerance must be positive")

    @property
    def J(self):
        return standard_J(self.n)


def omega(ctx, x, y):
    """Evaluate the symplectic form on column vectors or column blocks."""
    return np.asarray(x).T @ ctx.J @ np.asarray(y)


def is_symplectic(g, ctx):
    """Whether g^T J g = J within tolerance."""
    g = np.asarray(g, dtype=float)
    m = 2 * ctx.n
    if g.shape != (m, m):
        raise ValueError(f"expected a {m}x{m} matrix, got shape {g.shape}")
    resid = np.linalg.norm(g.T @ ctx.J @ g - ctx.J)
    return bool(resid <= ctx.tol * (1.0 + np.linalg.norm(g) ** 2))


class Lagrangian:
    """An n-dimensional isotropic subspace of R^{2n}.

    The stored span is column-orthonormalized on construction and the input
    basis is forgotten; use DecoratedLagrangian when the basis matters.
    """

    def __init__(self, span, ctx):
        span = np.asarray(span, dtype=float)
        if span.shape != (2 * ctx.n, ctx.n):
            raise ValueError(
                f"expected a {2 * ctx.n}x{ctx.n} block, got shape {span.shape}"
            )
        if not np.all(np.isfinite(span)):
            raise ValueError("span has non-finite entries")
        sv = np.linalg.svd(span, compute_uv=False)
        if sv[-1] <= ctx.tol * sv[0]:
            raise ValueError("span is rank deficient at tolerance")
        q, _ = np.linalg.qr(span)
        iso = np.linalg.norm(q.T @ ctx.J @ q)
        if iso > ctx.tol * (1 + ctx.n):
            raise ValueError(f"subspace is not isotropic (residual {iso:.3e})")
        self.n = ctx.n
        self.span = q

    def __repr__(self):
        return f"Lagrangian(n={self.n})"


class DecoratedLagrangian:
    """A Lagrangian subspace together with a distinguished ordered basis.

    The basis is kept exactly as given; acting on the right by GL(n) yields a
    different decorated Lagrangian with the same underlying subspace.
    """

    def __init__(self, basis, ctx):
        basis = np.asarray(basis, dtype=float)
        self.lagrangian = Lagrangian(basis, ctx)
        self.n = ctx.n
        self.basis = basis

    def __repr__(self):
        return f"DecoratedLagrangian(n={self.n})"


def _span(L):
    """Orthonormal span of a Lagrangian or DecoratedLagrangian."""
    if isinstance(L, Lagrangian):
        return L.span
    if isinstance(L, DecoratedLagrangian):
        return L.lagrangian.span
    raise TypeError(f"expected a (decorated) Lagrangian, got {type(L).__name__}")


def same_subspace(L1, L2, ctx):
    """Subspace equality through principal angles (all cosines near 1)."""
    s = np.linalg.svd(_span(L1).T @ _span(L2), compute_uv=False)
    return bool(np.all(1.0 - s <= 1e2 * ctx.tol))


def transverse(L1, L2, ctx):
    """Whether L1 and L2 intersect trivially, i.e. [L1 | L2] has full rank."""
    stack = np.hstack([_span(L1), _span(L2)])
    sv = np.linalg.svd(stack, compute_uv=False)
    return bool(sv[-1] > ctx.tol * sv[0])


def graph_transfer(vectors, M, L2, ctx):
    """For each column v, the unique w in L2 with v + w in M.

    Requires M transverse to L2. When the columns span a Lagrangian L1
    transverse to L2, this is the graph map of M viewed over L1 along L2.
    """
    A = np.hstack([_span(M), _span(L2)])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= ctx.tol * sv[0]:
        raise ValueError("middle subspace is not transverse to the target")
    coeff = np.linalg.solve(A, vectors)
    return -_span(L2) @ coeff[ctx.n :]


def maslov_form(L1, M, L2, ctx):
    """Symmetric n x n matrix (i, j) -> omega(v_i, T v_j) in the basis of L1,
    where T sends v in L1 to the element of L2 with v + T(v) in M.

    L1 must be decorated; the output is symmetrized on return.  The form is
    nonsingular exactly when M is transverse to L1 as well.
    """
    if not isinstance(L1, DecoratedLagrangian):
        raise TypeError("maslov_form needs a decorated first argument")
    if not transverse(L1, L2, ctx):
        raise ValueError("outer Lagrangians are not transverse")
    if not transverse(M, L2, ctx):
        raise ValueError("middle Lagrangian is not transverse to the target")
    V = L1.basis
    W = graph_transfer(V, M, L2, ctx)
    B = V.T @ ctx.J @ W
    return 0.5 * (B + B.T)


def signature(sym, ctx):
    """Signature of a symmetric matrix; eigenvalues within tol * spectral norm
    of zero are counted as zero."""
    sym = np.asarray(sym, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    nrm = np.max(np.abs(w)) if w.size else 0.0
    if nrm == 0.0:
        return 0
    thr = ctx.tol * nrm
    return int(np.sum(w > thr) - np.sum(w < -thr))


def maslov_index(L1, M, L2, ctx):
    """Integer Maslov index of an ordered Lagrangian triple.

    Always computed through the extended symmetric form on L1 + M + L2 built
    from the pairwise omega-pairings, so no transversality is required; for
    pairwise transverse triples it equals the signature of maslov_form.
    """
    Q1, Q2, Q3 = _span(L1), _span(M), _span(L2)
    O12 = Q1.T @ ctx.J @ Q2
    O23 = Q2.T @ ctx.J @ Q3
    O31 = Q3.T @ ctx.J @ Q1
    Z = np.zeros((ctx.n, ctx.n))
    G = 0.5 * np.block([[Z, O12, O31.T], [O12.T, Z, O23], [O31, O23.T, Z]])
    return signature(G, ctx)


def to_unitary(L, ctx):
    """Complex n x n matrix of an orthonormal basis of L in the C^n model.

    For a Lagrangian the result is unitary; the subspace is recovered as the
    image of R^n under it.
    """
    Q = _span(L)
    return Q[: ctx.n] + 1j * Q[ctx.n :]


def lag_angles(M, ctx):
    """Canonical angles of M relative to the horizontal Lagrangian span(e).

    Returns a nondecreasing array in [0, pi); the multiplicity of 0 equals
    dim(M intersect span(e)).  Computed from the eigenvalues exp(2 i phi) of
    Z^T Z where Z is a unitary basis of M in the complex model.
    """
    Z = to_unitary(M, ctx)
    lam = np.linalg.eigvals(Z.T @ Z)
    phi = (np.angle(lam) / 2.0) % np.pi
    # angles are defined mod pi: values that land just below pi are zeros
    phi = np.where(np.pi - phi < 1e2 * ctx.tol, 0.0, phi)
    return np.sort(phi)


@dataclass(frozen=True)
class LiftedLagrangian:
    """A Lagrangian with a continuous total-angle coordinate theta.

    theta must equal the sum of canonical angles modulo pi; the lifts of a
    fixed Lagrangian form a pi Z orbit.  Use lift() to construct validated
    instances.
    """

    lag: Lagrangian
    theta: float


def validate_lift(lt, ctx):
    """Raise unless theta is congruent to the angle sum modulo pi."""
    d = lt.theta - float(np.sum(lag_angles(lt.lag, ctx)))
    if abs(d - np.pi * round(d / np.pi)) > 1e3 * ctx.tol:
        raise ValueError("theta is not congruent to the angle sum mod pi")


def lift(M, k, ctx):
    """The lift of M with theta = (sum of canonical angles) + k pi."""
    theta = float(np.sum(lag_angles(M, ctx))) + k * np.pi
    return LiftedLagrangian(M, theta)


def shift_theta(lt, k):
    """Apply k deck transformations to a lift: theta += k pi.

    One application generates the deck group; the index of a pair changes by
    2k when the second entry is shifted by k.
    """
    return LiftedLagrangian(lt.lag, lt.theta + k * np.pi)


def _generic_rotation_lagrangians(ctx):
    """Deterministic family of auxiliary Lagrangians with quasi-random
    diagonal angles, used to reduce non-transverse Souriau pairs."""
    idx = np.arange(ctx.n)
    for j in range(40):
        phi = np.pi * ((0.37 + 0.61803 * j + 0.1709 * idx) % 1.0)
        span = np.vstack([np.diag(np.cos(phi)), np.diag(np.sin(phi))])
        yield Lagrangian(span, ctx)


def _souriau_transverse(lt1, lt2, ctx):
    n = ctx.n
    Z1 = to_unitary(lt1.lag, ctx)
    u = Z1.conj().T
    # the lifted unitary taking lt1 to the base lift (span(e), 0) must have
    # determinant exp(-i theta1); the O(n) freedom in the orthonormal basis
    # only allows a sign, fixed by flipping one row if needed
    target = np.exp(-1j * lt1.theta)
    d = np.linalg.det(u)
    if abs(d - target) > abs(d + target):
        u = u.copy()
        u[0, :] *= -1.0
    Zp = u @ to_unitary(lt2.lag, ctx)
    lam = np.linalg.eigvals(Zp.T @ Zp)
    phi = (np.angle(lam) / 2.0) % np.pi
    theta_p = lt2.theta - lt1.theta
    m_float = n + (2.0 / np.pi) * (theta_p - float(np.sum(phi)))
    m = round(m_float)
    if abs(m - m_float) > 0.01:
        raise ArithmeticError(
            f"Souriau index failed the integrality check ({m_float:.6f})"
        )
    return int(m)


def souriau_index(lt1, lt2, ctx):
    """Integer index of an ordered pair of lifted Lagrangians.

    Transverse pairs: move the first lift to the base point (span(e), 0) by a
    lifted unitary and read the normalized angle defect of the image of the
    second; the result must be an integer within 0.01 or an error is raised.

    Non-transverse pairs: reduced through an auxiliary lift lt3 transverse to
    both, as index(L1,L2) = maslov(L1,L2,L3) - index(lt2,lt3) - index(lt3,lt1).
    The value does not depend on the auxiliary choice.
    """
    validate_lift(lt1, ctx)
    validate_lift(lt2, ctx)
    if transverse(lt1.lag, lt2.lag, ctx):
        return _souriau_transverse(lt1, lt2, ctx)
    for L3 in _generic_rotation_lagrangians(ctx):
        if transverse(L3, lt1.lag, ctx) and transverse(L3, lt2.lag, ctx):
            lt3 = lift(L3, 0, ctx)
            mu = maslov_index(lt1.lag, lt2.lag, L3, ctx)
            return mu - _souriau_transverse(lt2, lt3, ctx) - _souriau_transverse(lt3, lt1, ctx)
    raise ArithmeticError("no auxiliary Lagrangian transverse to both inputs")


def horizontal_lagrangian(ctx):
    """span(e_1 .. e_n), the base point for angles and lifts."""
    return Lagrangian(np.vstack([np.eye(ctx.n), np.zeros((ctx.n, ctx.n))]), ctx)


def vertical_lagrangian(ctx):
    """span(f_1 .. f_n)."""
    return Lagrangian(np.vstack([np.zeros((ctx.n, ctx.n)), np.eye(ctx.n)]), ctx)


def graph_lagrangian(S, ctx, decorated=False):
    """span(e + f S) for a symmetric n x n matrix S (the graph of S)."""
    S = np.asarray(S, dtype=float)
    block = np.vstack([np.eye(ctx.n), S])
    if decorated:
        return DecoratedLagrangian(block, ctx)
    return Lagrangian(block, ctx)


def random_symplectic(ctx, rng, scale=1.0):
    """Random symplectic matrix, the exponential of a random element J S of
    the symplectic Lie algebra (S symmetric Gaussian)."""
    S = rng.standard_normal((2 * ctx.n, 2 * ctx.n))
    S = 0.5 * (S + S.T)
    return scipy.linalg.expm(scale * ctx.J @ S)


def random_lagrangian(ctx, rng):
    """Random Lagrangian from a Haar-distributed unitary in the C^n model."""
    A = rng.standard_normal((ctx.n, ctx.n)) + 1j * rng.standard_normal((ctx.n, ctx.n))
    Z, R = np.linalg.qr(A)
    Z = Z * np.sign(np.diag(R))  # fix the QR phase ambiguity
    return Lagrangian(np.vstack([Z.real, Z.imag]), ctx)


def random_decorated(ctx, rng):
    """Random decorated Lagrangian with a well-conditioned basis."""
    L = random_lagrangian(ctx, rng)
    g = scipy.linalg.expm(0.5 * rng.standard_normal((ctx.n, ctx.n)))
    return DecoratedLagrangian(L.span @ g, ctx)
