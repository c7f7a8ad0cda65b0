"""Canonical forms for pairs of symmetric bilinear forms.

A pair (b0, b1) of real symmetric forms with b0, b1 nonsingular is
classified, up to simultaneous congruence, by Jordan data of f = b0^-1 b1:
eigenvalues, block sizes, and a sign per real block.  This module builds the
canonical matrices, classifies a numerical pair back to that data, and
computes the dimensions of the simultaneous automorphism group.

Real blocks are bucketed into four families by the pair of signs
(eps, eps * sign(lambda)); complex eigenvalues are stored once per conjugate
pair (positive imaginary part) and realified to blocks of even size.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, null_space, ordqz
from scipy.special import binom


def jordan_block(size, eigenvalue):
    lam = complex(eigenvalue)
    dtype = float if lam.imag == 0 else complex
    out = np.eye(size, dtype=dtype) * (lam.real if dtype is float else lam)
    out += np.diag(np.ones(size - 1), 1)
    return out


def antidiagonal(size):
    return np.fliplr(np.eye(size))


def realify_linear(A):
    """2x2-block realification of a complex matrix, x+iy -> [[x,-y],[y,x]]."""
    A = np.asarray(A, dtype=complex)
    return np.kron(A.real, np.eye(2)) + np.kron(A.imag, np.array([[0.0, -1.0], [1.0, 0.0]]))


def realify_form(A):
    """Realification adapted to bilinear forms, x+iy -> [[x,-y],[-y,-x]]."""
    A = np.asarray(A, dtype=complex)
    return np.kron(A.real, np.diag([1.0, -1.0])) + np.kron(
        A.imag, np.array([[0.0, -1.0], [-1.0, 0.0]])
    )


def _sqrt_series(size, eigenvalue):
    """C_size * (I + N/lambda)^(1/2) without the scalar square-root factor."""
    N = np.diag(np.ones(size - 1, dtype=complex), 1)
    S = np.zeros((size, size), dtype=complex)
    P = np.eye(size, dtype=complex)
    for ell in range(size):
        S += binom(0.5, ell) * eigenvalue ** (-ell) * P
        P = P @ N
    return antidiagonal(size).astype(complex) @ S


def phi_block(size, eigenvalue):
    lam = float(eigenvalue)
    return np.sqrt(abs(lam)) * _sqrt_series(size, lam).real


def _lex_max_sqrt(z):
    w = complex(z) ** 0.5
    if (w.real, w.imag) < ((-w).real, (-w).imag):
        w = -w
    return w


def psi_block(half_size, eigenvalue):
    """Realified transition block for one complex Jordan block (size 2*half_size)."""
    lam = complex(eigenvalue)
    return realify_form(_lex_max_sqrt(lam) * _sqrt_series(half_size, lam))


@dataclass(frozen=True)
class DNData:
    """Block sizes per sign family plus realified complex block sizes."""

    n11: tuple
    n1m: tuple
    nm1: tuple
    nmm: tuple
    m2: tuple

    @property
    def total_size(self):
        return sum(self.n11) + sum(self.n1m) + sum(self.nm1) + sum(self.nmm) + sum(self.m2)


@dataclass(frozen=True)
class ENData:
    """DNData together with the eigenvalue lists, in canonical order."""

    dn: DNData
    lam11: tuple
    lam1m: tuple
    lamm1: tuple
    lammm: tuple
    lamC: tuple

    @property
    def total_size(self):
        return self.dn.total_size


_FAMILY_SIGNS = {"11": (1, 1), "1m": (1, -1), "m1": (-1, 1), "mm": (-1, -1)}


def make_endata(real_blocks, complex_blocks=()):
    """Normalize a list of (eps, lambda, size) real blocks and
    (lambda, half_size) complex blocks into canonical ENData order."""
    fams = {"11": [], "1m": [], "m1": [], "mm": []}
    for eps, lam, size in real_blocks:
        lam = float(lam)
        size = int(size)
        if eps not in (1, -1) or size < 1:
            raise ValueError("real block needs eps in {1,-1} and size >= 1")
        if lam == 0.0:
            raise ValueError("eigenvalue 0 is not supported (second form singular)")
        eta = eps * (1 if lam > 0 else -1)
        key = ("1" if eps == 1 else "m") + ("1" if eta == 1 else "m")
        fams[key].append((lam, size))
    for key in fams:
        fams[key].sort(key=lambda t: (-t[0], -t[1]))
    cx = []
    for lam, half in complex_blocks:
        lam = complex(lam)
        half = int(half)
        if lam.imag == 0:
            raise ValueError("complex block eigenvalue must be non-real")
        if lam.imag < 0:
            lam = lam.conjugate()
        cx.append((lam, half))
    cx.sort(key=lambda t: (-t[0].real, -t[0].imag, -t[1]))
    dn = DNData(
        n11=tuple(s for _, s in fams["11"]),
        n1m=tuple(s for _, s in fams["1m"]),
        nm1=tuple(s for _, s in fams["m1"]),
        nmm=tuple(s for _, s in fams["mm"]),
        m2=tuple(2 * h for _, h in cx),
    )
    return ENData(
        dn=dn,
        lam11=tuple(l for l, _ in fams["11"]),
        lam1m=tuple(l for l, _ in fams["1m"]),
        lamm1=tuple(l for l, _ in fams["m1"]),
        lammm=tuple(l for l, _ in fams["mm"]),
        lamC=tuple(l for l, _ in cx),
    )


def _family_blocks(en):
    dn = en.dn
    return [
        (1, dn.n11, en.lam11),
        (1, dn.n1m, en.lam1m),
        (-1, dn.nm1, en.lamm1),
        (-1, dn.nmm, en.lammm),
    ]


def iota(en):
    """Swap the two mixed-sign families; an involution on the data."""
    dn = en.dn
    return ENData(
        dn=DNData(n11=dn.n11, n1m=dn.nm1, nm1=dn.n1m, nmm=dn.nmm, m2=dn.m2),
        lam11=en.lam11,
        lam1m=en.lamm1,
        lamm1=en.lam1m,
        lammm=en.lammm,
        lamC=en.lamC,
    )


def _block_diag(blocks, size):
    if not blocks:
        return np.zeros((size, size))
    return block_diag(*blocks)


def canonical_pair(en):
    """The canonical matrices (C, D) of the pair described by `en`."""
    cs, ds = [], []
    for eps, sizes, lams in _family_blocks(en):
        for size, lam in zip(sizes, lams):
            cs.append(eps * antidiagonal(size))
            ds.append(eps * antidiagonal(size) @ jordan_block(size, lam))
    for size2, lam in zip(en.dn.m2, en.lamC):
        half = size2 // 2
        cs.append(realify_form(antidiagonal(half)))
        ds.append(realify_form(antidiagonal(half).astype(complex) @ jordan_block(half, lam)))
    n = en.total_size
    return _block_diag(cs, n), _block_diag(ds, n)


def canonical_jordan(en):
    """Realified Jordan matrix C^-1 D of the canonical pair."""
    js = []
    for _, sizes, lams in _family_blocks(en):
        for size, lam in zip(sizes, lams):
            js.append(jordan_block(size, lam))
    for size2, lam in zip(en.dn.m2, en.lamC):
        js.append(realify_linear(jordan_block(size2 // 2, lam)))
    return _block_diag(js, en.total_size)


def transition_phi(en):
    """Transition matrix Phi with rows in `en` order and columns in iota(en)
    order; symmetric under transpose composed with iota."""
    def fam_phi(sizes, lams):
        blocks = [phi_block(s, l) for s, l in zip(sizes, lams)]
        return _block_diag(blocks, sum(sizes))

    dn = en.dn
    p11 = fam_phi(dn.n11, en.lam11)
    p1m = fam_phi(dn.n1m, en.lam1m)
    pm1 = fam_phi(dn.nm1, en.lamm1)
    pmm = fam_phi(dn.nmm, en.lammm)
    s1m, sm1 = sum(dn.n1m), sum(dn.nm1)
    middle = np.zeros((s1m + sm1, s1m + sm1))
    middle[:s1m, sm1:] = p1m
    middle[s1m:, :sm1] = pm1
    psis = [psi_block(s // 2, l) for s, l in zip(dn.m2, en.lamC)]
    psi = _block_diag(psis, sum(dn.m2))
    return _block_diag([p11, middle, pmm, psi], en.total_size)


def dual_pair_check(en):
    """Residuals of the two transition identities relating (C, D) of `en`
    to (C, D) of iota(en) through Phi.  Both are ~0 for consistent data."""
    C, D = canonical_pair(en)
    Ci, Di = canonical_pair(iota(en))
    phi = transition_phi(en)
    r1 = np.linalg.norm(phi.T @ np.linalg.solve(D, phi) - Ci)
    r2 = np.linalg.norm(phi.T @ np.linalg.solve(C, phi) - Di)
    return r1, r2


def signature_of_C(en):
    """Signature of the canonical first form; only odd blocks contribute."""
    dn = en.dn if isinstance(en, ENData) else en
    odd = lambda sizes: sum(s % 2 for s in sizes)
    return odd(dn.n11) + odd(dn.n1m) - odd(dn.nm1) - odd(dn.nmm)


def cone_dimension(en):
    dn = en.dn if isinstance(en, ENData) else en
    return len(dn.n11) + len(dn.n1m) + len(dn.nm1) + len(dn.nmm) + 2 * len(dn.m2)


def realize_maslov_pair(sig_first, sig_second, n):
    """Smallest-block data on n dimensions whose two canonical forms have the
    prescribed signatures.  Requires both signatures to share the parity of n."""
    sig_first, sig_second, n = int(sig_first), int(sig_second), int(n)
    if sig_first % 2 != n % 2 or sig_second % 2 != n % 2:
        raise ValueError("signatures must have the same parity as n")
    a = (sig_first + sig_second) // 2
    b = (sig_first - sig_second) // 2
    if abs(a) + abs(b) > n:
        raise ValueError("signature pair is not realizable in this dimension")
    real_blocks = []
    real_blocks += [(1, 1.0, 1)] * max(0, a)
    real_blocks += [(-1, 1.0, 1)] * max(0, -a)
    real_blocks += [(1, -1.0, 1)] * max(0, b)
    real_blocks += [(-1, -1.0, 1)] * max(0, -b)
    rem = n - abs(a) - abs(b)
    complex_blocks = [(1j, rem // 2)] if rem > 0 else []
    return make_endata(real_blocks, complex_blocks)


def _conj_dist(a, b):
    return min(abs(a - b), abs(a - np.conj(b)))


def _cluster_eigenvalues(eigs, cluster_tol):
    """Group eigenvalues, identifying conjugates, by union-find at the given
    relative tolerance.  Returns (centers, assignment) with centers either
    real or in the upper half plane."""
    n = len(eigs)
    tau = cluster_tol * max(np.max(np.abs(eigs)), 1e-300)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _conj_dist(eigs[i], eigs[j]) <= tau:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = sorted(groups.values(), key=lambda g: (eigs[g[0]].real, abs(eigs[g[0]].imag)))
    centers = []
    for g in clusters:
        vals = eigs[g]
        if np.max(np.abs(vals.imag)) <= tau:
            centers.append(complex(np.mean(vals.real)))
        else:
            upper = vals[vals.imag > 0]
            centers.append(complex(np.mean(upper)))
    centers = np.array(centers)
    assign = np.array([min(range(len(centers)), key=lambda c: _conj_dist(eigs[i], centers[c]))
                       for i in range(n)])
    # stability: each cluster must be much tighter than its distance to the rest
    for c, g in enumerate(clusters):
        diam = max((_conj_dist(eigs[i], eigs[j]) for i in g for j in g), default=0.0)
        gap = min(
            (_conj_dist(eigs[i], eigs[j]) for i in g for j in range(n) if assign[j] != c),
            default=np.inf,
        )
        if diam > 0.1 * gap:
            raise ValueError(
                "unstable classification: eigenvalue cluster of diameter "
                f"{diam:.3e} against gap {gap:.3e}"
            )
    return centers, assign


def _nilpotency_powers(N, lam):
    """Powers [I, N, N^2, ...] up to the index where N^m is negligible."""
    r = N.shape[0]
    scale = max(np.linalg.norm(N, 2), 1e-300)
    ref = max(scale, 1e-8 * max(1.0, abs(lam)))
    pows = [np.eye(r, dtype=N.dtype)]
    for j in range(1, r + 1):
        pows.append(pows[-1] @ N)
        if np.linalg.norm(pows[-1], 2) <= 1e-6 * ref**j:
            return pows, j
    raise ValueError("unstable classification: restricted map is not nilpotent")


def _peel_chains(B0, B1, lam, rng, complex_field):
    """Extract Jordan chains of b0^-1 b1 - lam, longest first, normalized so
    the first form is exactly +-C_m (or C_m over the complex field) on each
    chain.  Returns a list of (size, eps, columns)."""
    dtype = complex if complex_field else float
    dim = B0.shape[0]
    basis = np.eye(dim, dtype=dtype)
    out = []
    while basis.shape[1] > 0:
        r = basis.shape[1]
        b0r = basis.T @ B0 @ basis
        b1r = basis.T @ B1 @ basis
        N = np.linalg.solve(b0r, b1r) - lam * np.eye(r, dtype=dtype)
        pows, m = _nilpotency_powers(N, lam)
        G = b0r @ pows[m - 1]
        cands = [np.eye(r, dtype=dtype)[:, i] for i in range(r)]
        extra = rng.standard_normal((8, r))
        if complex_field:
            extra = extra + 1j * rng.standard_normal((8, r))
        cands += [v / np.linalg.norm(v) for v in extra]
        best, best_q = None, 0.0
        for v in cands:
            v = v / np.linalg.norm(v)
            q = v @ G @ v
            if abs(q) > abs(best_q):
                best, best_q = v, q
        if abs(best_q) <= 1e-10 * max(np.linalg.norm(G), 1e-300):
            raise ValueError("unstable classification: degenerate chain pairing")
        w = np.array(best, dtype=dtype)
        if complex_field:
            w = w / np.sqrt(complex(best_q))
            eps = None
            inv_top = 1.0
        else:
            eps = 1 if best_q > 0 else -1
            w = w / np.sqrt(abs(best_q))
            inv_top = eps
        # kill the forms b0(w, N^j w) for j < m-1, top down
        for ell in range(1, m):
            delta = w @ b0r @ pows[m - 1 - ell] @ w
            w = w + (-inv_top * delta / 2.0) * (pows[ell] @ w)
        chain = np.column_stack([pows[m - i] @ w for i in range(1, m + 1)])
        cols = basis @ chain
        gram = cols.T @ B0 @ cols
        target = antidiagonal(m) if complex_field else (eps * antidiagonal(m))
        if np.linalg.norm(gram - target) > 1e-5 * max(1.0, np.linalg.norm(B0)):
            raise ValueError("unstable classification: chain normalization failed")
        out.append((m, eps, cols))
        kernel = null_space(cols.T @ B0 @ basis)
        basis = basis @ kernel
    return out


def classify_pair(b0, b1, tol=1e-9, cluster_tol=1e-6, seed=0):
    """Classify a pair of symmetric forms up to simultaneous congruence.

    Returns (en, P) with P.T @ b0 @ P and P.T @ b1 @ P equal to the canonical
    pair of `en`.  Raises on singular input, eigenvalue 0, or clustering that
    cannot be resolved at the requested tolerances.
    """
    b0 = np.asarray(b0, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    n = b0.shape[0]
    if b0.shape != (n, n) or b1.shape != (n, n):
        raise ValueError("forms must be square matrices of equal size")
    scale0 = max(np.linalg.norm(b0), 1e-300)
    scale1 = max(np.linalg.norm(b1), 1e-300)
    if np.linalg.norm(b0 - b0.T) > tol * scale0 or np.linalg.norm(b1 - b1.T) > tol * scale1:
        raise ValueError("forms must be symmetric")
    b0 = (b0 + b0.T) / 2
    b1 = (b1 + b1.T) / 2
    sv0 = np.linalg.svd(b0, compute_uv=False)
    if sv0[-1] <= tol * sv0[0]:
        raise ValueError("first form is singular")
    sv1 = np.linalg.svd(b1, compute_uv=False)
    if sv1[-1] <= tol * sv1[0]:
        raise ValueError("second form is singular: eigenvalue 0 is not supported")
    rng = np.random.default_rng(seed)
    eigs = np.linalg.eigvals(np.linalg.solve(b0, b1))
    centers, assign = _cluster_eigenvalues(eigs, cluster_tol)
    real_blocks, complex_blocks, columns = [], [], []
    for c, center in enumerate(centers):
        count = int(np.sum(assign == c))

        def select(alpha, beta, c=c):
            lam = alpha / beta
            near = np.array(
                [min(range(len(centers)), key=lambda k: _conj_dist(l, centers[k])) for l in lam]
            )
            return near == c

        _, _, _, _, _, Z = ordqz(b1, b0, sort=select, output="real")
        V = Z[:, :count]
        B0c = V.T @ b0 @ V
        B1c = V.T @ b1 @ V
        if abs(center.imag) == 0.0:
            lam = float(np.trace(np.linalg.solve(B0c, B1c)).real / count)
            for m, eps, cols in _peel_chains(B0c, B1c, lam, rng, complex_field=False):
                real_blocks.append((eps, lam, m, V @ cols))
        else:
            # complex conjugate pair: chains live in the lower-half eigenspace,
            # the stored eigenvalue is its conjugate
            def lower(alpha, beta, c=c):
                lam = alpha / beta
                near = np.array(
                    [min(range(len(centers)), key=lambda k: _conj_dist(l, centers[k]))
                     for l in lam]
                )
                return (near == c) & (lam.imag < 0)

            _, _, _, _, _, Zc = ordqz(B1c, B0c, sort=lower, output="complex")
            Z1 = Zc[:, : count // 2]
            B0z = Z1.T @ B0c @ Z1
            B1z = Z1.T @ B1c @ Z1
            lam_chain = complex(np.trace(np.linalg.solve(B0z, B1z)) / (count // 2))
            for m, _, cols in _peel_chains(B0z, B1z, lam_chain, rng, complex_field=True):
                zvecs = V @ Z1 @ cols
                real_cols = np.zeros((n, 2 * m))
                real_cols[:, 0::2] = np.sqrt(2.0) * zvecs.real
                real_cols[:, 1::2] = np.sqrt(2.0) * zvecs.imag
                complex_blocks.append((np.conj(lam_chain), m, real_cols))
    en = make_endata(
        [(eps, lam, m) for eps, lam, m, _ in real_blocks],
        [(lam, m) for lam, m, _ in complex_blocks],
    )
    # assemble P following the canonical order of en
    real_pool = list(real_blocks)
    cx_pool = list(complex_blocks)
    cols = []
    for eps, sizes, lams in _family_blocks(en):
        for size, lam in zip(sizes, lams):
            k = next(
                i
                for i, (e, l, m, _) in enumerate(real_pool)
                if e == eps and m == size and np.isclose(l, lam)
            )
            cols.append(real_pool.pop(k)[3])
    for size2, lam in zip(en.dn.m2, en.lamC):
        k = next(
            i
            for i, (l, m, _) in enumerate(cx_pool)
            if 2 * m == size2 and np.isclose(l, lam)
        )
        cols.append(cx_pool.pop(k)[2])
    P = np.hstack(cols) if cols else np.zeros((n, 0))
    return en, P


@dataclass(frozen=True)
class AutStructure:
    """Dimension data of the simultaneous automorphism group of a pair.

    levi: (plus, minus, size) per distinct real block shape in a cluster;
    levi_complex: (count, half_size) per distinct complex block shape.
    """

    levi: tuple
    levi_complex: tuple
    levi_dim: int
    unipotent_dim: int
    total_dim: int


def _group_by_value(items, keyfn, tol):
    groups = []
    for it in sorted(items, key=keyfn):
        if groups and abs(keyfn(it) - keyfn(groups[-1][0])) <= tol:
            groups[-1].append(it)
        else:
            groups.append([it])
    return groups


def automorphism_structure(en, tol=1e-6):
    """Levi and unipotent dimensions of the automorphism group of the pair.

    Blocks interact exactly when they share an eigenvalue; the total dimension
    is the sum of min(size, size') over interacting block pairs, doubled for
    complex eigenvalues.
    """
    real_items = []
    for eps, sizes, lams in _family_blocks(en):
        real_items += [(lam, eps, m) for m, lam in zip(sizes, lams)]
    levi, levi_cx = [], []
    levi_dim = 0
    total = 0
    for group in _group_by_value(real_items, lambda t: t[0], tol):
        sizes = sorted({m for _, _, m in group}, reverse=True)
        for m in sizes:
            p = sum(1 for _, eps, mm in group if mm == m and eps == 1)
            q = sum(1 for _, eps, mm in group if mm == m and eps == -1)
            levi.append((p, q, m))
            d = p + q
            levi_dim += d * (d - 1) // 2
        ms = sorted((m for _, _, m in group), reverse=True)
        total += sum(min(ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms)))
    cx_items = [(lam, size2 // 2) for size2, lam in zip(en.dn.m2, en.lamC)]
    for group in _group_by_value(cx_items, lambda t: t[0].real, tol):
        # within a group, split again by imaginary part
        for sub in _group_by_value(group, lambda t: t[0].imag, tol):
            sizes = sorted({m for _, m in sub}, reverse=True)
            for m in sizes:
                d = sum(1 for _, mm in sub if mm == m)
                levi_cx.append((d, m))
                levi_dim += d * (d - 1)
            ms = sorted((m for _, m in sub), reverse=True)
            total += 2 * sum(
                min(ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms))
            )
    return AutStructure(
        levi=tuple(levi),
        levi_complex=tuple(levi_cx),
        levi_dim=levi_dim,
        unipotent_dim=total - levi_dim,
        total_dim=total,
    )
