"""Framed twisted symplectic local systems on the quiver of a triangulation.

Each quiver vertex carries R^2n with the standard symplectic form; the top
and bottom coordinate Lagrangians are the two framing lines of the side the
vertex sits on.  Arrows carry symplectic matrices of a constrained shape:

    edge arrows   [[0, -B^-T], [B, 0]]     with B invertible,
    face arrows   [[M C, -C^-T], [C, 0]]   with M symmetric,

the reverse edge arrow carrying the transpose of B.  Oriented 2-cycles and
3-cycles must multiply to -Id (the systems are twisted).
"""

import json
from fractions import Fraction

import numpy as np

from .core import DecoratedLagrangian, Lagrangian, SympContext, signature
from .invariants import Quadruple, cross_ratio
from .surface import (
    IdealTriangulation,
    a2_arrows,
    a3_arrows,
    arrow_reverse,
    arrow_str,
    corner_walk,
    face_cycle,
    parse_arrow,
)


def a2_matrix(B):
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, n:] = -np.linalg.inv(B).T
    out[n:, :n] = B
    return out


def a3_matrix(C, M=None):
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    if M is None:
        M = np.eye(n)
    M = np.asarray(M, dtype=float)
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = M @ C
    out[:n, n:] = -np.linalg.inv(C).T
    out[n:, :n] = C
    return out


class FramedTwistedSystem:
    def __init__(self, tri, n, G, tol=1e-9):
        self.tri = tri
        self.n = int(n)
        self.tol = float(tol)
        self.G = {}
        for arrow in a3_arrows(tri) + a2_arrows(tri):
            if arrow not in G:
                raise ValueError(f"missing matrix for arrow {arrow_str(arrow)}")
            mat = np.asarray(G[arrow], dtype=float)
            if mat.shape != (2 * self.n, 2 * self.n):
                raise ValueError(f"arrow {arrow_str(arrow)} has wrong shape")
            self.G[arrow] = mat

    @property
    def ctx(self):
        return SympContext(self.n, self.tol)

    # -- block access ------------------------------------------------------

    def edge_block(self, arrow):
        """B of an edge arrow."""
        if arrow[0] != "A2":
            raise ValueError("not an edge arrow")
        n = self.n
        return self.G[arrow][n:, :n]

    def corner_block(self, arrow):
        """C of a face arrow."""
        if arrow[0] != "A3":
            raise ValueError("not a face arrow")
        n = self.n
        return self.G[arrow][n:, :n]

    def corner_form(self, arrow):
        """The symmetric matrix M of a face arrow."""
        n = self.n
        C = self.corner_block(arrow)
        M = np.linalg.solve(C.T, self.G[arrow][:n, :n].T).T
        return (M + M.T) / 2

    # -- validation ----------------------------------------------------------

    def validate(self):
        """Residual report; every entry is ~0 for a valid system."""
        n = self.n
        J = self.ctx.J
        rep = {
            "symplectic": 0.0,
            "a2_shape": 0.0,
            "a3_shape": 0.0,
            "two_cycles": 0.0,
            "three_cycles": 0.0,
        }
        for arrow, mat in self.G.items():
            rep["symplectic"] = max(
                rep["symplectic"], np.linalg.norm(mat.T @ J @ mat - J)
            )
        for arrow in a2_arrows(self.tri):
            mat = self.G[arrow]
            rep["a2_shape"] = max(
                rep["a2_shape"],
                np.linalg.norm(mat[:n, :n]),
                np.linalg.norm(mat[n:, n:]),
                np.linalg.norm(
                    self.edge_block(arrow_reverse(self.tri, arrow))
                    - self.edge_block(arrow).T
                ),
            )
            two = self.G[arrow_reverse(self.tri, arrow)] @ mat
            rep["two_cycles"] = max(
                rep["two_cycles"], np.linalg.norm(two + np.eye(2 * n))
            )
        for arrow in a3_arrows(self.tri):
            mat = self.G[arrow]
            C = self.corner_block(arrow)
            M = mat[:n, :n] @ np.linalg.inv(C)
            rep["a3_shape"] = max(
                rep["a3_shape"],
                np.linalg.norm(mat[n:, n:]),
                np.linalg.norm(M - M.T),
                np.linalg.norm(mat[:n, n:] + np.linalg.inv(C).T),
            )
        for f in range(self.tri.num_faces):
            prod = np.eye(2 * n)
            for arrow in face_cycle(self.tri, f):
                prod = self.G[arrow] @ prod
            rep["three_cycles"] = max(
                rep["three_cycles"], np.linalg.norm(prod + np.eye(2 * n))
            )
        rep["max"] = max(rep.values())
        return rep

    # -- invariants ----------------------------------------------------------

    def mu_T(self, f):
        """Common signature of the corner forms of face f."""
        sigs = [
            signature(self.corner_form(("A3", f, i)), self.ctx) for i in range(3)
        ]
        if len(set(sigs)) != 1:
            raise ValueError(f"corner form signatures disagree on face {f}: {sigs}")
        return sigs[0]

    def toledo(self):
        """Toledo number -1/2 sum of face signatures; closed case only."""
        if self.tri.boundary_sides:
            raise ValueError("Toledo number needs a triangulation without boundary")
        total = sum(self.mu_T(f) for f in range(self.tri.num_faces))
        return Fraction(-total, 2)

    def is_maximal(self):
        for arrow in a3_arrows(self.tri):
            ev = np.linalg.eigvalsh(self.corner_form(arrow))
            if ev[0] <= self.tol:
                return False
        return True

    # -- framing geometry ------------------------------------------------------

    def _top(self):
        return np.vstack([np.eye(self.n), np.zeros((self.n, self.n))])

    def _bottom(self):
        return np.vstack([np.zeros((self.n, self.n)), np.eye(self.n)])

    def framing_quadruple(self, side):
        """The four Lagrangians at a side slot, in its own coordinates:
        top framing, the opposite point of its face, bottom framing, and the
        opposite point of the glued face."""
        f, s = side
        ctx = self.ctx
        partner = self.tri.partner((f, s))
        if partner is None:
            raise ValueError("side has no glued partner")
        a_in = ("A3", f, (s + 1) % 3)
        own = self.G[a_in][:, : self.n]
        g, u = partner
        a2_in = ("A2", g, u)
        other = self.G[a2_in] @ self.G[("A3", g, (u + 1) % 3)][:, : self.n]
        return Quadruple(
            Lagrangian(self._top(), ctx),
            Lagrangian(own, ctx),
            Lagrangian(self._bottom(), ctx),
            Lagrangian(other, ctx),
        )

    def vertex_cross_ratio(self, side):
        ctx = self.ctx
        q = self.framing_quadruple(side)
        return cross_ratio(q, DecoratedLagrangian(self._top(), ctx), ctx)

    def corner_angle_invariant(self, arrow):
        """The corner block of a face arrow, defined only in the diagonal
        gauge: corner form Id and incident edge blocks diagonal."""
        if arrow[0] != "A3":
            raise ValueError("not a face arrow")
        n = self.n
        scale = 1e3 * self.tol
        if np.linalg.norm(self.corner_form(arrow) - np.eye(n)) > scale:
            raise ValueError("not in diagonal gauge: corner form is not the identity")
        _, f, s = arrow
        for side in ((f, s), (f, (s - 1) % 3)):
            if not self.tri.is_internal(side):
                continue
            B = self.edge_block(("A2",) + side)
            if np.linalg.norm(B - np.diag(np.diag(B))) > scale or np.any(
                np.diag(B) <= 0
            ):
                raise ValueError("not in diagonal gauge: edge block is not diagonal")
        return self.corner_block(arrow)

    # -- gauge action -----------------------------------------------------------

    def gauge(self, u_map):
        """Change framing bases by U_v per vertex; arrows transform by
        Psi(U_target)^-1 G Psi(U_source) with Psi block diagonal (U, U^-T)."""
        n = self.n

        def psi(U):
            out = np.zeros((2 * n, 2 * n))
            out[:n, :n] = U
            out[n:, n:] = np.linalg.inv(U).T
            return out

        def u_of(side):
            return np.asarray(u_map.get(side, np.eye(n)), dtype=float)

        newG = {}
        for arrow, mat in self.G.items():
            kind, f, s = arrow
            src = (f, s)
            tgt = (f, (s - 1) % 3) if kind == "A3" else self.tri.partner((f, s))
            newG[arrow] = np.linalg.solve(psi(u_of(tgt)), mat @ psi(u_of(src)))
        return FramedTwistedSystem(self.tri, n, newG, tol=self.tol)

    # -- holonomy -----------------------------------------------------------------

    def holonomy(self, path):
        """Product of arrow matrices along a composable path (list order)."""
        out = np.eye(2 * self.n)
        for arrow in path:
            out = self.G[arrow] @ out
        return out

    def boundary_holonomy(self, f, c):
        """Holonomy around the corner orbit of (f, c); fixes the bottom
        framing line of the base vertex."""
        return self.holonomy(corner_walk(self.tri, f, c))

    # -- serialization ---------------------------------------------------------------

    def to_json(self):
        return json.dumps(
            {
                "n": self.n,
                "quiver_ref": json.loads(self.tri.to_json()),
                "G": {arrow_str(a): m.tolist() for a, m in self.G.items()},
            },
            indent=2,
        )

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        tri = IdealTriangulation.from_json(json.dumps(data["quiver_ref"]))
        G = {parse_arrow(k): np.array(v, dtype=float) for k, v in data["G"].items()}
        return FramedTwistedSystem(tri, data["n"], G)


def corner_system(tri, corner_values, edge_blocks, corner_forms=None, tol=1e-9):
    """Assemble a system from per-arrow corner blocks C (and optional forms M)
    plus one B per internal edge, filling in reverse arrows by transpose."""
    sample = next(iter(corner_values.values()))
    n = np.asarray(sample).shape[0]
    G = {}
    for arrow in a3_arrows(tri):
        M = None if corner_forms is None else corner_forms.get(arrow)
        G[arrow] = a3_matrix(corner_values[arrow], M)
    for arrow in a2_arrows(tri):
        _, f, s = arrow
        edge = tri.edge_of((f, s))
        B = np.asarray(edge_blocks[edge], dtype=float)
        G[arrow] = a2_matrix(B if (f, s) == edge else B.T)
    return FramedTwistedSystem(tri, n, G, tol=tol)
