"""Coordinate charts for framed twisted symplectic local systems.

Five charts are implemented on a fixed ideal triangulation:

* ``XPlusDeltaCoords``: positive diagonal edge values plus orthogonal
  corner values, the chart of maximal systems.
* ``XSCoords`` / ``XSa0Coords``: edge values relaxed to symmetric positive
  matrices, corner values normalized to the identity along a spanning set
  of face arrows (and, for the a0 flavor, a diagonal root edge).
* ``XECoords``: one pair-of-forms datum per edge, a symmetric form per
  vertex and a GL(n) block per face arrow; parameterizes all transverse
  framed systems.
* ``XOverCoords``: the redundant chart with free symmetric vertex forms
  and GL(n) blocks on every arrow, used for connected-component counting.

Each chart knows how to build the framed system it represents (``hol_*``),
and transverse or maximal systems can be pulled back to coordinates
(``extract_*``) through standard bases at every vertex.  The module also
houses the fiber and gauge actions, retraction paths onto the identity and
scalar loci, the rank-two classification of stabilizers and subgroup
membership, connected-component counts with a brute-force cross-check, and
the dimension formula for the pieces of the transverse locus.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import DecoratedLagrangian, Lagrangian, maslov_form
from .invariants import standard_basis_positive
from .pairforms import (
    canonical_pair,
    classify_pair,
    cone_dimension,
    iota,
    make_endata,
    signature_of_C,
    transition_phi,
)
from .surface import (
    a2_arrows,
    a3_arrows,
    arrow_reverse,
    arrow_source,
    arrow_str,
    arrow_target,
    parse_arrow,
    spanning_data,
)
from .systems import corner_system

__all__ = [
    "XPlusDeltaCoords",
    "XSCoords",
    "XSa0Coords",
    "XECoords",
    "XOverCoords",
    "ZClass",
    "hol_xplus",
    "extract_xplus",
    "fiber_act",
    "normalize_to_tree",
    "tree_gauge_map",
    "orbit_equal_xsa0",
    "retraction_path",
    "sp4_classify",
    "hol_xE",
    "extract_xE",
    "random_xe",
    "xover_of_xe",
    "hol_over",
    "gauge_over",
    "pi_components",
    "validate_zclass",
    "zclass_act",
    "canonical_zclass",
    "enumerate_zclasses",
    "brute_force_components",
    "count_components",
    "piece_dimension",
    "piece_has_interior",
]


# -- small matrix helpers -----------------------------------------------------


def sym_sqrt(S, tol=1e-9):
    """Symmetric positive square root through orthogonal diagonalization.

    Raises for matrices that are not positive definite within tol instead of
    clamping small eigenvalues.
    """
    S = np.asarray(S, dtype=float)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    if w[0] <= tol * max(1.0, abs(w[-1])):
        raise ValueError("matrix is not positive definite within tolerance")
    return (V * np.sqrt(w)[None, :]) @ V.T


def sym_log(S, tol=1e-9):
    S = np.asarray(S, dtype=float)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    if w[0] <= tol * max(1.0, abs(w[-1])):
        raise ValueError("matrix is not positive definite within tolerance")
    return (V * np.log(w)[None, :]) @ V.T


def sym_exp(L):
    L = np.asarray(L, dtype=float)
    w, V = np.linalg.eigh(0.5 * (L + L.T))
    return (V * np.exp(w)[None, :]) @ V.T


def inertia_matrix(p, q):
    return np.diag([1.0] * p + [-1.0] * q)


def signed_factor(S, tol=1e-9):
    """Factor a nonsingular symmetric S as F.T @ I_{p,q} @ F.

    Returns (F, p, q) with the positive part listed first.
    """
    S = np.asarray(S, dtype=float)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    order = np.argsort(-w)
    w, V = w[order], V[:, order]
    if np.min(np.abs(w)) <= tol * max(1.0, np.max(np.abs(w))):
        raise ValueError("symmetric form is singular")
    p = int(np.sum(w > 0))
    F = np.diag(np.sqrt(np.abs(w))) @ V.T
    return F, p, S.shape[0] - p


def _congruence_transporter(A, B, rng, tol=1e-9):
    """A random Y with Y.T @ A @ Y = B for symmetric nonsingular A, B of
    equal signature."""
    G, pa, _ = signed_factor(A, tol)
    H, pb, _ = signed_factor(B, tol)
    if pa != pb:
        raise ValueError("forms have different signatures")
    n = A.shape[0]
    W = rng.standard_normal((n, n))
    W = 0.5 * (W - W.T)
    O = expm(inertia_matrix(pa, n - pa) @ W)
    signs = np.diag(rng.choice([-1.0, 1.0], size=n))
    return np.linalg.solve(G, signs @ O @ H)


def _edge_key(edge):
    return f"{edge[0]}.{edge[1]}"


def _parse_edge(key):
    f, s = key.split(".")
    return (int(f), int(s))


def _check_face_product(corners, f, tol):
    z0 = corners[("A3", f, 0)]
    z1 = corners[("A3", f, 1)]
    z2 = corners[("A3", f, 2)]
    return np.linalg.norm(z1 @ z2 @ z0 - np.eye(z0.shape[0])) <= tol


def _require(cond, message):
    if not cond:
        raise ValueError(message)


# -- charts -------------------------------------------------------------------


@dataclass
class XPlusDeltaCoords:
    """Positive chart: a nondecreasing positive diagonal per internal edge and
    an orthogonal matrix per face arrow with face products equal to Id."""

    n: int
    edges: dict
    corners: dict

    def edge_matrix(self, edge):
        return np.diag(np.asarray(self.edges[edge], dtype=float))

    def validate(self, tri, tol=1e-9):
        scale = 1e3 * tol
        _require(
            set(self.edges) == set(tri.internal_edges),
            "edge values must be indexed by the internal edges",
        )
        _require(
            set(self.corners) == set(a3_arrows(tri)),
            "corner values must be indexed by the face arrows",
        )
        for e, vals in self.edges.items():
            vals = np.asarray(vals, dtype=float)
            _require(vals.shape == (self.n,), f"edge {e} has the wrong size")
            _require(np.all(vals > 0), f"edge {e} is not positive")
            _require(np.all(np.diff(vals) >= -scale), f"edge {e} is not sorted")
        eye = np.eye(self.n)
        for a, z in self.corners.items():
            z = np.asarray(z, dtype=float)
            _require(
                np.linalg.norm(z.T @ z - eye) <= scale,
                f"corner {arrow_str(a)} is not orthogonal",
            )
        for f in range(tri.num_faces):
            _require(
                _check_face_product(self.corners, f, scale),
                f"face {f} corner product is not the identity",
            )

    def to_json(self):
        return json.dumps(
            {
                "chart": "xplus_delta",
                "n": self.n,
                "edges": {_edge_key(e): np.asarray(v).tolist() for e, v in self.edges.items()},
                "corners": {arrow_str(a): np.asarray(z).tolist() for a, z in self.corners.items()},
            },
            indent=2,
        )

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        if data.get("chart") != "xplus_delta":
            raise ValueError("not an xplus_delta chart")
        return XPlusDeltaCoords(
            n=int(data["n"]),
            edges={_parse_edge(k): np.array(v, dtype=float) for k, v in data["edges"].items()},
            corners={parse_arrow(k): np.array(v, dtype=float) for k, v in data["corners"].items()},
        )


@dataclass
class XSCoords:
    """Spanning-set chart: symmetric positive edge values, orthogonal corners
    equal to Id along the spanning arrows."""

    n: int
    edges: dict
    corners: dict

    chart_name = "xS"

    def edge_matrix(self, edge):
        return np.asarray(self.edges[edge], dtype=float)

    @staticmethod
    def from_free(tri, edges, free_corners, n=None):
        """Fill in tree corners with Id and solve the third corner of every
        face from the two known ones."""
        S, R = spanning_data(tri)
        if n is None:
            n = len(next(iter(edges.values())))
        corners = {a: np.eye(n) for a in S}
        for a in R:
            corners[a] = np.asarray(free_corners[a], dtype=float)
        for f in range(tri.num_faces):
            known = [i for i in range(3) if ("A3", f, i) in corners]
            if len(known) != 2:
                raise ValueError(f"face {f} does not have exactly one free corner")
            (k,) = set(range(3)) - set(known)
            z = {i: corners[("A3", f, i)] for i in known}
            # z1 z2 z0 = Id
            if k == 0:
                corners[("A3", f, 0)] = np.linalg.inv(z[1] @ z[2])
            elif k == 1:
                corners[("A3", f, 1)] = np.linalg.inv(z[2] @ z[0])
            else:
                corners[("A3", f, 2)] = np.linalg.inv(z[0] @ z[1])
        return XSCoords(n=n, edges=dict(edges), corners=corners)

    def _validate_edges(self, tri, tol):
        scale = 1e3 * tol
        _require(
            set(self.edges) == set(tri.internal_edges),
            "edge values must be indexed by the internal edges",
        )
        for e, x in self.edges.items():
            x = np.asarray(x, dtype=float)
            _require(x.shape == (self.n, self.n), f"edge {e} has the wrong shape")
            _require(np.linalg.norm(x - x.T) <= scale, f"edge {e} is not symmetric")
            w = np.linalg.eigvalsh(0.5 * (x + x.T))
            _require(w[0] > tol * max(1.0, abs(w[-1])), f"edge {e} is not positive definite")

    def validate(self, tri, tol=1e-9):
        scale = 1e3 * tol
        self._validate_edges(tri, tol)
        eye = np.eye(self.n)
        S, _ = spanning_data(tri)
        for a, z in self.corners.items():
            z = np.asarray(z, dtype=float)
            _require(
                np.linalg.norm(z.T @ z - eye) <= scale,
                f"corner {arrow_str(a)} is not orthogonal",
            )
        for a in S:
            _require(
                np.linalg.norm(self.corners[a] - eye) <= scale,
                f"spanning corner {arrow_str(a)} is not the identity",
            )
        for f in range(tri.num_faces):
            _require(
                _check_face_product(self.corners, f, scale),
                f"face {f} corner product is not the identity",
            )

    def to_json(self):
        payload = {
            "chart": self.chart_name,
            "n": self.n,
            "edges": {_edge_key(e): np.asarray(v).tolist() for e, v in self.edges.items()},
            "corners": {arrow_str(a): np.asarray(z).tolist() for a, z in self.corners.items()},
        }
        if isinstance(self, XSa0Coords):
            payload["a0"] = _edge_key(self.a0)
        return json.dumps(payload, indent=2)

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        edges = {_parse_edge(k): np.array(v, dtype=float) for k, v in data["edges"].items()}
        corners = {parse_arrow(k): np.array(v, dtype=float) for k, v in data["corners"].items()}
        if data.get("chart") == "xS":
            return XSCoords(n=int(data["n"]), edges=edges, corners=corners)
        if data.get("chart") == "xSa0":
            return XSa0Coords(
                n=int(data["n"]), edges=edges, corners=corners, a0=_parse_edge(data["a0"])
            )
        raise ValueError("not an xS chart")


@dataclass
class XSa0Coords(XSCoords):
    """XSCoords with the root edge value diagonalized and sorted."""

    a0: tuple = None

    chart_name = "xSa0"

    def validate(self, tri, tol=1e-9):
        super().validate(tri, tol)
        scale = 1e3 * tol
        _require(self.a0 in self.edges, "root edge is not an internal edge")
        x0 = np.asarray(self.edges[self.a0], dtype=float)
        _require(
            np.linalg.norm(x0 - np.diag(np.diag(x0))) <= scale,
            "root edge value is not diagonal",
        )
        _require(np.all(np.diff(np.diag(x0)) >= -scale), "root edge value is not sorted")


def _en_to_payload(en):
    real = []
    for eps, sizes, lams in (
        (1, en.dn.n11, en.lam11),
        (1, en.dn.n1m, en.lam1m),
        (-1, en.dn.nm1, en.lamm1),
        (-1, en.dn.nmm, en.lammm),
    ):
        real += [[eps, float(l), int(s)] for s, l in zip(sizes, lams)]
    cx = [[float(l.real), float(l.imag), int(s2 // 2)] for s2, l in zip(en.dn.m2, en.lamC)]
    return {"real": real, "complex": cx}


def _en_from_payload(payload):
    return make_endata(
        [(int(e), float(l), int(s)) for e, l, s in payload["real"]],
        [(complex(re, im), int(h)) for re, im, h in payload["complex"]],
    )


@dataclass
class XECoords:
    """Pair-form chart for transverse framed systems.

    ``en`` stores the edge datum seen from the canonical side of each internal
    edge; the glued side carries the iota-image.  ``y`` holds one GL(n) block
    per face arrow, and ``mu`` the target triangle signature per face.
    """

    n: int
    en: dict
    y: dict
    mu: dict

    def en_at(self, tri, side):
        """Edge datum seen from a side slot (iota-twisted off the canonical
        side)."""
        edge = tri.edge_of(side)
        datum = self.en[edge]
        return datum if side == edge else iota(datum)

    def s_at(self, tri, side):
        """The symmetric vertex form: canonical first form on internal sides,
        a signature matrix on boundary sides."""
        if tri.is_internal(side):
            return canonical_pair(self.en_at(tri, side))[0]
        s = self.mu[side[0]]
        p = (self.n + s) // 2
        return inertia_matrix(p, self.n - p)

    def validate(self, tri, tol=1e-9):
        scale = 1e3 * tol
        _require(
            set(self.en) == set(tri.internal_edges),
            "edge data must be indexed by the internal edges",
        )
        _require(set(self.mu) == set(range(tri.num_faces)), "every face needs a signature")
        _require(set(self.y) == set(a3_arrows(tri)), "face blocks must cover all face arrows")
        for f, s in self.mu.items():
            _require(abs(s) <= self.n and (s - self.n) % 2 == 0, f"face {f} signature invalid")
        for e, datum in self.en.items():
            _require(datum.total_size == self.n, f"edge {e} datum has the wrong size")
        self._check_signatures(tri)
        for f in range(tri.num_faces):
            Y = [np.asarray(self.y[("A3", f, i)], dtype=float) for i in range(3)]
            for j in range(3):
                S = self.s_at(tri, (f, j))
                lhs = Y[(j + 1) % 3] @ np.linalg.solve(Y[(j + 2) % 3].T, Y[j])
                _require(
                    np.linalg.norm(lhs - S) <= scale * max(1.0, np.linalg.norm(S)),
                    f"face {f} block relation fails at corner {j}",
                )

    def _check_signatures(self, tri):
        for e, datum in self.en.items():
            v_face, w_face = e[0], tri.partner(e)[0]
            _require(
                signature_of_C(datum) == self.mu[v_face],
                f"edge {e} datum signature disagrees with its face",
            )
            _require(
                signature_of_C(iota(datum)) == self.mu[w_face],
                f"edge {e} datum signature disagrees with the glued face",
            )

    def to_json(self):
        return json.dumps(
            {
                "chart": "xE",
                "n": self.n,
                "en": {_edge_key(e): _en_to_payload(d) for e, d in self.en.items()},
                "y": {arrow_str(a): np.asarray(m).tolist() for a, m in self.y.items()},
                "mu": {str(f): int(s) for f, s in self.mu.items()},
            },
            indent=2,
        )

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        if data.get("chart") != "xE":
            raise ValueError("not an xE chart")
        return XECoords(
            n=int(data["n"]),
            en={_parse_edge(k): _en_from_payload(v) for k, v in data["en"].items()},
            y={parse_arrow(k): np.array(v, dtype=float) for k, v in data["y"].items()},
            mu={int(f): int(s) for f, s in data["mu"].items()},
        )


@dataclass
class XOverCoords:
    """Redundant chart: a nonsingular symmetric form per vertex and a GL(n)
    block per arrow, transposed across edges, with the face block relation."""

    n: int
    s: dict
    y: dict

    def validate(self, tri, tol=1e-9):
        scale = 1e3 * tol
        _require(set(self.s) == set(tri.sides), "vertex forms must cover all side slots")
        arrows = set(a3_arrows(tri)) | set(a2_arrows(tri))
        _require(set(self.y) == arrows, "blocks must cover all arrows")
        for v, S in self.s.items():
            S = np.asarray(S, dtype=float)
            _require(np.linalg.norm(S - S.T) <= scale, f"vertex form at {v} is not symmetric")
            w = np.linalg.eigvalsh(0.5 * (S + S.T))
            _require(
                np.min(np.abs(w)) > tol * max(1.0, np.max(np.abs(w))),
                f"vertex form at {v} is singular",
            )
        for a in a2_arrows(tri):
            Y, Yr = self.y[a], self.y[arrow_reverse(tri, a)]
            _require(
                np.linalg.norm(np.asarray(Yr) - np.asarray(Y).T) <= scale,
                f"edge blocks across {arrow_str(a)} are not transposed",
            )
        for f in range(tri.num_faces):
            Y = [np.asarray(self.y[("A3", f, i)], dtype=float) for i in range(3)]
            for j in range(3):
                S = np.asarray(self.s[(f, j)], dtype=float)
                lhs = Y[(j + 1) % 3] @ np.linalg.solve(Y[(j + 2) % 3].T, Y[j])
                _require(
                    np.linalg.norm(lhs - S) <= scale * max(1.0, np.linalg.norm(S)),
                    f"face {f} block relation fails at corner {j}",
                )

    def to_json(self):
        return json.dumps(
            {
                "chart": "xover",
                "n": self.n,
                "s": {_edge_key(v): np.asarray(m).tolist() for v, m in self.s.items()},
                "y": {arrow_str(a): np.asarray(m).tolist() for a, m in self.y.items()},
            },
            indent=2,
        )

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        if data.get("chart") != "xover":
            raise ValueError("not an xover chart")
        return XOverCoords(
            n=int(data["n"]),
            s={_parse_edge(k): np.array(v, dtype=float) for k, v in data["s"].items()},
            y={parse_arrow(k): np.array(v, dtype=float) for k, v in data["y"].items()},
        )


# -- holonomy builders --------------------------------------------------------


def hol_xplus(tri, x, tol=1e-9):
    """Framed system of positive coordinates: edge arrows get the square root
    of the edge value off the diagonal, face arrows the corner value in all
    three nonzero blocks.  The output is maximal."""
    x.validate(tri, tol)
    edge_blocks = {e: sym_sqrt(x.edge_matrix(e), tol) for e in tri.internal_edges}
    corner_values = {a: np.asarray(x.corners[a], dtype=float) for a in a3_arrows(tri)}
    return corner_system(tri, corner_values, edge_blocks, tol=tol)


def hol_xE(tri, xe, tol=1e-9):
    """Framed system of pair-form coordinates.  Edge arrows carry the back
    transformation of the edge datum, face arrows the blocks [[S^-1 Y, -Y^-T],
    [Y, 0]].  The output is transverse with triangle signatures mu."""
    xe.validate(tri, tol)
    # block of the arrow leaving the canonical side = Phi of the glued datum
    edge_blocks = {e: transition_phi(xe.en[e]).T for e in tri.internal_edges}
    corner_values = {a: np.asarray(xe.y[a], dtype=float) for a in a3_arrows(tri)}
    corner_forms = {}
    for a in a3_arrows(tri):
        _, f, i = a
        corner_forms[a] = np.linalg.inv(xe.s_at(tri, (f, (i - 1) % 3)))
    return corner_system(tri, corner_values, edge_blocks, corner_forms, tol=tol)


def hol_over(tri, z, tol=1e-9):
    """Framed system of the redundant chart; same block shapes as hol_xE with
    free edge blocks."""
    z.validate(tri, tol)
    edge_blocks = {e: np.asarray(z.y[("A2",) + e], dtype=float) for e in tri.internal_edges}
    corner_values = {a: np.asarray(z.y[a], dtype=float) for a in a3_arrows(tri)}
    corner_forms = {}
    for a in a3_arrows(tri):
        _, f, i = a
        corner_forms[a] = np.linalg.inv(np.asarray(z.s[(f, (i - 1) % 3)], dtype=float))
    return corner_system(tri, corner_values, edge_blocks, corner_forms, tol=tol)


# -- fiber action and tree normalization ---------------------------------------


def fiber_act(tri, x, r):
    """Act on positive coordinates by a vertex family of orthogonal matrices.

    The family must be constant across every edge and commute with its edge
    value; edge values are unchanged and corners transform by
    z(c) -> r(target) z(c) r(source)^-1.
    """
    n = x.n
    eye = np.eye(n)

    def r_of(side):
        return np.asarray(r.get(side, eye), dtype=float)

    scale = 1e3 * 1e-9
    for e in tri.internal_edges:
        rv, rw = r_of(e), r_of(tri.partner(e))
        _require(np.linalg.norm(rv - rw) <= scale, f"family is not constant across edge {e}")
        _require(np.linalg.norm(rv.T @ rv - eye) <= scale, f"family at {e} is not orthogonal")
        X = x.edge_matrix(e)
        _require(
            np.linalg.norm(rv @ X - X @ rv) <= scale * max(1.0, np.linalg.norm(X)),
            f"family does not commute with the value at edge {e}",
        )
    corners = {}
    for a in a3_arrows(tri):
        _, f, i = a
        corners[a] = r_of((f, (i - 1) % 3)) @ x.corners[a] @ r_of((f, i)).T
    return XPlusDeltaCoords(n=n, edges={e: np.array(v) for e, v in x.edges.items()}, corners=corners)


def _tree_orthogonals(tri, x, sd):
    """One orthogonal matrix per edge of the triangulation making the
    spanning corner values the identity; the root matrix sorts the root
    value."""
    S, _ = spanning_data(tri) if sd is None else sd
    if not tri.internal_edges:
        raise ValueError("triangulation has no internal edges")
    root = tri.internal_edges[0]
    x0 = x.edge_matrix(root)
    _, V = np.linalg.eigh(0.5 * (x0 + x0.T))
    u = {root: V.T}  # sorts the root value nondecreasing
    pending = list(S)
    while pending:
        progressed = False
        for a in list(pending):
            ev = tri.edge_of(arrow_target(tri, a))
            ew = tri.edge_of(arrow_source(tri, a))
            z = np.asarray(x.corners[a], dtype=float)
            if ew in u and ev not in u:
                u[ev] = u[ew] @ np.linalg.inv(z)  # makes that corner value Id
            elif ev in u and ew not in u:
                u[ew] = u[ev] @ z
            elif ev not in u and ew not in u:
                continue
            pending.remove(a)
            progressed = True
        if not progressed:
            raise ValueError("spanning arrows do not connect the edge graph")
    return root, u


def normalize_to_tree(tri, x, sd=None, tol=1e-9):
    """Equivalent coordinates with corner value Id along the spanning arrows
    and a sorted diagonal value on the root edge.

    Walks the spanning tree assigning one orthogonal matrix per edge of the
    triangulation, starting from the orthogonal sorter of the root value.
    The result is unique up to a global orthogonal commuting with the root
    value; the holonomy is gauge equivalent to the input's.
    """
    root, u = _tree_orthogonals(tri, x, sd)

    def u_of(side):
        return u[tri.edge_of(side)]

    new_edges = {}
    for e in tri.internal_edges:
        new_edges[e] = u[e] @ x.edge_matrix(e) @ u[e].T
    new_corners = {}
    for a in a3_arrows(tri):
        _, f, i = a
        new_corners[a] = u_of((f, (i - 1) % 3)) @ np.asarray(x.corners[a]) @ u_of((f, i)).T
    out = XSa0Coords(n=x.n, edges=new_edges, corners=new_corners, a0=root)
    out.validate(tri, tol)
    return out


def tree_gauge_map(tri, x, sd=None):
    """The per-side gauge matrices U with gauge(hol(x), U) == hol(normalize(x)).

    Returns a dict side -> U suitable for FramedTwistedSystem.gauge.
    """
    _, u = _tree_orthogonals(tri, x, sd)
    return {side: u[tri.edge_of(side)].T for side in tri.sides}


def orbit_equal_xsa0(tri, x1, x2, tol=1e-7):
    """Decide equality of two tree-normalized coordinate sets up to the
    residual action, implemented only for a simple root spectrum.

    With a simple root spectrum the residual commutant is the finite group of
    diagonal sign matrices, tried exhaustively.  Returns True or False when
    decidable, None when the root spectrum is degenerate.
    """
    if x1.a0 != x2.a0 or x1.n != x2.n:
        return False
    n = x1.n
    d = np.diag(np.asarray(x1.edges[x1.a0], dtype=float))
    if np.min(np.abs(np.diff(d))) <= tol * max(1.0, np.max(np.abs(d))):
        return None
    for bits in range(2**n):
        signs = np.diag([1.0 if bits & (1 << k) == 0 else -1.0 for k in range(n)])
        ok = all(
            np.allclose(
                signs @ x1.edge_matrix(e) @ signs, x2.edge_matrix(e), atol=tol, rtol=0
            )
            for e in tri.internal_edges
        ) and all(
            np.allclose(signs @ x1.corners[a] @ signs, np.asarray(x2.corners[a]), atol=tol, rtol=0)
            for a in a3_arrows(tri)
        )
        if ok:
            return True
    return False


# -- retraction paths ----------------------------------------------------------


def retraction_path(tri, z, t, target="identity_locus", tol=1e-9):
    """Point at time t of the retraction of the edge values onto the identity
    locus or the scalar locus; t = 1 is the input, t = 0 lies in the target.

    Corners are untouched, so the path stays inside the chart.  The map is
    equivariant for simultaneous orthogonal conjugation of all values.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("time parameter must lie in [0, 1]")
    if target not in ("identity_locus", "scalar_locus"):
        raise ValueError("unknown retraction target")
    n = z.n
    new_edges = {}
    for e in tri.internal_edges:
        L = sym_log(z.edge_matrix(e), tol)
        if target == "identity_locus":
            new_edges[e] = sym_exp(t * L)
        else:
            tr = np.trace(L) / n
            new_edges[e] = sym_exp(tr * np.eye(n) + t * (L - tr * np.eye(n)))
    return XSCoords(n=n, edges=new_edges, corners={a: np.array(m) for a, m in z.corners.items()})


# -- rank-two classification ----------------------------------------------------


def _angle_class(w):
    """Direction of a nonzero complex number modulo pi, as a unit complex."""
    return w * w / (abs(w) * abs(w))


def sp4_classify(tri, z, tol=1e-7):
    """Chart, stabilizer and subgroup membership of a rank-two spanning-set
    coordinate point.

    The chart writes each edge value as exp(t Id + [[a, b], [b, -a]]) and
    reports w = a + i b per edge together with the free corner values.  The
    stabilizer is one of O2, SO2, the four-element group G_theta of a
    reflection axis, or the center; membership mirrors the same four cases as
    SL2, SL2xSO2, SL2xSL2 or generic.
    """
    if z.n != 2:
        raise ValueError("rank-two classification needs n = 2")
    z.validate(tri, tol=max(tol, 1e-9))
    chart_t, chart_z = {}, {}
    for e in tri.internal_edges:
        L = sym_log(z.edge_matrix(e))
        chart_t[e] = float(np.trace(L) / 2)
        T = L - chart_t[e] * np.eye(2)
        chart_z[e] = complex(T[0, 0], T[0, 1])
    _, R = spanning_data(tri)
    chart_r = {a: np.asarray(z.corners[a], dtype=float) for a in R}

    def is_pm_id(r):
        return min(np.linalg.norm(r - np.eye(2)), np.linalg.norm(r + np.eye(2))) <= tol

    rotations, reflections = [], []
    for a, r in chart_r.items():
        (rotations if np.linalg.det(r) > 0 else reflections).append(r)
    zs = [w for w in chart_z.values() if abs(w) > tol]

    stabilizer, membership, theta = "pm_Id", "generic", None
    if not zs and not reflections and all(is_pm_id(r) for r in rotations):
        stabilizer, membership = "O2", "SL2"
    elif not zs and not reflections:
        stabilizer, membership = "SO2", "SL2xSO2"
    else:
        # a common reflection axis must align every z direction and every
        # reflection angle; rotations other than +-Id rule it out
        dirs = [_angle_class(w) for w in zs]
        dirs += [
            _angle_class(complex(r[0, 0], r[0, 1])) for r in reflections
        ]
        aligned = all(abs(d - dirs[0]) <= 4 * tol for d in dirs)
        if aligned and all(is_pm_id(r) for r in rotations):
            stabilizer, membership = "G_theta", "SL2xSL2"
            theta = cmath.phase(dirs[0]) / 2 % math.pi
    return {
        "chart": {"t": chart_t, "z": chart_z, "r": chart_r},
        "stabilizer": stabilizer,
        "membership": membership,
        "theta": theta,
    }


# -- extraction through standard bases ------------------------------------------


def _transformed_block(sys, bases, arrow):
    """Lower-left block of an arrow matrix after the per-side base changes."""
    src = arrow_source(sys.tri, arrow)
    tgt = arrow_target(sys.tri, arrow)
    g = np.linalg.solve(bases[tgt], sys.G[arrow] @ bases[src])
    return g[sys.n :, : sys.n]


def _adjust_basis(basis, h):
    n = basis.shape[0] // 2
    return np.hstack([basis[:, :n] @ h, basis[:, n:] @ np.linalg.inv(h).T])


def extract_xplus(sys, return_gauge=False):
    """Positive coordinates of a maximal framed system.

    Standard bases of the vertex quadruples give the edge values as the
    sorted inverse cross-ratio spectra; corner values are the face arrow
    blocks in those bases, pinned down along each edge by a finite
    orthogonal correction.  With return_gauge the per-side gauge matrices
    carrying the input onto the rebuilt system come along.
    """
    if not sys.is_maximal():
        raise ValueError("system is not maximal")
    tri, n, ctx = sys.tri, sys.n, sys.ctx
    bases, lam = {}, {}
    for side in tri.sides:
        if tri.is_internal(side):
            cert = standard_basis_positive(sys.framing_quadruple(side), ctx)
            bases[side] = cert.basis
            lam[side] = cert.Lambda
        else:
            top = DecoratedLagrangian(sys._top(), ctx)
            a_in = ("A3", side[0], (side[1] + 1) % 3)
            own = Lagrangian(sys.G[a_in][:, :n], ctx)
            b0 = maslov_form(top, own, Lagrangian(sys._bottom(), ctx), ctx)
            L = np.linalg.cholesky(b0)
            P = np.linalg.inv(L).T
            bases[side] = np.hstack([sys._top() @ P, sys._bottom() @ np.linalg.inv(P).T])
    edges = {}
    for e in tri.internal_edges:
        w = tri.partner(e)
        B = _transformed_block(sys, bases, ("A2",) + w)  # arrow into the canonical side
        phi = np.diag(np.sqrt(lam[e]))
        h = np.linalg.solve(B.T, phi)
        if np.linalg.norm(h.T @ h - np.eye(n)) > 1e5 * ctx.tol:
            raise ArithmeticError("edge correction left the stabilizer")
        bases[e] = _adjust_basis(bases[e], h)
        edges[e] = lam[e].copy()
    corners = {a: _transformed_block(sys, bases, a) for a in a3_arrows(tri)}
    out = XPlusDeltaCoords(n=n, edges=edges, corners=corners)
    if return_gauge:
        return out, {side: bases[side][:n, :n] for side in tri.sides}
    return out


def extract_xE(sys, cluster_tol=1e-6, return_gauge=False):
    """Pair-form coordinates of a transverse framed system.

    Classifies the two Maslov forms of the vertex quadruple at every internal
    side, builds the standard basis from the congruence certificate, and
    reads the face blocks off the transformed arrows.  Raises when some
    vertex quadruple or boundary triple fails to be transverse.
    """
    tri, n, ctx = sys.tri, sys.n, sys.ctx
    bases, data = {}, {}
    for side in tri.sides:
        top = DecoratedLagrangian(sys._top(), ctx)
        if tri.is_internal(side):
            q = sys.framing_quadruple(side)
            try:
                b0 = maslov_form(top, q.M1, q.L2, ctx)
                b1 = -maslov_form(top, q.M2, q.L2, ctx)
                en, P = classify_pair(b0, b1, tol=ctx.tol, cluster_tol=cluster_tol)
            except ValueError as err:
                raise ValueError(f"system is not transverse at side {side}: {err}") from err
            data[side] = en
        else:
            a_in = ("A3", side[0], (side[1] + 1) % 3)
            own = Lagrangian(sys.G[a_in][:, :n], ctx)
            try:
                b0 = maslov_form(top, own, Lagrangian(sys._bottom(), ctx), ctx)
                F, p, qneg = signed_factor(b0, ctx.tol)
            except ValueError as err:
                raise ValueError(f"system is not transverse at side {side}: {err}") from err
            P = np.linalg.inv(F)
        bases[side] = np.hstack([sys._top() @ P, sys._bottom() @ np.linalg.inv(P).T])
    en_map = {}
    for e in tri.internal_edges:
        w = tri.partner(e)
        if data[w].dn != iota(data[e]).dn:
            raise ArithmeticError(
                f"edge {e} data and its glued image disagree; try a looser clustering"
            )
        B = _transformed_block(sys, bases, ("A2",) + w)
        phi = transition_phi(data[e])
        h = np.linalg.solve(B.T, phi.T)
        C, D = canonical_pair(data[e])
        ok = np.linalg.norm(h.T @ C @ h - C) <= 1e5 * ctx.tol * max(1.0, np.linalg.norm(C))
        ok = ok and np.linalg.norm(h.T @ D @ h - D) <= 1e5 * ctx.tol * max(
            1.0, np.linalg.norm(D)
        )
        if not ok:
            raise ArithmeticError("edge correction left the stabilizer")
        bases[e] = _adjust_basis(bases[e], h)
        en_map[e] = data[e]
    y = {a: _transformed_block(sys, bases, a) for a in a3_arrows(tri)}
    mu = {f: sys.mu_T(f) for f in range(tri.num_faces)}
    out = XECoords(n=n, en=en_map, y=y, mu=mu)
    if return_gauge:
        return out, {side: bases[side][:n, :n] for side in tri.sides}
    return out


# -- random pair-form coordinates ----------------------------------------------


def _random_edge_datum(s_here, s_there, n, rng):
    """Edge datum with prescribed signatures on the two sides: one-dimensional
    real blocks plus complex blocks filling the remainder, eigenvalues drawn
    away from zero."""
    a = (s_here + s_there) // 2
    b = (s_here - s_there) // 2

    def mag():
        return float(rng.uniform(0.5, 2.0))

    real = []
    real += [(1, mag(), 1) for _ in range(max(0, a))]
    real += [(-1, mag(), 1) for _ in range(max(0, -a))]
    real += [(1, -mag(), 1) for _ in range(max(0, b))]
    real += [(-1, -mag(), 1) for _ in range(max(0, -b))]
    rem = n - abs(a) - abs(b)
    cx = []
    if rem > 0:
        half = rem // 2
        if rng.random() < 0.5:
            cx = [(complex(mag(), mag()), 1) for _ in range(half)]
        else:
            cx = [(complex(mag(), mag()), half)]
    return make_endata(real, cx)


def random_xe(tri, n, rng, maximal=False):
    """Random pair-form coordinates: face signatures drawn uniformly (or all
    equal to n), matching edge data, and face blocks built from random
    indefinite-orthogonal congruence transporters."""
    faces = range(tri.num_faces)
    if maximal:
        mu = {f: n for f in faces}
    else:
        mu = {f: int(rng.choice(range(-n, n + 1, 2))) for f in faces}
    en = {}
    for e in tri.internal_edges:
        w = tri.partner(e)
        en[e] = _random_edge_datum(mu[e[0]], mu[w[0]], n, rng)
    xe = XECoords(n=n, en=en, y={}, mu=mu)
    y = {}
    for f in faces:
        S = [xe.s_at(tri, (f, j)) for j in range(3)]
        Y0 = _congruence_transporter(np.linalg.inv(S[2]), S[0], rng)
        Y1 = _congruence_transporter(np.linalg.inv(S[0]), S[1], rng)
        Y2 = Y1.T @ np.linalg.solve(Y0, S[2])
        y[("A3", f, 0)], y[("A3", f, 1)], y[("A3", f, 2)] = Y0, Y1, Y2
    xe.y = y
    return xe


# -- redundant chart, gauge action, components ----------------------------------


def xover_of_xe(tri, xe):
    """Forget the canonical edge blocks: vertex forms and all arrow blocks of
    the pair-form coordinates as a redundant chart point."""
    s = {side: xe.s_at(tri, side) for side in tri.sides}
    y = {a: np.asarray(m, dtype=float) for a, m in xe.y.items()}
    for a in a2_arrows(tri):
        tgt = arrow_target(tri, a)
        y[a] = transition_phi(xe.en_at(tri, tgt))
    return XOverCoords(n=xe.n, s=s, y=y)


def gauge_over(tri, z, g):
    """Act by one invertible matrix per vertex: S -> g S g^T on forms and
    Y -> g(target) Y g(source)^T on blocks."""
    eye = np.eye(z.n)

    def g_of(side):
        return np.asarray(g.get(side, eye), dtype=float)

    s = {v: g_of(v) @ np.asarray(S, dtype=float) @ g_of(v).T for v, S in z.s.items()}
    y = {}
    for a, Y in z.y.items():
        y[a] = g_of(arrow_target(tri, a)) @ np.asarray(Y, dtype=float) @ g_of(arrow_source(tri, a)).T
    return XOverCoords(n=z.n, s=s, y=y)


@dataclass(frozen=True)
class ZClass:
    """Discrete invariant of a redundant chart point: a signature per vertex
    and a sign (residue mod x_g) per arrow."""

    n: int
    x_g: int
    s: tuple  # ((side, signature), ...) sorted
    h: tuple  # ((arrow, residue), ...) sorted

    def s_dict(self):
        return dict(self.s)

    def h_dict(self):
        return dict(self.h)


def _make_zclass(n, x_g, s_map, h_map):
    return ZClass(
        n=n,
        x_g=x_g,
        s=tuple(sorted(s_map.items())),
        h=tuple(sorted((arrow_str(a), v % x_g) for a, v in h_map.items())),
    )


def validate_zclass(tri, z):
    """The three defining conditions: face-constant signatures with the right
    parity, opposite residues across edges, and face sums equal to the defect
    (n - s)/2 mod x_g."""
    s, h = z.s_dict(), z.h_dict()
    for side, val in s.items():
        _require(abs(val) <= z.n and (val - z.n) % 2 == 0, f"signature at {side} invalid")
    for a in a3_arrows(tri):
        _require(
            s[arrow_source(tri, a)] == s[arrow_target(tri, a)],
            "signatures are not face-constant",
        )
    for a in a2_arrows(tri):
        _require(
            (h[arrow_str(a)] + h[arrow_str(arrow_reverse(tri, a))]) % z.x_g == 0,
            f"edge residues across {arrow_str(a)} do not cancel",
        )
    for f in range(tri.num_faces):
        total = sum(h[arrow_str(("A3", f, i))] for i in range(3)) % z.x_g
        defect = ((z.n - s[(f, 0)]) // 2) % z.x_g
        _require(total == defect, f"face {f} residue sum misses the defect")


def pi_components(tri, z):
    """Discrete invariant of a redundant chart point: vertex form signatures
    and determinant signs of all blocks (as residues mod 2)."""
    n = z.n
    w_scale = 1e-9
    s_map = {}
    for side, S in z.s.items():
        w = np.linalg.eigvalsh(0.5 * (np.asarray(S) + np.asarray(S).T))
        thr = w_scale * max(1.0, np.max(np.abs(w)))
        s_map[side] = int(np.sum(w > thr) - np.sum(w < -thr))
    h_map = {a: (0 if np.linalg.det(np.asarray(Y)) > 0 else 1) for a, Y in z.y.items()}
    out = _make_zclass(n, 2, s_map, h_map)
    validate_zclass(tri, out)
    return out


def zclass_act(tri, z, r):
    """Residual action of a vertex family of residues: h(a) gains the source
    residue and loses the target residue."""
    h = {}
    for key, val in z.h:
        a = parse_arrow(key)
        h[a] = (val + r.get(arrow_source(tri, a), 0) - r.get(arrow_target(tri, a), 0)) % z.x_g
    return _make_zclass(z.n, z.x_g, z.s_dict(), h)


def canonical_zclass(tri, z):
    """Orbit representative under the residual action: residues are cleared
    along a breadth-first spanning tree of the quiver.  Two invariants are in
    the same orbit exactly when their representatives coincide."""
    arrows = sorted(a3_arrows(tri) + a2_arrows(tri), key=arrow_str)
    adj = {}
    for a in arrows:
        adj.setdefault(arrow_source(tri, a), []).append(a)
        adj.setdefault(arrow_target(tri, a), []).append(a)
    h = z.h_dict()
    root = min(tri.sides)
    r = {root: 0}
    queue = [root]
    while queue:
        v = queue.pop(0)
        for a in adj[v]:
            src, tgt = arrow_source(tri, a), arrow_target(tri, a)
            other = tgt if src == v else src
            if other in r:
                continue
            # clear h(a): r chosen so the acted residue vanishes
            if src == v:
                r[other] = (h[arrow_str(a)] + r[v]) % z.x_g
            else:
                r[other] = (r[v] - h[arrow_str(a)]) % z.x_g
            queue.append(other)
    return zclass_act(tri, z, r)


def enumerate_zclasses(tri, n, x_g=2, maximal=False):
    """All invariants on the quiver: signatures per face, one free residue per
    internal edge and two per face, the third solved from the defect."""
    faces = list(range(tri.num_faces))
    internal = list(tri.internal_edges)
    sigs = [n] if maximal else list(range(-n, n + 1, 2))
    res = list(range(x_g))
    for face_s in itertools.product(sigs, repeat=len(faces)):
        s_map = {}
        for f, val in zip(faces, face_s):
            for i in range(3):
                s_map[(f, i)] = val
        for edge_h in itertools.product(res, repeat=len(internal)):
            base_h = {}
            for e, val in zip(internal, edge_h):
                base_h[("A2",) + e] = val
                base_h[("A2",) + tri.partner(e)] = (-val) % x_g
            for face_h in itertools.product(res, repeat=2 * len(faces)):
                h_map = dict(base_h)
                for k, f in enumerate(faces):
                    h0, h1 = face_h[2 * k], face_h[2 * k + 1]
                    defect = ((n - face_s[k]) // 2) % x_g
                    h_map[("A3", f, 0)] = h0
                    h_map[("A3", f, 1)] = h1
                    h_map[("A3", f, 2)] = (defect - h0 - h1) % x_g
                yield _make_zclass(n, x_g, s_map, h_map)


def brute_force_components(tri, n, mode="transverse", x_g=2):
    """Number of orbits of invariants under the residual action, by exhaustive
    enumeration and tree canonicalization."""
    if mode == "maximal":
        maximal = True
    elif mode in ("transverse", "isogenic"):
        maximal = False
    else:
        raise ValueError("unknown counting mode")
    seen = set()
    for z in enumerate_zclasses(tri, n, x_g=x_g, maximal=maximal):
        seen.add(canonical_zclass(tri, z))
    return len(seen)


def count_components(tri, n, mode="transverse", x_g=2):
    """Closed-form component counts of the framed loci.

    With chi = faces - internal edges: maximal loci have x_g^(1 - chi)
    components, transverse loci (and their central quotients at a general
    x_g) have x_g^(1 - chi) (n + 1)^faces.
    """
    chi = tri.num_faces - len(tri.internal_edges)
    if mode == "maximal":
        return x_g ** (1 - chi)
    if mode in ("transverse", "isogenic"):
        return x_g ** (1 - chi) * (n + 1) ** tri.num_faces
    raise ValueError("unknown counting mode")


# -- pieces ---------------------------------------------------------------------


def piece_dimension(tri, xe):
    """Dimension of the piece of the transverse locus through the given
    coordinates: the cone dimensions of the edge data plus the dimensions of
    the two indefinite orthogonal factors of every face."""
    n = xe.n
    total = sum(cone_dimension(d) for d in xe.en.values())
    for f in range(tri.num_faces):
        p = (n + xe.mu[f]) // 2
        q = n - p
        dim_opq = p * (p - 1) // 2 + q * (q - 1) // 2 + p * q
        total += 2 * dim_opq
    return total


def piece_has_interior(xe):
    """A piece has nonempty interior in the transverse locus exactly when all
    blocks of every edge datum, real and complex alike, have size one."""
    for d in xe.en.values():
        dn = d.dn
        sizes = list(dn.n11) + list(dn.n1m) + list(dn.nm1) + list(dn.nmm)
        if any(s != 1 for s in sizes):
            return False
        if any(s2 != 2 for s2 in dn.m2):
            return False
    return True
