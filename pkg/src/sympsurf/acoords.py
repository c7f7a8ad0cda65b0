"""Matrix Lambda-length coordinates on an ideal triangulation.

One invertible n x n value per edge, stored on the canonical side of the
edge and read from the opposite side as the transpose.  The admissible
assignments are cut out by a symmetry relation per face: with H0, H1, H2
the values read along the three sides in cyclic order,

    H0 (tH1)^-1 H2  must be symmetric,

and the coordinates are maximal exactly when these face matrices are
positive definite.  Reconstruction turns an assignment into a twisted
local system over the triangulation quiver whose transitions are

    edge arrows   [[0, Id], [-Id, 0]],
    face arrows   [[Hw^-1 tHu, Id], [-tHw^-1 Hv, 0]],

and a single generating value (the decoration) recovers every coordinate
back from the system by parallel transport.  Flips act by a two-term
Ptolemy sum, and diagonals of a polygon expand as a sum of zigzag
monomials in the edge values.
"""

import json

import numpy as np

from .core import DecoratedLagrangian, random_symplectic
from .invariants import lambda_length
from .surface import a2_arrows, a3_arrows, enumerate_zigzag, face_cycle
from .systems import FramedTwistedSystem, corner_system


def _edge_key(edge):
    return f"{edge[0]}.{edge[1]}"


def _parse_edge(key):
    f, s = key.split(".")
    return (int(f), int(s))


def _inverted(M, tol, what):
    M = np.asarray(M, dtype=float)
    c = np.linalg.cond(M)
    if not np.isfinite(c) or c > 1.0 / tol:
        raise ValueError(f"singular {what}")
    return np.linalg.inv(M)


def _inverted_near_id(M, tol, what):
    # for matrices pinned at unit scale; an absolute test catches Id + CR -> 0
    M = np.asarray(M, dtype=float)
    if np.linalg.svd(M, compute_uv=False)[-1] <= tol:
        raise ValueError(f"singular {what}")
    return np.linalg.inv(M)


# -- the chart ----------------------------------------------------------------


class ACoords:
    """An invertible matrix per edge, keyed by a side; the key carries the
    orientation and the reverse orientation is the transpose."""

    def __init__(self, n, edges):
        self.n = int(n)
        self.edges = {e: np.asarray(v, dtype=float) for e, v in edges.items()}

    def lam_at(self, tri, side):
        """Value along a side, in the orientation of that side."""
        if side in self.edges:
            return self.edges[side]
        mate = tri.partner(side)
        if mate is not None and mate in self.edges:
            return self.edges[mate].T
        raise ValueError(f"no coordinate stored for edge {_edge_key(side)}")

    def validate(self, tri, tol=1e-9):
        covered = {tri.edge_of(s) for s in self.edges}
        wanted = set(tri.internal_edges) | set(tri.boundary_sides)
        if covered != wanted:
            raise ValueError("coordinates must cover every edge exactly")
        for e, v in self.edges.items():
            if v.shape != (self.n, self.n):
                raise ValueError(f"edge {_edge_key(e)} has the wrong shape")
            _inverted(v, tol, f"coordinate at edge {_edge_key(e)}")

    def to_json(self):
        return json.dumps(
            {
                "n": self.n,
                "edges": {_edge_key(e): v.tolist() for e, v in self.edges.items()},
            },
            indent=2,
        )

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        return ACoords(
            n=int(data["n"]),
            edges={_parse_edge(k): np.array(v, dtype=float) for k, v in data["edges"].items()},
        )


def _face_matrix(tri, a, f, tol):
    H0 = a.lam_at(tri, (f, 0))
    H1 = a.lam_at(tri, (f, 1))
    H2 = a.lam_at(tri, (f, 2))
    return H0 @ _inverted(H1.T, tol, f"coordinate on face {f}") @ H2


def check_acoords(tri, a, tol=1e-9):
    """Residual report: transpose coherence of doubly stored edges and the
    symmetry defect of every face matrix."""
    rep = {"transpose": 0.0, "face": 0.0}
    for side, v in a.edges.items():
        mate = tri.partner(side)
        if mate is not None and mate in a.edges:
            rep["transpose"] = max(
                rep["transpose"], np.linalg.norm(a.edges[mate] - v.T)
            )
    for f in range(tri.num_faces):
        M = _face_matrix(tri, a, f, tol)
        rep["face"] = max(rep["face"], np.linalg.norm(M - M.T))
    rep["max"] = max(rep.values())
    return rep


def is_maximal_acoords(tri, a, tol=1e-9):
    """True when every edge value is invertible and every face matrix is
    symmetric positive definite."""
    scale = 1e3 * tol
    try:
        a.validate(tri, tol)
        for f in range(tri.num_faces):
            M = _face_matrix(tri, a, f, tol)
            if np.linalg.norm(M - M.T) > scale * (1.0 + np.linalg.norm(M)):
                return False
            if np.linalg.eigvalsh((M + M.T) / 2)[0] <= tol:
                return False
    except ValueError:
        return False
    return True


# -- reconstruction ------------------------------------------------------------


class DecoratedSystem(FramedTwistedSystem):
    """Twisted system in the decorated convention.  Transitions are not
    framed-shaped, so the framed block invariants delegate to an equivalent
    framed system built from the recovered coordinates."""

    def __init__(self, tri, n, G, decoration, tol=1e-9):
        super().__init__(tri, n, G, tol=tol)
        side, value = decoration
        self.decoration = (side, np.asarray(value, dtype=float))
        self._transport = None
        self._framed = None

    def validate(self):
        n = self.n
        eye = np.eye(2 * n)
        omega = np.zeros((2 * n, 2 * n))
        omega[:n, n:] = np.eye(n)
        omega[n:, :n] = -np.eye(n)
        rep = {"a2_shape": 0.0, "a3_shape": 0.0, "two_cycles": 0.0, "three_cycles": 0.0}
        for arrow in a2_arrows(self.tri):
            rep["a2_shape"] = max(
                rep["a2_shape"], np.linalg.norm(self.G[arrow] - omega)
            )
            rep["two_cycles"] = max(
                rep["two_cycles"], np.linalg.norm(self.G[arrow] @ self.G[arrow] + eye)
            )
        for arrow in a3_arrows(self.tri):
            mat = self.G[arrow]
            rep["a3_shape"] = max(
                rep["a3_shape"],
                np.linalg.norm(mat[:n, n:] - np.eye(n)),
                np.linalg.norm(mat[n:, n:]),
            )
        for f in range(self.tri.num_faces):
            prod = np.eye(2 * n)
            for arrow in face_cycle(self.tri, f):
                prod = self.G[arrow] @ prod
            rep["three_cycles"] = max(rep["three_cycles"], np.linalg.norm(prod + eye))
        rep["max"] = max(rep.values())
        return rep

    def framed(self):
        """The framed system with the same coordinates."""
        if self._framed is None:
            edges = {}
            for e in self.tri.internal_edges + self.tri.boundary_sides:
                edges[e] = lambda_of_system(self, e)
            self._framed = framed_of_acoords(
                self.tri, ACoords(self.n, edges), tol=self.tol
            )
        return self._framed

    def corner_form(self, arrow):
        return self.framed().corner_form(arrow)

    def mu_T(self, f):
        return self.framed().mu_T(f)

    def toledo(self):
        return self.framed().toledo()

    def is_maximal(self):
        return self.framed().is_maximal()


def reconstruct_system(tri, a, tol=1e-9):
    """Decorated twisted system of a coordinate assignment."""
    a.validate(tri, tol)
    n = a.n
    eye = np.eye(n)
    zero = np.zeros((n, n))
    G = {}
    for arrow in a3_arrows(tri):
        _, f, i = arrow
        Hv = a.lam_at(tri, (f, i))
        Hw = a.lam_at(tri, (f, (i - 1) % 3))
        Hu = a.lam_at(tri, (f, (i + 1) % 3))
        Hw_inv = _inverted(Hw, tol, f"coordinate at edge {_edge_key((f, (i - 1) % 3))}")
        G[arrow] = np.block([[Hw_inv @ Hu.T, eye], [-Hw_inv.T @ Hv, zero]])
    omega = np.block([[zero, eye], [-eye, zero]])
    for arrow in a2_arrows(tri):
        G[arrow] = omega
    base = min(tri.internal_edges + tri.boundary_sides)
    return DecoratedSystem(tri, n, G, (base, a.lam_at(tri, base)), tol=tol)


def _transport(sys):
    """Change-of-coordinates matrices from the decoration side to every side."""
    if sys._transport is not None:
        return sys._transport
    base = sys.decoration[0]
    T = {base: np.eye(2 * sys.n)}
    arrows = [
        (a, (a[1], a[2]), (a[1], (a[2] - 1) % 3) if a[0] == "A3" else sys.tri.partner((a[1], a[2])))
        for a in a3_arrows(sys.tri) + a2_arrows(sys.tri)
    ]
    changed = True
    while changed:
        changed = False
        for arrow, src, tgt in arrows:
            if src in T and tgt not in T:
                T[tgt] = sys.G[arrow] @ T[src]
                changed = True
            elif tgt in T and src not in T:
                T[src] = np.linalg.solve(sys.G[arrow], T[tgt])
                changed = True
    if set(T) != set(sys.tri.sides):
        raise ValueError("triangulation quiver is not connected")
    sys._transport = T
    return T


def lambda_of_system(sys, side):
    """Coordinate along a side of a decorated system, recovered by parallel
    transport of the generating decoration."""
    n = sys.n
    lam0 = sys.decoration[1]
    pairing = np.zeros((2 * n, 2 * n))
    pairing[:n, n:] = lam0.T
    pairing[n:, :n] = -lam0
    F = np.linalg.inv(_transport(sys)[side])
    return (F[:, :n].T @ pairing @ F[:, n:]).T


def framed_of_acoords(tri, a, tol=1e-9):
    """Framed twisted system carrying the same coordinates; its corner forms
    are positive definite exactly on the maximal locus."""
    a.validate(tri, tol)
    corner_values = {}
    corner_forms = {}
    for arrow in a3_arrows(tri):
        _, f, i = arrow
        Hv = a.lam_at(tri, (f, i))
        Hw = a.lam_at(tri, (f, (i - 1) % 3))
        Hu = a.lam_at(tri, (f, (i + 1) % 3))
        corner_values[arrow] = Hv
        corner_forms[arrow] = (
            np.linalg.solve(Hw, Hu.T) @ _inverted(Hv, tol, "coordinate")
        )
    edge_blocks = {e: a.lam_at(tri, e) for e in tri.internal_edges}
    return corner_system(tri, corner_values, edge_blocks, corner_forms, tol=tol)


# -- flips ---------------------------------------------------------------------


def flip_acoords(tri, a, side, tol=1e-9):
    """Flip the edge through a side; the new diagonal value is the two-term
    Ptolemy sum over the surrounding quadrilateral, every other value is
    carried across unchanged."""
    mate = tri.partner(side)
    if mate is None:
        raise ValueError("cannot flip a boundary side")
    fp, sp = side
    fm, sm = mate
    Ga = a.lam_at(tri, (fp, (sp + 2) % 3))
    Gb = a.lam_at(tri, (fm, (sm + 1) % 3))
    Gc = a.lam_at(tri, (fp, (sp + 1) % 3)).T
    Gd = a.lam_at(tri, (fm, (sm + 2) % 3)).T
    Ge = a.lam_at(tri, side)
    Ge_inv = _inverted(Ge, tol, f"coordinate at edge {_edge_key(side)}")
    value = Ga @ Ge_inv.T @ Gd + Gc @ Ge_inv @ Gb
    if np.linalg.cond(value) > 1.0 / tol:
        raise ValueError("non-transverse after flip")
    new_tri, rename, (dp, dm) = tri.flip(side)
    new_edges = {}
    flipped = tri.edge_of(side)
    for e in tri.internal_edges + tri.boundary_sides:
        if e == flipped:
            continue
        ne = rename.get(e, e)
        key = new_tri.edge_of(ne)
        new_edges[key] = a.lam_at(tri, e) if key == ne else a.lam_at(tri, e).T
    key = new_tri.edge_of(dp)
    new_edges[key] = value if key == dp else value.T
    return new_tri, ACoords(a.n, new_edges)


# -- cross ratios from lambda lengths -------------------------------------------


def cross_ratio_of_arc(config, ctx, arc=(0, 2)):
    """Cross ratio of a diagonal of a quadrilateral of decorated Lagrangians,
    expressed through the four boundary lambda lengths."""
    if len(config) != 4:
        raise ValueError("need a quadrilateral configuration")
    i, k = arc
    if (k - i) % 4 != 2:
        raise ValueError("arc must be a diagonal of the quadrilateral")
    j, l = (i + 1) % 4, (k + 1) % 4
    lam_li = lambda_length(config[l], config[i], ctx)
    lam_lk = lambda_length(config[l], config[k], ctx)
    lam_jk = lambda_length(config[j], config[k], ctx)
    lam_ji = lambda_length(config[j], config[i], ctx)
    out = -_inverted(lam_li, ctx.tol, "lambda length")
    out = out @ lam_lk @ _inverted(lam_jk, ctx.tol, "lambda length") @ lam_ji
    return out


def verify_cross_ratio_flip(config, ctx):
    """Check the five cross ratio update formulas for the flip replacing the
    diagonal 6-2 of an octagon with 8-4, against direct recomputation in the
    flipped triangulation.  Vertices are numbered 1..8, config[i] is vertex
    i + 1."""
    if len(config) != 8:
        raise ValueError("need an octagon configuration")

    def quad(i, j, k, l):
        # cross ratio of the diagonal i -> k inside the quadrilateral (i,j,k,l)
        return cross_ratio_of_arc(
            [config[i - 1], config[j - 1], config[k - 1], config[l - 1]], ctx
        )

    cr62 = quad(6, 8, 2, 4)
    cr64 = quad(6, 2, 4, 5)
    cr82 = quad(8, 1, 2, 6)
    cr68 = quad(6, 7, 8, 2)
    cr42 = quad(4, 6, 2, 3)
    lam68 = lambda_length(config[5], config[7], ctx)
    lam64 = lambda_length(config[5], config[3], ctx)
    eye = np.eye(ctx.n)
    cr62_inv = _inverted(cr62, ctx.tol, "cross ratio of the flipped diagonal")
    new84 = np.linalg.solve(lam68, cr62_inv.T) @ lam68
    mixer = _inverted_near_id(eye + cr62_inv, ctx.tol, "flip update: Id + CR^-1")
    rep = {
        "84": np.linalg.norm(quad(8, 2, 4, 6) - new84),
        "64": np.linalg.norm(quad(6, 8, 4, 5) - cr64 @ mixer),
        "82": np.linalg.norm(
            quad(8, 1, 2, 4)
            - _inverted_near_id(eye + new84, ctx.tol, "flip update") @ cr82
        ),
        "68": np.linalg.norm(quad(6, 7, 8, 4) - (eye + cr62) @ cr68),
        "42": np.linalg.norm(
            quad(4, 8, 2, 3) - cr42 @ (eye + np.linalg.solve(lam64, cr62) @ lam64)
        ),
    }
    rep["max"] = max(rep.values())
    return rep


# -- polygon layouts and zigzag expansion ---------------------------------------


def fan_corners(tri):
    """Corner-to-vertex labels of the fan triangulation of a polygon."""
    corners = {}
    for f in range(tri.num_faces):
        tv = (0, f + 1, f + 2)
        for s in range(3):
            corners[(f, s)] = tv[s]
    return corners


def flipped_corners(tri, corners, side):
    """Carry corner-to-vertex labels through a flip of the given side."""
    fp, sp = side
    fm, sm = tri.partner(side)
    va = corners[(fp, sp)]
    vb = corners[(fp, (sp + 1) % 3)]
    vc = corners[(fp, (sp + 2) % 3)]
    vd = corners[(fm, (sm + 2) % 3)]
    out = dict(corners)
    for i, v in enumerate((vd, vb, vc)):
        out[(fp, i)] = v
    for i, v in enumerate((vd, vc, va)):
        out[(fm, i)] = v
    return out


def side_with_ends(tri, corners, x, y):
    """The side running from vertex x to vertex y, if present."""
    for f, s in tri.sides:
        if corners[(f, s)] == x and corners[(f, (s + 1) % 3)] == y:
            return (f, s)
    return None


def arc_value(tri, a, corners, x, y):
    """Coordinate of the arc x -> y of a labeled polygon triangulation."""
    side = side_with_ends(tri, corners, x, y)
    if side is not None:
        return a.lam_at(tri, side)
    side = side_with_ends(tri, corners, y, x)
    if side is not None:
        return a.lam_at(tri, side).T
    raise ValueError(f"no arc between vertices {x} and {y}")


def laurent_expand(tri, a, p, k, corners=None, tol=1e-9):
    """Sum of the zigzag monomials of the diagonal p -> k of a triangulated
    polygon: for each admissible sequence the odd-position values are taken
    forward and the even-position values are inverted against the grain."""
    if corners is None:
        corners = fan_corners(tri)
    r = tri.num_faces + 2
    arcs = sorted(
        {
            tuple(sorted((corners[(f, s)], corners[(f, (s + 1) % 3)])))
            for (f, s) in tri.sides
        }
    )
    paths = enumerate_zigzag(r, arcs, p, k)
    if not paths:
        raise ValueError(f"no zigzag sequences from {p} to {k}")
    total = np.zeros((a.n, a.n))
    for path in paths:
        term = arc_value(tri, a, corners, path[0], path[1])
        for j in range(1, len(path) - 1):
            x, y = path[j], path[j + 1]
            if j % 2 == 1:
                term = term @ _inverted(
                    arc_value(tri, a, corners, y, x), tol, "zigzag factor"
                )
            else:
                term = term @ arc_value(tri, a, corners, x, y)
        total = total + term
    return total


# -- positive configurations -----------------------------------------------------


def random_positive_config(r, ctx, rng, conjugate=True):
    """Decorated Lagrangians along a positive curve: graphs of t_i Id over a
    common horizontal, with increasing parameters and generic decorations."""
    n = ctx.n
    t = np.cumsum(rng.uniform(0.3, 1.0, size=r))
    S = random_symplectic(ctx, rng, scale=0.3) if conjugate else np.eye(2 * n)
    out = []
    for i in range(r):
        while True:
            g = rng.normal(size=(n, n))
            if abs(np.linalg.det(g)) > 0.3:
                break
        out.append(DecoratedLagrangian(S @ np.vstack([g, t[i] * g]), ctx))
    return out


def acoords_of_config(tri, config, ctx, corners=None):
    """Coordinates of a configuration of decorated Lagrangians at the polygon
    vertices.  Each face needs a boundary side to carry the twist sign that
    reconciles the raw pairings with the transpose storage convention."""
    if corners is None:
        corners = fan_corners(tri)
    edges = {}
    for e in tri.internal_edges + tri.boundary_sides:
        f, s = e
        x = corners[(f, s)]
        y = corners[(f, (s + 1) % 3)]
        edges[e] = -lambda_length(config[x], config[y], ctx)
    for f in range(tri.num_faces):
        flips = sum(1 for s in range(3) if tri.edge_of((f, s)) != (f, s))
        if flips % 2 == 0:
            continue
        carriers = [(f, s) for s in range(3) if tri.partner((f, s)) is None]
        if not carriers:
            raise ValueError(f"face {f} needs a twist sign but has no boundary side")
        edges[carriers[0]] = -edges[carriers[0]]
    return ACoords(ctx.n, edges)


def random_maximal_acoords(r, ctx, rng, tri=None):
    """Maximal coordinates on the fan polygon from a random positive curve."""
    from .surface import polygon

    if tri is None:
        tri = polygon(r)
    return tri, acoords_of_config(tri, random_positive_config(r, ctx, rng), ctx)
