"""Ideal triangulations of marked surfaces and the associated quiver.

Faces are oriented triangles with corners 0,1,2 in counterclockwise order;
side s runs from corner s to corner s+1.  A gluing identifies two sides of
(possibly equal) faces reversing orientation, so corner s of one side meets
corner s'+1 of the other.  Unglued sides are boundary sides.

The quiver has one vertex per side slot, three clockwise arrows per face
(f,i) -> (f,i-1), and two opposite arrows per internal edge.
"""

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class SurfaceSpec:
    """Topological type: genus, number of removed points or disks (holes),
    and total number of marked points on the boundary circles."""

    genus: int
    holes: int
    marks: int

    @property
    def euler_bar(self):
        return 2 - 2 * self.genus - self.holes

    @property
    def expected_faces(self):
        return self.marks - 2 * self.euler_bar

    @property
    def expected_internal_edges(self):
        return self.marks - 3 * self.euler_bar


def _norm_side(side):
    f, s = side
    return (int(f), int(s) % 3)


class IdealTriangulation:
    def __init__(self, num_faces, gluing, surface=None):
        self.num_faces = int(num_faces)
        if self.num_faces < 1:
            raise ValueError("need at least one face")
        pairs = {}
        for a, b in dict(gluing).items():
            a, b = _norm_side(a), _norm_side(b)
            for f, s in (a, b):
                if not 0 <= f < self.num_faces:
                    raise ValueError(f"face index {f} out of range")
            if a == b:
                raise ValueError(f"side {a} glued to itself")
            for key, val in ((a, b), (b, a)):
                if key in pairs and pairs[key] != val:
                    raise ValueError(f"side {key} glued twice")
                pairs[key] = val
        self.gluing = pairs
        self.surface = surface
        self._orbits = self._corner_orbits()
        if surface is not None:
            self._check_surface(surface)

    # -- sides and edges -------------------------------------------------

    @property
    def sides(self):
        return [(f, s) for f in range(self.num_faces) for s in range(3)]

    def partner(self, side):
        return self.gluing.get(_norm_side(side))

    def is_internal(self, side):
        return _norm_side(side) in self.gluing

    @property
    def internal_edges(self):
        """Canonical representatives: the smaller side of each glued pair."""
        return sorted(a for a, b in self.gluing.items() if a < b)

    @property
    def boundary_sides(self):
        return [s for s in self.sides if s not in self.gluing]

    def edge_of(self, side):
        side = _norm_side(side)
        mate = self.gluing.get(side)
        return side if mate is None or side < mate else mate

    @property
    def euler_bar(self):
        return self.num_faces - len(self.internal_edges)

    # -- corner orbits ---------------------------------------------------

    def _corner_orbits(self):
        parent = {(f, c): (f, c) for f in range(self.num_faces) for c in range(3)}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for (f, s), (g, t) in self.gluing.items():
            parent[find((f, s))] = find((g, (t + 1) % 3))
            parent[find((f, (s + 1) % 3))] = find((g, t))
        ids = {}
        out = {}
        for f in range(self.num_faces):
            for c in range(3):
                root = find((f, c))
                if root not in ids:
                    ids[root] = len(ids)
                out[(f, c)] = ids[root]
        return out

    def corner_orbit(self, f, c):
        return self._orbits[(f, c % 3)]

    @property
    def num_corner_orbits(self):
        return 1 + max(self._orbits.values())

    def _check_surface(self, spec):
        if self.num_faces != spec.expected_faces:
            raise ValueError(
                f"face count {self.num_faces} does not match surface "
                f"(expected {spec.expected_faces})"
            )
        if len(self.internal_edges) != spec.expected_internal_edges:
            raise ValueError("internal edge count does not match surface")
        want = spec.marks if spec.marks else spec.holes
        if self.num_corner_orbits != want:
            raise ValueError("corner orbit count does not match surface")

    # -- flips -------------------------------------------------------------

    def flip(self, side):
        """Flip the internal edge containing `side`.

        Returns (new_triangulation, rename, new_edge) where rename maps old
        side slots to new ones for every side that survives, and new_edge is
        the side pair of the new diagonal.
        """
        side = _norm_side(side)
        mate = self.gluing.get(side)
        if mate is None:
            raise ValueError("cannot flip a boundary side")
        fp, sp = side
        fm, sm = mate
        if fp == fm:
            raise ValueError("cannot flip an edge of a self-glued face")
        rename = {
            (fp, (sp + 1) % 3): (fp, 1),
            (fp, (sp + 2) % 3): (fm, 1),
            (fm, (sm + 1) % 3): (fm, 2),
            (fm, (sm + 2) % 3): (fp, 0),
        }
        new_gluing = {(fp, 2): (fm, 0)}
        for a, b in self.gluing.items():
            if a in (side, mate):
                continue
            new_gluing[rename.get(a, a)] = rename.get(b, b)
        new = IdealTriangulation(self.num_faces, new_gluing, surface=self.surface)
        return new, rename, ((fp, 2), (fm, 0))

    # -- serialization -----------------------------------------------------

    def to_json(self):
        data = {
            "faces": self.num_faces,
            "gluing": {
                f"{a[0]}.{a[1]}": f"{b[0]}.{b[1]}" for a, b in self.gluing.items() if a < b
            },
        }
        if self.surface is not None:
            data["surface"] = {
                "genus": self.surface.genus,
                "holes": self.surface.holes,
                "marks": self.surface.marks,
            }
        else:
            data["surface"] = None
        return json.dumps(data, indent=2)

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        spec = None
        if data.get("surface"):
            s = data["surface"]
            spec = SurfaceSpec(genus=s["genus"], holes=s["holes"], marks=s["marks"])

        def parse(s):
            f, k = s.split(".")
            return (int(f), int(k))

        gluing = {parse(a): parse(b) for a, b in data["gluing"].items()}
        return IdealTriangulation(data["faces"], gluing, surface=spec)


# -- presets ---------------------------------------------------------------


def _fan_gluing(m):
    """Diagonal gluings of the fan triangulation of an m-gon from vertex 0.

    Face i has corners at polygon vertices (0, i+1, i+2).  Boundary edge
    j -> j+1 sits on face 0 side 0 (j=0), face j-1 side 1 (middle), or face
    m-3 side 2 (j=m-1).
    """
    return {(j, 2): (j + 1, 0) for j in range(m - 3)}


def _fan_boundary(m, j):
    if j == 0:
        return (0, 0)
    if j == m - 1:
        return (m - 3, 2)
    return (j - 1, 1)


def polygon(r):
    """Triangulated disk with r marked boundary points (fan from vertex 0)."""
    if r < 3:
        raise ValueError("polygon needs at least 3 marked points")
    return IdealTriangulation(r - 2, _fan_gluing(r), SurfaceSpec(0, 1, r))


def once_punctured_torus():
    gluing = {(0, i): (1, i) for i in range(3)}
    return IdealTriangulation(2, gluing, SurfaceSpec(1, 1, 0))


def pair_of_pants():
    gluing = {(0, 0): (1, 0), (0, 1): (1, 2), (0, 2): (1, 1)}
    return IdealTriangulation(2, gluing, SurfaceSpec(0, 3, 0))


def annulus(marks_outer):
    """Annulus with marks_outer points on one boundary circle and one on the
    other, realized by cutting along a spoke and re-gluing a fan."""
    a = int(marks_outer)
    if a < 1:
        raise ValueError("annulus needs at least one outer mark")
    m = a + 3
    gluing = dict(_fan_gluing(m))
    sa, sb = _fan_boundary(m, 0), _fan_boundary(m, a + 1)
    gluing[sa] = sb
    return IdealTriangulation(m - 2, gluing, SurfaceSpec(0, 2, a + 1))


def genus_two():
    """Closed genus 2 surface with one puncture, from the octagon fan."""
    m = 8
    gluing = dict(_fan_gluing(m))
    for j, jj in ((0, 2), (1, 3), (4, 6), (5, 7)):
        gluing[_fan_boundary(m, j)] = _fan_boundary(m, jj)
    return IdealTriangulation(m - 2, gluing, SurfaceSpec(2, 1, 0))


PRESETS = {
    "polygon4": lambda: polygon(4),
    "polygon5": lambda: polygon(5),
    "polygon6": lambda: polygon(6),
    "once_punctured_torus": once_punctured_torus,
    "pair_of_pants": pair_of_pants,
    "annulus1": lambda: annulus(1),
    "annulus2": lambda: annulus(2),
    "genus_two": genus_two,
}


# -- quiver ------------------------------------------------------------------


def a3_arrows(t):
    """Clockwise face arrows (f,i) -> (f,i-1), three per face."""
    return [("A3", f, i) for f in range(t.num_faces) for i in range(3)]


def a2_arrows(t):
    """Edge arrows, one from each side of every internal edge."""
    return [("A2", f, s) for (f, s) in t.sides if t.is_internal((f, s))]


def arrow_source(t, arrow):
    kind, f, s = arrow
    return (f, s)


def arrow_target(t, arrow):
    kind, f, s = arrow
    if kind == "A3":
        return (f, (s - 1) % 3)
    return t.partner((f, s))


def arrow_reverse(t, arrow):
    kind, f, s = arrow
    if kind != "A2":
        raise ValueError("only edge arrows have a distinguished reverse")
    g, u = t.partner((f, s))
    return ("A2", g, u)


def arrow_str(arrow):
    kind, f, s = arrow
    return f"{kind}:{f}.{s}"


def parse_arrow(s):
    kind, rest = s.split(":")
    f, k = rest.split(".")
    return (kind, int(f), int(k))


def face_cycle(t, f):
    """The three clockwise arrows of face f, composable in list order."""
    return [("A3", f, 0), ("A3", f, 2), ("A3", f, 1)]


def spanning_data(t):
    """Deterministic sets (S, R) of face arrows such that S is a spanning
    tree of the graph whose nodes are edges of the triangulation and whose
    links are face arrows, and S together with R meets every face in
    exactly two arrows."""
    nodes = {t.edge_of(side) for side in t.sides}
    parent = {x: x for x in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    S = []
    for arrow in a3_arrows(t):
        a = t.edge_of(arrow_source(t, arrow))
        b = t.edge_of(arrow_target(t, arrow))
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            S.append(arrow)
    roots = {find(x) for x in nodes}
    if len(roots) != 1:
        raise ValueError("edge graph is disconnected")
    R = []
    for f in range(t.num_faces):
        face = [("A3", f, i) for i in range(3)]
        have = sum(1 for a in face if a in S)
        for a in face:
            if have >= 2:
                break
            if a not in S and a not in R:
                R.append(a)
                have += 1
    return S, R


def corner_walk(t, f, c):
    """Closed arrow path around the corner orbit of (f, c): alternate the
    face arrow into the corner with the edge arrow to the glued side.
    Raises if the orbit touches the boundary."""
    f0, c0 = int(f), int(c) % 3
    path = []
    cur = (f0, c0)
    while True:
        g, cc = cur
        path.append(("A3", g, cc))
        prev_side = (g, (cc - 1) % 3)
        mate = t.partner(prev_side)
        if mate is None:
            raise ValueError("corner orbit touches the boundary")
        path.append(("A2", g, (cc - 1) % 3))
        cur = mate
        if cur == (f0, c0):
            return path
        if len(path) > 12 * t.num_faces:
            raise RuntimeError("corner walk failed to close")


# -- zigzag enumeration in a triangulated polygon ----------------------------


def _circle_point(r, j):
    import math

    return (math.cos(2 * math.pi * j / r), math.sin(2 * math.pi * j / r))


def _crossing_param(r, arc, p, k):
    """Parameter in (0,1) where segment `arc` crosses the chord p->k, or None.

    Arcs sharing an endpoint with the chord do not cross it.
    """
    a, b = arc
    if {a, b} & {p, k}:
        return None
    ax, ay = _circle_point(r, a)
    bx, by = _circle_point(r, b)
    px, py = _circle_point(r, p)
    kx, ky = _circle_point(r, k)
    d1x, d1y = kx - px, ky - py
    d2x, d2y = bx - ax, by - ay
    den = d1x * d2y - d1y * d2x
    if abs(den) < 1e-12:
        return None
    s = ((ax - px) * d2y - (ay - py) * d2x) / den
    u = ((ax - px) * d1y - (ay - py) * d1x) / den
    if 1e-9 < s < 1 - 1e-9 and 1e-9 < u < 1 - 1e-9:
        return s
    return None


def enumerate_zigzag(r, arcs, p, k):
    """All odd-length arc paths from p to k where arcs in odd position avoid
    the chord (p,k) and arcs in even position cross it at strictly
    increasing points.  Arcs are unordered vertex pairs of the triangulated
    r-gon, including its boundary edges."""
    arcs = [tuple(sorted(a)) for a in arcs]
    neighbors = {}
    for a, b in arcs:
        neighbors.setdefault(a, []).append(b)
        neighbors.setdefault(b, []).append(a)
    for v in neighbors:
        neighbors[v].sort()
    cross = {arc: _crossing_param(r, arc, p, k) for arc in arcs}
    out = []

    def extend(seq, last_param):
        v = seq[-1]
        # odd step: one arc staying on its side of the chord
        for w in neighbors.get(v, ()):
            if cross[tuple(sorted((v, w)))] is not None:
                continue
            if w == k:
                out.append(tuple(seq) + (w,))
            # even step: one crossing arc, strictly further along the chord
            for x in neighbors.get(w, ()):
                param = cross[tuple(sorted((w, x)))]
                if param is not None and param > last_param:
                    extend(seq + [w, x], param)

    extend([p], -1.0)
    return sorted(out)
