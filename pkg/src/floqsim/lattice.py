"""Three-colourable trivalent tilings of closed surfaces.

A :class:`Tiling` is the static substrate of the Floquet codes: qubits live on
vertices, two-body checks on edges, plaquette stabilizers on faces.  Faces
carry one of three colours; an edge gets the colour that differs from both
faces it borders, so colour-``c`` edges link colour-``c`` plaquettes.

The module provides

* the shipped 16-qubit {8,3} genus-2 lattice (``"hcf16"``),
* a plain-text lattice format with exact round-tripping,
* semi-hyperbolic refinement (dual -> subdivide -> dual),
* a homology basis of non-contractible loops and their intersection form.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import gf2

COLORS = ("r", "g", "b")
COLOR_INDEX = {c: i for i, c in enumerate(COLORS)}

# Code distance labels for refinements of hcf16, used as metadata only.
HCF16_DISTANCES = {1: 2, 2: 3, 3: 4, 5: 7, 8: 11}


class TilingError(ValueError):
    """Raised for invalid tiling data; ``report`` lists every violation."""

    def __init__(self, message: str, report: Sequence[str] = ()):
        super().__init__(message)
        self.report = list(report)


class HomologyError(RuntimeError):
    pass


def genus(p: int, q: int, num_edges: int) -> int:
    """Genus of a closed {p,q} tiling with ``num_edges`` edges.

    g = 1 - |E| (1/p + 1/q - 1/2); raises if that is not a non-negative integer.
    """
    if p < 3 or q < 3:
        raise TilingError(f"invalid tiling parameters p={p}, q={q}")
    if num_edges < 0:
        raise TilingError(f"invalid edge count {num_edges}")
    g = 1 - num_edges * (Fraction(1, p) + Fraction(1, q) - Fraction(1, 2))
    if g.denominator != 1 or g < 0:
        raise TilingError(
            f"invalid tiling parameters: p={p}, q={q}, |E|={num_edges} gives genus {g}"
        )
    return int(g)


@dataclass(frozen=True)
class Tiling:
    """A trivalent tiling with three-coloured faces and edges.

    ``edges`` holds ``(u, v, colour)`` with ``u < v``; ``faces`` holds
    ``(cyclic vertex tuple, colour)``.
    """

    p: int
    num_vertices: int
    edges: tuple[tuple[int, int, str], ...]
    faces: tuple[tuple[tuple[int, ...], str], ...]
    refinement_level: int = 1
    q: int = 3

    @property
    def n(self) -> int:
        return self.num_vertices

    @property
    def vertices(self) -> range:
        return range(self.num_vertices)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(min(u, v), max(u, v)): i for i, (u, v, _) in enumerate(self.edges)}

    def edge_id(self, u: int, v: int) -> int:
        return self.edge_index[(min(u, v), max(u, v))]

    @cached_property
    def edge_colors(self) -> tuple[str, ...]:
        return tuple(c for _, _, c in self.edges)

    @cached_property
    def face_colors(self) -> tuple[str, ...]:
        return tuple(c for _, c in self.faces)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def vertex_edges(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for i, (u, v, _) in enumerate(self.edges):
            inc[u].append(i)
            inc[v].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def face_edges(self) -> tuple[tuple[int, ...], ...]:
        """Edge ids around each face; entry i joins vertex i and i+1."""
        out = []
        for verts, _ in self.faces:
            k = len(verts)
            out.append(tuple(self.edge_id(verts[i], verts[(i + 1) % k]) for i in range(k)))
        return tuple(out)

    @cached_property
    def edge_faces(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in self.edges]
        for f, es in enumerate(self.face_edges):
            for e in es:
                inc[e].append(f)
        return tuple(tuple(x) for x in inc)

    def edges_of_color(self, color: str) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.edge_colors) if c == color)

    def faces_of_color(self, color: str) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.face_colors) if c == color)

    @property
    def euler_characteristic(self) -> int:
        return self.num_vertices - len(self.edges) + len(self.faces)

    @property
    def genus(self) -> int:
        chi = self.euler_characteristic
        if chi > 2 or chi % 2:
            raise TilingError(f"Euler characteristic {chi} is not that of a closed orientable surface")
        return (2 - chi) // 2

    @property
    def num_logical(self) -> int:
        """k = 2g logical qubits."""
        return 2 * self.genus


# ---------------------------------------------------------------------------
# validation


def validate_tiling(t: Tiling) -> list[str]:
    """Return a list of violated invariants (empty iff the tiling is valid)."""
    report: list[str] = []
    n = t.num_vertices
    if n <= 0:
        return ["tiling has no vertices"]
    for c in list(t.edge_colors) + list(t.face_colors):
        if c not in COLOR_INDEX:
            report.append(f"unknown colour {c!r}")
            return report

    degree = [0] * n
    seen: dict[tuple[int, int], int] = {}
    for i, (u, v, _) in enumerate(t.edges):
        if not (0 <= u < n and 0 <= v < n):
            report.append(f"edge {i} references a vertex outside 0..{n - 1}")
            continue
        if u == v:
            report.append(f"edge {i} is a self-loop at vertex {u}")
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            report.append(f"edge {i} duplicates edge {seen[key]}")
            continue
        seen[key] = i
        degree[u] += 1
        degree[v] += 1
    for v, d in enumerate(degree):
        if d != t.q:
            report.append(f"vertex {v} has degree {d}, expected {t.q}")
    if report:
        return report

    edge_faces: list[list[int]] = [[] for _ in t.edges]
    for f, (verts, _) in enumerate(t.faces):
        k = len(verts)
        if k < 3:
            report.append(f"face {f} has only {k} vertices")
            continue
        if len(set(verts)) != k:
            report.append(f"face {f} repeats a vertex")
        for i in range(k):
            key = (min(verts[i], verts[(i + 1) % k]), max(verts[i], verts[(i + 1) % k]))
            e = seen.get(key)
            if e is None:
                report.append(f"face {f} steps between non-adjacent vertices {key}")
            else:
                edge_faces[e].append(f)
    if report:
        return report

    for e, fs in enumerate(edge_faces):
        if len(fs) != 2:
            report.append(f"edge {e} lies on {len(fs)} faces, expected 2")
            continue
        fa, fb = fs
        ca, cb = t.faces[fa][1], t.faces[fb][1]
        if ca == cb:
            report.append(f"adjacent faces share color: faces {fa} and {fb} (edge {e}) are both {ca}")
        ce = t.edges[e][2]
        if ce in (ca, cb):
            report.append(f"edge color clashes with face: edge {e} has colour {ce} like an incident face")
    if report:
        return report

    nv, ne, nf = n, len(t.edges), len(t.faces)
    if t.q * nv != 2 * ne:
        report.append(f"double counting fails: {t.q}|V|={t.q * nv} != 2|E|={2 * ne}")
    if sum(len(v) for v, _ in t.faces) != 2 * ne:
        report.append("double counting fails: sum of face sizes != 2|E|")
    chi = nv - ne + nf
    if chi > 2 or chi % 2:
        report.append(f"Euler characteristic {chi} is not that of a closed orientable surface")
    sizes = {len(v) for v, _ in t.faces}
    if t.refinement_level == 1:
        if sizes != {t.p}:
            report.append(f"base tiling must have only {t.p}-gons, found sizes {sorted(sizes)}")
        else:
            try:
                g = genus(t.p, t.q, ne)
            except TilingError as exc:
                report.append(str(exc))
            else:
                if 2 - 2 * g != chi:
                    report.append(f"Euler characteristic {chi} disagrees with genus formula g={g}")
    else:
        allowed = {6, t.p}
        if not sizes <= allowed:
            report.append(f"refined tiling has faces of sizes {sorted(sizes - allowed)}")
    if not _orientable(t):
        report.append("faces cannot be oriented consistently")
    return report


def check_tiling(t: Tiling) -> Tiling:
    report = validate_tiling(t)
    if report:
        raise TilingError("invalid tiling: " + "; ".join(report), report)
    return t


# ---------------------------------------------------------------------------
# file format

_HEADER = "floqsim-lattice 1"


def dumps(t: Tiling) -> str:
    lines = [
        _HEADER,
        f"p {t.p}",
        f"q {t.q}",
        f"refinement_level {t.refinement_level}",
        f"vertex_count {t.num_vertices}",
        f"edges {len(t.edges)}",
    ]
    lines += [f"{u} {v} {c}" for u, v, c in t.edges]
    lines.append(f"faces {len(t.faces)}")
    lines += [c + " " + " ".join(map(str, verts)) for verts, c in t.faces]
    return "\n".join(lines) + "\n"


def loads(text: str) -> Tiling:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    try:
        if lines[0] != _HEADER:
            raise TilingError(f"lattice file: expected header {_HEADER!r}")
        kv: dict[str, int] = {}
        i = 1
        for key in ("p", "q", "refinement_level", "vertex_count"):
            name, val = lines[i].split()
            if name != key:
                raise TilingError(f"lattice file line {i}: expected {key!r}, got {name!r}")
            kv[key] = int(val)
            i += 1
        name, ne = lines[i].split()
        if name != "edges":
            raise TilingError("lattice file: missing 'edges' section")
        i += 1
        edges = []
        for _ in range(int(ne)):
            u, v, c = lines[i].split()
            edges.append((int(u), int(v), c))
            i += 1
        name, nf = lines[i].split()
        if name != "faces":
            raise TilingError("lattice file: missing 'faces' section")
        i += 1
        faces = []
        for _ in range(int(nf)):
            parts = lines[i].split()
            faces.append((tuple(int(x) for x in parts[1:]), parts[0]))
            i += 1
        if i != len(lines):
            raise TilingError("lattice file: trailing data")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, TilingError):
            raise
        raise TilingError(f"lattice file parse failure: {exc}") from exc
    return Tiling(
        p=kv["p"],
        q=kv["q"],
        refinement_level=kv["refinement_level"],
        num_vertices=kv["vertex_count"],
        edges=tuple(edges),
        faces=tuple(faces),
    )


def save(t: Tiling, path: str | Path) -> None:
    Path(path).write_text(dumps(t), encoding="utf-8")


def load(path: str | Path) -> Tiling:
    return loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# constructions


def cube_double_cover() -> Tiling:
    """The {8,3} genus-2 lattice as a branched double cover of the cube.

    Cube vertices are ``4x + 2y + z``.  Faces normal to axis a get colour
    ``COLORS[a]``, and so do edges parallel to axis a.  A GF(2) edge label
    with odd sum around every square decides where the two sheets swap; each
    square then lifts to a single octagon (walked twice around the square).
    """
    cube_edges = []
    for v in range(8):
        for axis in range(3):
            w = v | (1 << (2 - axis))
            if w != v:
                cube_edges.append((v, w, axis))
    eid = {(u, w): i for i, (u, w, _) in enumerate(cube_edges)}

    squares = []  # (cyclic vertices, axis)
    for axis in range(3):
        others = [a for a in range(3) if a != axis]
        for side in (0, 1):
            cyc = []
            for b, c in ((0, 0), (1, 0), (1, 1), (0, 1)):
                coord = [0, 0, 0]
                coord[axis], coord[others[0]], coord[others[1]] = side, b, c
                cyc.append(4 * coord[0] + 2 * coord[1] + coord[2])
            squares.append((cyc, axis))

    def key(u: int, w: int) -> tuple[int, int]:
        return (min(u, w), max(u, w))

    a = np.zeros((len(squares), len(cube_edges)), dtype=np.uint8)
    for s, (cyc, _) in enumerate(squares):
        for i in range(4):
            a[s, eid[key(cyc[i], cyc[(i + 1) % 4])]] = 1
    swap = gf2.solve(a, np.ones(len(squares), dtype=np.uint8))
    assert swap is not None

    edges = []
    for i, (u, w, axis) in enumerate(cube_edges):
        for sheet in (0, 1):
            x, y = u + 8 * sheet, w + 8 * (sheet ^ int(swap[i]))
            edges.append((min(x, y), max(x, y), COLORS[axis]))
    edges.sort()

    faces = []
    for cyc, axis in squares:
        sheet, walk = 0, []
        for step in range(8):
            u, w = cyc[step % 4], cyc[(step + 1) % 4]
            walk.append(u + 8 * sheet)
            sheet ^= int(swap[eid[key(u, w)]])
        faces.append((tuple(walk), COLORS[axis]))
    return Tiling(p=8, num_vertices=16, edges=tuple(edges), faces=tuple(faces))


def hexagonal_torus(L: int = 3) -> Tiling:
    """Honeycomb on a torus: dual of an L x L periodic triangular lattice.

    ``L`` must be a multiple of 3 so the colouring ``(i + 2j) mod 3`` of the
    triangular lattice is periodic.  Gives 2L^2 vertices and L^2 hexagons.
    """
    if L < 3 or L % 3:
        raise ValueError("L must be a positive multiple of 3")

    def pid(i: int, j: int) -> int:
        return (i % L) * L + (j % L)

    colors = [0] * (L * L)
    for i in range(L):
        for j in range(L):
            colors[pid(i, j)] = (i + 2 * j) % 3
    tris = []
    for i in range(L):
        for j in range(L):
            tris.append((pid(i, j), pid(i + 1, j), pid(i, j + 1)))
            tris.append((pid(i + 1, j), pid(i + 1, j + 1), pid(i, j + 1)))
    nv, edges, faces = _dual_of_triangulation(colors, tris)
    return Tiling(p=6, num_vertices=nv, edges=edges, faces=faces)


def _dual_of_triangulation(
    point_colors: Sequence[int], triangles: Sequence[tuple[int, int, int]]
) -> tuple[int, tuple, tuple]:
    """Dual of a properly 3-coloured closed triangulation.

    Triangles become trivalent vertices (in list order); points become faces
    coloured like the point; the dual of micro-edge PQ gets the third colour.
    """
    npts = len(point_colors)
    edge_tris: dict[tuple[int, int], list[int]] = {}
    point_tris: list[list[int]] = [[] for _ in range(npts)]
    for ti, tri in enumerate(triangles):
        if len(set(tri)) != 3:
            raise TilingError(f"internal consistency: degenerate triangle {ti}")
        cols = {point_colors[x] for x in tri}
        if len(cols) != 3:
            raise TilingError(f"internal consistency: triangle {ti} is not three-coloured")
        for a in range(3):
            p, q = tri[a], tri[(a + 1) % 3]
            edge_tris.setdefault((min(p, q), max(p, q)), []).append(ti)
            point_tris[tri[a]].append(ti)

    edges = []
    for (p, q), ts in sorted(edge_tris.items(), key=lambda kv: tuple(sorted(kv[1]))):
        if len(ts) != 2:
            raise TilingError(f"internal consistency: micro-edge {(p, q)} lies on {len(ts)} triangles")
        third = 3 - point_colors[p] - point_colors[q]
        edges.append((min(ts), max(ts), COLORS[third]))
    edges.sort()
    if len({(u, v) for u, v, _ in edges}) != len(edges):
        raise TilingError("internal consistency: triangulation is not simplicial")

    faces = []
    for p in range(npts):
        ts = point_tris[p]
        if not ts:
            continue
        start = min(ts)
        tri = triangles[start]
        q = min(x for x in tri if x != p)
        cyc = [start]
        cur = start
        while True:
            pair = edge_tris[(min(p, q), max(p, q))]
            nxt = pair[0] if pair[1] == cur else pair[1]
            if nxt == start:
                break
            cyc.append(nxt)
            q = next(x for x in triangles[nxt] if x != p and x != q)
            cur = nxt
            if len(cyc) > len(ts):
                raise TilingError(f"internal consistency: link of point {p} is not a cycle")
        if len(cyc) != len(ts):
            raise TilingError(f"internal consistency: link of point {p} is not a single cycle")
        faces.append((tuple(cyc), COLORS[point_colors[p]]))
    return len(triangles), tuple(edges), tuple(faces)


def refine(t: Tiling, ell: int) -> Tiling:
    """Semi-hyperbolic refinement: dual, subdivide each triangle, dual back.

    Every vertex of ``t`` becomes a triangle whose corners are its three
    faces; each triangle edge is split into ``ell`` segments and the triangle
    is filled with ``ell**2`` micro-triangles.  The result has ``ell**2``
    times as many vertices and the same genus.
    """
    if ell < 1:
        raise ValueError("refinement level must be >= 1")
    if t.refinement_level != 1:
        raise ValueError("refine expects a base tiling (refinement_level == 1)")
    if ell == 1:
        return t

    vertex_faces: list[list[int]] = [[] for _ in range(t.num_vertices)]
    for f, (verts, _) in enumerate(t.faces):
        for v in verts:
            vertex_faces[v].append(f)
    face_col = [COLOR_INDEX[c] for c in t.face_colors]

    ids: dict[tuple, int] = {}
    colors: list[int] = []

    def point(key: tuple, color: int) -> int:
        pid = ids.get(key)
        if pid is None:
            pid = ids[key] = len(colors)
            colors.append(color)
        elif colors[pid] != color:
            raise TilingError(f"internal consistency: colour mismatch at refinement point {key}")
        return pid

    triangles: list[tuple[int, int, int]] = []
    for v in range(t.num_vertices):
        fs = sorted(vertex_faces[v])
        if len(fs) != 3:
            raise TilingError(f"vertex {v} does not meet exactly three faces")
        cols = [face_col[f] for f in fs]
        shared = {}
        for i, j in ((0, 1), (0, 2), (1, 2)):
            common = set(t.face_edges[fs[i]]) & set(t.face_edges[fs[j]]) & set(t.vertex_edges[v])
            if len(common) != 1:
                raise TilingError(f"vertex {v}: faces {fs[i]}, {fs[j]} do not share one edge there")
            shared[(i, j)] = common.pop()

        def pt(a: int, b: int, c: int) -> int:
            color = (a * cols[0] + b * cols[1] + c * cols[2]) % 3
            if a == ell:
                return point(("f", fs[0]), color)
            if b == ell:
                return point(("f", fs[1]), color)
            if c == ell:
                return point(("f", fs[2]), color)
            if c == 0:
                return point(("e", shared[(0, 1)], b), color)
            if b == 0:
                return point(("e", shared[(0, 2)], c), color)
            if a == 0:
                return point(("e", shared[(1, 2)], c), color)
            return point(("v", v, a, b, c), color)

        for a in range(ell + 1):
            for b in range(ell + 1 - a):
                pt(a, b, ell - a - b)
        for a in range(ell):
            for b in range(ell - a):
                c = ell - 1 - a - b
                triangles.append((pt(a + 1, b, c), pt(a, b + 1, c), pt(a, b, c + 1)))
        for a in range(ell - 1):
            for b in range(ell - 1 - a):
                c = ell - 2 - a - b
                triangles.append((pt(a + 1, b + 1, c), pt(a + 1, b, c + 1), pt(a, b + 1, c + 1)))

    nv, edges, faces = _dual_of_triangulation(colors, triangles)
    out = Tiling(p=t.p, q=t.q, num_vertices=nv, edges=edges, faces=faces, refinement_level=ell)
    report = validate_tiling(out)
    if report:
        raise TilingError("internal consistency: refined tiling invalid: " + "; ".join(report), report)
    return out


def build_base_lattice(name: str | Path) -> Tiling:
    """Load a shipped lattice by name (``"hcf16"``) or a lattice file path."""
    if isinstance(name, str) and name in SHIPPED:
        text = resources.files("floqsim").joinpath("data").joinpath(SHIPPED[name]).read_text(encoding="utf-8")
        t = loads(text)
    else:
        path = Path(name)
        if not path.is_file():
            raise ValueError(f"unknown lattice identifier {str(name)!r}")
        t = load(path)
    return check_tiling(t)


SHIPPED = {"hcf16": "hcf16.lattice"}


def build_lattice(name: str | Path, ell: int = 1) -> Tiling:
    return refine(build_base_lattice(name), ell)


# ---------------------------------------------------------------------------
# homology


@dataclass(frozen=True)
class Loop:
    """A simple closed walk; ``edges[i]`` joins ``vertices[i]`` and ``vertices[i+1]``."""

    vertices: tuple[int, ...]
    edges: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def edge_mask(self) -> int:
        m = 0
        for e in self.edges:
            m |= 1 << e
        return m


@dataclass(frozen=True)
class HomologyBasis:
    loops: tuple[Loop, ...]
    intersection_matrix: np.ndarray = field(compare=False)

    @property
    def rank(self) -> int:
        return len(self.loops)


def boundary_matrix(t: Tiling) -> np.ndarray:
    """The vertex-by-edge incidence matrix d1 over GF(2)."""
    d1 = np.zeros((t.num_vertices, len(t.edges)), dtype=np.uint8)
    for i, (u, v, _) in enumerate(t.edges):
        d1[u, i] = 1
        d1[v, i] = 1
    return d1


def face_boundary_masks(t: Tiling) -> list[int]:
    out = []
    for es in t.face_edges:
        m = 0
        for e in es:
            m ^= 1 << e
        out.append(m)
    return out


def loop_from_edges(t: Tiling, edge_ids: Iterable[int]) -> Loop:
    """Order a set of edges forming one simple cycle into a :class:`Loop`."""
    es = sorted(set(edge_ids))
    if not es:
        raise ValueError("empty loop")
    inc: dict[int, list[int]] = {}
    for e in es:
        u, v, _ = t.edges[e]
        inc.setdefault(u, []).append(e)
        inc.setdefault(v, []).append(e)
    if any(len(x) != 2 for x in inc.values()):
        raise ValueError("edge set is not a simple cycle")
    start = min(inc)
    verts, edges = [start], []
    prev_e = None
    cur = start
    while True:
        cands = [e for e in inc[cur] if e != prev_e]
        if prev_e is None:
            # deterministic direction: towards the smaller neighbour
            cands.sort(key=lambda e: (_other(t, e, cur), e))
        e = cands[0]
        nxt = _other(t, e, cur)
        edges.append(e)
        if nxt == start:
            break
        verts.append(nxt)
        prev_e, cur = e, nxt
    if len(edges) != len(es):
        raise ValueError("edge set is not a single cycle")
    return Loop(tuple(verts), tuple(edges))


def _other(t: Tiling, e: int, v: int) -> int:
    a, b, _ = t.edges[e]
    return b if a == v else a


def _candidate_cycles(t: Tiling) -> list[tuple[int, ...]]:
    """Fundamental cycles of BFS trees rooted at every vertex, deduplicated."""
    cands: set[tuple[int, ...]] = set()
    nbrs = t.neighbors
    for root in range(t.num_vertices):
        parent = [-1] * t.num_vertices
        pedge = [-1] * t.num_vertices
        depth = [-1] * t.num_vertices
        depth[root] = 0
        dq = deque([root])
        tree = set()
        while dq:
            u = dq.popleft()
            for w in nbrs[u]:
                if depth[w] < 0:
                    depth[w] = depth[u] + 1
                    parent[w] = u
                    pedge[w] = t.edge_id(u, w)
                    tree.add(pedge[w])
                    dq.append(w)
        for e, (u, w, _) in enumerate(t.edges):
            if e in tree:
                continue
            cyc = [e]
            a, b = u, w
            while a != b:
                if depth[a] >= depth[b]:
                    cyc.append(pedge[a])
                    a = parent[a]
                else:
                    cyc.append(pedge[b])
                    b = parent[b]
            cands.add(tuple(sorted(cyc)))
    return sorted(cands, key=lambda c: (len(c), c))


def homology_basis(t: Tiling) -> HomologyBasis:
    """2g independent non-contractible loops and their intersection form."""
    k = t.num_logical
    basis = gf2.BitBasis()
    for m in face_boundary_masks(t):
        basis.add(m)
    loops: list[Loop] = []
    if k:
        for cyc in _candidate_cycles(t):
            m = 0
            for e in cyc:
                m |= 1 << e
            if basis.add(m):
                loops.append(loop_from_edges(t, cyc))
                if len(loops) == k:
                    break
    if len(loops) != k:
        raise HomologyError(f"found only {len(loops)} independent loop classes, expected {k}")
    J = intersection_matrix(t, loops)
    if k and gf2.det(J) != 1:
        raise HomologyError("intersection form of the chosen loops is singular")
    return HomologyBasis(tuple(loops), J)


def oriented_faces(t: Tiling) -> list[tuple[int, ...]]:
    """Face cycles reoriented so that every edge is traversed both ways."""
    nf = len(t.faces)
    out: list[tuple[int, ...] | None] = [None] * nf
    for seed in range(nf):
        if out[seed] is not None:
            continue
        out[seed] = t.faces[seed][0]
        dq = deque([seed])
        while dq:
            f = dq.popleft()
            cyc = out[f]
            directed = {(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))}
            for e in t.face_edges[f]:
                for g in t.edge_faces[e]:
                    if g == f:
                        continue
                    gc = t.faces[g][0]
                    gdir = {(gc[i], gc[(i + 1) % len(gc)]) for i in range(len(gc))}
                    want = tuple(reversed(gc)) if gdir & directed else gc
                    if out[g] is None:
                        out[g] = want
                        dq.append(g)
                    elif out[g] != want:
                        raise TilingError("tiling is not orientable")
    seen = set()
    for cyc in out:
        for i in range(len(cyc)):
            d = (cyc[i], cyc[(i + 1) % len(cyc)])
            if d in seen:
                raise TilingError("tiling is not orientable")
            seen.add(d)
    return out


def _orientable(t: Tiling) -> bool:
    try:
        oriented_faces(t)
    except TilingError:
        return False
    return True


def rotation_system(t: Tiling) -> list[dict[int, int]]:
    """``rot[v][w]`` is the neighbour following ``w`` around ``v``.

    Built from consistently oriented faces: a face walking u -> v -> w
    contributes ``rot[v][w] = u``.
    """
    rot: list[dict[int, int]] = [dict() for _ in range(t.num_vertices)]
    for cyc in oriented_faces(t):
        k = len(cyc)
        for i in range(k):
            u, v, w = cyc[i - 1], cyc[i], cyc[(i + 1) % k]
            rot[v][w] = u
    return rot


def crossing_number(t: Tiling, a: Loop, b: Loop, rot: list[dict[int, int]] | None = None) -> int:
    """Number of transversal crossings of loops ``a`` and ``b``, mod 2.

    On a trivalent graph two loops meet along shared paths.  Along each
    maximal shared path s..t, ``a`` crosses ``b`` iff it arrives and leaves
    on opposite sides of the path.
    """
    if rot is None:
        rot = rotation_system(t)
    bset = set(b.edges)
    L = len(a.edges)
    shared = [e in bset for e in a.edges]
    if all(shared):
        return 0
    start = next(i for i in range(L) if not shared[i])
    verts = a.vertices
    parity = 0
    i = (start + 1) % L
    steps = 0
    while steps < L:
        if shared[i]:
            j = i
            while shared[j % L]:
                j += 1
            # shared edges i..j-1 run from vertex i to vertex j
            s = verts[i % L]
            tv = verts[j % L]
            seg_next = verts[(i + 1) % L]
            seg_prev = verts[(j - 1) % L]
            a_prev = verts[(i - 1) % L]
            a_next = verts[(j + 1) % L]
            left_at_s = rot[s][seg_next] == a_prev
            right_at_t = rot[tv][seg_prev] == a_next
            if left_at_s == right_at_t:
                parity ^= 1
            steps += j - i
            i = j % L
        else:
            steps += 1
            i = (i + 1) % L
    return parity


def intersection_matrix(t: Tiling, loops: Sequence[Loop]) -> np.ndarray:
    rot = rotation_system(t)
    k = len(loops)
    J = np.zeros((k, k), dtype=np.uint8)
    for i in range(k):
        for j in range(i + 1, k):
            J[i, j] = J[j, i] = crossing_number(t, loops[i], loops[j], rot)
    return J
