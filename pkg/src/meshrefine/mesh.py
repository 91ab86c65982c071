"""Indexed triangle mesh, vertex welding and the shared-midpoint cache."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple

from .errors import MeshDomainError, MeshStructureError

Point3 = tuple[float, float, float]
Triangle = tuple[int, int, int]

DEFAULT_WELD_FACTOR = 1e-9


class EdgeKey(NamedTuple):
    """Undirected edge, endpoints stored with ``a < b``."""

    a: int
    b: int

    @classmethod
    def of(cls, i: int, j: int) -> "EdgeKey":
        if i == j:
            raise MeshStructureError(f"edge endpoints must differ (got {i}, {i})")
        return cls(i, j) if i < j else cls(j, i)


def edge_key(i: int, j: int) -> tuple[int, int]:
    # plain-tuple twin of EdgeKey.of for hot loops; hashes and compares equal to EdgeKey
    return (i, j) if i < j else (j, i)


@dataclass
class TriangleMesh:
    """Vertex buffer plus triangle index triples.

    Construction validates that every coordinate is finite and every triangle
    references three distinct, in-range vertices.
    """

    vertices: list[Point3] = field(default_factory=list)
    triangles: list[Triangle] = field(default_factory=list)

    def __post_init__(self):
        self.vertices = [tuple(float(c) for c in v) for v in self.vertices]
        self.triangles = [tuple(int(i) for i in t) for t in self.triangles]
        self.validate()

    @classmethod
    def trusted(cls, vertices: list[Point3], triangles: list[Triangle]) -> "TriangleMesh":
        """Wrap buffers produced internally without re-validating them."""
        mesh = cls.__new__(cls)
        mesh.vertices = vertices
        mesh.triangles = triangles
        return mesh

    def validate(self):
        for n, v in enumerate(self.vertices):
            if len(v) != 3:
                raise MeshStructureError(f"vertex {n} has {len(v)} components")
            if not all(math.isfinite(c) for c in v):
                raise MeshDomainError(f"vertex {n} has a non-finite coordinate: {v}")
        nv = len(self.vertices)
        for n, t in enumerate(self.triangles):
            if len(t) != 3:
                raise MeshStructureError(f"triangle {n} has {len(t)} indices")
            i, j, k = t
            if i == j or j == k or i == k:
                raise MeshStructureError(f"triangle {n} repeats a vertex: {t}")
            if min(t) < 0 or max(t) >= nv:
                raise MeshStructureError(f"triangle {n} indexes outside 0..{nv - 1}: {t}")

    def copy(self) -> "TriangleMesh":
        return TriangleMesh.trusted(list(self.vertices), list(self.triangles))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def referenced_vertices(self) -> list[int]:
        return sorted({i for t in self.triangles for i in t})

    def bbox_diagonal(self) -> float:
        """Diagonal of the axis-aligned box around the referenced vertices."""
        used = self.referenced_vertices() if self.triangles else range(len(self.vertices))
        pts = [self.vertices[i] for i in used]
        if not pts:
            return 0.0
        lo = [min(p[d] for p in pts) for d in range(3)]
        hi = [max(p[d] for p in pts) for d in range(3)]
        return math.dist(lo, hi)

    def edges(self) -> list[tuple[int, int]]:
        """Distinct undirected edges in first-seen order."""
        return list(undirected_edge_uses(self))


def edge_length(mesh: TriangleMesh, e) -> float:
    a, b = e
    n = len(mesh.vertices)
    if not (0 <= a < n and 0 <= b < n):
        raise MeshStructureError(f"edge {tuple(e)} indexes outside 0..{n - 1}")
    if a > b:
        a, b = b, a
    return math.dist(mesh.vertices[a], mesh.vertices[b])


def max_edge_length(mesh: TriangleMesh) -> float:
    verts = mesh.vertices
    dist = math.dist
    best = 0.0
    for i, j, k in mesh.triangles:
        m = max(dist(verts[i], verts[j]), dist(verts[j], verts[k]), dist(verts[k], verts[i]))
        if m > best:
            best = m
    return best


def midpoint(p: Point3, q: Point3) -> Point3:
    return ((p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5, (p[2] + q[2]) * 0.5)


class MidpointCache:
    """Maps an undirected edge to the index of its midpoint vertex.

    Owned by a single subdivision run. Because both triangles sharing an edge
    go through the same entry, a split edge never produces two midpoints.
    """

    def __init__(self):
        self.entries: dict[tuple[int, int], int] = {}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, e):
        return edge_key(*e) in self.entries

    def get(self, e):
        return self.entries.get(edge_key(*e))


def get_or_create_midpoint(mesh: TriangleMesh, cache: MidpointCache, e) -> int:
    """Return the midpoint vertex of ``e``, appending it on first request.

    Endpoints are averaged in canonical (low index first) order so the new
    coordinates do not depend on which incident triangle asks first.
    """
    a, b = edge_key(*e)
    entries = cache.entries
    idx = entries.get((a, b))
    if idx is None:
        verts = mesh.vertices
        if not (0 <= a and b < len(verts)):
            raise MeshStructureError(f"edge {(a, b)} indexes outside 0..{len(verts) - 1}")
        idx = len(verts)
        verts.append(midpoint(verts[a], verts[b]))
        entries[(a, b)] = idx
    return idx


class WeldResult(NamedTuple):
    mesh: TriangleMesh
    dropped: int


def weld_vertices(mesh: TriangleMesh, tolerance: float | None = None) -> WeldResult:
    """Merge vertices closer than ``tolerance``; first-seen vertex wins.

    ``tolerance=None`` uses 1e-9 times the bounding-box diagonal. Triangles that
    collapse onto a repeated index are dropped and counted in ``dropped``.
    Unreferenced input vertices are discarded.
    """
    if tolerance is None:
        tolerance = DEFAULT_WELD_FACTOR * mesh.bbox_diagonal()
    if tolerance < 0 or not math.isfinite(tolerance):
        raise MeshDomainError(f"weld tolerance must be finite and >= 0, got {tolerance}")

    verts = mesh.vertices
    new_verts: list[Point3] = []
    remap: dict[int, int] = {}
    exact: dict[Point3, int] = {}
    grid: dict[tuple[int, int, int], list[int]] = {}
    tol = tolerance
    offsets = list(product((-1, 0, 1), repeat=3))

    def lookup(i):
        p = verts[i]
        hit = exact.get(p)
        if hit is not None:
            return hit
        if tol > 0:
            cell = (math.floor(p[0] / tol), math.floor(p[1] / tol), math.floor(p[2] / tol))
            for dx, dy, dz in offsets:
                for r in grid.get((cell[0] + dx, cell[1] + dy, cell[2] + dz), ()):
                    if math.dist(new_verts[r], p) <= tol:
                        return r
        r = len(new_verts)
        new_verts.append(p)
        exact[p] = r
        if tol > 0:
            grid.setdefault(cell, []).append(r)
        return r

    new_tris: list[Triangle] = []
    dropped = 0
    for t in mesh.triangles:
        mapped = []
        for i in t:
            r = remap.get(i)
            if r is None:
                r = remap[i] = lookup(i)
            mapped.append(r)
        i, j, k = mapped
        if i == j or j == k or i == k:
            dropped += 1
            continue
        new_tris.append((i, j, k))
    # representatives created only by collapsed triangles are unreferenced
    used = sorted({v for t in new_tris for v in t})
    if len(used) < len(new_verts):
        compact = {old: new for new, old in enumerate(used)}
        new_verts = [new_verts[v] for v in used]
        new_tris = [(compact[i], compact[j], compact[k]) for i, j, k in new_tris]
    return WeldResult(TriangleMesh.trusted(new_verts, new_tris), dropped)


def undirected_edge_uses(mesh: TriangleMesh) -> Counter:
    """Count of incident triangles for each undirected edge."""
    uses: Counter = Counter()
    for i, j, k in mesh.triangles:
        uses[edge_key(i, j)] += 1
        uses[edge_key(j, k)] += 1
        uses[edge_key(k, i)] += 1
    return uses


def boundary_edges(mesh: TriangleMesh) -> list[tuple[int, int]]:
    return [e for e, n in undirected_edge_uses(mesh).items() if n == 1]


def is_closed_manifold(mesh: TriangleMesh) -> bool:
    uses = undirected_edge_uses(mesh)
    return bool(uses) and all(n == 2 for n in uses.values())


def triangle_normal(mesh: TriangleMesh, t: Triangle) -> Point3:
    """Unnormalized normal following the triangle's winding."""
    p0, p1, p2 = (mesh.vertices[i] for i in t)
    ux, uy, uz = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    vx, vy, vz = p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]
    return (uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx)
