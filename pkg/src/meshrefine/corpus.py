"""Synthetic test meshes standing in for CAD exports."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .mesh import TriangleMesh, weld_vertices

SHAPES = ("hexagon", "skewed_hexagon", "icosphere", "cylinder", "needle_soup", "stretched_panel")


@dataclass(frozen=True)
class CorpusSpec:
    shape: str
    radius: float = 1.0
    level: int = 0
    aspect: float = 20.0
    count: int = 200
    seed: int = 0
    height: float = 2.0
    segments: int = 12

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f"unknown shape {self.shape!r}; expected one of {', '.join(SHAPES)}")
        if not self.radius > 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")
        if self.level < 0:
            raise ConfigError(f"level must be >= 0, got {self.level}")
        if not self.aspect >= 1:
            raise ConfigError(f"aspect must be >= 1, got {self.aspect}")
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")
        if self.shape == "stretched_panel" and self.count % 2:
            raise ConfigError(f"stretched_panel needs an even triangle count, got {self.count}")
        if self.segments < 3:
            raise ConfigError(f"segments must be >= 3, got {self.segments}")

    def to_dict(self):
        return asdict(self)

    @property
    def name(self):
        extra = {
            "icosphere": f"level{self.level}",
            "cylinder": f"seg{self.segments}",
            "needle_soup": f"n{self.count}_a{self.aspect:g}_s{self.seed}",
            "stretched_panel": f"n{self.count}_a{self.aspect:g}_s{self.seed}",
        }.get(self.shape)
        return f"{self.shape}-{extra}" if extra else self.shape


def hexagon(radius=1.0) -> TriangleMesh:
    """Regular hexagon fanned around its centre: 7 vertices, 6 equilateral triangles."""
    verts = [(0.0, 0.0, 0.0)]
    for i in range(6):
        t = math.pi / 3 * i
        verts.append((radius * math.cos(t), radius * math.sin(t), 0.0))
    tris = [(0, 1 + i, 1 + (i + 1) % 6) for i in range(6)]
    return TriangleMesh(verts, tris)


def skewed_hexagon(radius=1.0) -> TriangleMesh:
    """Hexagon with an off-centre hub and stretched rim, so its triangles are unequal."""
    verts = [(0.3 * radius, 0.1 * radius, 0.0)]
    for i, s in enumerate((1.6, 1.0, 0.7, 1.2, 0.9, 0.6)):
        t = math.pi / 3 * i
        verts.append((s * radius * math.cos(t) * 1.8, s * radius * math.sin(t), 0.0))
    tris = [(0, 1 + i, 1 + (i + 1) % 6) for i in range(6)]
    return TriangleMesh(verts, tris)


def icosahedron(radius=1.0) -> TriangleMesh:
    phi = (1 + math.sqrt(5)) / 2
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    norm = math.sqrt(1 + phi * phi)
    verts = [tuple(radius * c / norm for c in v) for v in raw]
    tris = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return TriangleMesh(verts, tris)


def icosphere(level=0, radius=1.0) -> TriangleMesh:
    """Icosahedron quartered ``level`` times with midpoints pushed onto the sphere."""
    mesh = icosahedron(radius)
    verts = list(mesh.vertices)
    tris = list(mesh.triangles)
    for _ in range(level):
        mids: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in mids:
                p, q = verts[key[0]], verts[key[1]]
                m = [(p[d] + q[d]) / 2 for d in range(3)]
                s = radius / math.sqrt(sum(c * c for c in m))
                verts.append(tuple(c * s for c in m))
                mids[key] = len(verts) - 1
            return mids[key]

        new = []
        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        tris = new
    return TriangleMesh(verts, tris)


def cylinder(radius=1.0, height=2.0, segments=12) -> TriangleMesh:
    """Closed cylinder: one ring of tall side triangles and two fanned caps."""
    verts = []
    for z in (0.0, height):
        for i in range(segments):
            t = 2 * math.pi * i / segments
            verts.append((radius * math.cos(t), radius * math.sin(t), z))
    bottom, top = len(verts), len(verts) + 1
    verts += [(0.0, 0.0, 0.0), (0.0, 0.0, height)]
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris += [(i, j, segments + j), (i, segments + j, segments + i)]
        tris += [(bottom, j, i), (top, segments + i, segments + j)]
    return TriangleMesh(verts, tris)


def needle_soup(count=100, aspect=10.0, seed=0, radius=1.0) -> TriangleMesh:
    """Disjoint isoceles needles (length / base width = ``aspect``) scattered in a box."""
    rng = np.random.default_rng(seed)
    verts, tris = [], []
    extent = 4.0 * radius * max(1.0, count ** (1 / 3))
    for n in range(count):
        centre = rng.uniform(-extent, extent, size=3)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        side = rng.normal(size=3)
        side -= side.dot(axis) * axis
        side /= np.linalg.norm(side)
        length = radius * rng.uniform(1.0, 2.0)
        width = length / aspect
        a = centre - 0.5 * length * axis
        b = centre + 0.5 * length * axis
        c = centre + width * side
        base = len(verts)
        verts += [tuple(float(x) for x in p) for p in (a, b, c)]
        tris.append((base, base + 1, base + 2))
    return TriangleMesh(verts, tris)


def _grid_shape(cells: int) -> tuple[int, int]:
    ny = int(math.isqrt(cells))
    while cells % ny:
        ny -= 1
    return cells // ny, ny


def stretched_panel(count=200, aspect=20.0, seed=0, radius=1.0, shear=1.0) -> TriangleMesh:
    """Flat panel of stretched, partly obtuse triangles.

    A tensor grid whose column widths and row heights are drawn log-uniformly
    so the cell aspect ratios span [1, ``aspect``]. Each grid line is shifted
    sideways by a random amount (up to ``shear`` times the mean column width),
    turning the cells into parallelograms, and each cell is cut along a
    randomly chosen diagonal. The result is conforming and planar.
    """
    nx, ny = _grid_shape(count // 2)
    rng = np.random.default_rng(seed)
    half = math.log(aspect) / 2
    # widths in [1, sqrt(aspect)], heights in [1/sqrt(aspect), 1] -> cell aspect in [1, aspect]
    widths = np.exp(rng.uniform(0.0, half, size=nx))
    heights = np.exp(rng.uniform(-half, 0.0, size=ny))
    if nx > 1 and ny > 1:
        widths[0], heights[0] = math.exp(half), math.exp(-half)  # pin the extremes
        widths[1], heights[1] = 1.0, 1.0
    xs = np.concatenate([[0.0], np.cumsum(widths)])
    ys = np.concatenate([[0.0], np.cumsum(heights)])
    shifts = rng.uniform(-shear, shear, size=ny + 1) * widths.mean()
    scale = radius / max(xs[-1], ys[-1])
    verts = [(float((x + shifts[j]) * scale), float(y * scale), 0.0) for j, y in enumerate(ys) for x in xs]
    flips = rng.integers(0, 2, size=(ny, nx))
    tris = []
    row = nx + 1
    for j in range(ny):
        for i in range(nx):
            v00 = j * row + i
            v10, v01, v11 = v00 + 1, v00 + row, v00 + row + 1
            if flips[j, i]:
                tris += [(v00, v10, v11), (v00, v11, v01)]
            else:
                tris += [(v00, v10, v01), (v10, v11, v01)]
    return TriangleMesh(verts, tris)


def generate_corpus(spec: CorpusSpec) -> TriangleMesh:
    """Build the mesh described by ``spec``; deterministic for a given seed."""
    if spec.shape == "hexagon":
        mesh = hexagon(spec.radius)
    elif spec.shape == "skewed_hexagon":
        mesh = skewed_hexagon(spec.radius)
    elif spec.shape == "icosphere":
        mesh = icosphere(spec.level, spec.radius)
    elif spec.shape == "cylinder":
        mesh = cylinder(spec.radius, spec.height, spec.segments)
    elif spec.shape == "needle_soup":
        mesh = needle_soup(spec.count, spec.aspect, spec.seed, spec.radius)
    else:
        mesh = stretched_panel(spec.count, spec.aspect, spec.seed, spec.radius)
    welded, dropped = weld_vertices(mesh)
    if dropped or welded.n_vertices != mesh.n_vertices:
        raise ConfigError(f"{spec.name}: generator produced coincident vertices")
    return mesh
