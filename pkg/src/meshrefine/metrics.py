"""Triangle shape measures and the histogram report used to compare methods."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import MeshDomainError
from .mesh import Point3, TriangleMesh, edge_key

DEGENERATE_Q = 1e-12
DEGENERATE_SIDE = 1e-12  # times the bounding-box diagonal
ANGLE_BASIS = "all_angles"  # angle fractions are over 3 * (non-degenerate triangles)


def quality_q(a: float, b: float, c: float) -> float:
    """Inscribed-circle shape measure ``(a+b-c)(a+c-b)(b+c-a) / abc``.

    Equals ``2 r / R`` (inradius over circumradius): 1 for an equilateral
    triangle, 0 when the triangle inequality is tight.
    """
    if not (a > 0 and b > 0 and c > 0):
        raise MeshDomainError(f"side lengths must be positive, got {(a, b, c)}")
    x, y, z = a + b - c, a + c - b, b + c - a
    slack = 1e-9 * max(a, b, c)
    if min(x, y, z) < -slack:
        raise MeshDomainError(f"sides {(a, b, c)} violate the triangle inequality")
    q = max(x, 0.0) * max(y, 0.0) * max(z, 0.0) / (a * b * c)
    return min(q, 1.0)


def _corner_angle(p, q, r) -> float:
    # angle at p between pq and pr, in degrees
    ux, uy, uz = q[0] - p[0], q[1] - p[1], q[2] - p[2]
    vx, vy, vz = r[0] - p[0], r[1] - p[1], r[2] - p[2]
    cx, cy, cz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
    return math.degrees(math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), ux * vx + uy * vy + uz * vz))


def triangle_angles(p0: Point3, p1: Point3, p2: Point3) -> tuple[float, float, float]:
    """Interior angles (degrees) at ``p0``, ``p1``, ``p2``.

    Uses atan2(|u x v|, u . v), which stays accurate near 0 and 180 degrees.
    """
    a2 = _sq(p1, p2)
    b2 = _sq(p0, p2)
    c2 = _sq(p0, p1)
    twice_area = _twice_area(p0, p1, p2)
    if twice_area <= 1e-12 * max(a2, b2, c2) or twice_area == 0.0:
        raise MeshDomainError(f"degenerate triangle {(p0, p1, p2)}")
    return (_corner_angle(p0, p1, p2), _corner_angle(p1, p2, p0), _corner_angle(p2, p0, p1))


def _sq(p, q):
    return (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2


def _twice_area(p0, p1, p2):
    ux, uy, uz = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    vx, vy, vz = p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]
    return math.sqrt((uy * vz - uz * vy) ** 2 + (uz * vx - ux * vz) ** 2 + (ux * vy - uy * vx) ** 2)


def _corner_angles(p, q, r):
    u, v = q - p, r - p
    return np.degrees(np.arctan2(np.linalg.norm(np.cross(u, v), axis=1), np.einsum("ij,ij->i", u, v)))


def vertex_b_values(mesh: TriangleMesh, L_limit: float) -> list[float]:
    """Shortest incident edge over ``L_limit`` for every referenced vertex.

    Values are returned in ascending vertex-index order.
    """
    if not L_limit > 0:
        raise MeshDomainError(f"length limit must be positive, got {L_limit}")
    shortest: dict[int, float] = {}
    verts = mesh.vertices
    seen = set()
    for i, j, k in mesh.triangles:
        for a, b in ((i, j), (j, k), (k, i)):
            key = edge_key(a, b)
            if key in seen:
                continue
            seen.add(key)
            d = math.dist(verts[key[0]], verts[key[1]])
            for v in key:
                if d < shortest.get(v, math.inf):
                    shortest[v] = d
    return [shortest[v] / L_limit for v in sorted(shortest)]


@dataclass
class QualityReport:
    """Element counts plus angle, quality and b-value distributions of one mesh."""

    method: str
    limit: float
    vertices: int
    meshes: int
    angle_lt15: float = 0.0
    angle_lt30: float = 0.0
    angle_gt90: float = 0.0
    angle_gt120: float = 0.0
    angle_ideal_40_80: float = 0.0
    q_lt03: float = 0.0
    q_lt05: float = 0.0
    q_gt08: float = 0.0
    b_histogram: list[int] = field(default_factory=list)
    time_sec: float | None = 0.0
    created_total: int | None = None
    stack_high_water: int | None = None
    degenerate: int = 0
    angle_basis: str = ANGLE_BASIS

    def to_dict(self) -> dict:
        return asdict(self)


def build_report(
    mesh: TriangleMesh,
    L_limit: float,
    elapsed: float | None = 0.0,
    label: str = "",
    *,
    b_bins: int = 20,
    created_total: int | None = None,
    stack_high_water: int | None = None,
) -> QualityReport:
    """Summarize ``mesh`` in the column layout of the method comparison table.

    Angle fractions are over all angles of non-degenerate triangles; quality
    fractions are over non-degenerate triangles. Degenerate triangles are only
    counted. ``elapsed=None`` leaves the time unset. b-values above 1 (mesh not refined to ``L_limit``) fall in the
    last histogram bin.
    """
    pts = np.asarray(mesh.vertices, dtype=float).reshape(-1, 3)
    tris = np.asarray(mesh.triangles, dtype=np.int64).reshape(-1, 3)
    p0, p1, p2 = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    a = np.linalg.norm(p2 - p1, axis=1)
    b = np.linalg.norm(p2 - p0, axis=1)
    c = np.linalg.norm(p1 - p0, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (
            np.clip(a + b - c, 0, None) * np.clip(a + c - b, 0, None) * np.clip(b + c - a, 0, None) / (a * b * c)
        )
    side_eps = DEGENERATE_SIDE * mesh.bbox_diagonal()
    ok = (np.minimum(np.minimum(a, b), c) > side_eps) & (q >= DEGENERATE_Q)
    degenerate = int(len(tris) - ok.sum())
    qs = np.minimum(q[ok], 1.0)
    g0, g1, g2 = p0[ok], p1[ok], p2[ok]
    angles = np.concatenate([_corner_angles(g0, g1, g2), _corner_angles(g1, g2, g0), _corner_angles(g2, g0, g1)])

    report = QualityReport(
        method=label,
        limit=float(L_limit),
        vertices=len(mesh.referenced_vertices()),
        meshes=len(mesh.triangles),
        time_sec=None if elapsed is None else float(elapsed),
        created_total=created_total,
        stack_high_water=stack_high_water,
        degenerate=degenerate,
    )
    if angles.size:
        report.angle_lt15 = float(np.mean(angles < 15.0))
        report.angle_lt30 = float(np.mean(angles < 30.0))
        report.angle_gt90 = float(np.mean(angles > 90.0))
        report.angle_gt120 = float(np.mean(angles > 120.0))
        report.angle_ideal_40_80 = float(np.mean((angles >= 40.0) & (angles <= 80.0)))
    if qs.size:
        report.q_lt03 = float(np.mean(qs < 0.3))
        report.q_lt05 = float(np.mean(qs < 0.5))
        report.q_gt08 = float(np.mean(qs > 0.8))
    if mesh.triangles and L_limit > 0:
        bvals = np.clip(vertex_b_values(mesh, L_limit), 0.0, 1.0)
        counts, _ = np.histogram(bvals, bins=b_bins, range=(0.0, 1.0))
        report.b_histogram = [int(n) for n in counts]
    else:
        report.b_histogram = [0] * b_bins
    return report
