"""Edge-length driven local subdivision.

Every method runs the same stack loop: pop a triangle, count its edges longer
than the active limit, and either emit it (no long edges) or replace it by the
children of a stencil. The stencils differ only in which triangles they cut:

* classic: any triangle with a long edge is quartered through its three
  edge midpoints.
* novel: one long edge -> bisection, two -> three-way split, three -> quartering.
  Short edges are never cut, so the split decision depends on the edge alone
  and neighbouring triangles stay conforming.
* angle_restricted: as novel, but an all-long triangle whose two smallest
  angles are below ``theta_0`` is quartered through the longest edge's midpoint
  instead, so only two of its four children keep the parent's shape.
* multistage: novel subdivision repeated with limits ``L_0 / f**k`` clamped to
  the final limit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConfigError, InvariantError, MeshDomainError
from .mesh import MidpointCache, Triangle, TriangleMesh, edge_key, get_or_create_midpoint
from .metrics import triangle_angles

METHODS = ("classic", "novel", "multistage", "angle_restricted")
DEFAULT_INITIAL_FACTOR = 4.0
DEGENERATE_Q = 1e-12
STENCILS = ("quarter", "three", "bisect", "restricted")


@dataclass(frozen=True)
class SubdivisionConfig:
    method: str = "novel"
    L_threshold: float = 1.0
    L_0: float | None = None
    fold_factor: float = 2.0
    theta_0: float = 30.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if not (math.isfinite(self.L_threshold) and self.L_threshold > 0):
            raise ConfigError(f"edge-length limit must be positive, got {self.L_threshold}")
        if self.method == "multistage":
            if not self.fold_factor > 1 or not math.isfinite(self.fold_factor):
                raise ConfigError(f"fold factor must be > 1, got {self.fold_factor}")
            if not (math.isfinite(self.initial_limit) and self.initial_limit >= self.L_threshold):
                raise ConfigError(
                    f"initial limit {self.initial_limit} must be >= the final limit {self.L_threshold}"
                )
        if self.method == "angle_restricted" and not 0 < self.theta_0 < 60:
            raise ConfigError(f"angle threshold must lie in (0, 60) degrees, got {self.theta_0}")

    @property
    def initial_limit(self) -> float:
        return self.L_0 if self.L_0 is not None else DEFAULT_INITIAL_FACTOR * self.L_threshold

    def stage_limits(self) -> list[float]:
        """Limits of the successive multistage passes, ending at ``L_threshold``."""
        if self.method != "multistage":
            return [self.L_threshold]
        limits = []
        k = 0
        while True:
            lim = max(self.initial_limit / self.fold_factor**k, self.L_threshold)
            limits.append(lim)
            if lim == self.L_threshold:
                return limits
            k += 1


class TriangleClass(NamedTuple):
    """Classification of one triangle against a length limit.

    ``positions`` index the triangle's directed edges (``i`` is the edge from
    ``tri[i]`` to ``tri[(i + 1) % 3]``), longest first; ``unqualified`` holds
    the matching canonical edge keys.
    """

    unqualified_count: int
    unqualified: tuple[tuple[int, int], ...]
    positions: tuple[int, ...]
    lengths: tuple[float, float, float]
    two_acute_below_theta0: bool = False
    degenerate: bool = False


def _edge_lengths(verts, tri) -> tuple[float, float, float]:
    i, j, k = tri
    dist = math.dist
    # canonical endpoint order keeps the value identical for both incident triangles
    return (
        dist(verts[i], verts[j]) if i < j else dist(verts[j], verts[i]),
        dist(verts[j], verts[k]) if j < k else dist(verts[k], verts[j]),
        dist(verts[k], verts[i]) if k < i else dist(verts[i], verts[k]),
    )


def _order_by_length(tri, lengths, positions):
    # longest first; exact ties resolved by ascending edge key
    return sorted(
        positions,
        key=lambda p: (-lengths[p], edge_key(tri[p], tri[(p + 1) % 3])),
    )


def _is_degenerate(lengths) -> bool:
    a, b, c = lengths
    if a <= 0 or b <= 0 or c <= 0:
        return True
    q = max(a + b - c, 0.0) * max(a + c - b, 0.0) * max(b + c - a, 0.0) / (a * b * c)
    return q < DEGENERATE_Q


def classify(mesh: TriangleMesh, tri: Triangle, limit: float, theta_0: float | None = None) -> TriangleClass:
    """Count and order the edges of ``tri`` that are strictly longer than ``limit``.

    The acute flag is evaluated only for ``theta_0`` given and all three edges
    long, the only case where it changes the stencil.
    """
    if not limit > 0:
        raise MeshDomainError(f"limit must be positive, got {limit}")
    lengths = _edge_lengths(mesh.vertices, tri)
    long_pos = [p for p in range(3) if lengths[p] > limit]
    degenerate = _is_degenerate(lengths)
    if len(long_pos) > 1:
        long_pos = _order_by_length(tri, lengths, long_pos)
    keys = tuple(edge_key(tri[p], tri[(p + 1) % 3]) for p in long_pos)
    acute = False
    if theta_0 is not None and len(long_pos) == 3 and not degenerate:
        angles = sorted(triangle_angles(*(mesh.vertices[i] for i in tri)))
        acute = angles[0] < theta_0 and angles[1] < theta_0
    return TriangleClass(len(long_pos), keys, tuple(long_pos), lengths, acute, degenerate)


def split_quarter(mesh: TriangleMesh, cache: MidpointCache, tri: Triangle) -> list[Triangle]:
    """Three corner triangles plus the medial triangle."""
    v0, v1, v2 = tri
    m01 = get_or_create_midpoint(mesh, cache, (v0, v1))
    m12 = get_or_create_midpoint(mesh, cache, (v1, v2))
    m20 = get_or_create_midpoint(mesh, cache, (v2, v0))
    return [(v0, m01, m20), (m01, v1, m12), (m20, m12, v2), (m01, m12, m20)]


def split_three(mesh: TriangleMesh, cache: MidpointCache, tri: Triangle, cls: TriangleClass) -> list[Triangle]:
    """Split the two long edges; fan from the vertex opposite the longest one.

    The short edge is left intact.
    """
    if cls.unqualified_count != 2:
        raise InvariantError(f"split_three needs 2 long edges, got {cls.unqualified_count}")
    p = cls.positions[0]
    a, b, c = tri[p], tri[(p + 1) % 3], tri[(p + 2) % 3]  # longest edge a->b, c opposite
    m_long = get_or_create_midpoint(mesh, cache, (a, b))
    if cls.positions[1] == (p + 1) % 3:
        # second edge b->c; corner kept at b
        m_sec = get_or_create_midpoint(mesh, cache, (b, c))
        return [(m_long, b, m_sec), (c, a, m_long), (m_long, m_sec, c)]
    # second edge c->a; corner kept at a
    m_sec = get_or_create_midpoint(mesh, cache, (c, a))
    return [(a, m_long, m_sec), (m_long, b, c), (m_long, c, m_sec)]


def split_bisect(mesh: TriangleMesh, cache: MidpointCache, tri: Triangle, cls: TriangleClass) -> list[Triangle]:
    """Join the midpoint of the single long edge to the opposite vertex."""
    if cls.unqualified_count != 1:
        raise InvariantError(f"split_bisect needs 1 long edge, got {cls.unqualified_count}")
    p = cls.positions[0]
    a, b, c = tri[p], tri[(p + 1) % 3], tri[(p + 2) % 3]
    m = get_or_create_midpoint(mesh, cache, (a, b))
    return [(a, m, c), (m, b, c)]


def split_angle_restricted(
    mesh: TriangleMesh, cache: MidpointCache, tri: Triangle, cls: TriangleClass | None = None
) -> list[Triangle]:
    """Quarter a long, thin triangle around the midpoint of its longest edge.

    With the longest edge AB, C opposite (largest angle) and midpoints M1 on CA,
    M2 on CB, M3 on AB, the children are (A, M3, M1), (M3, B, M2), (M3, M2, C)
    and (M3, C, M1). Only the two corner children at A and B are similar to
    the parent. The quadrilateral M1-C-M2-M3 is cut along C-M3.
    """
    if cls is not None and not (cls.unqualified_count == 3 and cls.two_acute_below_theta0):
        raise InvariantError("split_angle_restricted needs 3 long edges and two angles below theta_0")
    if cls is not None:
        p = cls.positions[0]
    else:
        lengths = _edge_lengths(mesh.vertices, tri)
        p = _order_by_length(tri, lengths, [0, 1, 2])[0]
    a, b, c = tri[p], tri[(p + 1) % 3], tri[(p + 2) % 3]
    m3 = get_or_create_midpoint(mesh, cache, (a, b))
    m2 = get_or_create_midpoint(mesh, cache, (b, c))
    m1 = get_or_create_midpoint(mesh, cache, (c, a))
    return [(a, m3, m1), (m3, b, m2), (m3, m2, c), (m3, c, m1)]


@dataclass
class StageResult:
    limit: float
    created_total: int
    final_triangles: int
    new_vertices: int
    stack_high_water: int
    degenerate: int
    elapsed: float
    stencils: dict[str, int] = field(default_factory=dict)


@dataclass
class SubdivisionOutcome:
    mesh: TriangleMesh
    triangles_created_total: int
    final_triangles: int
    new_vertices: int
    stack_high_water: int
    elapsed: float
    degenerate: int = 0
    stages: list[StageResult] = field(default_factory=list)

    @property
    def stencils(self) -> dict[str, int]:
        """How often each stencil fired, summed over stages."""
        total = dict.fromkeys(STENCILS, 0)
        for st in self.stages:
            for name, n in st.stencils.items():
                total[name] += n
        return total


def _run_stage(mesh: TriangleMesh, limit: float, method: str, theta_0: float | None) -> StageResult:
    """Subdivide ``mesh`` in place (vertices appended, triangles replaced)."""
    t0 = time.perf_counter()
    cache = MidpointCache()
    n_vertices_in = len(mesh.vertices)
    stack = list(reversed(mesh.triangles))
    out: list[Triangle] = []
    created = len(stack)
    high_water = len(stack)
    degenerate = 0
    restricted = method == "angle_restricted"
    theta = theta_0 if restricted else None
    classic = method == "classic"
    fired = dict.fromkeys(STENCILS, 0)

    verts = mesh.vertices
    dist = math.dist
    while stack:
        tri = stack.pop()
        i, j, k = tri
        # fast path for finished triangles; same canonical-order lengths as classify()
        if (
            (dist(verts[i], verts[j]) if i < j else dist(verts[j], verts[i])) <= limit
            and (dist(verts[j], verts[k]) if j < k else dist(verts[k], verts[j])) <= limit
            and (dist(verts[k], verts[i]) if k < i else dist(verts[i], verts[k])) <= limit
        ):
            out.append(tri)
            continue
        cls = classify(mesh, tri, limit, theta)
        n = cls.unqualified_count
        if cls.degenerate:
            degenerate += 1
            out.append(tri)
            continue
        if classic or n == 3:
            if restricted and cls.two_acute_below_theta0:
                children = split_angle_restricted(mesh, cache, tri, cls)
                fired["restricted"] += 1
            else:
                children = split_quarter(mesh, cache, tri)
                fired["quarter"] += 1
        elif n == 2:
            children = split_three(mesh, cache, tri, cls)
            fired["three"] += 1
        else:
            children = split_bisect(mesh, cache, tri, cls)
            fired["bisect"] += 1
        # reversed so the first child is processed next (depth-first, stable order)
        stack.extend(reversed(children))
        created += len(children)
        if len(stack) > high_water:
            high_water = len(stack)

    mesh.triangles = out
    return StageResult(
        limit=limit,
        created_total=created,
        final_triangles=len(out),
        new_vertices=len(mesh.vertices) - n_vertices_in,
        stack_high_water=high_water,
        degenerate=degenerate,
        elapsed=time.perf_counter() - t0,
        stencils=fired,
    )


def _check_input(mesh: TriangleMesh):
    for n, v in enumerate(mesh.vertices):
        if not (math.isfinite(v[0]) and math.isfinite(v[1]) and math.isfinite(v[2])):
            raise MeshDomainError(f"vertex {n} has a non-finite coordinate: {v}")


def subdivide(mesh: TriangleMesh, config: SubdivisionConfig) -> SubdivisionOutcome:
    """Refine ``mesh`` until no edge exceeds ``config.L_threshold``.

    The input is not modified. Output vertices are the input vertices followed
    by the created midpoints. Degenerate triangles with long edges are passed
    through unchanged and counted in ``degenerate``.
    """
    if config.method == "multistage":
        return subdivide_multistage(mesh, config)
    _check_input(mesh)
    work = mesh.copy()
    stage = _run_stage(work, config.L_threshold, config.method, config.theta_0)
    return SubdivisionOutcome(
        mesh=work,
        triangles_created_total=stage.created_total,
        final_triangles=stage.final_triangles,
        new_vertices=stage.new_vertices,
        stack_high_water=stage.stack_high_water,
        elapsed=stage.elapsed,
        degenerate=stage.degenerate,
        stages=[stage],
    )


def subdivide_multistage(mesh: TriangleMesh, config: SubdivisionConfig) -> SubdivisionOutcome:
    """Run novel subdivision at each limit of ``config.stage_limits()``.

    ``triangles_created_total`` counts each triangle once: the input triangles
    plus every child created in any stage.
    """
    if config.method != "multistage":
        config = SubdivisionConfig("multistage", config.L_threshold, config.L_0, config.fold_factor, config.theta_0)
    _check_input(mesh)
    work = mesh.copy()
    stages = []
    created = len(work.triangles)
    for limit in config.stage_limits():
        n_in = len(work.triangles)
        stage = _run_stage(work, limit, "novel", None)
        created += stage.created_total - n_in
        stages.append(stage)
    return SubdivisionOutcome(
        mesh=work,
        triangles_created_total=created,
        final_triangles=len(work.triangles),
        new_vertices=len(work.vertices) - len(mesh.vertices),
        stack_high_water=max(s.stack_high_water for s in stages),
        elapsed=sum(s.elapsed for s in stages),
        degenerate=stages[-1].degenerate,
        stages=stages,
    )


class ClassicPrediction(NamedTuple):
    n_total: int
    n_leaves: int
    levels: list[int]


def quartering_levels(max_edge: float, L_threshold: float) -> int:
    """ceil(log2(max_edge / L_threshold)), clamped at 0.

    Evaluated by exact halving (division by a power of two is exact in
    binary floating point) so boundary ratios such as 4.0 give 2, not 3.
    """
    k = 0
    while max_edge / 2.0**k > L_threshold:
        k += 1
    return k


def predict_classic_count(mesh: TriangleMesh, L_threshold: float) -> ClassicPrediction:
    """Triangle counts of classic subdivision from edge lengths alone.

    ``n_total`` sums 4**u for u = 0..k_i over triangles (roots and
    intermediates included); ``n_leaves`` sums 4**k_i (the final count).
    """
    if not L_threshold > 0:
        raise MeshDomainError(f"limit must be positive, got {L_threshold}")
    levels = [quartering_levels(max(_edge_lengths(mesh.vertices, t)), L_threshold) for t in mesh.triangles]
    n_total = sum((4 ** (k + 1) - 1) // 3 for k in levels)
    n_leaves = sum(4**k for k in levels)
    return ClassicPrediction(n_total, n_leaves, levels)


def check_max_edge(mesh: TriangleMesh, limit: float, rel_tol: float = 1e-12) -> float:
    """Raise InvariantError if an edge of ``mesh`` exceeds ``limit``; return the max edge."""
    verts = mesh.vertices
    worst = 0.0
    for t in mesh.triangles:
        m = max(_edge_lengths(verts, t))
        if m > worst:
            worst = m
    if worst > limit + rel_tol * mesh.bbox_diagonal():
        raise InvariantError(f"edge of length {worst!r} exceeds limit {limit!r}")
    return worst
