import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from meshrefine.corpus import icosphere, stretched_panel
from meshrefine.errors import MeshDomainError, MeshStructureError
from meshrefine.mesh import (
    EdgeKey,
    MidpointCache,
    TriangleMesh,
    edge_length,
    get_or_create_midpoint,
    undirected_edge_uses,
    weld_vertices,
)


def test_edge_length_examples():
    m = TriangleMesh([(0, 0, 0), (2, 0, 0), (1, 1, 1)], [(0, 1, 2)])
    assert edge_length(m, EdgeKey.of(0, 1)) == 2.0
    assert edge_length(m, EdgeKey.of(0, 2)) == pytest.approx(1.7320508, abs=1e-7)


def test_edge_length_coincident_points_is_zero():
    m = TriangleMesh.trusted([(1.0, 2.0, 3.0), (1.0, 2.0, 3.0)], [])
    assert edge_length(m, (0, 1)) == 0.0


def test_edge_length_index_out_of_range():
    m = TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])
    with pytest.raises(MeshStructureError):
        edge_length(m, (0, 7))


@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_edge_key_canonical(i, j):
    if i == j:
        with pytest.raises(MeshStructureError):
            EdgeKey.of(i, j)
        return
    k = EdgeKey.of(i, j)
    assert k == EdgeKey.of(j, i)
    assert k.a < k.b


def test_mesh_rejects_bad_triangles_and_coordinates():
    with pytest.raises(MeshStructureError):
        TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 0, 2)])
    with pytest.raises(MeshStructureError):
        TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 3)])
    with pytest.raises(MeshDomainError):
        TriangleMesh([(0, 0, 0), (1, math.nan, 0), (0, 1, 0)], [(0, 1, 2)])
    with pytest.raises(MeshDomainError):
        TriangleMesh([(0, 0, 0), (1, math.inf, 0), (0, 1, 0)], [(0, 1, 2)])


class TestMidpoint:
    def test_first_query_appends(self):
        m = TriangleMesh([(0, 0, 0), (4, 0, 0), (0, 1, 0)], [(0, 1, 2)])
        cache = MidpointCache()
        idx = get_or_create_midpoint(m, cache, (0, 1))
        assert idx == 3
        assert m.vertices[3] == (2.0, 0.0, 0.0)

    def test_second_query_hits_cache(self):
        m = TriangleMesh([(0, 0, 0), (4, 0, 0), (0, 1, 0)], [(0, 1, 2)])
        cache = MidpointCache()
        first = get_or_create_midpoint(m, cache, (1, 0))
        n = m.n_vertices
        assert get_or_create_midpoint(m, cache, (0, 1)) == first
        assert m.n_vertices == n

    def test_shared_edge_gets_one_midpoint(self):
        # two triangles across edge 1-2, each asking with its own winding
        m = TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)], [(0, 1, 2), (1, 3, 2)])
        cache = MidpointCache()
        a = get_or_create_midpoint(m, cache, (1, 2))
        b = get_or_create_midpoint(m, cache, (2, 1))
        assert a == b
        assert m.n_vertices == 5

    @given(st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6))
    def test_midpoint_independent_of_call_order(self, c):
        verts = [tuple(c[:3]), tuple(c[3:]), (0.5, -7.0, 3.0)]
        m1 = TriangleMesh.trusted(list(verts), [])
        m2 = TriangleMesh.trusted(list(verts), [])
        i1 = get_or_create_midpoint(m1, MidpointCache(), (0, 1))
        i2 = get_or_create_midpoint(m2, MidpointCache(), (1, 0))
        assert m1.vertices[i1] == m2.vertices[i2]


class TestWeld:
    def test_stl_style_duplicates(self):
        soup = TriangleMesh(
            [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)],
            [(0, 1, 2), (3, 4, 5)],
        )
        welded, dropped = weld_vertices(soup, 1e-9)
        assert (welded.n_vertices, welded.n_triangles, dropped) == (4, 2, 0)

    def test_zero_tolerance_still_merges_exact_duplicates(self):
        soup = TriangleMesh(
            [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)],
            [(0, 1, 2), (3, 4, 5)],
        )
        welded, _ = weld_vertices(soup, 0.0)
        assert welded.n_vertices == 4

    def test_needle_collapse_is_dropped_and_counted(self):
        soup = TriangleMesh(
            [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 0, 0), (1 + 1e-12, 0, 0), (2, 1, 0)],
            [(0, 1, 2), (3, 4, 5)],
        )
        welded, dropped = weld_vertices(soup, 1e-9)
        assert dropped == 1
        assert welded.n_triangles == 1

    def test_near_duplicates_within_default_tolerance(self):
        soup = TriangleMesh(
            [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1 + 1e-13, 0, 0), (1, 1, 0), (0, 1 - 1e-13, 0)],
            [(0, 1, 2), (3, 4, 5)],
        )
        welded, _ = weld_vertices(soup)
        assert welded.n_vertices == 4

    def test_negative_tolerance(self):
        with pytest.raises(MeshDomainError):
            weld_vertices(TriangleMesh(), -1.0)

    @given(st.integers(0, 50), st.sampled_from([0.0, 1e-3, 0.05]))
    def test_idempotent(self, seed, tol):
        import numpy as np

        rng = np.random.default_rng(seed)
        # clustered points so that some, but not all, fall within tolerance
        pts = rng.integers(0, 6, size=(30, 3)) * 0.03 + rng.normal(scale=0.01, size=(30, 3))
        tris = [tuple(int(x) for x in rng.choice(30, 3, replace=False)) for _ in range(20)]
        m = TriangleMesh([tuple(p) for p in pts], tris)
        once, _ = weld_vertices(m, tol)
        twice, dropped = weld_vertices(once, tol)
        assert (twice.n_vertices, twice.n_triangles, dropped) == (once.n_vertices, once.n_triangles, 0)

    def test_representatives_farther_apart_than_tolerance(self):
        import numpy as np

        rng = np.random.default_rng(3)
        pts = rng.uniform(0, 1, size=(200, 3))
        m = TriangleMesh([tuple(p) for p in pts], [(3 * i, 3 * i + 1, 3 * i + 2) for i in range(66)])
        welded, _ = weld_vertices(m, 0.08)
        v = np.asarray(welded.vertices)
        d = np.linalg.norm(v[:, None] - v[None], axis=2)
        np.fill_diagonal(d, np.inf)
        assert d.min() > 0.08


class TestEdgeUses:
    def test_single_triangle(self):
        m = TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])
        uses = undirected_edge_uses(m)
        assert len(uses) == 3 and set(uses.values()) == {1}

    @pytest.mark.parametrize("level", [0, 1, 2])
    def test_closed_icosphere(self, level):
        uses = undirected_edge_uses(icosphere(level))
        assert set(uses.values()) == {2}

    def test_t_vertex_detected(self):
        # big triangle 0-1-2 beside two half-size triangles sharing midpoint 4 of edge 0-1
        verts = [(0, 0, 0), (2, 0, 0), (1, -2, 0), (1, 1, 0), (1, 0, 0)]
        m = TriangleMesh(verts, [(0, 2, 1), (0, 4, 3), (4, 1, 3)])
        uses = undirected_edge_uses(m)
        assert uses[(0, 1)] == 1
        assert uses[(0, 4)] == 1 and uses[(1, 4)] == 1

    def test_panel_interior_edges_used_twice(self):
        m = stretched_panel(count=50, seed=1)
        uses = undirected_edge_uses(m)
        assert set(uses.values()) == {1, 2}
