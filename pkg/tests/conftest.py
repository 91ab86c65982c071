import math

import pytest

from meshrefine.corpus import hexagon, icosphere
from meshrefine.mesh import TriangleMesh


def tri_mesh(*pts):
    """Single-triangle mesh from 2D or 3D points."""
    return TriangleMesh([tuple(p) + (0.0,) * (3 - len(p)) for p in pts], [(0, 1, 2)])


@pytest.fixture
def right345():
    # A(0,0) B(4,0) C(0,3): edges AB=4, BC=5, CA=3
    return tri_mesh((0, 0), (4, 0), (0, 3))


@pytest.fixture
def needle():
    return tri_mesh((0, 0), (10, 0), (5, 0.5))


@pytest.fixture
def equilateral2():
    return tri_mesh((0, 0), (2, 0), (1, math.sqrt(3)))


@pytest.fixture
def regular_hexagon():
    return hexagon(1.0)


@pytest.fixture(params=[0, 1, 2])
def sphere(request):
    return icosphere(request.param)


@pytest.fixture
def t_vertex_pair():
    """Wide triangle A=(0,1,2) next to a small triangle B=(0,3,1) across the short edge 0-1.

    At limit 2 only A has long edges; the shared edge (length 1) is short.
    """
    verts = [(0.0, 0.0, 0.0), (0.0, 1.0, 0.0), (-4.0, 0.0, 0.0), (1.0, 0.5, 0.0)]
    return TriangleMesh(verts, [(0, 1, 2), (0, 3, 1)])


# --- acceptance summary ------------------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): test belongs to an acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_acceptance", None)
    if marker is None:
        return
    number, title = marker
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "ran": False})
    if report.when == "call":
        entry["ran"] = True
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result()._acceptance = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number}: {entry['title']}")
