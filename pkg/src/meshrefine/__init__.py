"""Edge-length driven local subdivision of triangle meshes."""

from .errors import ConfigError, InvariantError, MeshDomainError, MeshError, MeshParseError, MeshStructureError
from .mesh import (
    EdgeKey,
    MidpointCache,
    TriangleMesh,
    edge_length,
    get_or_create_midpoint,
    undirected_edge_uses,
    weld_vertices,
)
from .metrics import QualityReport, build_report, quality_q, triangle_angles, vertex_b_values
from .subdivision import (
    SubdivisionConfig,
    SubdivisionOutcome,
    TriangleClass,
    classify,
    predict_classic_count,
    split_angle_restricted,
    split_bisect,
    split_quarter,
    split_three,
    subdivide,
    subdivide_multistage,
)
from .mesh_io import read_mesh, write_mesh, write_report
from .corpus import CorpusSpec, generate_corpus

__version__ = "0.1.0"
