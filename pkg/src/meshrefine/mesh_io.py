"""STL (binary and ASCII) and OBJ reading/writing, plus report serialization.

Binary STL layout: 80-byte header, little-endian u32 triangle count, then one
50-byte record per triangle (f32 normal, 3 x f32 vertex, u16 attribute).
Readers return unwelded triangle soup for STL; stored normals are ignored.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import MeshParseError
from .mesh import TriangleMesh
from .metrics import QualityReport

FORMATS = ("stl_binary", "stl_ascii", "obj")
HEADER_MAGIC = b"meshrefine binary STL"
_HEADER = HEADER_MAGIC + bytes(80 - len(HEADER_MAGIC))
_RECORD = struct.Struct("<12fH")

REPORT_COLUMNS = [
    "method", "limit", "vertices", "meshes",
    "angle_lt15", "angle_lt30", "angle_gt90", "angle_gt120", "angle_ideal_40_80",
    "q_lt03", "q_lt05", "q_gt08", "b_histogram",
    "time_sec", "created_total", "stack_high_water", "degenerate", "angle_basis",
]


class MeshFile(NamedTuple):
    format: str
    data: bytes


def format_from_name(name, default="stl_binary") -> str:
    """Map a file name or CLI format word to one of FORMATS."""
    text = str(name).lower()
    aliases = {"stl": "stl_binary", "stl-ascii": "stl_ascii", "stl_ascii": "stl_ascii",
               "stl-binary": "stl_binary", "stl_binary": "stl_binary", "obj": "obj"}
    if text in aliases:
        return aliases[text]
    suffix = Path(text).suffix
    if suffix == ".obj":
        return "obj"
    if suffix == ".stl":
        return "stl_binary"
    return default


def sniff_format(data: bytes, name=None) -> str:
    if name is not None and Path(str(name)).suffix.lower() == ".obj":
        return "obj"
    return "stl_ascii" if data.lstrip()[:5].lower() == b"solid" else "stl_binary"


# --- STL ---------------------------------------------------------------------


def parse_stl_binary(data: bytes) -> TriangleMesh:
    if len(data) < 84:
        raise MeshParseError(f"binary STL shorter than its 84-byte preamble ({len(data)} bytes)", offset=len(data))
    (count,) = struct.unpack_from("<I", data, 80)
    offset = 84
    verts = []
    for n in range(count):
        if offset + 50 > len(data):
            raise MeshParseError(
                f"binary STL truncated: record {n} of {count} expected at byte offset {offset}, "
                f"file has {len(data)} bytes",
                offset=offset,
            )
        rec = _RECORD.unpack_from(data, offset)
        verts += [rec[3:6], rec[6:9], rec[9:12]]
        offset += 50
    return _soup(verts)


def _soup(verts) -> TriangleMesh:
    tris = [(i, i + 1, i + 2) for i in range(0, len(verts), 3)]
    return TriangleMesh(verts, tris)


def parse_stl_ascii(data: bytes | str) -> TriangleMesh:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    verts: list[tuple[float, float, float]] = []
    state = "start"
    nvert = 0
    lineno = 0

    def fail(msg):
        raise MeshParseError(f"ASCII STL line {lineno}: {msg}", line=lineno)

    def floats(tokens, n):
        if len(tokens) != n:
            fail(f"expected {n} numbers, got {len(tokens)}")
        try:
            vals = tuple(float(t) for t in tokens)
        except ValueError:
            fail(f"malformed number in {' '.join(tokens)!r}")
        if not all(math.isfinite(v) for v in vals):
            fail("non-finite coordinate")
        return vals

    for lineno, line in enumerate(text.splitlines(), start=1):
        tok = line.split()
        if not tok:
            continue
        word = tok[0].lower()
        if state == "start":
            if word != "solid":
                fail(f"expected 'solid', got {tok[0]!r}")
            state = "solid"
        elif state == "solid":
            if word == "endsolid":
                state = "end"
            elif word == "facet" and len(tok) >= 2 and tok[1].lower() == "normal":
                floats(tok[2:], 3)
                state = "facet"
            else:
                fail(f"expected 'facet normal' or 'endsolid', got {line.strip()!r}")
        elif state == "facet":
            if word != "outer" or len(tok) != 2 or tok[1].lower() != "loop":
                fail(f"expected 'outer loop', got {line.strip()!r}")
            state, nvert = "loop", 0
        elif state == "loop":
            if word == "vertex" and nvert < 3:
                verts.append(floats(tok[1:], 3))
                nvert += 1
            elif word == "endloop" and nvert == 3:
                state = "endloop"
            else:
                fail(f"unexpected {line.strip()!r} inside loop")
        elif state == "endloop":
            if word != "endfacet":
                fail(f"expected 'endfacet', got {tok[0]!r}")
            state = "solid"
        elif state == "end":
            if word == "solid":  # several solids in one file
                state = "solid"
            else:
                fail(f"trailing content {tok[0]!r} after endsolid")
    if state != "end":
        lineno += 1
        fail("unexpected end of file")
    return _soup(verts)


def _normal(p0, p1, p2):
    u = (p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2])
    v = (p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2])
    n = (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])
    length = math.sqrt(n[0] ** 2 + n[1] ** 2 + n[2] ** 2)
    if length == 0:
        return (0.0, 0.0, 0.0)
    return (n[0] / length, n[1] / length, n[2] / length)


def _f32_triangles(mesh: TriangleMesh):
    v32 = np.asarray(mesh.vertices, dtype=np.float32).reshape(-1, 3).astype(np.float64)
    for t in mesh.triangles:
        yield tuple(tuple(float(c) for c in v32[i]) for i in t)


def dump_stl_binary(mesh: TriangleMesh) -> bytes:
    out = bytearray(_HEADER)
    out += struct.pack("<I", len(mesh.triangles))
    for p0, p1, p2 in _f32_triangles(mesh):
        out += _RECORD.pack(*_normal(p0, p1, p2), *p0, *p1, *p2, 0)
    return bytes(out)


def dump_stl_ascii(mesh: TriangleMesh, name="meshrefine") -> bytes:
    # float32 values printed with repr so a re-read gives the same doubles as the binary reader
    lines = [f"solid {name}"]
    for p0, p1, p2 in _f32_triangles(mesh):
        n = _normal(p0, p1, p2)
        lines.append(f"  facet normal {n[0]!r} {n[1]!r} {n[2]!r}")
        lines.append("    outer loop")
        for p in (p0, p1, p2):
            lines.append(f"      vertex {p[0]!r} {p[1]!r} {p[2]!r}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return ("\n".join(lines) + "\n").encode("ascii")


# --- OBJ ---------------------------------------------------------------------


def parse_obj(data: bytes | str) -> TriangleMesh:
    """Vertices and faces only; polygons are fan-triangulated from their first corner."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    verts = []
    faces = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tok = line.split("#", 1)[0].split()
        if not tok:
            continue
        if tok[0] == "v":
            try:
                xyz = tuple(float(t) for t in tok[1:4])
            except ValueError:
                raise MeshParseError(f"OBJ line {lineno}: malformed vertex {line.strip()!r}", line=lineno)
            if len(xyz) != 3 or not all(math.isfinite(c) for c in xyz):
                raise MeshParseError(f"OBJ line {lineno}: vertex needs 3 finite coordinates", line=lineno)
            verts.append(xyz)
        elif tok[0] == "f":
            idx = []
            for ref in tok[1:]:
                try:
                    i = int(ref.split("/")[0])
                except ValueError:
                    raise MeshParseError(f"OBJ line {lineno}: malformed face index {ref!r}", line=lineno)
                i = i - 1 if i > 0 else len(verts) + i
                if not 0 <= i < len(verts):
                    raise MeshParseError(
                        f"OBJ line {lineno}: face index {ref} out of range (have {len(verts)} vertices)",
                        line=lineno,
                    )
                idx.append(i)
            if len(idx) < 3:
                raise MeshParseError(f"OBJ line {lineno}: face with fewer than 3 vertices", line=lineno)
            faces.append((lineno, idx))
    tris = []
    for lineno, idx in faces:
        for k in range(1, len(idx) - 1):
            t = (idx[0], idx[k], idx[k + 1])
            if len(set(t)) < 3:
                raise MeshParseError(f"OBJ line {lineno}: face repeats a vertex", line=lineno)
            tris.append(t)
    return TriangleMesh(verts, tris)


def dump_obj(mesh: TriangleMesh) -> bytes:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices]
    lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in mesh.triangles]
    return ("\n".join(lines) + "\n").encode("ascii") if lines else b""


# --- entry points --------------------------------------------------------------


def decode_mesh(data: bytes, format: str | None = None, name=None) -> TriangleMesh:
    """Parse ``data``; without ``format`` the content (and ``name`` suffix) decide.

    Files starting with "solid" are tried as ASCII first and fall back to the
    binary layout when the grammar fails (some exporters write binary files
    with a "solid" header).
    """
    fmt = format or sniff_format(data, name)
    if fmt == "obj":
        return parse_obj(data)
    if fmt == "stl_binary":
        return parse_stl_binary(data)
    if fmt != "stl_ascii":
        raise ValueError(f"unknown mesh format {fmt!r}")
    try:
        return parse_stl_ascii(data)
    except (MeshParseError, UnicodeDecodeError) as ascii_err:
        if format == "stl_ascii":
            if isinstance(ascii_err, UnicodeDecodeError):
                raise MeshParseError(f"ASCII STL is not ASCII text at byte {ascii_err.start}", offset=ascii_err.start)
            raise
        try:
            return parse_stl_binary(data)
        except MeshParseError:
            if isinstance(ascii_err, UnicodeDecodeError):
                raise
            raise ascii_err


def encode_mesh(mesh: TriangleMesh, format: str = "stl_binary") -> MeshFile:
    if format == "stl_binary":
        return MeshFile(format, dump_stl_binary(mesh))
    if format == "stl_ascii":
        return MeshFile(format, dump_stl_ascii(mesh))
    if format == "obj":
        return MeshFile(format, dump_obj(mesh))
    raise ValueError(f"unknown mesh format {format!r}")


def read_mesh(source, format: str | None = None) -> TriangleMesh:
    """Read a mesh from a path, raw bytes or a MeshFile."""
    if isinstance(source, MeshFile):
        return decode_mesh(source.data, source.format)
    if isinstance(source, (bytes, bytearray)):
        return decode_mesh(bytes(source), format)
    path = Path(source)
    return decode_mesh(path.read_bytes(), format, name=path.name)


def write_mesh(mesh: TriangleMesh, dest=None, format: str | None = None) -> MeshFile:
    """Encode ``mesh``; also write it to ``dest`` when a path is given."""
    fmt = format or (format_from_name(dest) if dest is not None else "stl_binary")
    encoded = encode_mesh(mesh, fmt)
    if dest is not None:
        Path(dest).write_bytes(encoded.data)
    return encoded


# --- reports -----------------------------------------------------------------


def _report_dict(report) -> dict:
    d = report.to_dict() if isinstance(report, QualityReport) else dict(report)
    return {k: d.get(k) for k in REPORT_COLUMNS}


def reports_to_json(reports) -> str:
    if isinstance(reports, (QualityReport, dict)):
        payload = _report_dict(reports)
    else:
        payload = [_report_dict(r) for r in reports]
    return json.dumps(payload, indent=2) + "\n"


def reports_to_csv(reports) -> str:
    if isinstance(reports, (QualityReport, dict)):
        reports = [reports]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        row = _report_dict(r)
        row["b_histogram"] = ";".join(str(n) for n in row["b_histogram"] or [])
        writer.writerow(["" if row[k] is None else row[k] for k in REPORT_COLUMNS])
    return buf.getvalue()


def write_report(reports, dest=None, format: str | None = None) -> str:
    """Serialize one report or a list of them as JSON or CSV.

    The format defaults to the suffix of ``dest`` (``.csv`` -> CSV, else JSON).
    Returns the text and writes it to ``dest`` when given.
    """
    fmt = format or ("csv" if dest is not None and str(dest).lower().endswith(".csv") else "json")
    if fmt == "csv":
        text = reports_to_csv(reports)
    elif fmt == "json":
        text = reports_to_json(reports)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if dest is not None:
        Path(dest).write_text(text)
    return text
