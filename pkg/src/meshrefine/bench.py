"""Method comparison sweeps over synthetic corpora.

A sweep runs every (method, parameter, limit) cell on a fresh copy of the
corpus, times the subdivision alone (median of ``repetitions`` runs) and
summarizes the result as a QualityReport. Timings are reported, never judged.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import CorpusSpec, generate_corpus
from .errors import ConfigError, MeshError
from .mesh import TriangleMesh
from .mesh_io import write_report
from .metrics import QualityReport, build_report
from .subdivision import DEFAULT_INITIAL_FACTOR, METHODS, SubdivisionConfig, check_max_edge, subdivide

log = logging.getLogger(__name__)

SERIES_COLUMNS = ["method", "param", "limit", "final_count", "created_total", "new_vertices", "time_sec"]


@dataclass(frozen=True)
class SweepSpec:
    methods: tuple[str, ...] = METHODS
    limits: tuple[float, ...] = (0.05, 0.02, 0.01)
    fold_factors: tuple[float, ...] = (1.5, 1.8, 2.0)
    angle_thresholds: tuple[float, ...] = (15.0, 30.0, 45.0)
    repetitions: int = 5
    initial_factor: float = DEFAULT_INITIAL_FACTOR

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "limits", tuple(float(x) for x in self.limits))
        object.__setattr__(self, "fold_factors", tuple(float(x) for x in self.fold_factors))
        object.__setattr__(self, "angle_thresholds", tuple(float(x) for x in self.angle_thresholds))
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"sweep methods must be a nonempty subset of {METHODS}, got {self.methods}")
        if not self.limits or any(x <= 0 for x in self.limits):
            raise ConfigError(f"sweep limits must be nonempty and positive, got {self.limits}")
        if any(b >= a for a, b in zip(self.limits, self.limits[1:])):
            raise ConfigError(f"sweep limits must be strictly descending, got {self.limits}")
        if "multistage" in self.methods and not self.fold_factors:
            raise ConfigError("multistage selected but fold_factors is empty")
        if "angle_restricted" in self.methods and not self.angle_thresholds:
            raise ConfigError("angle_restricted selected but angle_thresholds is empty")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.initial_factor < 1:
            raise ConfigError(f"initial_factor must be >= 1, got {self.initial_factor}")

    def cells(self):
        """(label, param, config) for every method/parameter/limit combination."""
        for limit in self.limits:
            for method in self.methods:
                if method == "multistage":
                    for f in self.fold_factors:
                        cfg = SubdivisionConfig(method, limit, L_0=self.initial_factor * limit, fold_factor=f)
                        yield f"multistage({f:g})", f, cfg
                elif method == "angle_restricted":
                    for theta in self.angle_thresholds:
                        cfg = SubdivisionConfig(method, limit, theta_0=theta)
                        yield f"restricted({theta:g})", theta, cfg
                else:
                    yield method, None, SubdivisionConfig(method, limit)


@dataclass
class SeriesRow:
    method: str
    param: float | None
    limit: float
    final_count: int
    created_total: int
    new_vertices: int
    time_sec: float


@dataclass
class SweepResult:
    reports: list[QualityReport] = field(default_factory=list)
    series: list[SeriesRow] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def series_for(self, label: str) -> list[SeriesRow]:
        return [row for row in self.series if row.method == label]

    def report_for(self, label: str, limit: float) -> QualityReport:
        for r in self.reports:
            if r.method == label and r.limit == limit:
                return r
        raise KeyError((label, limit))


def run_cell(corpus: TriangleMesh, config: SubdivisionConfig, repetitions: int = 1, label: str | None = None):
    """Subdivide ``repetitions`` times; return (outcome, report) with the median time."""
    times = []
    outcome = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        outcome = subdivide(corpus, config)
        times.append(time.perf_counter() - t0)
    check_max_edge(outcome.mesh, config.L_threshold)
    report = build_report(
        outcome.mesh,
        config.L_threshold,
        statistics.median(times),
        label or config.method,
        created_total=outcome.triangles_created_total,
        stack_high_water=outcome.stack_high_water,
    )
    return outcome, report


def run_sweep(corpus: TriangleMesh, sweep: SweepSpec) -> SweepResult:
    """Run every cell of ``sweep`` on ``corpus``; failing cells are recorded, not raised."""
    result = SweepResult()
    for label, param, cfg in sweep.cells():
        try:
            outcome, report = run_cell(corpus, cfg, sweep.repetitions, label)
        except (MeshError, ValueError) as exc:
            log.warning("sweep cell %s at limit %g failed: %s", label, cfg.L_threshold, exc)
            result.failures.append({"method": label, "param": param, "limit": cfg.L_threshold, "error": str(exc)})
            continue
        result.reports.append(report)
        result.series.append(
            SeriesRow(label, param, cfg.L_threshold, outcome.final_triangles,
                      outcome.triangles_created_total, outcome.new_vertices, report.time_sec)
        )
    return result


def series_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SERIES_COLUMNS)
    for row in rows:
        d = asdict(row)
        writer.writerow(["" if d[k] is None else d[k] for k in SERIES_COLUMNS])
    return buf.getvalue()


# --- the eight-row method comparison --------------------------------------------

TABLE_ONE_ROWS = (
    ("classic", SubdivisionConfig("classic")),
    ("elementary novel", SubdivisionConfig("novel")),
    ("restricted(15)", SubdivisionConfig("angle_restricted", theta_0=15.0)),
    ("restricted(30)", SubdivisionConfig("angle_restricted", theta_0=30.0)),
    ("restricted(45)", SubdivisionConfig("angle_restricted", theta_0=45.0)),
    ("multistage(1.5)", SubdivisionConfig("multistage", fold_factor=1.5)),
    ("multistage(1.8)", SubdivisionConfig("multistage", fold_factor=1.8)),
    ("multistage(2)", SubdivisionConfig("multistage", fold_factor=2.0)),
)


@dataclass
class TableOne:
    limit: float
    reports: list[QualityReport]
    orderings: dict[str, bool]

    def row(self, label: str) -> QualityReport:
        return next(r for r in self.reports if r.method == label)


def _table_orderings(rows: dict[str, QualityReport]) -> dict[str, bool]:
    classic, novel = rows["classic"], rows["elementary novel"]
    restricted = [rows[f"restricted({t})"] for t in (15, 30, 45)]
    multistage = [rows[f"multistage({f})"] for f in ("1.5", "1.8", "2")]

    def chain(key):
        # multistage rows < restricted rows <= elementary novel < classic
        get = lambda r: getattr(r, key)  # noqa: E731
        return (
            max(map(get, multistage)) < min(map(get, restricted))
            and max(map(get, restricted)) <= get(novel)
            and get(novel) < get(classic)
        )

    return {
        "vertices: multistage < restricted <= novel < classic": chain("vertices"),
        "meshes: multistage < restricted <= novel < classic": chain("meshes"),
        "q>0.8: classic < novel < every multistage row": classic.q_gt08 < novel.q_gt08 < min(r.q_gt08 for r in multistage),
        "angle<15: classic > novel": classic.angle_lt15 > novel.angle_lt15,
        "restricted meshes non-increasing in theta0": restricted[0].meshes >= restricted[1].meshes >= restricted[2].meshes,
        "restricted created non-increasing in theta0": (
            restricted[0].created_total >= restricted[1].created_total >= restricted[2].created_total
        ),
        "multistage meshes decreasing in f": multistage[0].meshes > multistage[1].meshes > multistage[2].meshes,
        "multistage vertices decreasing in f": multistage[0].vertices > multistage[1].vertices > multistage[2].vertices,
    }


def table_one_experiment(
    corpus: TriangleMesh, limit: float, repetitions: int = 1, initial_factor: float = DEFAULT_INITIAL_FACTOR
) -> TableOne:
    """One report per method row at a common final limit, plus which orderings held."""
    reports = []
    for label, base in TABLE_ONE_ROWS:
        cfg = SubdivisionConfig(
            base.method, limit, L_0=initial_factor * limit, fold_factor=base.fold_factor, theta_0=base.theta_0
        )
        reports.append(run_cell(corpus, cfg, repetitions, label)[1])
    return TableOne(limit, reports, _table_orderings({r.method: r for r in reports}))


def write_table_one(table: TableOne, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "table_one.csv", "json": out / "table_one.json", "orderings": out / "table_one_orderings.json"}
    write_report(table.reports, paths["csv"])
    write_report(table.reports, paths["json"])
    paths["orderings"].write_text(json.dumps({"limit": table.limit, "orderings": table.orderings}, indent=2) + "\n")
    return paths


# --- configuration files ------------------------------------------------------------


@dataclass
class BenchEntry:
    corpus: CorpusSpec
    sweep: SweepSpec


def default_bench() -> list[BenchEntry]:
    """The stock sweep: every corpus shape, all four methods, three limits each."""
    return [
        BenchEntry(CorpusSpec("hexagon"), SweepSpec(limits=(0.45, 0.2, 0.1))),
        BenchEntry(CorpusSpec("skewed_hexagon"), SweepSpec(limits=(0.5, 0.2, 0.1))),
        BenchEntry(CorpusSpec("icosphere", level=1), SweepSpec(limits=(0.5, 0.2, 0.1))),
        BenchEntry(CorpusSpec("cylinder"), SweepSpec(limits=(0.5, 0.2, 0.1))),
        BenchEntry(CorpusSpec("needle_soup", count=100, aspect=10, seed=7), SweepSpec(limits=(0.5, 0.2, 0.1))),
        BenchEntry(CorpusSpec("stretched_panel", count=200, aspect=20, seed=7), SweepSpec(limits=(0.05, 0.02, 0.01))),
    ]


def load_bench_config(path) -> list[BenchEntry]:
    """Read ``{"entries": [{"corpus": {...}, "sweep": {...}}, ...]}``.

    A top-level ``"sweep"`` object serves as the default for entries that
    omit one; ``{"corpora": [...], "sweep": {...}}`` is accepted as shorthand.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read sweep config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"sweep config {path} must be a JSON object")
    default_sweep = doc.get("sweep", {})
    raw = doc.get("entries")
    if raw is None:
        raw = [{"corpus": c} for c in doc.get("corpora", [])]
    if not raw:
        raise ConfigError(f"sweep config {path} lists no corpora")
    entries = []
    for item in raw:
        try:
            corpus = CorpusSpec(**item["corpus"])
            sweep = SweepSpec(**item.get("sweep", default_sweep))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad sweep config entry {item!r}: {exc}") from exc
        entries.append(BenchEntry(corpus, sweep))
    return entries


def run_bench(entries: list[BenchEntry], out_dir=None) -> dict[str, SweepResult]:
    """Run each entry's sweep; optionally write reports.json, reports.csv and series.csv."""
    results = {}
    for entry in entries:
        mesh = generate_corpus(entry.corpus)
        log.info("sweeping %s (%d triangles)", entry.corpus.name, mesh.n_triangles)
        results[entry.corpus.name] = run_sweep(mesh, entry.sweep)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        reports, series, failures = [], [], []
        for name, res in results.items():
            for r in res.reports:
                d = r.to_dict()
                d["method"] = f"{name}:{r.method}"
                reports.append(d)
            for row in res.series:
                series.append(SeriesRow(f"{name}:{row.method}", *list(asdict(row).values())[1:]))
            failures += [dict(f, corpus=name) for f in res.failures]
        write_report(reports, out / "reports.json")
        write_report(reports, out / "reports.csv")
        (out / "series.csv").write_text(series_to_csv(series))
        if failures:
            (out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")
    return results
