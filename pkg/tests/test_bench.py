import csv
import io
import json

import pytest

from meshrefine import bench
from meshrefine.bench import (
    SERIES_COLUMNS,
    BenchEntry,
    SweepSpec,
    load_bench_config,
    run_bench,
    run_sweep,
    series_to_csv,
    table_one_experiment,
    write_table_one,
)
from meshrefine.corpus import CorpusSpec, generate_corpus, hexagon
from meshrefine.errors import ConfigError, MeshDomainError
from meshrefine.mesh import TriangleMesh
from meshrefine.subdivision import check_max_edge


class TestSweepSpec:
    def test_cells(self):
        labels = [label for label, _, _ in SweepSpec(limits=(0.5,)).cells()]
        assert labels == ["classic", "novel", "multistage(1.5)", "multistage(1.8)", "multistage(2)",
                          "restricted(15)", "restricted(30)", "restricted(45)"]

    def test_multistage_initial_limit(self):
        cfgs = [c for label, _, c in SweepSpec(methods=("multistage",), limits=(0.1,)).cells()]
        assert all(c.initial_limit == pytest.approx(0.4) for c in cfgs)

    @pytest.mark.parametrize("kw", [
        dict(limits=(0.1, 0.2)), dict(limits=(0.1, 0.1)), dict(limits=()), dict(limits=(0.0,)),
        dict(methods=("nope",)), dict(methods=()), dict(methods=("multistage",), fold_factors=()),
        dict(methods=("angle_restricted",), angle_thresholds=()), dict(repetitions=0),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            SweepSpec(**kw)

    def test_empty_grid_ok_when_method_unused(self):
        SweepSpec(methods=("classic",), fold_factors=())


@pytest.fixture(scope="module")
def panel_sweep():
    panel = generate_corpus(CorpusSpec("stretched_panel", count=200, aspect=20, seed=7))
    return panel, run_sweep(panel, SweepSpec(limits=(0.1, 0.05, 0.02), repetitions=1))


class TestRunSweep:
    def test_every_cell_reported(self, panel_sweep):
        _, res = panel_sweep
        assert len(res.reports) == 3 * 8 and not res.failures
        assert all(r.time_sec is not None and r.time_sec >= 0 for r in res.reports)

    def test_post_condition_per_cell(self, panel_sweep):
        panel, res = panel_sweep
        for label, _, cfg in SweepSpec(limits=(0.1, 0.05, 0.02)).cells():
            out, _ = bench.run_cell(panel, cfg)
            check_max_edge(out.mesh, cfg.L_threshold)

    def test_count_non_decreasing_as_limit_shrinks(self, panel_sweep):
        _, res = panel_sweep
        for label in {r.method for r in res.reports}:
            counts = [row.final_count for row in res.series_for(label)]
            assert counts == sorted(counts)

    def test_novel_below_classic_and_gap_widens(self, panel_sweep):
        _, res = panel_sweep
        classic = [r.final_count for r in res.series_for("classic")]
        novel = [r.final_count for r in res.series_for("novel")]
        assert all(n < c for n, c in zip(novel, classic))
        gaps = [c - n for n, c in zip(novel, classic)]
        assert gaps == sorted(gaps)

    def test_report_lookup(self, panel_sweep):
        _, res = panel_sweep
        assert res.report_for("novel", 0.05).limit == 0.05
        with pytest.raises(KeyError):
            res.report_for("novel", 0.3)

    def test_failing_cell_recorded(self, monkeypatch):
        real = bench.subdivide

        def flaky(mesh, cfg):
            if cfg.method == "classic":
                raise MeshDomainError("boom")
            return real(mesh, cfg)

        monkeypatch.setattr(bench, "subdivide", flaky)
        res = run_sweep(hexagon(), SweepSpec(methods=("classic", "novel"), limits=(0.3,), repetitions=1))
        assert [f["method"] for f in res.failures] == ["classic"]
        assert "boom" in res.failures[0]["error"]
        assert [r.method for r in res.reports] == ["novel"]

    def test_series_csv(self, panel_sweep):
        _, res = panel_sweep
        rows = list(csv.reader(io.StringIO(series_to_csv(res.series))))
        assert rows[0] == SERIES_COLUMNS and len(rows) == 1 + len(res.series)
        assert rows[1][1] == ""  # classic has no parameter


class TestTableOne:
    def test_hexagon_classic_equals_novel(self):
        t = table_one_experiment(hexagon(), 0.3)
        assert [r.method for r in t.reports] == [label for label, _ in bench.TABLE_ONE_ROWS]
        c, n = t.row("classic").to_dict(), t.row("elementary novel").to_dict()
        for key in ("vertices", "meshes", "q_gt08", "angle_lt15", "b_histogram", "created_total"):
            assert c[key] == n[key]

    def test_writes_files(self, tmp_path):
        t = table_one_experiment(hexagon(), 0.3)
        paths = write_table_one(t, tmp_path)
        assert len(paths["csv"].read_text().splitlines()) == 9
        doc = json.loads(paths["orderings"].read_text())
        assert doc["limit"] == 0.3 and set(doc["orderings"]) == set(t.orderings)


class TestConfigFiles:
    def test_entries_form(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"entries": [{"corpus": {"shape": "hexagon"},
                                              "sweep": {"methods": ["novel"], "limits": [0.3]}}]}))
        (entry,) = load_bench_config(p)
        assert entry.corpus.shape == "hexagon" and entry.sweep.limits == (0.3,)

    def test_shorthand_form(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"corpora": [{"shape": "hexagon"}, {"shape": "cylinder"}],
                                 "sweep": {"methods": ["classic"], "limits": [0.4, 0.2]}}))
        entries = load_bench_config(p)
        assert [e.corpus.shape for e in entries] == ["hexagon", "cylinder"]
        assert all(e.sweep.methods == ("classic",) for e in entries)

    @pytest.mark.parametrize("text", ["[]", "{}", "not json", '{"corpora": [{"shape": "x"}]}',
                                      '{"corpora": [{"shape": "hexagon"}], "sweep": {"limits": [1, 2]}}'])
    def test_bad_configs(self, tmp_path, text):
        p = tmp_path / "s.json"
        p.write_text(text)
        with pytest.raises(ConfigError):
            load_bench_config(p)

    def test_default_bench_limits_descend(self):
        for entry in bench.default_bench():
            assert list(entry.sweep.limits) == sorted(entry.sweep.limits, reverse=True)


def test_run_bench_outputs(tmp_path):
    entries = [BenchEntry(CorpusSpec("hexagon"), SweepSpec(methods=("classic", "novel"), limits=(0.3,), repetitions=1))]
    results = run_bench(entries, tmp_path)
    assert list(results) == ["hexagon"]
    reports = json.loads((tmp_path / "reports.json").read_text())
    assert [r["method"] for r in reports] == ["hexagon:classic", "hexagon:novel"]
    assert (tmp_path / "reports.csv").exists() and (tmp_path / "series.csv").exists()
    assert not (tmp_path / "failures.json").exists()
