import csv
import json

import pytest

from laggraph.cli import main
from laggraph.fixture import EXPECTED_TILDE_ROWS


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def example_dir(tmp_path):
    out = tmp_path / "example"
    assert run("example", "--out", out) == 0
    return out


class TestValidate:
    def test_example_validates(self, example_dir, capsys):
        assert run("validate", example_dir / "releases.csv",
                   example_dir / "dependencies.csv") == 0
        assert "7 releases, 2 packages, 2 dependencies" in capsys.readouterr().out

    def test_directory_input(self, example_dir, capsys):
        assert run("validate", example_dir) == 0
        assert "ok:" in capsys.readouterr().out

    def test_missing_file_fails(self, tmp_path, capsys):
        assert run("validate", tmp_path / "nope.csv") == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_header_fails(self, tmp_path, capsys):
        bad = tmp_path / "releases.csv"
        bad.write_text("package,when\nfoo,2020\n")
        assert run("validate", bad) == 1
        assert "error:" in capsys.readouterr().err


class TestExample:
    def test_expected_table_roundtrip(self, example_dir):
        with open(example_dir / "expected_lag_table.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(EXPECTED_TILDE_ROWS)
        for row, (d, installed, missed, lag) in zip(rows, EXPECTED_TILDE_ROWS):
            assert row["max_installable"] == installed
            assert float(row["lag_days"]) == lag
            got_missed = set(row["missed"].split())
            assert got_missed == set(missed)


class TestAnalyze:
    def test_single_analysis_csv(self, example_dir, tmp_path):
        out = tmp_path / "rq1.csv"
        assert run("analyze", "rq1", "--in", example_dir, "--out", out) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        # all fixture releases land in January 2000; exactly one of the
        # seven is ever lagging
        jan = [r for r in rows if r["metric"] == "releases_lagging"]
        assert len(jan) == 1
        assert float(jan[0]["value"]) == pytest.approx(1 / 7)
        meta = json.loads((tmp_path / "rq1.run.json").read_text())
        assert meta["analyses"] == ["rq1"]
        assert len(meta["inputs"]) == 2
        assert all("sha256" in entry for entry in meta["inputs"])

    def test_csv_out_rejects_all(self, example_dir, tmp_path, capsys):
        out = tmp_path / "all.csv"
        assert run("analyze", "all", "--in", example_dir, "--out", out) == 2
        assert "single analysis" in capsys.readouterr().err

    def test_all_analyses_directory(self, example_dir, tmp_path):
        out = tmp_path / "results"
        assert run("analyze", "all", "--in", example_dir, "--out", out,
                   "--loosen", "minor") == 0
        names = {p.name for p in out.iterdir()}
        assert names == {f"rq{i}.csv" for i in range(1, 7)} | {"run.json"}
        with open(out / "rq6.csv") as fh:
            metrics = {r["metric"] for r in csv.DictReader(fh)}
        assert metrics == {"releases_lagging_baseline",
                           "releases_lagging_loosened_minor"}

    def test_reruns_byte_identical(self, example_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("analyze", "all", "--in", example_dir,
                       "--out", out) == 0
        for name in (f"rq{i}.csv" for i in range(1, 7)):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_figures_rendered(self, example_dir, tmp_path):
        out = tmp_path / "figs"
        assert run("analyze", "rq1", "--in", example_dir,
                   "--out", out / "rq1.csv", "--figures") == 0
        pngs = list(out.glob("*.png"))
        assert pngs and all(p.stat().st_size > 0 for p in pngs)


class TestFilter:
    def test_filter_writes_report(self, example_dir, tmp_path, capsys):
        out = tmp_path / "filtered"
        assert run("filter", example_dir / "releases.csv",
                   example_dir / "dependencies.csv", "--out", out) == 0
        assert "kept" in capsys.readouterr().out
        report = json.loads((out / "filter_report.json").read_text())
        assert report["report"]["releases_before"] == 7
        # the fixture is already clean, so nothing is dropped
        assert report["report"]["releases_after"] == 7
        assert run("validate", out) == 0

    def test_cutoff_drops_stale(self, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        (src / "releases.csv").write_text(
            "package,version,date\n"
            "t,1.0.0,2020-01-01T00:00:00Z\n"
            "t,1.0.1,2020-01-03T00:00:00Z\n"
            "a,1.0.0,2020-01-07T00:00:00Z\n"
            "a,1.0.1,2020-01-09T00:00:00Z\n")
        (src / "dependencies.csv").write_text(
            "package,version,target,constraint,kind\n"
            "a,1.0.0,t,^1.0.0,runtime\n"
            "a,1.0.1,t,^1.0.0,runtime\n")
        out = tmp_path / "filtered"
        # t's last release predates the cutoff, so it is stale; a then
        # loses its only dependency target and becomes isolated
        assert run("filter", src, "--out", out,
                   "--cutoff", "2020-01-05T00:00:00Z") == 0
        report = json.loads((out / "filter_report.json").read_text())
        assert report["report"]["releases_after"] == 0

    def test_cutoff_outside_bounds_fails(self, example_dir, tmp_path, capsys):
        assert run("filter", example_dir, "--out", tmp_path / "x",
                   "--cutoff", "2010-01-01T00:00:00Z") == 1
        assert "outside corpus bounds" in capsys.readouterr().err

    def test_bad_cutoff_fails(self, example_dir, tmp_path, capsys):
        assert run("filter", example_dir, "--out", tmp_path / "x",
                   "--cutoff", "not-a-date") == 1
        assert "error:" in capsys.readouterr().err


class TestOracleCheck:
    def test_example_passes(self, example_dir, capsys):
        assert run("oracle-check", example_dir, "--samples", "25") == 0
        out = capsys.readouterr().out
        assert "0 mismatches" in out

    def test_reports_evaluation_count(self, example_dir, capsys):
        assert run("oracle-check", example_dir, "--samples", "5") == 0
        assert "checked" in capsys.readouterr().out
