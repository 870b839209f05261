"""Command-line interface: validate, filter, analyze, example, oracle-check."""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import __version__
import csv

from .corpus import (
    DEPENDENCIES_HEADER,
    RELEASES_HEADER,
    CorpusError,
    FilterConfig,
    build_index,
    filter as filter_corpus,
    load,
    parse_date,
    write_csvs,
)
from .fixture import write_fixture
from .lag import dep_lag, missed
from .oracle import OracleError, dep_lag_brute, missed_brute
from .report import ANALYSES, run_analyses, write_outputs, write_run_metadata, write_rows
from .whatif import LoosenLevel


def _is_corpus_csv(path: Path) -> bool:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    return header in (RELEASES_HEADER, DEPENDENCIES_HEADER)


def _resolve_inputs(paths) -> list[Path]:
    """Expand directories into their corpus files.

    Inside a directory, metadata sidecars and CSVs whose header is not a
    corpus schema are skipped; explicitly named files are always passed
    through (and will fail loading if malformed).
    """
    sidecars = {"run.json", "filter_report.json"}
    out: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            found = sorted(
                q for q in p.iterdir()
                if q.name not in sidecars and not q.name.endswith(".run.json")
                and (q.suffix in (".jsonl", ".ndjson", ".json")
                     or (q.suffix == ".csv" and _is_corpus_csv(q)))
            )
            if not found:
                raise CorpusError(f"no corpus files in directory {p}")
            out.extend(found)
        else:
            out.append(p)
    return out


def _filter_config(args) -> FilterConfig:
    return FilterConfig(
        exclude_prereleases=not args.keep_prereleases,
        activity_cutoff=parse_date(args.cutoff) if args.cutoff else None,
        drop_single_release_packages=not args.keep_single_release,
        drop_isolated_packages=not args.keep_isolated,
        keep_dep_kinds=frozenset(args.kinds.split(",")),
    )


def cmd_validate(args) -> int:
    inputs = _resolve_inputs(args.inputs)
    records = load(inputs)
    packages = {r.package for r in records}
    deps = sum(len(r.dependencies) for r in records)
    print(f"ok: {len(records)} releases, {len(packages)} packages, "
          f"{deps} dependencies")
    return 0


def cmd_filter(args) -> int:
    inputs = _resolve_inputs(args.inputs)
    records = load(inputs)
    cfg = _filter_config(args)
    filtered, report = filter_corpus(records, cfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csvs(filtered, outdir / "releases.csv", outdir / "dependencies.csv")
    with open(outdir / "filter_report.json", "w", encoding="utf-8") as fh:
        json.dump({"config": cfg.to_dict(), "report": report.to_dict()},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"kept {report.releases_after}/{report.releases_before} releases, "
          f"{report.packages_after}/{report.packages_before} packages, "
          f"{report.deps_after}/{report.deps_before} dependencies")
    return 0


def cmd_analyze(args) -> int:
    inputs = _resolve_inputs(args.inputs)
    records = load(inputs)
    idx = build_index(records)
    analyses = list(ANALYSES) if args.analysis == "all" else [args.analysis]
    level = LoosenLevel.from_text(args.loosen)
    results = run_analyses(idx, analyses, level)

    out = Path(args.out)
    if out.suffix == ".csv":
        if len(analyses) != 1:
            print("error: a .csv output path requires a single analysis",
                  file=sys.stderr)
            return 2
        out.parent.mkdir(parents=True, exist_ok=True)
        write_rows(out, results[analyses[0]])
        meta_path = out.with_name(out.stem + ".run.json")
        figure_dir = out.parent
    else:
        write_outputs(out, results)
        meta_path = out / "run.json"
        figure_dir = out
    write_run_metadata(meta_path, inputs, analyses, level)
    if args.figures:
        from .figures import render_all

        render_all(results, figure_dir)
    return 0


def cmd_example(args) -> int:
    paths = write_fixture(args.out)
    for p in paths:
        print(p)
    return 0


def cmd_oracle_check(args) -> int:
    inputs = _resolve_inputs(args.inputs)
    records = load(inputs)
    idx = build_index(records)
    rng = random.Random(args.seed)
    if idx.bounds is None:
        print("empty corpus, nothing to check")
        return 0
    lo, hi = idx.bounds
    span = (hi - lo).total_seconds()
    checked = mismatches = skipped = 0
    for release in idx.all_releases():
        for d in release.deps:
            hist = idx.packages[d.target]
            pairs = [(str(r.version), r.date) for r in hist.by_version]
            for _ in range(args.samples):
                t = lo + (hi - lo) * rng.random() if span else lo
                try:
                    expect_lag = dep_lag_brute(pairs, d.constraint.raw, t)
                    expect_missed = {v for v, _ in
                                     missed_brute(pairs, d.constraint.raw, t)}
                except OracleError:
                    skipped += 1
                    break
                got_lag = dep_lag(d, t, idx)
                got_missed = {str(r.version) for r in missed(d, t, idx)}
                checked += 1
                if got_lag != expect_lag or got_missed != expect_missed:
                    mismatches += 1
                    print(f"MISMATCH {release.ident} dep {d.target} "
                          f"{d.constraint.raw!r} at {t}: "
                          f"lag {got_lag} vs {expect_lag}, "
                          f"missed {sorted(got_missed)} vs "
                          f"{sorted(expect_missed)}", file=sys.stderr)
    print(f"checked {checked} evaluations, {mismatches} mismatches, "
          f"{skipped} dependencies outside the oracle grammar")
    return 1 if mismatches else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laggraph",
        description="Technical lag analysis over a package dependency network")
    parser.add_argument("--version", action="version",
                        version=f"laggraph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="schema-check corpus files")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("filter", help="apply the corpus filtering pipeline")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cutoff", default=None,
                   help="drop packages with no release after this date")
    p.add_argument("--keep-prereleases", action="store_true")
    p.add_argument("--keep-single-release", action="store_true")
    p.add_argument("--keep-isolated", action="store_true")
    p.add_argument("--kinds", default="runtime",
                   help="comma-separated dependency kinds to keep")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("analyze", help="run the lag analyses")
    p.add_argument("analysis", choices=list(ANALYSES) + ["all"])
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True,
                   help="output CSV (single analysis) or directory")
    p.add_argument("--loosen", choices=[l.value for l in LoosenLevel],
                   default="none", help="constraint loosening level for rq6")
    p.add_argument("--figures", action="store_true",
                   help="also render PNG figures next to the CSVs")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("example",
                       help="emit the built-in example corpus and its "
                            "expected lag table")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("oracle-check",
                       help="differential check against the brute-force "
                            "reference evaluators")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--samples", type=int, default=10,
                   help="random time points per dependency")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
