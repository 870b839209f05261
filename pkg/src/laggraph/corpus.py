"""Corpus ingestion, filtering, and the immutable time-indexed package index."""

from __future__ import annotations

import bisect
import csv
import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .semver import (
    Constraint,
    ConstraintParseError,
    ReleaseType,
    Version,
    VersionParseError,
    classify,
    parse_constraint,
    parse_version,
)

DEP_KINDS = ("runtime", "dev", "other")


class CorpusError(Exception):
    pass


class SchemaError(CorpusError):
    """Input file violates the expected schema; carries file and line."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class DuplicateRecordError(CorpusError):
    def __init__(self, package: str, version: str, first, second):
        self.key = (package, version)
        super().__init__(
            f"duplicate release ({package}, {version}): "
            f"first at {first}, again at {second}"
        )


@dataclass(frozen=True)
class RawDependency:
    target: str
    constraint: str
    kind: str


@dataclass(frozen=True)
class RawRecord:
    package: str
    version: str
    date: datetime
    dependencies: tuple[RawDependency, ...] = ()


def parse_date(text: str):
    """Parse an RFC 3339 timestamp; naive values are taken as UTC."""
    dt = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_date(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


RELEASES_HEADER = ["package", "version", "date"]
DEPENDENCIES_HEADER = ["package", "version", "target", "constraint", "kind"]


def _load_csv_rows(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(path, 1, "empty file") from None
        yield header
        yield from reader


def _load_csv_pair(release_path: Path, dep_path: Path) -> list[RawRecord]:
    records: dict[tuple[str, str], dict] = {}
    origin: dict[tuple[str, str], str] = {}
    rows = _load_csv_rows(release_path)
    header = next(rows)
    if header != RELEASES_HEADER:
        raise SchemaError(release_path, 1,
                          f"expected header {RELEASES_HEADER}, got {header}")
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 3 or not all(row):
            raise SchemaError(release_path, lineno, f"bad release row {row}")
        package, version, date_text = row
        key = (package, version)
        if key in records:
            raise DuplicateRecordError(package, version, origin[key],
                                       f"{release_path}:{lineno}")
        try:
            date = parse_date(date_text)
        except ValueError:
            raise SchemaError(release_path, lineno,
                              f"bad date {date_text!r}") from None
        records[key] = {"date": date, "deps": []}
        origin[key] = f"{release_path}:{lineno}"

    rows = _load_csv_rows(dep_path)
    header = next(rows)
    if header != DEPENDENCIES_HEADER:
        raise SchemaError(dep_path, 1,
                          f"expected header {DEPENDENCIES_HEADER}, got {header}")
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 5:
            raise SchemaError(dep_path, lineno, f"bad dependency row {row}")
        package, version, target, constraint, kind = row
        if kind not in DEP_KINDS:
            raise SchemaError(dep_path, lineno, f"unknown dependency kind {kind!r}")
        key = (package, version)
        if key not in records:
            raise SchemaError(dep_path, lineno,
                              f"dependency for unknown release {key}")
        records[key]["deps"].append(RawDependency(target, constraint, kind))

    return [
        RawRecord(pkg, ver, entry["date"], tuple(entry["deps"]))
        for (pkg, ver), entry in records.items()
    ]


def _load_jsonl(path: Path) -> list[RawRecord]:
    records: list[RawRecord] = []
    seen: dict[tuple[str, str], str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, lineno, f"bad JSON: {exc}") from None
            try:
                package, version = obj["package"], obj["version"]
                date = parse_date(obj["date"])
                deps = tuple(
                    RawDependency(d["target"], d["constraint"],
                                  d.get("kind", "runtime"))
                    for d in obj.get("dependencies", [])
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(path, lineno, f"bad record: {exc}") from None
            for d in deps:
                if d.kind not in DEP_KINDS:
                    raise SchemaError(path, lineno,
                                      f"unknown dependency kind {d.kind!r}")
            key = (package, version)
            if key in seen:
                raise DuplicateRecordError(package, version, seen[key],
                                           f"{path}:{lineno}")
            seen[key] = f"{path}:{lineno}"
            records.append(RawRecord(package, version, date, deps))
    return records


def load(paths) -> list[RawRecord]:
    """Load raw records from either CSV pairs or JSON-lines files.

    CSV inputs come in (releases.csv, dependencies.csv) pairs recognized by
    their headers; .jsonl/.ndjson files hold one release object per line.
    Both loaders produce identical records from equivalent data.
    """
    paths = [Path(p) for p in paths]
    for p in paths:
        if not p.exists():
            raise CorpusError(f"input file not found: {p}")
    release_csvs, dep_csvs, jsonl = [], [], []
    for p in paths:
        if p.suffix in (".jsonl", ".ndjson", ".json"):
            jsonl.append(p)
            continue
        with open(p, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if header == RELEASES_HEADER:
            release_csvs.append(p)
        elif header == DEPENDENCIES_HEADER:
            dep_csvs.append(p)
        else:
            raise SchemaError(p, 1, f"unrecognized header {header}")
    if len(release_csvs) != len(dep_csvs):
        raise CorpusError(
            f"need matching release/dependency CSVs, got {len(release_csvs)} "
            f"release and {len(dep_csvs)} dependency files")
    records: list[RawRecord] = []
    for rel, dep in zip(sorted(release_csvs), sorted(dep_csvs)):
        records.extend(_load_csv_pair(rel, dep))
    for p in sorted(jsonl):
        records.extend(_load_jsonl(p))
    seen: dict[tuple[str, str], RawRecord] = {}
    for rec in records:
        key = (rec.package, rec.version)
        if key in seen:
            raise DuplicateRecordError(rec.package, rec.version,
                                       repr(seen[key]), repr(rec))
        seen[key] = rec
    return records


@dataclass
class FilterConfig:
    exclude_prereleases: bool = True
    activity_cutoff: datetime | None = None
    drop_single_release_packages: bool = True
    drop_isolated_packages: bool = True
    keep_dep_kinds: frozenset[str] = frozenset({"runtime"})

    def to_dict(self) -> dict:
        return {
            "exclude_prereleases": self.exclude_prereleases,
            "activity_cutoff": (format_date(self.activity_cutoff)
                                if self.activity_cutoff else None),
            "drop_single_release_packages": self.drop_single_release_packages,
            "drop_isolated_packages": self.drop_isolated_packages,
            "keep_dep_kinds": sorted(self.keep_dep_kinds),
        }


@dataclass
class FilterReport:
    releases_before: int = 0
    releases_after: int = 0
    packages_before: int = 0
    packages_after: int = 0
    deps_before: int = 0
    deps_after: int = 0
    deps_removed_kind: int = 0
    deps_removed_unparseable_constraint: int = 0
    deps_removed_missing_target: int = 0
    deps_removed_dangling: int = 0
    releases_removed_prerelease: int = 0
    releases_removed_bad_version: int = 0
    packages_removed_single_release: int = 0
    releases_removed_single_release: int = 0
    packages_removed_stale: int = 0
    releases_removed_stale: int = 0
    packages_removed_isolated: int = 0
    releases_removed_isolated: int = 0

    def total_releases_removed(self) -> int:
        return (self.releases_removed_prerelease
                + self.releases_removed_bad_version
                + self.releases_removed_single_release
                + self.releases_removed_stale
                + self.releases_removed_isolated)

    def to_dict(self) -> dict:
        return dict(vars(self))


def filter(records, cfg: FilterConfig):
    """Apply the corpus filtering pipeline, in its fixed rule order.

    Rules: dependency kinds, unparseable constraints, missing targets,
    prerelease (and unparseable-version) releases, single-release packages,
    stale packages, isolated packages. Isolation pruning runs to a fixed
    point so that filtering is idempotent.
    """
    records = list(records)
    report = FilterReport(
        releases_before=len(records),
        packages_before=len({r.package for r in records}),
        deps_before=sum(len(r.dependencies) for r in records),
    )
    if cfg.activity_cutoff is not None and records:
        lo = min(r.date for r in records)
        hi = max(r.date for r in records)
        if not (lo <= cfg.activity_cutoff <= hi):
            raise ValueError(
                f"activity_cutoff {format_date(cfg.activity_cutoff)} outside "
                f"corpus bounds [{format_date(lo)}, {format_date(hi)}]")

    # 1. dependency kinds + unparseable constraints
    pruned = []
    for rec in records:
        deps = []
        for d in rec.dependencies:
            if d.kind not in cfg.keep_dep_kinds:
                report.deps_removed_kind += 1
                continue
            try:
                parse_constraint(d.constraint)
            except ConstraintParseError:
                report.deps_removed_unparseable_constraint += 1
                continue
            deps.append(d)
        pruned.append(replace(rec, dependencies=tuple(deps)))
    records = pruned

    # 2. dependencies whose target is absent from the corpus
    present = {r.package for r in records}
    pruned = []
    for rec in records:
        deps = tuple(d for d in rec.dependencies if d.target in present)
        report.deps_removed_missing_target += len(rec.dependencies) - len(deps)
        pruned.append(replace(rec, dependencies=deps))
    records = pruned

    # 3. prerelease versions (and versions the pipeline cannot parse)
    if cfg.exclude_prereleases:
        kept = []
        for rec in records:
            try:
                v = parse_version(rec.version)
            except VersionParseError:
                report.releases_removed_bad_version += 1
                continue
            if v.prerelease:
                report.releases_removed_prerelease += 1
                continue
            kept.append(rec)
        records = kept

    # 4. single-release packages
    if cfg.drop_single_release_packages:
        counts: dict[str, int] = {}
        for rec in records:
            counts[rec.package] = counts.get(rec.package, 0) + 1
        single = {p for p, n in counts.items() if n == 1}
        report.packages_removed_single_release = len(single)
        report.releases_removed_single_release = sum(
            1 for r in records if r.package in single)
        records = [r for r in records if r.package not in single]

    # 5. packages not updated after the activity cutoff
    if cfg.activity_cutoff is not None:
        last: dict[str, datetime] = {}
        for rec in records:
            if rec.package not in last or rec.date > last[rec.package]:
                last[rec.package] = rec.date
        stale = {p for p, d in last.items() if d <= cfg.activity_cutoff}
        report.packages_removed_stale = len(stale)
        report.releases_removed_stale = sum(
            1 for r in records if r.package in stale)
        records = [r for r in records if r.package not in stale]

    # 6. isolated packages, iterated to a fixed point with dangling-edge
    #    pruning (dropping a package can orphan edges and isolate others)
    while True:
        present = {r.package for r in records}
        pruned = []
        for rec in records:
            deps = tuple(d for d in rec.dependencies if d.target in present)
            report.deps_removed_dangling += len(rec.dependencies) - len(deps)
            pruned.append(replace(rec, dependencies=deps))
        records = pruned
        if not cfg.drop_isolated_packages:
            break
        connected: set[str] = set()
        for rec in records:
            for d in rec.dependencies:
                connected.add(rec.package)
                connected.add(d.target)
        isolated = {r.package for r in records} - connected
        if not isolated:
            break
        report.packages_removed_isolated += len(isolated)
        report.releases_removed_isolated += sum(
            1 for r in records if r.package in isolated)
        records = [r for r in records if r.package not in isolated]

    report.releases_after = len(records)
    report.packages_after = len({r.package for r in records})
    report.deps_after = sum(len(r.dependencies) for r in records)
    return records, report


@dataclass(frozen=True)
class Dependency:
    target: str
    constraint: Constraint


@dataclass(frozen=True)
class Release:
    package: str
    version: Version
    date: datetime
    deps: tuple[Dependency, ...]
    type: ReleaseType

    @property
    def ident(self) -> str:
        return f"{self.package}@{self.version}"


class PackageHistory:
    """All releases of one package, indexed by both version and date order."""

    __slots__ = ("package", "by_version", "by_date", "_dates", "_vindex",
                 "_dindex", "_suffix_min_date", "_window", "_sat_cache")

    def __init__(self, package: str, releases: list[Release]):
        self.package = package
        self.by_version = tuple(sorted(releases, key=lambda r: r.version.key()))
        # Date ties are broken by version so the date order is total.
        self.by_date = tuple(sorted(releases,
                                    key=lambda r: (r.date, r.version.key())))
        self._dates = [r.date for r in self.by_date]
        self._vindex = {r.version.key(): i
                        for i, r in enumerate(self.by_version)}
        self._dindex = {r.version.key(): i for i, r in enumerate(self.by_date)}
        suffix: list[datetime] = [None] * (len(self.by_version) + 1)
        for i in range(len(self.by_version) - 1, -1, -1):
            d = self.by_version[i].date
            nxt = suffix[i + 1]
            suffix[i] = d if nxt is None or d < nxt else nxt
        self._suffix_min_date = suffix
        # Releases in date order with their version index, for window scans.
        self._window = [(r.date, self._vindex[r.version.key()], r)
                        for r in self.by_date]
        self._sat_cache: dict = {}

    def __len__(self) -> int:
        return len(self.by_version)

    def available_count(self, t: datetime) -> int:
        return bisect.bisect_right(self._dates, t)

    def available(self, t: datetime) -> tuple[Release, ...]:
        return self.by_date[: self.available_count(t)]

    def version_index(self, release: Release) -> int:
        return self._vindex[release.version.key()]

    def date_index(self, release: Release) -> int:
        return self._dindex[release.version.key()]

    def min_missed_date(self, max_installable_vidx: int | None,
                        t: datetime) -> datetime | None:
        """Earliest date among available releases version-above the maximum.

        With no installable release every available release counts as missed.
        """
        start = 0 if max_installable_vidx is None else max_installable_vidx + 1
        d = self._suffix_min_date[start] if start < len(self.by_version) else None
        if d is None or d > t:
            return None
        return d

    def released_between(self, lo: datetime, hi: datetime):
        """Releases with date in (lo, hi], as (version_index, release) pairs."""
        i = bisect.bisect_right(self._dates, lo)
        j = bisect.bisect_right(self._dates, hi)
        return [(vidx, r) for _, vidx, r in self._window[i:j]]


class PackageIndex:
    """Frozen, read-only view over the filtered corpus."""

    def __init__(self, histories: dict[str, PackageHistory],
                 bounds: tuple[datetime, datetime] | None):
        self.packages = histories
        self.bounds = bounds

    def __contains__(self, package: str) -> bool:
        return package in self.packages

    def history(self, package: str) -> PackageHistory:
        try:
            return self.packages[package]
        except KeyError:
            raise CorpusError(f"unknown package {package!r}") from None

    def releases(self, package: str) -> tuple[Release, ...]:
        return self.history(package).by_version

    def all_releases(self):
        for name in sorted(self.packages):
            yield from self.packages[name].by_date

    def available(self, package: str, t: datetime) -> tuple[Release, ...]:
        return self.history(package).available(t)

    def prev_version(self, r: Release) -> Release | None:
        h = self.history(r.package)
        i = h.version_index(r)
        return h.by_version[i - 1] if i > 0 else None

    def next_version(self, r: Release) -> Release | None:
        h = self.history(r.package)
        i = h.version_index(r)
        return h.by_version[i + 1] if i + 1 < len(h.by_version) else None

    def prev_release(self, r: Release) -> Release | None:
        h = self.history(r.package)
        i = h.date_index(r)
        return h.by_date[i - 1] if i > 0 else None

    def next_release(self, r: Release) -> Release | None:
        h = self.history(r.package)
        i = h.date_index(r)
        return h.by_date[i + 1] if i + 1 < len(h.by_date) else None


def build_index(records) -> PackageIndex:
    """Materialize both release orders and derive release types.

    Expects filtered records: versions and constraints must parse and every
    dependency target must be present.
    """
    present = {r.package for r in records}
    grouped: dict[str, list[tuple[Version, RawRecord]]] = {}
    for rec in records:
        try:
            v = parse_version(rec.version)
        except VersionParseError as exc:
            raise CorpusError(
                f"unfiltered record with unparseable version: {exc}") from None
        grouped.setdefault(rec.package, []).append((v, rec))

    histories: dict[str, PackageHistory] = {}
    for package, entries in grouped.items():
        entries.sort(key=lambda e: e[0].key())
        releases: list[Release] = []
        prev: Version | None = None
        for v, rec in entries:
            deps = []
            for d in rec.dependencies:
                if d.target not in present:
                    raise CorpusError(
                        f"{package}@{rec.version}: dependency target "
                        f"{d.target!r} not in corpus")
                try:
                    c = parse_constraint(d.constraint)
                except ConstraintParseError as exc:
                    raise CorpusError(
                        f"{package}@{rec.version}: {exc}") from None
                deps.append(Dependency(d.target, c))
            releases.append(Release(package, v, rec.date, tuple(deps),
                                    classify(v, prev)))
            prev = v
        histories[package] = PackageHistory(package, releases)

    if records:
        dates = [r.date for r in records]
        bounds = (min(dates), max(dates))
    else:
        bounds = None
    return PackageIndex(histories, bounds)


def write_csvs(records, release_path, dep_path) -> None:
    """Write records back out in the two-file CSV schema, deterministically."""
    ordered = sorted(records, key=lambda r: (r.package, r.version))
    with open(release_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(RELEASES_HEADER)
        for rec in ordered:
            w.writerow([rec.package, rec.version, format_date(rec.date)])
    with open(dep_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(DEPENDENCIES_HEADER)
        for rec in ordered:
            for d in rec.dependencies:
                w.writerow([rec.package, rec.version, d.target,
                            d.constraint, d.kind])
