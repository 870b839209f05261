"""Monthly time-series and distribution tables over the lag samples, plus
deterministic CSV emission.

Every analysis emits rows of (section, group, metric, value, population);
distribution sections encode their quartiles and mean as metrics. All
output ordering and float formatting is fixed so repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

from . import __version__
from .corpus import PackageIndex
from .lag import (
    ZERO,
    Direction,
    _dep_lag,
    _max_installable_index,
    adoption,
)
from .semver import ReleaseType
from .whatif import LoosenLevel, dep_lag_loosened

DAY_SECONDS = 86400.0
TYPE_ORDER = (ReleaseType.MAJOR, ReleaseType.MINOR, ReleaseType.PATCH)


def thread_count() -> int:
    """Worker cap from LAGGRAPH_THREADS; defaults to the available cores."""
    env = os.environ.get("LAGGRAPH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def month_key(dt: datetime) -> str:
    return f"{dt.year:04d}-{dt.month:02d}"


def days(delta: timedelta) -> float:
    return delta.total_seconds() / DAY_SECONDS


@dataclass
class ReleaseStats:
    """Everything the RQ aggregations need about one release."""

    ident: str
    package: str
    month: str
    year: str
    rtype: ReleaseType
    dep_count: int
    deps_lagging: int
    lag_at_release: timedelta
    lag_at_next: timedelta | None
    next_type: ReleaseType | None
    lifespan: timedelta | None
    target_updated: bool | None
    update_missed: bool | None
    newly_missed_types: frozenset
    change: Direction | None
    adopted_types: frozenset | None
    loosened: dict = field(default_factory=dict)

    @property
    def has_next(self) -> bool:
        return self.lag_at_next is not None

    def lagging(self) -> bool:
        """Lag observed at either of the two evaluation points."""
        if self.lag_at_release > ZERO:
            return True
        return self.lag_at_next is not None and self.lag_at_next > ZERO

    def lagging_loosened(self, level: LoosenLevel) -> bool:
        lag_r, lag_n = self.loosened[level]
        return lag_r > ZERO or (lag_n is not None and lag_n > ZERO)


def _package_stats(idx: PackageIndex, package: str,
                   levels: tuple[LoosenLevel, ...]) -> list[ReleaseStats]:
    hist = idx.packages[package]
    out: list[ReleaseStats] = []
    prev_stats: ReleaseStats | None = None
    for i, r in enumerate(hist.by_date):
        nxt = hist.by_date[i + 1] if i + 1 < len(hist.by_date) else None
        deps_lagging = 0
        lag_r = lag_n = ZERO
        updated = missed_flag = False
        newly: set[ReleaseType] = set()
        for d in r.deps:
            th = idx.packages[d.target]
            l1 = _dep_lag(th, d, r.date)
            if l1 > lag_r:
                lag_r = l1
            l2 = ZERO
            if nxt is not None:
                mi2 = _max_installable_index(th, d, nxt.date)
                earliest = th.min_missed_date(mi2, nxt.date)
                if earliest is not None:
                    l2 = nxt.date - earliest
                if l2 > lag_n:
                    lag_n = l2
                window = th.released_between(r.date, nxt.date)
                if window:
                    updated = True
                    for vidx, rel in window:
                        if mi2 is None or vidx > mi2:
                            missed_flag = True
                            newly.add(rel.type)
            if l1 > ZERO or (nxt is not None and l2 > ZERO):
                deps_lagging += 1

        change = None
        adopted = None
        if prev_stats is not None:
            magnitude = lag_r - prev_stats.lag_at_next
            if magnitude > ZERO:
                change = Direction.HIGHER
            elif magnitude < ZERO:
                change = Direction.LOWER
            else:
                change = Direction.SAME
            adopted = frozenset(adoption(r, idx))

        loosened = {}
        for level in levels:
            lv_r = ZERO
            lv_n = ZERO if nxt is not None else None
            for d in r.deps:
                l1 = dep_lag_loosened(d, r.date, level, idx)
                if l1 > lv_r:
                    lv_r = l1
                if nxt is not None:
                    l2 = dep_lag_loosened(d, nxt.date, level, idx)
                    if l2 > lv_n:
                        lv_n = l2
            loosened[level] = (lv_r, lv_n)

        stats = ReleaseStats(
            ident=r.ident,
            package=package,
            month=month_key(r.date),
            year=f"{r.date.year:04d}",
            rtype=r.type,
            dep_count=len(r.deps),
            deps_lagging=deps_lagging,
            lag_at_release=lag_r,
            lag_at_next=lag_n if nxt is not None else None,
            next_type=nxt.type if nxt is not None else None,
            lifespan=(nxt.date - r.date) if nxt is not None else None,
            target_updated=updated if nxt is not None else None,
            update_missed=missed_flag if nxt is not None else None,
            newly_missed_types=frozenset(newly),
            change=change,
            adopted_types=adopted,
            loosened=loosened,
        )
        out.append(stats)
        prev_stats = stats
    return out


def collect_stats(idx: PackageIndex,
                  levels: tuple[LoosenLevel, ...] = ()) -> list[ReleaseStats]:
    """Per-release statistics for the whole corpus, in deterministic order."""
    names = sorted(idx.packages)
    workers = thread_count()
    if workers > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(lambda p: _package_stats(idx, p, levels), names)
            out: list[ReleaseStats] = []
            for chunk in chunks:
                out.extend(chunk)
            return out
    out = []
    for name in names:
        out.extend(_package_stats(idx, name, levels))
    return out


@dataclass(frozen=True)
class Row:
    section: str
    group: str
    metric: str
    value: float
    population: int


def _percentile(sorted_values: list[float], q: float) -> float:
    # Linear interpolation between closest ranks.
    n = len(sorted_values)
    if n == 1:
        return sorted_values[0]
    h = (n - 1) * q
    lo = int(h)
    hi = min(lo + 1, n - 1)
    frac = h - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def distribution_rows(section: str, grouped: dict[str, list[float]]) -> list[Row]:
    rows: list[Row] = []
    for group in sorted(grouped):
        values = sorted(grouped[group])
        if not values:
            continue
        n = len(values)
        p25 = _percentile(values, 0.25)
        median = _percentile(values, 0.50)
        p75 = _percentile(values, 0.75)
        mean = sum(values) / n
        assert p25 <= median <= p75
        rows.append(Row(section, group, "p25_days", p25, n))
        rows.append(Row(section, group, "median_days", median, n))
        rows.append(Row(section, group, "mean_days", mean, n))
        rows.append(Row(section, group, "p75_days", p75, n))
    return rows


def _proportion_rows(section: str, counts: dict[str, dict[str, int]],
                     pops: dict[str, int]) -> list[Row]:
    rows = []
    for group in sorted(counts):
        pop = pops[group]
        if pop == 0:
            continue
        for metric in sorted(counts[group]):
            rows.append(Row(section, group, metric,
                            counts[group][metric] / pop, pop))
    return rows


def rq1_proportions(idx: PackageIndex, stats=None) -> list[Row]:
    """Monthly proportions of lagging releases/dependencies and of releases
    whose dependency targets published (resp. missed) an update."""
    stats = collect_stats(idx) if stats is None else stats
    months: dict[str, dict[str, int]] = {}
    for s in stats:
        m = months.setdefault(s.month, {
            "releases": 0, "releases_lagging": 0,
            "deps": 0, "deps_lagging": 0,
            "with_next": 0, "updated": 0, "missed": 0,
        })
        m["releases"] += 1
        m["releases_lagging"] += s.lagging()
        m["deps"] += s.dep_count
        m["deps_lagging"] += s.deps_lagging
        if s.has_next:
            m["with_next"] += 1
            m["updated"] += bool(s.target_updated)
            m["missed"] += bool(s.update_missed)
    rows: list[Row] = []
    for month in sorted(months):
        m = months[month]
        rows.append(Row("monthly", month, "releases_lagging",
                        m["releases_lagging"] / m["releases"], m["releases"]))
        if m["deps"]:
            rows.append(Row("monthly", month, "dependencies_lagging",
                            m["deps_lagging"] / m["deps"], m["deps"]))
        if m["with_next"]:
            updated = m["updated"] / m["with_next"]
            missed = m["missed"] / m["with_next"]
            rows.append(Row("monthly", month, "target_update_available",
                            updated, m["with_next"]))
            rows.append(Row("monthly", month, "target_update_missed",
                            missed, m["with_next"]))
            if m["updated"]:
                rows.append(Row("monthly", month, "missed_to_available_ratio",
                                m["missed"] / m["updated"], m["updated"]))
    return rows


def rq2_distributions(idx: PackageIndex, stats=None) -> list[Row]:
    """Lag amplitude: monthly distribution of positive lag at the next
    release date, and yearly distribution at release date by release type."""
    stats = collect_stats(idx) if stats is None else stats
    monthly: dict[str, list[float]] = {}
    yearly: dict[str, list[float]] = {}
    for s in stats:
        if s.lag_at_next is not None and s.lag_at_next > ZERO:
            monthly.setdefault(s.month, []).append(days(s.lag_at_next))
        if s.lag_at_release > ZERO and s.rtype in TYPE_ORDER:
            key = f"{s.year}/{s.rtype}"
            yearly.setdefault(key, []).append(days(s.lag_at_release))
    return (distribution_rows("monthly_lag_at_next", monthly)
            + distribution_rows("yearly_lag_by_type", yearly))


def rq3_update_stats(idx: PackageIndex, stats=None) -> list[Row]:
    """Release lifespans and the mix of update types."""
    stats = collect_stats(idx) if stats is None else stats
    lifespans: dict[str, list[float]] = {}
    by_pair: dict[str, list[float]] = {}
    counts: dict[str, dict[str, int]] = {}
    pops: dict[str, int] = {}
    for s in stats:
        if s.lifespan is None:
            continue
        lifespans.setdefault(s.month, []).append(days(s.lifespan))
        if s.rtype in TYPE_ORDER and s.next_type in TYPE_ORDER:
            by_pair.setdefault(f"{s.rtype}->{s.next_type}", []).append(
                days(s.lifespan))
        if s.next_type in TYPE_ORDER:
            m = counts.setdefault(
                s.month, {str(t): 0 for t in TYPE_ORDER})
            m[str(s.next_type)] += 1
            pops[s.month] = pops.get(s.month, 0) + 1
    return (distribution_rows("monthly_lifespan", lifespans)
            + _proportion_rows("monthly_update_types", counts, pops)
            + distribution_rows("lifespan_by_type_pair", by_pair))


def rq4_growth(idx: PackageIndex, stats=None) -> list[Row]:
    """Lag growth during the lifespan and the types of newly missed
    target releases causing it."""
    stats = collect_stats(idx) if stats is None else stats
    growth: dict[str, list[float]] = {}
    counts: dict[str, dict[str, int]] = {}
    pops: dict[str, int] = {}
    for s in stats:
        if s.lag_at_next is None:
            continue
        delta = s.lag_at_next - s.lag_at_release
        if delta > ZERO:
            growth.setdefault(s.month, []).append(days(delta))
        m = counts.setdefault(s.month, {str(t): 0 for t in TYPE_ORDER})
        pops[s.month] = pops.get(s.month, 0) + 1
        for t in TYPE_ORDER:
            if t in s.newly_missed_types:
                m[str(t)] += 1
    return (distribution_rows("monthly_lag_growth", growth)
            + _proportion_rows("monthly_missed_types", counts, pops))


def rq5_changes(idx: PackageIndex, stats=None) -> list[Row]:
    """Lag change direction versus the previous release, and adoption of
    previously missed releases by update type."""
    stats = collect_stats(idx) if stats is None else stats
    dirs: dict[str, dict[str, int]] = {}
    dir_pops: dict[str, int] = {}
    adopt: dict[str, dict[str, int]] = {}
    adopt_pops: dict[str, int] = {}
    for s in stats:
        if s.change is None:
            continue
        m = dirs.setdefault(s.month, {d.value: 0 for d in Direction})
        m[s.change.value] += 1
        dir_pops[s.month] = dir_pops.get(s.month, 0) + 1
        if s.rtype in TYPE_ORDER:
            g = adopt.setdefault(str(s.rtype), {str(t): 0 for t in TYPE_ORDER})
            adopt_pops[str(s.rtype)] = adopt_pops.get(str(s.rtype), 0) + 1
            for t in TYPE_ORDER:
                if s.adopted_types and t in s.adopted_types:
                    g[str(t)] += 1
    return (_proportion_rows("monthly_change_direction", dirs, dir_pops)
            + _proportion_rows("adoption_by_type", adopt, adopt_pops))


def rq6_whatif(idx: PackageIndex, level: LoosenLevel, stats=None) -> list[Row]:
    """Baseline versus loosened monthly lagging-release proportions."""
    if stats is None or not all(level in s.loosened for s in stats):
        stats = collect_stats(idx, levels=(level,))
    months: dict[str, dict[str, int]] = {}
    for s in stats:
        m = months.setdefault(s.month, {"n": 0, "base": 0, "loose": 0})
        m["n"] += 1
        m["base"] += s.lagging()
        m["loose"] += s.lagging_loosened(level)
    rows = []
    for month in sorted(months):
        m = months[month]
        rows.append(Row("monthly", month, "releases_lagging_baseline",
                        m["base"] / m["n"], m["n"]))
        rows.append(Row("monthly", month,
                        f"releases_lagging_loosened_{level.value}",
                        m["loose"] / m["n"], m["n"]))
    return rows


CSV_HEADER = ["section", "group", "metric", "value", "population"]


def write_rows(path, rows: list[Row]) -> None:
    ordered = sorted(rows, key=lambda r: (r.section, r.group, r.metric))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in ordered:
            w.writerow([r.section, r.group, r.metric,
                        f"{r.value:.6f}", r.population])


ANALYSES = ("rq1", "rq2", "rq3", "rq4", "rq5", "rq6")


def run_analyses(idx: PackageIndex, analyses, level: LoosenLevel,
                 stats=None) -> dict[str, list[Row]]:
    levels = (level,) if "rq6" in analyses else ()
    if stats is None:
        stats = collect_stats(idx, levels=levels)
    out: dict[str, list[Row]] = {}
    for name in analyses:
        if name == "rq1":
            out[name] = rq1_proportions(idx, stats)
        elif name == "rq2":
            out[name] = rq2_distributions(idx, stats)
        elif name == "rq3":
            out[name] = rq3_update_stats(idx, stats)
        elif name == "rq4":
            out[name] = rq4_growth(idx, stats)
        elif name == "rq5":
            out[name] = rq5_changes(idx, stats)
        elif name == "rq6":
            out[name] = rq6_whatif(idx, level, stats)
        else:
            raise ValueError(f"unknown analysis {name!r}")
    return out


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_run_metadata(path, inputs, analyses, level: LoosenLevel,
                       filter_config=None) -> None:
    """Sidecar run.json capturing everything needed to reproduce the run."""
    meta = {
        "tool": "laggraph",
        "version": __version__,
        "analyses": sorted(analyses),
        "loosen": level.value,
        "threads": thread_count(),
        "filter_config": filter_config.to_dict() if filter_config else None,
        "inputs": [
            {"path": str(p), "sha256": _sha256(p)} for p in sorted(
                (str(x) for x in inputs))
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_outputs(outdir, results: dict[str, list[Row]]) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(results):
        path = outdir / f"{name}.csv"
        write_rows(path, results[name])
        written.append(path)
    return written
