"""Technical lag metrics: installable and missed sets, per-dependency and
per-release lag, and the per-release lifespan analyses."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta

from .corpus import Dependency, PackageHistory, PackageIndex, Release
from .semver import ReleaseType, satisfies

ZERO = timedelta(0)


class SampleContext(enum.Enum):
    AT_RELEASE = "AT_RELEASE"
    AT_NEXT_RELEASE = "AT_NEXT_RELEASE"


@dataclass(frozen=True)
class LagSample:
    """One lag observation feeding the downstream aggregations."""

    subject: str  # release ident, optionally "#<dep index>" suffixed
    time_point: datetime
    lag: timedelta
    context: SampleContext
    unresolved: bool = False  # no release of the target was available


class Direction(enum.Enum):
    HIGHER = "HIGHER"
    SAME = "SAME"
    LOWER = "LOWER"


@dataclass(frozen=True)
class LagChange:
    release: str
    direction: Direction
    magnitude: timedelta


@dataclass(frozen=True)
class MissedSummary:
    release: str
    evaluation_time: datetime
    per_dependency: tuple[tuple[str, tuple[tuple[str, ReleaseType], ...]], ...]


def _satisfying_indexes(hist: PackageHistory, dep: Dependency) -> tuple[int, ...]:
    """Version indexes of releases satisfying the constraint, ascending."""
    key = (dep.constraint.raw, None)
    cached = hist._sat_cache.get(key)
    if cached is None:
        cached = tuple(
            i for i, r in enumerate(hist.by_version)
            if satisfies(r.version, dep.constraint)
        )
        hist._sat_cache[key] = cached
    return cached


def _max_installable_index(hist: PackageHistory, dep: Dependency,
                           t: datetime) -> int | None:
    """Version index of the highest available satisfying release, if any."""
    sat = _satisfying_indexes(hist, dep)
    for vidx in reversed(sat):
        if hist.by_version[vidx].date <= t:
            return vidx
    return None


def installable(d: Dependency, t: datetime, idx: PackageIndex) -> list[Release]:
    """Available releases of the target that satisfy the constraint."""
    hist = idx.history(d.target)
    return [hist.by_version[i] for i in _satisfying_indexes(hist, d)
            if hist.by_version[i].date <= t]


def max_installable(d: Dependency, t: datetime,
                    idx: PackageIndex) -> Release | None:
    hist = idx.history(d.target)
    mi = _max_installable_index(hist, d, t)
    return None if mi is None else hist.by_version[mi]


def missed(d: Dependency, t: datetime, idx: PackageIndex) -> list[Release]:
    """Available releases version-above the installable maximum.

    When nothing is installable, every available release counts as missed.
    """
    hist = idx.history(d.target)
    mi = _max_installable_index(hist, d, t)
    start = 0 if mi is None else mi + 1
    return [r for r in hist.by_version[start:] if r.date <= t]


def _dep_lag(hist: PackageHistory, dep: Dependency, t: datetime) -> timedelta:
    mi = _max_installable_index(hist, dep, t)
    earliest = hist.min_missed_date(mi, t)
    if earliest is None:
        return ZERO
    return t - earliest


def dep_lag(d: Dependency, t: datetime, idx: PackageIndex) -> timedelta:
    """Time since the earliest missed release; zero when nothing is missed."""
    return _dep_lag(idx.history(d.target), d, t)


def dep_sample(d: Dependency, dep_index: int, r: Release, t: datetime,
               context: SampleContext, idx: PackageIndex) -> LagSample:
    hist = idx.history(d.target)
    unresolved = hist.available_count(t) == 0
    return LagSample(f"{r.ident}#{dep_index}", t, _dep_lag(hist, d, t),
                     context, unresolved)


def release_lag(r: Release, t: datetime, idx: PackageIndex) -> timedelta:
    """Maximal lag over the release's dependencies; zero without deps."""
    worst = ZERO
    for d in r.deps:
        lag = _dep_lag(idx.history(d.target), d, t)
        if lag > worst:
            worst = lag
    return worst


def lifespan_lags(r: Release, idx: PackageIndex):
    """Release lag at its own date and at the next release's date.

    The second component is None for the last release of a package; such
    releases are excluded from lifespan analyses.
    """
    at_release = release_lag(r, r.date, idx)
    nxt = idx.next_release(r)
    at_next = release_lag(r, nxt.date, idx) if nxt is not None else None
    return at_release, at_next


def lifespan_events(r: Release, idx: PackageIndex) -> tuple[bool, bool]:
    """(some target released a new version, some such version was missed)
    during the window from r's date to the next release's date."""
    nxt = idx.next_release(r)
    if nxt is None:
        raise ValueError(f"{r.ident} has no next release")
    any_updated = False
    any_missed = False
    for d in r.deps:
        hist = idx.history(d.target)
        window = hist.released_between(r.date, nxt.date)
        if not window:
            continue
        any_updated = True
        if any_missed:
            continue
        mi = _max_installable_index(hist, d, nxt.date)
        for vidx, _ in window:
            if mi is None or vidx > mi:
                any_missed = True
                break
    return any_updated, any_missed


def missed_types(r: Release, idx: PackageIndex) -> Counter:
    """Release types of target releases newly missed during r's lifespan."""
    nxt = idx.next_release(r)
    if nxt is None:
        raise ValueError(f"{r.ident} has no next release")
    out: Counter = Counter()
    for d in r.deps:
        hist = idx.history(d.target)
        window = hist.released_between(r.date, nxt.date)
        if not window:
            continue
        mi = _max_installable_index(hist, d, nxt.date)
        for vidx, rel in window:
            if mi is None or vidx > mi:
                out[rel.type] += 1
    return out


def missed_summary(r: Release, t: datetime, idx: PackageIndex) -> MissedSummary:
    per_dep = []
    for d in r.deps:
        entries = tuple((str(m.version), m.type) for m in missed(d, t, idx))
        per_dep.append((d.target, entries))
    return MissedSummary(r.ident, t, tuple(per_dep))


def lag_change(r: Release, idx: PackageIndex) -> LagChange:
    """Lag of r versus its date-order predecessor, both measured at r's date."""
    prev = idx.prev_release(r)
    if prev is None:
        raise ValueError(f"{r.ident} has no previous release")
    magnitude = release_lag(r, r.date, idx) - release_lag(prev, r.date, idx)
    if magnitude > ZERO:
        direction = Direction.HIGHER
    elif magnitude < ZERO:
        direction = Direction.LOWER
    else:
        direction = Direction.SAME
    return LagChange(r.ident, direction, magnitude)


def adoption(r: Release, idx: PackageIndex) -> Counter:
    """Types of target releases missed by the predecessor's dependency but
    installable under r's, for dependencies shared by target."""
    prev = idx.prev_release(r)
    if prev is None:
        raise ValueError(f"{r.ident} has no previous release")
    prev_by_target = {d.target: d for d in prev.deps}
    t = r.date
    out: Counter = Counter()
    for d in r.deps:
        prev_dep = prev_by_target.get(d.target)
        if prev_dep is None:
            continue
        hist = idx.history(d.target)
        mi_prev = _max_installable_index(hist, prev_dep, t)
        sat_new = _satisfying_indexes(hist, d)
        floor = -1 if mi_prev is None else mi_prev
        for vidx in reversed(sat_new):
            if vidx <= floor:
                break
            rel = hist.by_version[vidx]
            if rel.date <= t:
                out[rel.type] += 1
    return out
