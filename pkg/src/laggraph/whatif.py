"""Counterfactual constraint loosening: re-run the lag computation as if
patch-level (or patch+minor-level) compatible upgrades of installable
versions were accepted automatically."""

from __future__ import annotations

import enum
from bisect import bisect_left
from datetime import datetime, timedelta

from .corpus import Dependency, PackageHistory, PackageIndex, Release
from .lag import ZERO, _satisfying_indexes


class LoosenLevel(enum.Enum):
    NONE = "none"
    PATCH = "patch"
    PATCH_AND_MINOR = "minor"

    @classmethod
    def from_text(cls, text: str) -> "LoosenLevel":
        for level in cls:
            if level.value == text:
                return level
        raise ValueError(f"unknown loosen level {text!r}")


def _loosened_entries(hist: PackageHistory, dep: Dependency,
                      level: LoosenLevel):
    """Augmented satisfying set as (version index, effective date) pairs.

    A release outside the constraint joins the set once some lower
    satisfying release with a compatible version prefix exists; its
    effective date is the later of its own date and its earliest witness's
    date, so that time-dependence of the witness is preserved.
    """
    key = (dep.constraint.raw, level)
    cached = hist._sat_cache.get(key)
    if cached is not None:
        return cached

    sat = _satisfying_indexes(hist, dep)
    if level is LoosenLevel.PATCH:
        prefix = lambda v: (v.major, v.minor)
    else:
        prefix = lambda v: (v.major,)

    # Per compatibility group: satisfying releases ascending by version,
    # with a running minimum of their dates (earliest witness so far).
    groups: dict[tuple, tuple[list, list]] = {}
    for vidx in sat:
        rel = hist.by_version[vidx]
        g = prefix(rel.version)
        keys, mins = groups.setdefault(g, ([], []))
        d = rel.date
        if mins and mins[-1] < d:
            d = mins[-1]
        keys.append(vidx)
        mins.append(d)

    sat_set = set(sat)
    entries = [(vidx, hist.by_version[vidx].date) for vidx in sat]
    for vidx, rel in enumerate(hist.by_version):
        if vidx in sat_set:
            continue
        g = groups.get(prefix(rel.version))
        if not g:
            continue
        keys, mins = g
        pos = bisect_left(keys, vidx)
        if pos == 0:
            continue  # no satisfying release below this version
        witness = mins[pos - 1]
        entries.append((vidx, max(rel.date, witness)))
    entries.sort()
    cached = tuple(entries)
    hist._sat_cache[key] = cached
    return cached


def _max_loosened_index(hist: PackageHistory, dep: Dependency, t: datetime,
                        level: LoosenLevel) -> int | None:
    entries = _loosened_entries(hist, dep, level)
    for vidx, effective in reversed(entries):
        if effective <= t:
            return vidx
    return None


def installable_loosened(d: Dependency, t: datetime, level: LoosenLevel,
                         idx: PackageIndex) -> list[Release]:
    """The installable set extended with level-compatible upgrades."""
    from .lag import installable

    if level is LoosenLevel.NONE:
        return installable(d, t, idx)
    hist = idx.history(d.target)
    return [hist.by_version[vidx]
            for vidx, effective in _loosened_entries(hist, d, level)
            if effective <= t and hist.by_version[vidx].date <= t]


def dep_lag_loosened(d: Dependency, t: datetime, level: LoosenLevel,
                     idx: PackageIndex) -> timedelta:
    from .lag import _dep_lag

    hist = idx.history(d.target)
    if level is LoosenLevel.NONE:
        return _dep_lag(hist, d, t)
    mi = _max_loosened_index(hist, d, t, level)
    earliest = hist.min_missed_date(mi, t)
    if earliest is None:
        return ZERO
    return t - earliest


def lag_loosened(r: Release, t: datetime, level: LoosenLevel,
                 idx: PackageIndex) -> timedelta:
    """Release lag with the loosened installable set substituted in."""
    worst = ZERO
    for d in r.deps:
        lag = dep_lag_loosened(d, t, level, idx)
        if lag > worst:
            worst = lag
    return worst
