"""Naive reference evaluators used for differential checking.

These deliberately share no code with the main semver/lag implementations:
constraints are expanded into explicit version intervals and lag is computed
by linear enumeration, straight from the definitions. Slow but obviously
correct; the `oracle-check` CLI subcommand and the test suite compare the
main implementations against these.
"""

from __future__ import annotations

import re
from datetime import datetime, timedelta
from functools import lru_cache

# Keys are (major, minor, patch, release_flag, prerelease_ids); a prerelease
# carries flag 0 and sorts below the plain triple (flag 1).
NEG_INF = (-1,)
POS_INF = (float("inf"),)


class OracleError(ValueError):
    pass


def _pre_ids(pre: str):
    if not pre:
        return ()
    out = []
    for ident in pre.split("."):
        if ident.isdigit():
            out.append((0, int(ident), ""))
        else:
            out.append((1, 0, ident))
    return tuple(out)


_V_RE = re.compile(
    r"^v?(\d+)\.(\d+)\.(\d+)(?:-([0-9A-Za-z.\-]+))?(?:\+[0-9A-Za-z.\-]+)?$"
)


@lru_cache(maxsize=None)
def version_key(text: str):
    m = _V_RE.match(text.strip())
    if not m:
        raise OracleError(f"oracle cannot parse version {text!r}")
    pre = m.group(4) or ""
    return (int(m.group(1)), int(m.group(2)), int(m.group(3)),
            0 if pre else 1, _pre_ids(pre))


class Interval:
    """Version interval with independently inclusive/exclusive endpoints."""

    __slots__ = ("lo", "lo_incl", "hi", "hi_incl")

    def __init__(self, lo, lo_incl, hi, hi_incl):
        self.lo, self.lo_incl = lo, lo_incl
        self.hi, self.hi_incl = hi, hi_incl

    def contains(self, key) -> bool:
        if key < self.lo or (key == self.lo and not self.lo_incl):
            return False
        if key > self.hi or (key == self.hi and not self.hi_incl):
            return False
        return True


def _triple_key(maj, mnr, pat, pre=""):
    return (maj, mnr, pat, 0 if pre else 1, _pre_ids(pre))


_TOKEN_RE = re.compile(
    r"^(>=|<=|>|<|=|~|\^)?v?(\d+)\.(\d+)\.(\d+)(?:-([0-9A-Za-z.\-]+))?$"
)


@lru_cache(maxsize=None)
def constraint_intervals(text: str) -> tuple[Interval, ...]:
    """Expand a restricted-grammar constraint into explicit intervals.

    Supported: "*", exact, =, >=, <=, >, <, ~, ^ over full versions.
    """
    stripped = text.strip()
    if stripped in ("*", "", "x", "X", "latest"):
        return (Interval(NEG_INF, True, POS_INF, True),)
    m = _TOKEN_RE.match(stripped)
    if not m:
        raise OracleError(f"oracle grammar does not cover {text!r}")
    op = m.group(1) or "="
    maj, mnr, pat = int(m.group(2)), int(m.group(3)), int(m.group(4))
    pre = m.group(5) or ""
    lo = _triple_key(maj, mnr, pat, pre)
    if op == "=":
        return (Interval(lo, True, lo, True),)
    if op == ">=":
        return (Interval(lo, True, POS_INF, True),)
    if op == ">":
        return (Interval(lo, False, POS_INF, True),)
    if op == "<=":
        return (Interval(NEG_INF, True, lo, True),)
    if op == "<":
        return (Interval(NEG_INF, True, lo, False),)
    if op == "~":
        hi = _triple_key(maj, mnr + 1, 0)
        return (Interval(lo, True, hi, False),)
    # caret, with the 0.x.y narrowing rules
    if maj > 0:
        hi = _triple_key(maj + 1, 0, 0)
    elif mnr > 0:
        hi = _triple_key(0, mnr + 1, 0)
    else:
        hi = _triple_key(0, 0, pat + 1)
    return (Interval(lo, True, hi, False),)


_ANCHOR_RE = re.compile(r"v?(\d+)\.(\d+)\.(\d+)-[0-9A-Za-z.\-]+")


@lru_cache(maxsize=None)
def _anchored_triples(text: str) -> frozenset:
    return frozenset(
        (int(m.group(1)), int(m.group(2)), int(m.group(3)))
        for m in _ANCHOR_RE.finditer(text)
    )


def satisfies_oracle(version_text: str, constraint_text: str) -> bool:
    key = version_key(version_text)
    if key[3] == 0:  # prerelease gate
        if key[:3] not in _anchored_triples(constraint_text):
            return False
    return any(iv.contains(key) for iv in constraint_intervals(constraint_text))


def installable_brute(releases, constraint_text: str, t: datetime) -> list:
    """releases: iterable of (version_text, date). Returns matching pairs."""
    return [
        (v, d) for v, d in releases
        if d <= t and satisfies_oracle(v, constraint_text)
    ]


def missed_brute(releases, constraint_text: str, t: datetime) -> list:
    available = [(v, d) for v, d in releases if d <= t]
    inst = installable_brute(releases, constraint_text, t)
    if not inst:
        return list(available)
    top = max(version_key(v) for v, _ in inst)
    return [(v, d) for v, d in available if version_key(v) > top]


def dep_lag_brute(releases, constraint_text: str, t: datetime) -> timedelta:
    miss = missed_brute(releases, constraint_text, t)
    if not miss:
        return timedelta(0)
    return t - min(d for _, d in miss)
