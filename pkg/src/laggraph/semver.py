"""Semantic version parsing, ordering, and dependency-constraint evaluation.

Follows the npm semver conventions: versions are major.minor.patch triples
with optional prerelease and build-metadata suffixes; constraints are
OR-separated comparator sets supporting exact versions, comparators,
hyphen ranges, x-ranges, tilde, and caret.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import lru_cache


class VersionParseError(ValueError):
    """Raised when a version string cannot be parsed."""

    def __init__(self, text: str, reason: str = "malformed version"):
        self.text = text
        super().__init__(f"{reason}: {text!r}")


class ConstraintParseError(ValueError):
    """Raised when a constraint expression cannot be parsed."""

    def __init__(self, text: str, reason: str = "unsupported constraint"):
        self.text = text
        super().__init__(f"{reason}: {text!r}")


def _encode_identifier(ident: str):
    # Numeric identifiers sort before (and apart from) alphanumeric ones.
    if ident.isdigit():
        return (0, int(ident), "")
    return (1, 0, ident)


@dataclass(frozen=True)
class Version:
    major: int
    minor: int
    patch: int
    prerelease: tuple[str, ...] = ()
    raw: str = ""

    def key(self):
        """Sort key implementing full precedence (build metadata ignored)."""
        pre = tuple(_encode_identifier(p) for p in self.prerelease)
        # A prerelease ranks below the plain triple; among prereleases a
        # shorter identifier list ranks below a longer one with equal prefix.
        return (self.major, self.minor, self.patch, 0 if pre else 1, pre)

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.major, self.minor, self.patch)

    def __str__(self) -> str:
        s = f"{self.major}.{self.minor}.{self.patch}"
        if self.prerelease:
            s += "-" + ".".join(self.prerelease)
        return s

    def __lt__(self, other: "Version") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "Version") -> bool:
        return self.key() <= other.key()

    def __gt__(self, other: "Version") -> bool:
        return self.key() > other.key()

    def __ge__(self, other: "Version") -> bool:
        return self.key() >= other.key()


_VERSION_RE = re.compile(
    r"^v?(\d+)\.(\d+)\.(\d+)"
    r"(?:-([0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))?"
    r"(?:\+([0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))?$"
)


def parse_version(text: str) -> Version:
    """Parse a full semantic version, accepting an optional leading "v"."""
    stripped = text.strip()
    m = _VERSION_RE.match(stripped)
    if not m:
        raise VersionParseError(text)
    pre = tuple(m.group(4).split(".")) if m.group(4) else ()
    return Version(int(m.group(1)), int(m.group(2)), int(m.group(3)), pre, raw=text)


def compare(a: Version, b: Version) -> int:
    """Return -1, 0 or 1 as a sorts below, equal to, or above b."""
    ka, kb = a.key(), b.key()
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


class ReleaseType(enum.Enum):
    MAJOR = "MAJOR"
    MINOR = "MINOR"
    PATCH = "PATCH"
    INITIAL = "INITIAL"

    def __str__(self) -> str:
        return self.value


def classify(curr: Version, prev: Version | None) -> ReleaseType:
    """Release type of curr relative to its predecessor in version order."""
    if prev is None:
        return ReleaseType.INITIAL
    if compare(curr, prev) == 0:
        raise ValueError(f"cannot classify a release against itself: {curr}")
    if curr.major != prev.major:
        return ReleaseType.MAJOR
    if curr.minor != prev.minor:
        return ReleaseType.MINOR
    return ReleaseType.PATCH


@dataclass(frozen=True)
class Comparator:
    op: str  # one of =, <, <=, >, >=
    version: Version

    def matches(self, v: Version) -> bool:
        c = compare(v, self.version)
        if self.op == "=":
            return c == 0
        if self.op == "<":
            return c < 0
        if self.op == "<=":
            return c <= 0
        if self.op == ">":
            return c > 0
        return c >= 0


@dataclass(frozen=True)
class Constraint:
    """Disjunction (OR) of comparator conjunctions, plus prerelease anchors.

    An empty conjunction matches everything. A version carrying a prerelease
    tag only satisfies the constraint if some comparator names a prerelease
    on the same (major, minor, patch) triple.
    """

    clauses: tuple[tuple[Comparator, ...], ...]
    raw: str
    prerelease_anchors: frozenset[tuple[int, int, int]] = frozenset()
    _sat_cache: dict = field(
        default_factory=dict, compare=False, repr=False, hash=False
    )

    def allows(self, v: Version) -> bool:
        if v.prerelease and v.triple not in self.prerelease_anchors:
            return False
        return any(all(c.matches(v) for c in clause) for clause in self.clauses)


MATCH_ANY_TOKENS = frozenset({"", "*", "x", "X", "latest"})

_PARTIAL_RE = re.compile(
    r"^v?(\d+|x|X|\*)(?:\.(\d+|x|X|\*))?(?:\.(\d+|x|X|\*))?"
    r"(?:-([0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))?"
    r"(?:\+([0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))?$"
)

_OPS = (">=", "<=", ">", "<", "=")


class _Partial:
    __slots__ = ("major", "minor", "patch", "prerelease")

    def __init__(self, major, minor, patch, prerelease):
        self.major = major  # int or None (wildcard / absent)
        self.minor = minor
        self.patch = patch
        self.prerelease = prerelease  # tuple[str, ...]

    def floor(self) -> Version:
        return Version(self.major or 0, self.minor or 0, self.patch or 0,
                       self.prerelease)


def _parse_partial(text: str) -> _Partial:
    m = _PARTIAL_RE.match(text)
    if not m:
        raise ConstraintParseError(text, "malformed version in constraint")

    def comp(g):
        if g is None or g in ("x", "X", "*"):
            return None
        return int(g)

    major, minor, patch = comp(m.group(1)), comp(m.group(2)), comp(m.group(3))
    pre = tuple(m.group(4).split(".")) if m.group(4) else ()
    if pre and (major is None or minor is None or patch is None):
        raise ConstraintParseError(text, "prerelease on incomplete version")
    return _Partial(major, minor, patch, pre)


def _ge(v: Version) -> Comparator:
    return Comparator(">=", v)


def _lt(v: Version) -> Comparator:
    return Comparator("<", v)


def _xrange(p: _Partial) -> list[Comparator]:
    if p.major is None:
        return []
    if p.minor is None:
        return [_ge(Version(p.major, 0, 0)), _lt(Version(p.major + 1, 0, 0))]
    if p.patch is None:
        return [_ge(Version(p.major, p.minor, 0)),
                _lt(Version(p.major, p.minor + 1, 0))]
    return [Comparator("=", Version(p.major, p.minor, p.patch, p.prerelease))]


def _tilde(p: _Partial) -> list[Comparator]:
    if p.major is None:
        return []
    if p.minor is None:
        return [_ge(Version(p.major, 0, 0)), _lt(Version(p.major + 1, 0, 0))]
    lo = Version(p.major, p.minor, p.patch or 0, p.prerelease)
    return [_ge(lo), _lt(Version(p.major, p.minor + 1, 0))]


def _caret(p: _Partial) -> list[Comparator]:
    if p.major is None:
        return []
    if p.minor is None:
        return [_ge(Version(p.major, 0, 0)), _lt(Version(p.major + 1, 0, 0))]
    if p.patch is None:
        lo = Version(p.major, p.minor, 0)
        if p.major == 0:
            return [_ge(lo), _lt(Version(0, p.minor + 1, 0))]
        return [_ge(lo), _lt(Version(p.major + 1, 0, 0))]
    lo = Version(p.major, p.minor, p.patch, p.prerelease)
    if p.major == 0 and p.minor == 0:
        return [_ge(lo), _lt(Version(0, 0, p.patch + 1))]
    if p.major == 0:
        return [_ge(lo), _lt(Version(0, p.minor + 1, 0))]
    return [_ge(lo), _lt(Version(p.major + 1, 0, 0))]


def _comparator(op: str, p: _Partial) -> list[Comparator]:
    if p.major is None:
        # e.g. ">=*": any version for >=/<=, impossible for </>
        if op in (">", "<"):
            return [Comparator("<", Version(0, 0, 0))]
        return []
    if p.minor is None or p.patch is None:
        # Desugar partial versions the way npm does.
        if p.minor is None:
            lo, hi = Version(p.major, 0, 0), Version(p.major + 1, 0, 0)
        else:
            lo, hi = Version(p.major, p.minor, 0), Version(p.major, p.minor + 1, 0)
        if op == ">=":
            return [_ge(lo)]
        if op == "<":
            return [_lt(lo)]
        if op == ">":
            return [_ge(hi)]
        if op == "<=":
            return [_lt(hi)]
        return _xrange(p)  # "=1.2" behaves as the x-range 1.2.x
    v = Version(p.major, p.minor, p.patch, p.prerelease)
    return [Comparator(op, v)]


def _parse_token(token: str) -> list[Comparator]:
    if token in MATCH_ANY_TOKENS:
        return []
    if token.startswith("~"):
        return _tilde(_parse_partial(token[1:].lstrip(">")))
    if token.startswith("^"):
        return _caret(_parse_partial(token[1:]))
    for op in _OPS:
        if token.startswith(op):
            return _comparator(op, _parse_partial(token[len(op):]))
    return _xrange(_parse_partial(token))


def _merge_op_tokens(tokens: list[str]) -> list[str]:
    # Re-join an operator token that was separated from its version by space.
    merged: list[str] = []
    pending = None
    for tok in tokens:
        if pending is not None:
            merged.append(pending + tok)
            pending = None
        elif tok in _OPS or tok in ("~", "^"):
            pending = tok
        else:
            merged.append(tok)
    if pending is not None:
        raise ConstraintParseError(pending, "dangling operator")
    return merged


def _parse_clause(text: str) -> tuple[Comparator, ...]:
    text = text.strip()
    if text in MATCH_ANY_TOKENS:
        return ()
    hyphen = re.split(r"\s+-\s+", text)
    if len(hyphen) == 2:
        lo, hi = _parse_partial(hyphen[0]), _parse_partial(hyphen[1])
        comps: list[Comparator] = []
        if lo.major is not None:
            comps.append(_ge(lo.floor()))
        if hi.major is not None:
            if hi.minor is None:
                comps.append(_lt(Version(hi.major + 1, 0, 0)))
            elif hi.patch is None:
                comps.append(_lt(Version(hi.major, hi.minor + 1, 0)))
            else:
                comps.append(
                    Comparator("<=", Version(hi.major, hi.minor, hi.patch,
                                             hi.prerelease)))
        return tuple(comps)
    if len(hyphen) > 2:
        raise ConstraintParseError(text, "malformed hyphen range")
    comps = []
    for tok in _merge_op_tokens(text.split()):
        comps.extend(_parse_token(tok))
    return tuple(comps)


@lru_cache(maxsize=None)
def parse_constraint(text: str) -> Constraint:
    """Parse a dependency constraint into its normalized clause form.

    "*", "", "x" and "latest" normalize to match-any. Expressions outside
    the supported registry grammar (URLs, git refs, other dist tags) raise
    ConstraintParseError; callers decide how to handle the exclusion.
    """
    stripped = text.strip()
    if "://" in stripped or stripped.startswith(("git", "file:", "link:")):
        raise ConstraintParseError(text, "non-registry constraint")
    if stripped in MATCH_ANY_TOKENS:
        return Constraint(clauses=((),), raw=text)
    clauses = tuple(_parse_clause(part) for part in stripped.split("||"))
    anchors = frozenset(
        c.version.triple
        for clause in clauses
        for c in clause
        if c.version.prerelease
    )
    return Constraint(clauses=clauses, raw=text, prerelease_anchors=anchors)


def satisfies(v: Version, c: Constraint) -> bool:
    """Decide whether version v lies in the set denoted by constraint c."""
    key = v.key()
    cached = c._sat_cache.get(key)
    if cached is None:
        cached = c.allows(v)
        c._sat_cache[key] = cached
    return cached
