"""Seeded random corpus generation shared by the property and acceptance tests."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from laggraph.corpus import RawDependency, RawRecord

EPOCH = datetime(2014, 1, 1, tzinfo=timezone.utc)

CONSTRAINT_FORMS = ("*", "=", ">=", "<=", "<", ">", "~", "^")


def random_version_chain(rng: random.Random, length: int) -> list[str]:
    major = rng.choice((0, 0, 1))
    minor = rng.randint(0, 2)
    patch = rng.randint(0, 2)
    chain = []
    for _ in range(length):
        chain.append(f"{major}.{minor}.{patch}")
        bump = rng.random()
        if bump < 0.65:
            patch += 1
        elif bump < 0.9:
            minor += 1
            patch = 0
        else:
            major += 1
            minor = patch = 0
    return chain


def random_constraint(rng: random.Random, target_versions: list[str]) -> str:
    form = rng.choice(CONSTRAINT_FORMS)
    if form == "*":
        return "*"
    if rng.random() < 0.8:
        anchor = rng.choice(target_versions)
    else:
        anchor = (f"{rng.randint(0, 2)}.{rng.randint(0, 3)}"
                  f".{rng.randint(0, 3)}")
    return anchor if form == "=" and rng.random() < 0.5 else f"{form}{anchor}"


def random_corpus(rng: random.Random, max_packages: int = 20,
                  max_releases: int = 8,
                  max_deps: int = 3) -> list[RawRecord]:
    """A small registry snapshot: per-package release chains with dates in
    increasing order and dependencies on other packages in the corpus."""
    n_pkg = rng.randint(2, max_packages)
    names = [f"pkg{i}" for i in range(n_pkg)]
    versions = {
        name: random_version_chain(rng, rng.randint(1, max_releases))
        for name in names
    }
    # constraint pools keep (target, constraint) pairs realistic and reused
    pools = {
        name: [random_constraint(rng, versions[name])
               for _ in range(rng.randint(1, 4))]
        for name in names
    }
    records: list[RawRecord] = []
    for name in names:
        t = EPOCH + timedelta(hours=rng.randint(0, 24 * 200))
        for version in versions[name]:
            t = t + timedelta(hours=rng.randint(1, 24 * 30))
            deps = []
            for _ in range(rng.randint(0, max_deps)):
                target = rng.choice(names)
                if target == name:
                    continue
                deps.append(RawDependency(
                    target, rng.choice(pools[target]), "runtime"))
            records.append(RawRecord(name, version, t, tuple(deps)))
    return records


def big_corpus(n_packages: int, releases_per_pkg: int,
               deps_per_release: int, seed: int = 0) -> list[RawRecord]:
    """Large deterministic corpus for the scale/determinism checks."""
    rng = random.Random(seed)
    names = [f"pkg{i:04d}" for i in range(n_packages)]
    versions = {name: random_version_chain(rng, releases_per_pkg)
                for name in names}
    pools = {
        name: [random_constraint(rng, versions[name]) for _ in range(6)]
        for name in names
    }
    records: list[RawRecord] = []
    for pi, name in enumerate(names):
        t = EPOCH + timedelta(hours=(pi * 37) % (24 * 365))
        for version in versions[name]:
            t = t + timedelta(hours=rng.randint(2, 24 * 14))
            deps = []
            for _ in range(deps_per_release):
                target = names[rng.randrange(n_packages)]
                if target == name:
                    continue
                deps.append(RawDependency(
                    target, rng.choice(pools[target]), "runtime"))
            records.append(RawRecord(name, version, t, tuple(deps)))
    return records
