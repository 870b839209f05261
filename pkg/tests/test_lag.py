import random
from collections import Counter
from datetime import timedelta

import pytest

import synth
from laggraph.corpus import RawDependency, RawRecord, build_index
from laggraph.fixture import day, fixture_index, fixture_records
from laggraph.lag import (
    Direction,
    adoption,
    dep_lag,
    installable,
    lag_change,
    lifespan_events,
    lifespan_lags,
    max_installable,
    missed,
    missed_types,
    release_lag,
)
from laggraph.oracle import dep_lag_brute, missed_brute
from laggraph.semver import ReleaseType

DAY = timedelta(days=1)


@pytest.fixture(scope="module")
def idx():
    return fixture_index()


def p1_release(idx, version):
    return next(r for r in idx.releases("p1") if str(r.version) == version)


def tilde_dep(idx):
    return p1_release(idx, "1.0.0").deps[0]


def caret_dep(idx):
    return p1_release(idx, "1.1.0").deps[0]


class TestInstallable:
    def test_at_t4(self, idx):
        d = tilde_dep(idx)
        names = {str(r.version) for r in installable(d, day(4), idx)}
        assert names == {"1.0.0", "1.0.1"}
        assert str(max_installable(d, day(4), idx).version) == "1.0.1"

    def test_at_t9(self, idx):
        d = tilde_dep(idx)
        assert str(max_installable(d, day(9), idx).version) == "1.0.2"

    def test_before_first_release(self, idx):
        d = tilde_dep(idx)
        assert installable(d, day(0), idx) == []
        assert max_installable(d, day(0), idx) is None


class TestMissed:
    @pytest.mark.parametrize("i,expected", [
        (2, set()),
        (6, {"1.1.0"}),
        (9, {"1.1.0", "2.0.0"}),
    ])
    def test_fixture_rows(self, idx, i, expected):
        d = tilde_dep(idx)
        assert {str(r.version) for r in missed(d, day(i), idx)} == expected

    def test_empty_installable_means_all_available_missed(self):
        records = [
            RawRecord("t", "1.0.0", day(1)),
            RawRecord("t", "1.1.0", day(2)),
            RawRecord("u", "1.0.0", day(3),
                      (RawDependency("t", "=9.9.9", "runtime"),)),
        ]
        idx2 = build_index(records)
        d = idx2.releases("u")[0].deps[0]
        assert {str(r.version) for r in missed(d, day(4), idx2)} \
            == {"1.0.0", "1.1.0"}
        assert dep_lag(d, day(4), idx2) == day(4) - day(1)


class TestDepLag:
    def test_tilde_at_t9(self, idx):
        assert dep_lag(tilde_dep(idx), day(9), idx) == day(9) - day(5)

    def test_caret_at_t9_and_t10(self, idx):
        d = caret_dep(idx)
        assert dep_lag(d, day(9), idx) == timedelta(0)
        assert dep_lag(d, day(10), idx) == day(10) - day(9)

    def test_no_available_release_is_zero(self, idx):
        assert dep_lag(tilde_dep(idx), day(0), idx) == timedelta(0)


class TestReleaseLag:
    def test_no_deps_is_zero(self, idx):
        r = idx.releases("p2")[0]
        assert release_lag(r, day(9), idx) == timedelta(0)

    def test_single_dep_at_t6(self, idx):
        r = p1_release(idx, "1.0.0")
        assert release_lag(r, day(6), idx) == day(6) - day(5)

    def test_max_over_deps(self):
        records = [
            RawRecord("t1", "1.0.0", day(0)),
            RawRecord("t1", "2.0.0", day(2)),
            RawRecord("t2", "1.0.0", day(0)),
            RawRecord("t2", "2.0.0", day(6)),
            RawRecord("u", "1.0.0", day(1), (
                RawDependency("t1", "~1.0.0", "runtime"),
                RawDependency("t2", "~1.0.0", "runtime"),
            )),
        ]
        idx2 = build_index(records)
        r = idx2.releases("u")[0]
        # lags at day 9: 7d behind t1's 2.0.0, 3d behind t2's 2.0.0
        assert release_lag(r, day(9), idx2) == timedelta(days=7)


class TestLifespan:
    def test_lags_pair(self, idx):
        r1 = p1_release(idx, "1.0.0")
        at_release, at_next = lifespan_lags(r1, idx)
        assert at_release == timedelta(0)
        assert at_next == day(9) - day(5)

    def test_last_release_has_no_next(self, idx):
        r2 = p1_release(idx, "1.1.0")
        _, at_next = lifespan_lags(r2, idx)
        assert at_next is None

    def test_events_fixture(self, idx):
        assert lifespan_events(p1_release(idx, "1.0.0"), idx) == (True, True)

    def test_events_no_update(self):
        records = [
            RawRecord("t", "1.0.0", day(0)),
            RawRecord("t", "1.0.1", day(20)),
            RawRecord("u", "1.0.0", day(1),
                      (RawDependency("t", "^1.0.0", "runtime"),)),
            RawRecord("u", "1.0.1", day(2),
                      (RawDependency("t", "^1.0.0", "runtime"),)),
        ]
        idx2 = build_index(records)
        assert lifespan_events(idx2.releases("u")[0], idx2) == (False, False)

    def test_events_update_accepted(self):
        records = [
            RawRecord("t", "1.0.0", day(0)),
            RawRecord("t", "1.0.1", day(2)),
            RawRecord("u", "1.0.0", day(1),
                      (RawDependency("t", "^1.0.0", "runtime"),)),
            RawRecord("u", "1.0.1", day(3),
                      (RawDependency("t", "^1.0.0", "runtime"),)),
        ]
        idx2 = build_index(records)
        assert lifespan_events(idx2.releases("u")[0], idx2) == (True, False)


class TestMissedTypes:
    def test_fixture_minor_and_major(self, idx):
        r1 = p1_release(idx, "1.0.0")
        got = missed_types(r1, idx)
        assert got == Counter({ReleaseType.MINOR: 1, ReleaseType.MAJOR: 1})

    def test_accepted_update_not_missed(self):
        records = [
            RawRecord("t", "1.0.0", day(0)),
            RawRecord("t", "1.0.2", day(2)),
            RawRecord("u", "1.0.0", day(1),
                      (RawDependency("t", "~1.0.0", "runtime"),)),
            RawRecord("u", "1.0.1", day(3),
                      (RawDependency("t", "~1.0.0", "runtime"),)),
        ]
        idx2 = build_index(records)
        assert missed_types(idx2.releases("u")[0], idx2) == Counter()


def fixture_with_second_p1(constraint):
    records = [r for r in fixture_records() if r.package == "p2"]
    records.append(RawRecord(
        "p1", "1.0.0", day(1), (RawDependency("p2", "~1.0.0", "runtime"),)))
    records.append(RawRecord(
        "p1", "1.1.0", day(9), (RawDependency("p2", constraint, "runtime"),)))
    return build_index(records)


class TestLagChange:
    def test_same_when_manifest_repeats(self):
        idx2 = fixture_with_second_p1("~1.0.0")
        r = p1_release(idx2, "1.1.0")
        change = lag_change(r, idx2)
        assert change.direction is Direction.SAME
        assert change.magnitude == timedelta(0)

    def test_lower_when_constraint_widened(self):
        idx2 = fixture_with_second_p1("^1.0.0")
        change = lag_change(p1_release(idx2, "1.1.0"), idx2)
        assert change.direction is Direction.LOWER
        assert change.magnitude == -(day(9) - day(5))

    def test_higher_when_pinned_below_max(self):
        idx2 = fixture_with_second_p1("=1.0.0")
        change = lag_change(p1_release(idx2, "1.1.0"), idx2)
        assert change.direction is Direction.HIGHER
        # pinned: earliest missed is 1.0.1@T3 vs previous missed 1.1.0@T5
        assert change.magnitude == day(5) - day(3)


class TestAdoption:
    def test_adopts_previously_missed_minor(self):
        idx2 = fixture_with_second_p1("^1.0.0")
        got = adoption(p1_release(idx2, "1.1.0"), idx2)
        assert got == Counter({ReleaseType.MINOR: 1})

    def test_unchanged_constraint_adopts_nothing(self):
        idx2 = fixture_with_second_p1("~1.0.0")
        assert adoption(p1_release(idx2, "1.1.0"), idx2) == Counter()

    def test_dropped_dependency_adopts_nothing(self):
        records = [r for r in fixture_records() if r.package == "p2"]
        records.append(RawRecord(
            "p1", "1.0.0", day(1),
            (RawDependency("p2", "~1.0.0", "runtime"),)))
        records.append(RawRecord("p1", "1.1.0", day(9)))
        idx2 = build_index(records)
        assert adoption(p1_release(idx2, "1.1.0"), idx2) == Counter()


class TestProperties:
    def test_set_relations_random(self):
        rng = random.Random(21)
        for _ in range(15):
            idx2 = build_index(synth.random_corpus(rng))
            lo, hi = idx2.bounds
            for r in idx2.all_releases():
                for d in r.deps:
                    t = lo + (hi - lo) * rng.random()
                    inst = {x.ident for x in installable(d, t, idx2)}
                    avail = {x.ident for x in idx2.available(d.target, t)}
                    miss = missed(d, t, idx2)
                    miss_ids = {x.ident for x in miss}
                    assert inst <= avail
                    assert not (miss_ids & inst) or not inst
                    if inst:
                        top = max(x.version.key()
                                  for x in installable(d, t, idx2))
                        assert all(x.version.key() > top for x in miss)

    def test_linear_growth_between_events(self, idx):
        d = tilde_dep(idx)
        # no p2 release in (T6, T8); lag grows linearly by the elapsed time
        delta = timedelta(hours=30)
        assert dep_lag(d, day(6) + delta, idx) \
            == dep_lag(d, day(6), idx) + delta

    def test_release_lag_monotone_under_dep_addition(self):
        base = [
            RawRecord("t1", "1.0.0", day(0)),
            RawRecord("t1", "2.0.0", day(2)),
            RawRecord("t2", "1.0.0", day(0)),
            RawRecord("t2", "2.0.0", day(4)),
        ]
        one = base + [RawRecord(
            "u", "1.0.0", day(1), (RawDependency("t1", "~1.0.0", "runtime"),))]
        two = base + [RawRecord(
            "u", "1.0.0", day(1), (
                RawDependency("t1", "~1.0.0", "runtime"),
                RawDependency("t2", "~1.0.0", "runtime"),
            ))]
        i1, i2 = build_index(one), build_index(two)
        t = day(9)
        assert release_lag(i2.releases("u")[0], t, i2) \
            >= release_lag(i1.releases("u")[0], t, i1)

    def test_brute_force_equivalence_random(self):
        rng = random.Random(42)
        for _ in range(30):
            idx2 = build_index(synth.random_corpus(rng))
            lo, hi = idx2.bounds
            for r in idx2.all_releases():
                for d in r.deps:
                    hist = idx2.packages[d.target]
                    pairs = [(str(x.version), x.date) for x in hist.by_version]
                    for _ in range(3):
                        t = lo + (hi - lo) * rng.random()
                        assert dep_lag(d, t, idx2) == dep_lag_brute(
                            pairs, d.constraint.raw, t)
                        assert {str(x.version) for x in missed(d, t, idx2)} \
                            == {v for v, _ in missed_brute(
                                pairs, d.constraint.raw, t)}
