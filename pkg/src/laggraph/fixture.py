"""Built-in two-package example corpus used for documentation and testing.

Package p2 publishes 1.0.0, 1.0.1, 1.1.0, 1.0.2 and 2.0.0 on days 1, 3, 5,
8 and 9 of a fixed epoch; p1's first release depends on p2 with ~1.0.0 and
its second (day 9) widens the constraint to ^1.0.0. Under ~1.0.0 the
resolved release, missed set and lag at days 2, 4, 6 and 9 are known in
closed form (see EXPECTED_TILDE_ROWS).
"""

from __future__ import annotations

import csv
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .corpus import RawDependency, RawRecord, build_index

EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)


def day(i: int) -> datetime:
    return EPOCH + timedelta(days=i)


P2_RELEASES = (
    ("1.0.0", 1),
    ("1.0.1", 3),
    ("1.1.0", 5),
    ("1.0.2", 8),
    ("2.0.0", 9),
)

# (evaluation day, max installable, missed versions, lag in days)
EXPECTED_TILDE_ROWS = (
    (2, "1.0.0", (), 0.0),
    (4, "1.0.1", (), 0.0),
    (6, "1.0.1", ("1.1.0",), 1.0),
    (9, "1.0.2", ("1.1.0", "2.0.0"), 4.0),
)


def fixture_records() -> list[RawRecord]:
    records = [
        RawRecord("p2", version, day(i)) for version, i in P2_RELEASES
    ]
    records.append(RawRecord(
        "p1", "1.0.0", day(1),
        (RawDependency("p2", "~1.0.0", "runtime"),)))
    records.append(RawRecord(
        "p1", "1.1.0", day(9),
        (RawDependency("p2", "^1.0.0", "runtime"),)))
    return records


def fixture_index():
    return build_index(fixture_records())


def write_fixture(outdir) -> list[Path]:
    """Emit the fixture corpus and its expected per-day lag table."""
    from .corpus import write_csvs

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    release_path = outdir / "releases.csv"
    dep_path = outdir / "dependencies.csv"
    write_csvs(fixture_records(), release_path, dep_path)
    expected_path = outdir / "expected_lag_table.csv"
    with open(expected_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "max_installable", "missed", "lag_days"])
        for d, top, miss, lag in EXPECTED_TILDE_ROWS:
            w.writerow([d, top, " ".join(miss), f"{lag:.6f}"])
    return [release_path, dep_path, expected_path]
