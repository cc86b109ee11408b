"""Loading of location-based social network check-in data (SNAP format).

Check-in files are tab separated ``user, time, lat, lon, location`` rows and
edge files are ``user, user`` rows. Either may be gzip compressed.
"""

from __future__ import annotations

import gzip
import io
import os
import random
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import BinaryIO, Iterable, Iterator, Union

GZIP_MAGIC = b"\x1f\x8b"

Source = Union[str, os.PathLike, bytes, BinaryIO]


class IngestError(Exception):
    """Raised when a dataset source cannot be read at all."""


@dataclass(frozen=True, slots=True)
class CheckIn:
    user_id: int
    timestamp: datetime
    latitude: float
    longitude: float
    location_id: int

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if self.user_id < 0 or self.location_id < 0:
            raise ValueError("identifiers must be non-negative")


@dataclass(frozen=True, slots=True)
class Movement:
    provider_id: int
    from_microcell: int
    to_microcell: int

    def __post_init__(self):
        if self.from_microcell == self.to_microcell:
            raise ValueError("a movement needs two distinct microcells")


@dataclass(frozen=True)
class DatasetStats:
    node_count: int = 0
    edge_count: int = 0
    checkin_count: int = 0
    location_count: int = 0


@dataclass
class ParseReport:
    """Counts of accepted and skipped lines from one parse."""

    parsed: int = 0
    skipped: int = 0
    skipped_lines: list[int] = field(default_factory=list)

    def skip(self, lineno: int) -> None:
        self.skipped += 1
        if len(self.skipped_lines) < 100:
            self.skipped_lines.append(lineno)


def open_source(source: Source) -> BinaryIO:
    """Open a path, raw bytes or binary stream, transparently gunzipping."""
    try:
        if isinstance(source, (bytes, bytearray)):
            stream: BinaryIO = io.BytesIO(source)
        elif isinstance(source, (str, os.PathLike)):
            stream = open(source, "rb")
        else:
            stream = source
        if not hasattr(stream, "peek"):
            stream = io.BufferedReader(stream)  # type: ignore[arg-type]
        head = stream.peek(2)[:2]
    except (OSError, TypeError, AttributeError) as exc:
        raise IngestError(f"cannot read dataset source {source!r}: {exc}") from exc
    if head == GZIP_MAGIC:
        return gzip.GzipFile(fileobj=stream)  # type: ignore[return-value]
    return stream


def _lines(source: Source) -> Iterator[tuple[int, str]]:
    stream = open_source(source)
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.decode("utf-8", errors="replace").rstrip("\r\n")
            if line.strip():
                yield lineno, line
    except (OSError, EOFError) as exc:
        raise IngestError(f"error while reading dataset: {exc}") from exc
    finally:
        if not isinstance(source, (bytes, bytearray)) and stream is not source:
            stream.close()


def parse_location_id(token: str) -> int:
    """Decimal ids (Gowalla) parse as integers, hex digests (Brightkite) as base-16."""
    token = token.strip()
    if token.isdigit():
        return int(token)
    return int(token, 16)


def parse_timestamp(token: str) -> datetime:
    token = token.strip()
    if token.endswith("Z"):
        token = token[:-1] + "+00:00"
    ts = datetime.fromisoformat(token)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def iter_checkins(source: Source, report: ParseReport | None = None) -> Iterator[CheckIn]:
    """Stream check-ins, skipping (and counting) malformed lines."""
    report = report if report is not None else ParseReport()
    for lineno, line in _lines(source):
        parts = line.split("\t")
        if len(parts) != 5:
            report.skip(lineno)
            continue
        try:
            checkin = CheckIn(
                user_id=int(parts[0]),
                timestamp=parse_timestamp(parts[1]),
                latitude=float(parts[2]),
                longitude=float(parts[3]),
                location_id=parse_location_id(parts[4]),
            )
        except ValueError:
            report.skip(lineno)
            continue
        report.parsed += 1
        yield checkin


def parse_checkins(source: Source, report: ParseReport | None = None) -> list[CheckIn]:
    return list(iter_checkins(source, report))


def iter_social_edges(source: Source, report: ParseReport | None = None) -> Iterator[tuple[int, int]]:
    report = report if report is not None else ParseReport()
    for lineno, line in _lines(source):
        parts = line.split()
        if len(parts) != 2:
            report.skip(lineno)
            continue
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            report.skip(lineno)
            continue
        if a < 0 or b < 0:
            report.skip(lineno)
            continue
        report.parsed += 1
        yield a, b


def parse_social_edges(source: Source, report: ParseReport | None = None) -> set[tuple[int, int]]:
    """Undirected friendship edges, each stored once as ``(min, max)``."""
    return {(a, b) if a <= b else (b, a) for a, b in iter_social_edges(source, report)}


def derive_movements(checkins: Iterable[CheckIn]) -> list[Movement]:
    """Consecutive-location transitions per user.

    Check-ins are grouped by user and sorted by timestamp (stable, so ties
    keep input order). Repeated check-ins at the same location emit nothing.
    Users are emitted in ascending id order.
    """
    by_user: dict[int, list[CheckIn]] = defaultdict(list)
    for checkin in checkins:
        by_user[checkin.user_id].append(checkin)

    movements = []
    for user in sorted(by_user):
        trail = sorted(by_user[user], key=lambda c: c.timestamp)
        for prev, cur in zip(trail, trail[1:]):
            if prev.location_id != cur.location_id:
                movements.append(Movement(user, prev.location_id, cur.location_id))
    return movements


def dataset_stats(checkins: Iterable[CheckIn], edges: Iterable[tuple[int, int]]) -> DatasetStats:
    checkin_count = 0
    locations = set()
    for checkin in checkins:
        checkin_count += 1
        locations.add(checkin.location_id)

    nodes = set()
    undirected = set()
    for a, b in edges:
        nodes.add(a)
        nodes.add(b)
        undirected.add((a, b) if a <= b else (b, a))
    return DatasetStats(
        node_count=len(nodes),
        edge_count=len(undirected),
        checkin_count=checkin_count,
        location_count=len(locations),
    )


def sample_microcells(location_ids: Iterable[int], n: int, seed: int) -> set[int]:
    """Uniform sample of ``n`` microcells without replacement."""
    pool = sorted(set(location_ids))
    if n < 0 or n > len(pool):
        raise ValueError(f"cannot sample {n} microcells from {len(pool)}")
    return set(random.Random(seed).sample(pool, n))
