"""Aggregation of trace CSVs into per-actor summaries.

Consumes the papify-output CSV schema (PE,Actor,tstart,tstop,<events...>)
and produces per-actor counts, mean/max durations and per-event totals,
plus an optional per-event timeline.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaViolation
from .monitoring import CSV_FIXED_COLUMNS


@dataclass
class ActorSummary:
    actor: str
    count: int
    mean_ns: float
    max_ns: int
    event_totals: dict[str, int] = field(default_factory=dict)


@dataclass
class TraceSummary:
    actors: list[ActorSummary]
    total_rows: int

    def slowest(self, n: int = 3) -> list[ActorSummary]:
        return sorted((a for a in self.actors if a.count),
                      key=lambda a: a.mean_ns, reverse=True)[:n]


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != CSV_FIXED_COLUMNS:
            raise SchemaViolation(
                f"{path}: header must start with "
                f"{','.join(CSV_FIXED_COLUMNS)}, got {header}")
        events = header[4:]
        rows = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise SchemaViolation(
                    f"{path}:{lineno}: expected {len(header)} fields, "
                    f"got {len(row)}")
            rows.append(row)
        return events, rows


def summarize(csv_dir) -> TraceSummary:
    csv_dir = Path(csv_dir)
    summaries = []
    total = 0
    for path in sorted(csv_dir.glob("*.csv")):
        events, rows = _read_csv(path)
        durations = []
        totals = {ev: 0 for ev in events}
        actor = path.stem
        for row in rows:
            actor = row[1]
            durations.append(int(row[3]) - int(row[2]))
            for ev, raw in zip(events, row[4:]):
                if raw != "":
                    totals[ev] += int(raw)
        summaries.append(ActorSummary(
            actor=actor,
            count=len(rows),
            mean_ns=(sum(durations) / len(durations)) if durations else 0.0,
            max_ns=max(durations) if durations else 0,
            event_totals=totals))
        total += len(rows)
    return TraceSummary(summaries, total)


def timeline(csv_dir, event: str) -> list[tuple[int, str, int]]:
    """(tstart, actor, value) triples for one event, in time order."""
    csv_dir = Path(csv_dir)
    points = []
    for path in sorted(csv_dir.glob("*.csv")):
        events, rows = _read_csv(path)
        if event not in events:
            continue
        col = 4 + events.index(event)
        for row in rows:
            if row[col] != "":
                points.append((int(row[2]), row[1], int(row[col])))
    points.sort()
    return points


def format_summary(summary: TraceSummary) -> str:
    lines = [f"{'Actor':<22}{'Count':>7}{'Mean us':>12}{'Max us':>12}  Events"]
    for a in sorted(summary.actors, key=lambda s: s.actor):
        ev = " ".join(f"{k}={v}" for k, v in a.event_totals.items()) or "-"
        lines.append(f"{a.actor:<22}{a.count:>7}{a.mean_ns / 1000:>12.1f}"
                     f"{a.max_ns / 1000:>12.1f}  {ev}")
    lines.append(f"total rows: {summary.total_rows}")
    slow = summary.slowest()
    if slow:
        lines.append("slowest actors: "
                     + ", ".join(f"{a.actor} ({a.mean_ns / 1000:.1f} us mean)"
                                 for a in slow))
    return "\n".join(lines)


def format_timeline(points: list[tuple[int, str, int]], event: str) -> str:
    lines = [f"{'tstart':>16}  {'actor':<22}{event:>16}"]
    for t, actor, value in points:
        lines.append(f"{t:>16}  {actor:<22}{value:>16}")
    return "\n".join(lines)
