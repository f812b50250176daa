"""Aggregation of annotation records into percentage tables.

Counts are the primary data; percentages are derived at render time,
rounded half-away-from-zero to one decimal.  Raw counts and per-cell n
are always emitted alongside, so the rounded tables lose nothing.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import ClassVar, Optional, Sequence

from .errors import EmptyInput, WorkbenchError
from .stimuli import CONDITIONS, SYSTEMS

OVERALL = "overall"


class MixedTask(WorkbenchError):
    code = "results.MixedTask"


class InvalidRecord(WorkbenchError):
    code = "results.InvalidRecord"


class InvariantViolation(WorkbenchError):
    code = "results.InvariantViolation"


def percent_value(count: int, n: int) -> Optional[Decimal]:
    """100*count/n at one decimal, half away from zero; None when n == 0."""
    if n == 0:
        return None
    return (Decimal(100 * count) / Decimal(n)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP
    )


def format_percent(count: int, n: int) -> str:
    value = percent_value(count, n)
    return "—" if value is None else str(value)


def _ordered(present: set[str], canonical: Sequence[str]) -> list[str]:
    return [x for x in canonical if x in present] + sorted(present - set(canonical))


@dataclass
class ResultTable:
    """Counts per (system, condition) cell plus pooled per-system rows."""

    cells: dict[tuple[str, str], dict[str, int]]
    task: ClassVar[str] = ""
    outcomes: ClassVar[tuple[str, ...]] = ()

    def systems(self) -> list[str]:
        return _ordered({system for system, _ in self.cells}, SYSTEMS)

    def conditions(self) -> list[str]:
        return _ordered({condition for _, condition in self.cells}, CONDITIONS)

    def count(self, system: str, condition: str, outcome: str) -> int:
        if condition == OVERALL:
            return sum(
                self.count(system, c, outcome) for c in self.conditions()
            )
        return self.cells.get((system, condition), {}).get(outcome, 0)

    def n(self, system: str, condition: str) -> int:
        return sum(self.count(system, condition, o) for o in self.outcomes)

    def overall_counts(self, system: str) -> dict[str, int]:
        return {o: self.count(system, OVERALL, o) for o in self.outcomes}

    def combine(self, other: "ResultTable") -> "ResultTable":
        if type(other) is not type(self):
            raise MixedTask(
                f"cannot combine {self.task} table with {other.task} table"
            )
        cells: dict[tuple[str, str], dict[str, int]] = {}
        for table in (self, other):
            for key, counts in table.cells.items():
                cell = cells.setdefault(key, {})
                for outcome, count in counts.items():
                    cell[outcome] = cell.get(outcome, 0) + count
        return type(self)(cells)

    # -- invariants ---------------------------------------------------------

    def check(self) -> None:
        half = Decimal("0.5")
        for system in self.systems():
            for condition in self.conditions() + [OVERALL]:
                n = self.n(system, condition)
                if n == 0:
                    continue
                total = sum(
                    percent_value(self.count(system, condition, o), n)
                    for o in self.outcomes
                )
                if abs(total - 100) > half:
                    raise InvariantViolation(
                        f"{self.task} row {system}/{condition} sums to {total}"
                    )
        if self.task == "ranking":
            self._check_columns(half)

    def _check_columns(self, half: Decimal) -> None:
        # within a condition every record ranks one text per system, so
        # each rank position must be fully distributed across systems
        for condition in self.conditions():
            systems = self.systems()
            for outcome in self.outcomes:
                total = Decimal(0)
                for system in systems:
                    n = self.n(system, condition)
                    value = percent_value(self.count(system, condition, outcome), n)
                    total += 0 if value is None else value
                if abs(total - 100) > half:
                    raise InvariantViolation(
                        f"ranking position {outcome} in condition {condition} "
                        f"sums to {total} across systems"
                    )

    # -- renderings ---------------------------------------------------------

    def to_dict(self) -> dict:
        def cell_dict(system: str, condition: str) -> dict:
            n = self.n(system, condition)
            return {
                "system": system,
                "condition": condition,
                "n": n,
                "counts": {o: self.count(system, condition, o) for o in self.outcomes},
                "percent": {
                    o: (None if n == 0 else format_percent(self.count(system, condition, o), n))
                    for o in self.outcomes
                },
            }

        return {
            "task": self.task,
            "outcomes": list(self.outcomes),
            "cells": [
                cell_dict(system, condition)
                for system in self.systems()
                for condition in self.conditions()
            ],
            "overall": [cell_dict(system, OVERALL) for system in self.systems()],
        }

    def csv_rows(self) -> list[list[str]]:
        rows = []
        for system in self.systems():
            for condition in self.conditions() + [OVERALL]:
                n = self.n(system, condition)
                for outcome in self.outcomes:
                    count = self.count(system, condition, outcome)
                    rows.append(
                        [self.task, system, condition, outcome,
                         str(count), str(n), format_percent(count, n)]
                    )
        return rows

    def to_text(self) -> str:
        label_w = max(
            [len(s) for s in self.systems()]
            + [len(c) for c in self.conditions() + [OVERALL]]
            + [6]
        )
        col_w = max([len(o) for o in self.outcomes] + [6])
        header = (
            f"{self.task:<{label_w}}  {'':<{label_w}}  "
            + "  ".join(f"{o:>{col_w}}" for o in self.outcomes)
            + f"  {'n':>6}"
        )
        lines = [header]
        for system in self.systems():
            for condition in self.conditions() + [OVERALL]:
                n = self.n(system, condition)
                values = "  ".join(
                    f"{format_percent(self.count(system, condition, o), n):>{col_w}}"
                    for o in self.outcomes
                )
                lines.append(
                    f"{system:<{label_w}}  {condition:<{label_w}}  {values}  {n:>6}"
                )
        return "\n".join(lines) + "\n"


@dataclass
class RankingTable(ResultTable):
    task: ClassVar[str] = "ranking"
    outcomes: ClassVar[tuple[str, ...]] = ("1", "2", "3")


@dataclass
class ClassificationTable(ResultTable):
    task: ClassVar[str] = "classification"
    outcomes: ClassVar[tuple[str, ...]] = ("yes", "no", "ct")


def _bump(cells: dict, system: str, condition: str, outcome: str) -> None:
    cell = cells.setdefault((system, condition), {})
    cell[outcome] = cell.get(outcome, 0) + 1


def aggregate_ranking(records: Sequence[dict]) -> RankingTable:
    """Each record's permutation yields one observation per system: the
    rank given to the text that system produced."""
    if not records:
        raise EmptyInput("no ranking records")
    cells: dict[tuple[str, str], dict[str, int]] = {}
    for record in records:
        if record.get("task") != "ranking":
            raise MixedTask(f"expected ranking records, got task {record.get('task')!r}")
        systems = record.get("systems")
        response = record.get("response")
        condition = record.get("condition")
        if (
            not isinstance(systems, list) or len(systems) != 3
            or not isinstance(response, list) or sorted(response) != [1, 2, 3]
            or not isinstance(condition, str)
        ):
            raise InvalidRecord(f"bad ranking record {record.get('record_id')!r}")
        for system, rank in zip(systems, response):
            _bump(cells, system, condition, str(rank))
    return RankingTable(cells)


def aggregate_classification(records: Sequence[dict]) -> ClassificationTable:
    if not records:
        raise EmptyInput("no classification records")
    cells: dict[tuple[str, str], dict[str, int]] = {}
    for record in records:
        if record.get("task") != "classification":
            raise MixedTask(
                f"expected classification records, got task {record.get('task')!r}"
            )
        systems = record.get("systems")
        response = record.get("response")
        condition = record.get("condition")
        if (
            not isinstance(systems, list) or len(systems) != 1
            or response not in ClassificationTable.outcomes
            or not isinstance(condition, str)
        ):
            raise InvalidRecord(f"bad classification record {record.get('record_id')!r}")
        _bump(cells, systems[0], condition, response)
    return ClassificationTable(cells)


def render_report(tables: Sequence[ResultTable], format: str) -> str:
    """CSV (long form), JSON, or aligned text; invariants checked first."""
    if not tables:
        raise EmptyInput("no tables to render")
    for table in tables:
        table.check()
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["task", "system", "condition", "outcome", "count", "n", "percent"]
        )
        for table in tables:
            writer.writerows(table.csv_rows())
        return buf.getvalue()
    if format == "json":
        return json.dumps(
            {"tables": [t.to_dict() for t in tables]},
            ensure_ascii=False, indent=2, sort_keys=True,
        ) + "\n"
    if format == "text":
        return "\n".join(t.to_text() for t in tables)
    raise ValueError(f"unsupported report format {format!r}")


def read_records_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
