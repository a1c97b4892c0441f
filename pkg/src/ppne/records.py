"""Per-iteration tradeoff records and their CSV form."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

CSV_HEADER = ["iteration", "flips", "pl", "one_minus_ap", "one_minus_f1", "one_minus_nmi", "wall_seconds"]


@dataclass
class TradeoffRecord:
    iteration: int
    cumulative_flips: int
    pl: float
    one_minus_ap: float
    one_minus_f1: float | None = None
    one_minus_nmi: float | None = None
    wall_seconds: float = 0.0


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    if math.isnan(value):
        return "nan"
    out = f"{value:.6f}"
    return "0.000000" if out == "-0.000000" else out


def emit_tradeoff_csv(records: list[TradeoffRecord]) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in records:
        lines.append(",".join([
            str(r.iteration), str(r.cumulative_flips), _fmt(r.pl), _fmt(r.one_minus_ap),
            _fmt(r.one_minus_f1), _fmt(r.one_minus_nmi), _fmt(r.wall_seconds),
        ]))
    return "\n".join(lines) + "\n"


def parse_tradeoff_csv(text: str) -> list[TradeoffRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected tradeoff header {header}")

    def opt(cell: str) -> float | None:
        return float(cell) if cell else None

    out = []
    for row in reader:
        if not row:
            continue
        out.append(TradeoffRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]),
                                  opt(row[4]), opt(row[5]), float(row[6])))
    return out
