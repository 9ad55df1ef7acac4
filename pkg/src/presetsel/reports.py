"""Tabular report emission: aligned text for humans, CSV for machines.

Aligned text rounds to 4 decimals for readability; CSV keeps full ``repr``
precision so downstream checks (e.g. that a mean row equals the column mean)
hold to floating-point accuracy.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import IO

import numpy as np

from .presets import PRESETS
from .regression import Metrics, PresetModelBundle

TRAIN_REPORT_HEADER = ["preset", "best_model", "mae", "mse", "mape"]
FEATSEL_REPORT_HEADER = ["preset", "n_selected", "n_total", "mape_before", "mape_after"]

# Reports list presets slowest-first.
_REPORT_ORDER = tuple(reversed(PRESETS))


def train_report_rows(bundle: PresetModelBundle) -> list[list]:
    """Per-preset (best family, MAE, MSE, MAPE) rows plus a mean_value row."""
    rows: list[list] = []
    for preset in _REPORT_ORDER:
        entry = bundle.entries[preset]
        m = entry.metrics
        rows.append([preset, entry.model.spec.family, m.mae, m.mse, m.mape])
    rows.append(_mean_row(rows, label="mean_value", numeric_from=2))
    return rows


def metrics_report_rows(metrics_by_preset: dict[str, Metrics], families: dict[str, str]) -> list[list]:
    rows: list[list] = []
    for preset in _REPORT_ORDER:
        if preset not in metrics_by_preset:
            continue
        m = metrics_by_preset[preset]
        rows.append([preset, families.get(preset, ""), m.mae, m.mse, m.mape])
    rows.append(_mean_row(rows, label="mean_value", numeric_from=2))
    return rows


def featsel_report_rows(rows: list[tuple]) -> list[list]:
    """Feature-selection rows (slowest preset first) plus a mean row."""
    by_preset = {r[0]: r for r in rows}
    out: list[list] = []
    for preset in _REPORT_ORDER:
        if preset in by_preset:
            out.append(list(by_preset[preset]))
    out.append(_mean_row(out, label="mean", numeric_from=1))
    return out


def _mean_row(rows: list[list], label: str, numeric_from: int) -> list:
    mean_row: list = [label] + [""] * (numeric_from - 1)
    for col in range(numeric_from, len(rows[0])):
        mean_row.append(float(np.mean([r[col] for r in rows])))
    return mean_row


def _cell_text(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def format_aligned(headers: list[str], rows: list[list]) -> str:
    table = [[_cell_text(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in table:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in table:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(dest: str | Path | IO[str], headers: list[str], rows: list[list]) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _write_csv_stream(fh, headers, rows)
    else:
        _write_csv_stream(dest, headers, rows)


def _write_csv_stream(fh: IO[str], headers: list[str], rows: list[list]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
