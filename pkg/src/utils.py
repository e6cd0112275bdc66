# src/utils.py
# Допоміжні функції (парсер каталожних імен, CSV-звіти, форматування)

import csv
import io
import math
import re
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

SCHEMA_LINE = "#schema=1"

T = TypeVar("T")
R = TypeVar("R")

_CALL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


class CatalogError(ValueError):
    """Unknown catalog name (family, ring function, weight, triple, integrand)."""


def parse_call(spec: str) -> Tuple[str, List[float]]:
    """Розбирає 'poly_clamped(2)' -> ('poly_clamped', [2.0]); 'abs_frac' -> ('abs_frac', [])."""
    m = _CALL_RE.match(str(spec))
    if not m:
        raise CatalogError(f"Некоректне ім'я: {spec!r}")
    name, args = m.group(1), m.group(2)
    values: List[float] = []
    if args is not None and args.strip():
        for part in args.split(","):
            try:
                values.append(float(part.strip()))
            except ValueError:
                raise CatalogError(f"Некоректний параметр {part.strip()!r} у {spec!r}")
    return name, values


def fmt_num(value: Any) -> str:
    """Fixed float formatting for reports; identical input gives identical text."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".15g")
    return "" if value is None else str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns))
    for row in rows:
        writer.writerow([fmt_num(v) for v in row])
    return buf.getvalue()


def write_csv_report(path: Optional[str], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Пише CSV зі службовим рядком '#schema=1'. path=None або '-' -> лише повертає текст."""
    text = render_csv(columns, rows)
    if path and path != "-":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_csv_report(text: str) -> Tuple[List[str], List[List[str]]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCHEMA_LINE:
        raise ValueError("Missing '#schema=1' header line")
    reader = csv.reader(lines[1:])
    header = next(reader)
    return header, [row for row in reader]


def format_duration(seconds: float) -> str:
    s = max(0.0, float(seconds))
    if s < 60:
        return f"{s:.2f}s"
    m, s = divmod(int(s), 60)
    h, m = divmod(m, 60)
    parts: List[str] = []
    if h: parts.append(f"{h}h")
    if m: parts.append(f"{m}m")
    parts.append(f"{s}s")
    return " ".join(parts)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """Map in declaration order; jobs > 1 fans out over a thread pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as executor:
        return list(executor.map(fn, items))
