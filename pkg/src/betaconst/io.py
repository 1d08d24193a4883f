"""CSV ingestion, window segmentation and report writing.

Input files have the header ``date,seq,px,py`` (prices, ``seq`` = 0..n per
date) or ``date,seq,rx,ry`` (log-returns, ``seq`` = 1..n per date).  Lines
starting with ``#`` before the header carry ``key=value`` metadata.  Dates are
plain strings and must be strictly increasing in string order, which holds
for ISO ``YYYY-MM-DD`` dates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import ConfigError, DegenerateInputError, InputError, ParseError
from .inference import TestConfig, run_test
from .stats import ObservationGrid

__all__ = [
    "PriceTable",
    "WindowPlan",
    "WindowRow",
    "WindowReport",
    "read_csv",
    "write_csv",
    "grid_to_table",
    "window_report",
]

_HEADERS = {("px", "py"): "prices", ("rx", "ry"): "returns"}


def _fmt(v: float) -> str:
    return f"{v:.9g}"


@dataclass(frozen=True, eq=False)
class PriceTable:
    """Intraday observations: one row of ``x``/``y`` values per date.

    In ``prices`` mode each row holds ``n + 1`` strictly positive prices; in
    ``returns`` mode ``n`` log-returns.
    """

    dates: tuple[str, ...]
    mode: Literal["prices", "returns"]
    x: np.ndarray
    y: np.ndarray
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def days(self) -> int:
        return len(self.dates)

    @property
    def n_per_day(self) -> int:
        return self.x.shape[1] - (1 if self.mode == "prices" else 0)

    def increments(self) -> tuple[np.ndarray, np.ndarray]:
        """Intraday log-price increments, ``(days, n)``; overnight moves are excluded."""
        if self.mode == "prices":
            return np.diff(np.log(self.x), axis=1), np.diff(np.log(self.y), axis=1)
        return self.x.copy(), self.y.copy()

    def to_grid(self, start: int = 0, stop: int | None = None) -> ObservationGrid:
        stop = self.days if stop is None else stop
        dx, dy = self.increments()
        return ObservationGrid.from_increments(dx[start:stop], dy[start:stop])


def read_csv(path: str | Path) -> PriceTable:
    """Parse and validate a price or return file."""
    path = Path(path)
    meta: dict[str, str] = {}
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    lineno = 0
    while lineno < len(lines) and lines[lineno].startswith("#"):
        body = lines[lineno][1:].strip()
        if "=" in body:
            k, v = body.split("=", 1)
            meta[k.strip()] = v.strip()
        lineno += 1
    if lineno >= len(lines):
        raise ParseError(f"{path}: missing header")
    header = [h.strip() for h in lines[lineno].split(",")]
    if len(header) != 4 or header[:2] != ["date", "seq"] or tuple(header[2:]) not in _HEADERS:
        raise ParseError(f"{path}: header must be date,seq,px,py or date,seq,rx,ry; got {lines[lineno]!r}")
    mode = _HEADERS[tuple(header[2:])]
    first_seq = 0 if mode == "prices" else 1

    dates: list[str] = []
    rows_x: list[list[float]] = []
    rows_y: list[list[float]] = []
    for row_no, row in enumerate(csv.reader(lines[lineno + 1:]), start=lineno + 2):
        if not row:
            continue
        if len(row) != 4 or any(cell.strip() == "" for cell in row):
            raise ParseError(f"{path}:{row_no}: expected 4 non-empty cells")
        date, seq_s, a_s, b_s = (cell.strip() for cell in row)
        try:
            seq = int(seq_s)
            a, b = float(a_s), float(b_s)
        except ValueError as exc:
            raise ParseError(f"{path}:{row_no}: {exc}") from None
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ParseError(f"{path}:{row_no}: non-finite value")
        if mode == "prices" and (a <= 0 or b <= 0):
            raise ParseError(f"{path}:{row_no}: prices must be strictly positive")
        if not dates or date != dates[-1]:
            if dates and date <= dates[-1]:
                raise ParseError(f"{path}:{row_no}: date {date} not after {dates[-1]}")
            if dates and len(rows_x[-1]) != len(rows_x[0]):
                raise ParseError(
                    f"{path}:{row_no}: date {dates[-1]} has {len(rows_x[-1])} rows, expected {len(rows_x[0])}"
                )
            dates.append(date)
            rows_x.append([])
            rows_y.append([])
        expected = first_seq + len(rows_x[-1])
        if seq != expected:
            raise ParseError(f"{path}:{row_no}: date {date} expected seq {expected}, got {seq}")
        rows_x[-1].append(a)
        rows_y[-1].append(b)
    if not dates:
        raise ParseError(f"{path}: no data rows")
    if len(rows_x[-1]) != len(rows_x[0]):
        raise ParseError(
            f"{path}: date {dates[-1]} has {len(rows_x[-1])} rows, expected {len(rows_x[0])}"
        )
    min_rows = 3 if mode == "prices" else 2
    if len(rows_x[0]) < min_rows:
        raise ParseError(f"{path}: need at least 2 increments per date")
    return PriceTable(tuple(dates), mode, np.array(rows_x), np.array(rows_y), meta)


def write_csv(table: PriceTable, path: str | Path) -> None:
    """Write ``table`` in canonical form (values use shortest round-trip repr)."""
    cols = ("px", "py") if table.mode == "prices" else ("rx", "ry")
    first_seq = 0 if table.mode == "prices" else 1
    with open(path, "w", newline="") as fh:
        for k, v in table.meta.items():
            fh.write(f"# {k}={v}\n")
        fh.write(f"date,seq,{cols[0]},{cols[1]}\n")
        for d, date in enumerate(table.dates):
            for i in range(table.x.shape[1]):
                fh.write(f"{date},{first_seq + i},{float(table.x[d, i])!r},{float(table.y[d, i])!r}\n")


def trading_dates(days: int, start: str = "2000-01-03") -> tuple[str, ...]:
    """Consecutive weekdays starting at ``start``, as ISO strings."""
    first = np.busday_offset(np.datetime64(start), 0, roll="forward")
    return tuple(str(d) for d in np.busday_offset(first, np.arange(days)))


def grid_to_table(grid: ObservationGrid, start: str = "2000-01-03",
                  meta: dict[str, str] | None = None) -> PriceTable:
    """Returns-mode table of a grid, one weekday per grid day."""
    dx, dy = grid.increments()
    return PriceTable(trading_dates(grid.days, start), "returns", dx, dy, dict(meta or {}))


@dataclass(frozen=True)
class WindowPlan:
    """Partition of the day sequence into analysis windows.

    ``weekly``/``monthly``/``quarterly`` are runs of 5/22/66 trading days from
    the first day, ``fixed`` uses ``days``.  With ``calendar=True``, monthly and
    quarterly windows instead group dates by calendar month or quarter (dates
    must then be ISO strings).
    """

    scheme: Literal["weekly", "monthly", "quarterly", "fixed"] = "weekly"
    days: int | None = None
    calendar: bool = False

    _LENGTHS = {"weekly": 5, "monthly": 22, "quarterly": 66}

    def __post_init__(self):
        if self.scheme not in ("weekly", "monthly", "quarterly", "fixed"):
            raise ConfigError(f"unknown window scheme {self.scheme!r}")
        if self.scheme == "fixed" and (self.days is None or self.days < 1):
            raise ConfigError("fixed windows need a positive day count")
        if self.calendar and self.scheme not in ("monthly", "quarterly"):
            raise ConfigError("calendar grouping applies to monthly or quarterly windows only")

    @property
    def length(self) -> int:
        return self.days if self.scheme == "fixed" else self._LENGTHS[self.scheme]

    def windows(self, dates) -> tuple[list[tuple[int, int]], int]:
        """Half-open day ranges of the windows and the number of dropped trailing days."""
        dates = list(dates)
        if self.calendar:
            def key(d: str) -> str:
                if self.scheme == "monthly":
                    return d[:7]
                return f"{d[:4]}Q{(int(d[5:7]) - 1) // 3 + 1}"
            out = []
            start = 0
            for i in range(1, len(dates) + 1):
                if i == len(dates) or key(dates[i]) != key(dates[start]):
                    out.append((start, i))
                    start = i
            return out, 0
        L = self.length
        full = len(dates) // L
        return [(i * L, (i + 1) * L) for i in range(full)], len(dates) - full * L


@dataclass(frozen=True)
class WindowRow:
    index: int
    start: str
    end: str
    days: int
    beta: float
    ci_lo: float
    ci_hi: float
    statistic: float
    p_value: float
    decisions: dict[float, bool]
    valid: bool
    skipped: int


@dataclass(frozen=True)
class WindowReport:
    scheme: str
    levels: tuple[float, ...]
    rows: tuple[WindowRow, ...]
    dropped_days: int

    def rejection_fraction(self, level: float) -> float:
        valid = [r for r in self.rows if r.valid]
        if not valid:
            return math.nan
        return sum(r.decisions[level] for r in valid) / len(valid)

    def summary_rows(self) -> list[dict[str, object]]:
        valid = [r for r in self.rows if r.valid]
        out = []
        for a in self.levels:
            rejected = sum(r.decisions[a] for r in valid)
            pct = 100.0 * rejected / len(valid) if valid else math.nan
            out.append(dict(interval=self.scheme, level=a, windows=len(self.rows),
                            valid=len(valid), rejected=rejected, percent=pct))
        return out

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        """Write ``windows.csv``, ``summary.csv`` and ``betas.csv`` into ``out_dir``."""
        out_dir = Path(out_dir)
        paths = {name: out_dir / f"{name}.csv" for name in ("windows", "summary", "betas")}
        lv = [f"reject_{_fmt(100 * a)}" for a in self.levels]
        with open(paths["windows"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["window", "start", "end", "days", "beta", "ci_lo", "ci_hi",
                        "statistic", "p_value", *lv, "valid", "skipped"])
            for r in self.rows:
                w.writerow([r.index, r.start, r.end, r.days, _fmt(r.beta), _fmt(r.ci_lo),
                            _fmt(r.ci_hi), _fmt(r.statistic), _fmt(r.p_value),
                            *(int(r.decisions[a]) for a in self.levels), int(r.valid), r.skipped])
        with open(paths["summary"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["interval", "level", "windows", "valid", "rejected", "percent"])
            for s in self.summary_rows():
                w.writerow([s["interval"], _fmt(s["level"]), s["windows"], s["valid"],
                            s["rejected"], _fmt(s["percent"])])
        with open(paths["betas"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "beta", "ci_lo", "ci_hi"])
            for r in self.rows:
                w.writerow([r.start, _fmt(r.beta), _fmt(r.ci_lo), _fmt(r.ci_hi)])
        return paths


def window_report(table: PriceTable, plan: WindowPlan, cfg: TestConfig = TestConfig()) -> WindowReport:
    """Run the test on every window of ``table``."""
    ranges, dropped = plan.windows(table.dates)
    if not ranges:
        raise InputError(f"{table.days} days do not cover a single {plan.scheme} window")
    rows = []
    for i, (lo, hi) in enumerate(ranges):
        try:
            o = run_test(table.to_grid(lo, hi), cfg)
        except DegenerateInputError:
            nan = math.nan
            rows.append(WindowRow(i, table.dates[lo], table.dates[hi - 1], hi - lo, nan, nan, nan,
                                  nan, nan, {a: False for a in cfg.levels}, False, 0))
            continue
        ci = o.beta_ci if o.beta_ci is not None else (math.nan, math.nan)
        rows.append(WindowRow(i, table.dates[lo], table.dates[hi - 1], hi - lo, o.beta, ci[0], ci[1],
                              o.statistic, o.p_value, dict(o.decisions), o.valid, o.skipped))
    return WindowReport(plan.scheme, cfg.levels, tuple(rows), dropped)
