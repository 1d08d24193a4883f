"""Monte Carlo size and power study.

Replication ``r`` of window length ``T`` simulates a fresh ``T``-day path whose
seed is derived from ``(base_seed, T, r)`` with :class:`numpy.random.SeedSequence`,
so any single replication can be rerun in isolation.  Null and alternative
designs with the same ``base_seed`` share their random numbers and differ only
in the beta process.  Tallies are integer counts, so serial and threaded runs
give identical reports.
"""

from __future__ import annotations

import csv
import io as _io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, TextIO

import numpy as np

from .errors import ConfigError
from .inference import TestConfig, TestOutcome, run_test
from .sim import CIRBeta, ConstantBeta, SimConfig, simulate

__all__ = ["McDesign", "McCell", "McReport", "replication_seed", "run_replication", "run_mc", "format_table"]

Hypothesis = Literal["null", "alternative"]


def replication_seed(base_seed: int, window_days: int, r: int) -> int:
    """64-bit seed of replication ``r`` for windows of ``window_days`` days."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(window_days), int(r)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class McDesign:
    replications: int = 500
    window_lengths: tuple[int, ...] = (5, 22, 66)
    hypothesis: Hypothesis = "null"
    sim: SimConfig = SimConfig()
    test: TestConfig = TestConfig()
    base_seed: int = 0
    null_beta: ConstantBeta = ConstantBeta(1.0)
    alt_beta: CIRBeta = CIRBeta()

    def __post_init__(self):
        object.__setattr__(self, "window_lengths", tuple(int(w) for w in self.window_lengths))
        if self.replications < 100:
            raise ConfigError("at least 100 replications are needed to report rejection rates")
        if not self.window_lengths or min(self.window_lengths) < 1:
            raise ConfigError("window lengths must be positive day counts")
        if self.hypothesis not in ("null", "alternative"):
            raise ConfigError(f"unknown hypothesis {self.hypothesis!r}")
        self.test.check_grid(self.sim.steps_per_day)

    def sim_config(self, window_days: int, r: int) -> SimConfig:
        beta = self.null_beta if self.hypothesis == "null" else self.alt_beta
        return replace(self.sim, days=window_days, beta=beta,
                       seed=replication_seed(self.base_seed, window_days, r))


@dataclass(frozen=True)
class McCell:
    hypothesis: str
    window_days: int
    level: float
    rate: float
    stderr: float
    reps: int
    invalid: int


@dataclass(frozen=True, eq=False)
class McReport:
    design: McDesign
    cells: tuple[McCell, ...]
    statistics: dict[int, np.ndarray] = field(default_factory=dict)

    def rate(self, window_days: int, level: float) -> float:
        for c in self.cells:
            if c.window_days == window_days and math.isclose(c.level, level):
                return c.rate
        raise KeyError((window_days, level))

    def to_csv(self, out: TextIO | str | None = None) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["hypothesis", "window_days", "level", "rate", "stderr", "reps", "invalid"])
        for c in self.cells:
            w.writerow([c.hypothesis, c.window_days, f"{c.level:.9g}", f"{c.rate:.9g}",
                        f"{c.stderr:.9g}", c.reps, c.invalid])
        text = buf.getvalue()
        if isinstance(out, str):
            with open(out, "w", newline="") as fh:
                fh.write(text)
        elif out is not None:
            out.write(text)
        return text


def run_replication(design: McDesign, window_days: int, r: int) -> TestOutcome:
    """Simulate and test a single replication."""
    path = simulate(design.sim_config(window_days, r))
    return run_test(path.grid, design.test)


def run_mc(design: McDesign, threads: int = 1) -> McReport:
    """Run every replication of every window length and tabulate rejection rates."""
    tasks = [(w, r) for w in design.window_lengths for r in range(design.replications)]
    levels = design.test.levels

    def work(task):
        o = run_replication(design, *task)
        return o.valid, o.statistic, tuple(o.decisions[a] for a in levels)

    if threads <= 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))

    cells = []
    stats = {}
    for w in design.window_lengths:
        rows = [res for (tw, _), res in zip(tasks, results) if tw == w]
        valid = [res for res in rows if res[0]]
        stats[w] = np.array([res[1] if res[0] else np.nan for res in rows])
        reps = len(valid)
        for i, a in enumerate(levels):
            hits = sum(1 for res in valid if res[2][i])
            p = hits / reps if reps else math.nan
            se = math.sqrt(p * (1 - p) / reps) if reps else math.nan
            cells.append(McCell(design.hypothesis, w, a, p, se, reps, len(rows) - reps))
    return McReport(design, tuple(cells), stats)


def format_table(*reports: McReport) -> str:
    """Rejection rates in percent: one row per window length, one column group per report."""
    if not reports:
        return ""
    names = {5: "week", 22: "month", 66: "quarter"}
    windows = reports[0].design.window_lengths
    levels = reports[0].design.test.levels
    head = [f"{'Interval':<8}"]
    sub = [" " * 8]
    for rep in reports:
        title = "Constant Beta" if rep.design.hypothesis == "null" else "Time-Varying Beta"
        head.append(title.center(8 * len(levels)))
        sub.append("".join(f"{100 * a:8.1f}" for a in levels))
    lines = ["  ".join(head), "  ".join(sub)]
    for w in windows:
        label = names.get(w, f"{w}d")
        row = [f"{label:<8}"]
        for rep in reports:
            row.append("".join(f"{100 * rep.rate(w, a):8.2f}" for a in levels))
        lines.append("  ".join(row))
    width = max(len(s) for s in lines)
    lines[0] = lines[0].ljust(width)
    return "\n".join(lines)
