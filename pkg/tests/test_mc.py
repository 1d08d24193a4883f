import io
import math
import os
from dataclasses import replace

import numpy as np
import pytest

from betaconst.errors import ConfigError
from betaconst.inference import TestConfig
from betaconst.mc import McDesign, format_table, replication_seed, run_mc
from betaconst.sim import CIRBeta


def small(**kw):
    return McDesign(replications=100, window_lengths=(2, 5), **kw)


def test_replication_seed_scheme():
    a = replication_seed(0, 5, 0)
    assert a == int(np.random.SeedSequence(0, spawn_key=(5, 0)).generate_state(1, np.uint64)[0])
    seeds = {replication_seed(0, w, r) for w in (5, 22, 66) for r in range(500)}
    assert len(seeds) == 1500
    assert replication_seed(1, 5, 0) != a


def test_design_validation():
    with pytest.raises(ConfigError):
        McDesign(replications=50)
    with pytest.raises(ConfigError):
        McDesign(hypothesis="maybe")


def test_null_and_alternative_share_seeds():
    n = small().sim_config(5, 3)
    a = small(hypothesis="alternative").sim_config(5, 3)
    assert n.seed == a.seed and n.days == a.days == 5
    assert isinstance(a.beta, CIRBeta)


@pytest.mark.parametrize("threads", [4, os.cpu_count() or 2])
def test_bit_identical_across_threads(threads):
    d = small()
    one = run_mc(d, threads=1)
    many = run_mc(d, threads=threads)
    assert one.cells == many.cells
    for w in d.window_lengths:
        assert np.array_equal(one.statistics[w], many.statistics[w], equal_nan=True)
    assert one.to_csv() == many.to_csv()


def test_level_one_always_rejects():
    r = run_mc(replace(small(), test=TestConfig(levels=(1.0,))))
    assert r.rate(2, 1.0) == 1.0 and r.rate(5, 1.0) == 1.0


def test_base_seed_changes_results():
    a = run_mc(small(base_seed=1))
    b = run_mc(small(base_seed=2))
    assert not np.array_equal(a.statistics[5], b.statistics[5])


def test_stderr_and_csv():
    r = run_mc(small())
    c = r.cells[0]
    assert c.stderr == pytest.approx(math.sqrt(c.rate * (1 - c.rate) / c.reps))
    lines = r.to_csv().splitlines()
    assert lines[0] == "hypothesis,window_days,level,rate,stderr,reps,invalid"
    assert len(lines) == 1 + 2 * 3
    buf = io.StringIO()
    r.to_csv(buf)
    assert buf.getvalue() == r.to_csv()


def test_table_layout():
    n = run_mc(small())
    a = run_mc(small(hypothesis="alternative"))
    text = format_table(n, a)
    lines = text.splitlines()
    assert "Constant Beta" in lines[0] and "Time-Varying Beta" in lines[0]
    assert lines[2].startswith("2d") and lines[3].startswith("week")
    assert len({len(s) for s in lines}) == 1
    assert f"{100 * a.rate(5, 0.05):.2f}" in lines[3]
