"""Command-line front end: ``betaconst {simulate,test,mc,window}``.

Settings come from built-in defaults, then an optional JSON config file
(``--config``), then command-line flags.  The merged configuration is printed
as JSON so every run can be reproduced.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import secrets
import sys
from dataclasses import replace
from pathlib import Path

from . import io as bio
from .errors import BetaConstError
from .inference import TestConfig, run_test
from .mc import McDesign, format_table, run_mc
from .sim import CIRBeta, CIRParams, ConstantBeta, JumpSpec, SimConfig, simulate
from .stats import DenominatorGuard, TruncationSpec

_CIR = {"kappa": 0.03, "theta": 1.0, "xi": 0.18}

DEFAULTS: dict = {
    "seed": None,
    "threads": None,
    "sim": {
        "days": 5,
        "steps_per_day": 38,
        "substeps": 10,
        "vol_x": dict(_CIR),
        "vol_y": dict(_CIR),
        "beta": {"kind": "constant", "value": 1.0, **_CIR, "initial": None},
        "jumps": {"preset": "formula", "intensity": None, "laplace_rate": None, "idio_intensity": None},
        "v0": None,
        "vtilde0": None,
        "drift_x": 0.0,
        "drift_y": 0.0,
    },
    "test": {
        "k_n": 19,
        "beta": None,
        "truncation": {"mode": "adaptive", "c": 4.0, "alpha_x": None, "alpha_y": None, "varpi": 0.49},
        "levels": [0.10, 0.05, 0.01],
        "guard": {"floor": 1e-12, "max_skip_fraction": 0.10, "policy": "skip"},
        "ci_level": 0.95,
    },
    "mc": {"replications": 500, "window_lengths": [5, 22, 66], "hypothesis": "both"},
    "window": {"scheme": "weekly", "days": None, "calendar": False},
}


class UsageError(BetaConstError):
    pass


def merge(base: dict, override: dict, where: str = "") -> dict:
    """Recursive merge that rejects keys absent from ``base``."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise UsageError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise UsageError(f"config key {where}{key!r} must be an object")
            out[key] = merge(base[key], val, f"{where}{key}.")
        else:
            out[key] = val
    return out


def build_sim(c: dict) -> SimConfig:
    b = c["beta"]
    if b["kind"] == "constant":
        beta = ConstantBeta(float(b["value"]))
    elif b["kind"] == "cir":
        beta = CIRBeta(CIRParams(b["kappa"], b["theta"], b["xi"]), b["initial"])
    else:
        raise UsageError(f"unknown beta kind {b['kind']!r} (constant or cir)")
    j = c["jumps"]
    presets = {"formula": JumpSpec.formula, "prose": JumpSpec.prose, "none": lambda: None}
    if j["preset"] not in presets:
        raise UsageError(f"unknown jump preset {j['preset']!r}")
    jumps = presets[j["preset"]]()
    if jumps is not None:
        # explicit fields override the preset one by one
        jumps = replace(jumps, **{k: j[k] for k in ("intensity", "laplace_rate", "idio_intensity")
                                  if j[k] is not None})
    return SimConfig(
        days=int(c["days"]), steps_per_day=int(c["steps_per_day"]), substeps=int(c["substeps"]),
        vol_x=CIRParams(**c["vol_x"]), vol_y=CIRParams(**c["vol_y"]), beta=beta, jumps=jumps,
        v0=c["v0"], vtilde0=c["vtilde0"], drift_x=float(c["drift_x"]), drift_y=float(c["drift_y"]),
    )


def build_test(c: dict) -> TestConfig:
    return TestConfig(
        k_n=int(c["k_n"]),
        beta=None if c["beta"] is None else float(c["beta"]),
        truncation=TruncationSpec(**c["truncation"]),
        levels=tuple(c["levels"]),
        guard=DenominatorGuard(**c["guard"]),
        ci_level=float(c["ci_level"]),
    )


def _threads(arg: int | None, cfg: dict) -> int:
    if arg is not None:
        return arg
    if cfg.get("threads") is not None:
        return int(cfg["threads"])
    env = os.environ.get("BETACONST_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


class _Fmt(argparse.ArgumentDefaultsHelpFormatter):
    # flags that default to None take their value from the config layers
    def _get_help_string(self, action):
        if action.default is None or action.default is False:
            return action.help
        return super()._get_help_string(action)


def _parser() -> argparse.ArgumentParser:
    fmt = _Fmt
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", type=Path, default=None, help="JSON config file")
    g.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (random if omitted)")
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads (fallback: $BETACONST_THREADS, then CPU count)")
    g.add_argument("--out", type=Path, default=None,
                   help="existing output directory (default: current directory; test writes files only when given)")

    p = argparse.ArgumentParser(prog="betaconst", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], formatter_class=fmt,
                       help="simulate the Monte Carlo model and write a returns CSV")
    s.add_argument("--days", type=int, default=None, help="trading days (default 5)")
    s.add_argument("--steps-per-day", type=int, default=None, help="observations per day (default 38)")
    s.add_argument("--substeps", type=int, default=None, help="Euler sub-steps per observation (default 10)")
    s.add_argument("--beta", choices=["constant", "cir"], default=None, help="beta process (default constant)")
    s.add_argument("--beta-value", type=float, default=None, help="constant beta (default 1)")
    s.add_argument("--jumps", choices=["formula", "prose", "none"], default=None,
                   help="jump preset (default formula)")

    def test_flags(q):
        q.add_argument("--k-n", type=int, default=None, help="block size (default 19)")
        q.add_argument("--known-beta", type=float, default=None, help="test against this beta instead of estimating it")
        q.add_argument("--truncation-c", type=float, default=None, help="adaptive truncation constant (default 4)")
        q.add_argument("--levels", type=str, default=None, help="comma-separated levels (default 0.1,0.05,0.01)")

    t = sub.add_parser("test", parents=[common], formatter_class=fmt, help="test one CSV file as a single window")
    t.add_argument("data", type=Path, help="input CSV (date,seq,px,py or date,seq,rx,ry)")
    test_flags(t)

    m = sub.add_parser("mc", parents=[common], formatter_class=fmt, help="Monte Carlo size/power table")
    m.add_argument("--replications", type=int, default=None, help="replications per window (default 500)")
    m.add_argument("--windows", type=str, default=None, help="comma-separated window lengths (default 5,22,66)")
    m.add_argument("--hypothesis", choices=["null", "alternative", "both"], default=None,
                   help="which beta process to simulate (default both)")
    m.add_argument("--jumps", choices=["formula", "prose", "none"], default=None,
                   help="jump preset (default formula)")
    test_flags(m)

    w = sub.add_parser("window", parents=[common], formatter_class=fmt, help="windowed analysis of a CSV file")
    w.add_argument("data", type=Path, help="input CSV")
    w.add_argument("--scheme", choices=["weekly", "monthly", "quarterly", "fixed"], default=None,
                   help="window scheme (default weekly)")
    w.add_argument("--window-days", type=int, default=None, help="window length for the fixed scheme")
    w.add_argument("--calendar", action="store_true", default=None,
                   help="group monthly/quarterly windows by calendar dates")
    test_flags(w)
    return p


def _flag_overrides(args) -> dict:
    o: dict = {"sim": {}, "test": {}, "mc": {}, "window": {}}
    get = lambda name: getattr(args, name, None)  # noqa: E731
    for flag, key in [("days", "days"), ("steps_per_day", "steps_per_day"), ("substeps", "substeps")]:
        if get(flag) is not None:
            o["sim"][key] = get(flag)
    beta = {}
    if get("beta") is not None:
        beta["kind"] = get("beta")
    if get("beta_value") is not None:
        beta["value"] = get("beta_value")
    if beta:
        o["sim"]["beta"] = beta
    if get("jumps") is not None:
        o["sim"]["jumps"] = {"preset": get("jumps")}
    if get("k_n") is not None:
        o["test"]["k_n"] = get("k_n")
    if get("known_beta") is not None:
        o["test"]["beta"] = get("known_beta")
    if get("truncation_c") is not None:
        o["test"]["truncation"] = {"mode": "adaptive", "c": get("truncation_c")}
    if get("levels") is not None:
        o["test"]["levels"] = [float(v) for v in get("levels").split(",")]
    if get("replications") is not None:
        o["mc"]["replications"] = get("replications")
    if get("windows") is not None:
        o["mc"]["window_lengths"] = [int(v) for v in get("windows").split(",")]
    if get("hypothesis") is not None:
        o["mc"]["hypothesis"] = get("hypothesis")
    if get("scheme") is not None:
        o["window"]["scheme"] = get("scheme")
    if get("window_days") is not None:
        o["window"]["days"] = get("window_days")
    if get("calendar"):
        o["window"]["calendar"] = True
    if args.seed is not None:
        o["seed"] = args.seed
    if args.threads is not None:
        o["threads"] = args.threads
    return o


def _effective(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cfg = merge(cfg, file_cfg)
    return merge(cfg, _flag_overrides(args))


def _echo(command: str, cfg: dict, keys: list[str]) -> None:
    shown = {k: cfg[k] for k in keys}
    print(f"# betaconst {command} effective config")
    print(json.dumps(shown, indent=2, sort_keys=True))


def _need_seed(cfg: dict) -> int:
    if cfg["seed"] is None:
        cfg["seed"] = secrets.randbits(64)
    return int(cfg["seed"])


def cmd_simulate(cfg: dict, out_dir: Path) -> Path:
    seed = _need_seed(cfg)
    sim = build_sim(cfg["sim"])
    sim = replace(sim, seed=seed)
    _echo("simulate", cfg, ["seed", "sim"])
    path = simulate(sim)
    meta = {"generator": "betaconst simulate", "seed": str(seed),
            "config": json.dumps(cfg["sim"], sort_keys=True, separators=(",", ":"))}
    target = out_dir / "simulated.csv"
    bio.write_csv(bio.grid_to_table(path.grid, meta=meta), target)
    print(f"seed {seed}")
    print(f"wrote {target}")
    return target


def _print_outcome(o) -> None:
    print(f"days            {o.days}")
    print(f"statistic       {o.statistic:.6f}")
    print(f"p_value         {o.p_value:.6f}")
    print(f"beta            {o.beta:.6f}" + (" (estimated)" if o.beta_estimated else " (known)"))
    if o.beta_ci is not None:
        print(f"beta_ci         [{o.beta_ci[0]:.6f}, {o.beta_ci[1]:.6f}]")
    for a, rej in o.decisions.items():
        print(f"reject@{a:<8g} {rej}")
    print(f"scaled_alt      {o.scaled_alt:.6g}")
    print(f"skipped_blocks  {o.skipped}/{o.terms}")
    print(f"valid           {o.valid}")


def cmd_test(data: Path, cfg: dict, out_dir: Path | None) -> int:
    tc = build_test(cfg["test"])
    _echo("test", cfg, ["test"])
    table = bio.read_csv(data)
    o = run_test(table.to_grid(), tc)
    _print_outcome(o)
    if out_dir is not None:
        plan = bio.WindowPlan("fixed", days=table.days)
        report = bio.window_report(table, plan, tc)
        report.write(out_dir)
        print(f"wrote {out_dir / 'windows.csv'}")
    return 0


def cmd_mc(cfg: dict, out_dir: Path, threads: int) -> int:
    seed = _need_seed(cfg)
    sim = build_sim(cfg["sim"])
    tc = build_test(cfg["test"])
    _echo("mc", cfg, ["seed", "sim", "test", "mc"])
    hyp = cfg["mc"]["hypothesis"]
    hyps = ["null", "alternative"] if hyp == "both" else [hyp]
    beta = sim.beta
    reports = []
    for h in hyps:
        kw = {}
        if h == "null" and isinstance(beta, ConstantBeta):
            kw["null_beta"] = beta
        if h == "alternative" and isinstance(beta, CIRBeta):
            kw["alt_beta"] = beta
        design = McDesign(replications=int(cfg["mc"]["replications"]),
                          window_lengths=tuple(cfg["mc"]["window_lengths"]), hypothesis=h,
                          sim=sim, test=tc, base_seed=seed, **kw)
        reports.append(run_mc(design, threads=threads))
    print(format_table(*reports))
    target = out_dir / "mc.csv"
    with open(target, "w", newline="") as fh:
        fh.write(f"# seed={seed}\n")
        for i, r in enumerate(reports):
            text = r.to_csv()
            fh.write(text if i == 0 else text.split("\n", 1)[1])
    print(f"seed {seed}")
    print(f"wrote {target}")
    return 0


def cmd_window(data: Path, cfg: dict, out_dir: Path) -> int:
    tc = build_test(cfg["test"])
    plan = bio.WindowPlan(**cfg["window"])
    _echo("window", cfg, ["test", "window"])
    table = bio.read_csv(data)
    report = bio.window_report(table, plan, tc)
    paths = report.write(out_dir)
    print("interval  level  windows  valid  rejected  percent")
    for s in report.summary_rows():
        print(f"{s['interval']:<9} {s['level']:<6g} {s['windows']:>7} {s['valid']:>6} "
              f"{s['rejected']:>9} {s['percent']:>8.2f}")
    if report.dropped_days:
        print(f"dropped {report.dropped_days} trailing days")
    for p in paths.values():
        print(f"wrote {p}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _effective(args)
        out_dir = args.out if args.out is not None else Path(".")
        if not out_dir.is_dir():
            raise UsageError(f"output directory {out_dir} does not exist")
        if args.command == "simulate":
            cmd_simulate(cfg, out_dir)
            return 0
        if args.command == "test":
            return cmd_test(args.data, cfg, args.out)
        if args.command == "mc":
            return cmd_mc(cfg, out_dir, _threads(args.threads, cfg))
        return cmd_window(args.data, cfg, out_dir)
    except (BetaConstError, OSError) as exc:
        print(f"betaconst: error: {exc}", file=sys.stderr)
        return 2
