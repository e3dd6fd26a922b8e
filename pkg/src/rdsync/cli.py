"""Command-line interface.

Subcommands: ``certify``, ``simulate``, ``schedule-gen``, ``preset``,
``verify-lemma3``.  Exit status 0 on success, 1 when certification or
simulation fails, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import config as cfgmod
from .criterion import (CriterionInputs, VERDICT_OK, comparison_bound_check,
                        theorem1_certificate, tune_epsilons)
from .schedule import generate_random, rho_star
from .sim import SimulationDivergence, simulate, write_trajectory_csv

# Published constants of the static certification benchmark, for the
# side-by-side comparison mode of `certify`.
REFERENCE_VALUES = {
    "d": 0.0063, "alpha1": 46.5607, "alpha2": 1.0, "alpha3": -150.175,
    "alpha4": -9.375, "beta1": 113.0016, "beta3": 46.5482, "beta": 159.5498,
    "lambda": 3.6115, "delta": 0.4205,
}

DEFAULT_EPS_GRID = [(e1, e2) for e1 in (0.5, 1.0, 2.0, 4.0, 6.0989, 8.0)
                    for e2 in (0.25, 0.5, 1.0, 2.0)]


def _load(path: str, args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load_config(path)
    if getattr(args, "dt", None) is not None:
        cfg = replace(cfg, dt=args.dt)
    if getattr(args, "grid", None) is not None:
        cfg = replace(cfg, grid_points=args.grid)
    return cfg


def _cmd_certify(args) -> int:
    cfg = _load(args.config, args)
    if cfg.top is None:
        print("error: config has no coupling section", file=sys.stderr)
        return 2
    rho = rho_star(cfg.schedule)
    tau = cfg.dyn.delay.bound
    if cfg.eps1 is not None and cfg.eps2 is not None:
        report = theorem1_certificate(cfg.dyn, cfg.top, cfg.dom, rho,
                                      CriterionInputs(cfg.eps1, cfg.eps2, rho, tau))
    else:
        report, _ = tune_epsilons(cfg.dyn, cfg.top, cfg.dom, rho, DEFAULT_EPS_GRID)
    if args.compare_reference:
        print(f"{'quantity':>10s} {'computed':>14s} {'reference':>14s}")
        for key, val in report.as_dict().items():
            if key == "verdict":
                continue
            ref = REFERENCE_VALUES.get(key)
            ref_s = f"{ref:14.4f}" if ref is not None else " " * 14
            print(f"{key:>10s} {val:14.6f} {ref_s}")
        print(f"verdict = {report.verdict}")
    else:
        sys.stdout.write(report.to_text())
    return 0 if report.verdict == VERDICT_OK else 1


def _cmd_simulate(args) -> int:
    cfg = _load(args.config, args)
    out = args.output or cfg.output_path
    if not out:
        print("error: no output path (use -o)", file=sys.stderr)
        return 2
    try:
        traj = simulate(cfg.sim_config())
    except SimulationDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_trajectory_csv(traj, out)
    print(f"wrote {out}: {len(traj.times)} samples, "
          f"final error norm {traj.error_norms[-1]:.6g}")
    return 0


def _cmd_schedule_gen(args) -> int:
    sched = generate_random(args.theta, args.omega, args.horizon, args.seed)
    text = sched.to_text()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_preset(args) -> int:
    sys.stdout.write(cfgmod.dump_config(cfgmod.preset(args.name)))
    return 0


def _cmd_verify_lemma3(args) -> int:
    sched = generate_random(args.theta, args.omega, args.horizon, args.seed)
    ok, (times, V) = comparison_bound_check(args.beta1, args.alpha2, args.beta3,
                                            sched, args.tau, args.horizon,
                                            dt=args.dt or 1e-3)
    print(f"bound {'holds' if ok else 'violated'}; "
          f"final V = {V[-1]:.6g} at t = {times[-1]:g}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rdsync",
        description="Certify and simulate pinning synchronization of delayed "
                    "reaction-diffusion networks under intermittent control.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="evaluate the synchronization certificate")
    c.add_argument("config")
    c.add_argument("--compare-reference", action="store_true",
                   help="print computed constants next to the published "
                        "benchmark values")
    c.add_argument("--dt", type=float)
    c.add_argument("--grid", type=int)
    c.set_defaults(func=_cmd_certify)

    s = sub.add_parser("simulate", help="integrate the network and write a CSV")
    s.add_argument("config")
    s.add_argument("-o", "--output", default="")
    s.add_argument("--dt", type=float)
    s.add_argument("--grid", type=int)
    s.set_defaults(func=_cmd_simulate)

    g = sub.add_parser("schedule-gen", help="generate a random intermittent schedule")
    g.add_argument("--theta", type=float, required=True)
    g.add_argument("--omega", type=float, required=True)
    g.add_argument("--horizon", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default="")
    g.set_defaults(func=_cmd_schedule_gen)

    d = sub.add_parser("preset", help="dump a bundled experiment config")
    d.add_argument("name", choices=cfgmod.PRESET_NAMES)
    d.set_defaults(func=_cmd_preset)

    v = sub.add_parser("verify-lemma3",
                       help="integrate the scalar comparison system and check "
                            "the certified decay bound")
    v.add_argument("--beta1", type=float, required=True)
    v.add_argument("--alpha2", type=float, required=True)
    v.add_argument("--beta3", type=float, required=True)
    v.add_argument("--tau", type=float, required=True)
    v.add_argument("--theta", type=float, required=True)
    v.add_argument("--omega", type=float, required=True)
    v.add_argument("--horizon", type=float, default=50.0)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--dt", type=float)
    v.set_defaults(func=_cmd_verify_lemma3)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (cfgmod.ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
