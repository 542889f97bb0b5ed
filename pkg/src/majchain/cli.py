"""Command-line front end.

Exit codes: 0 all requested checks pass, 1 I/O or validation error,
2 a verification check failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import acceptance, scenarios
from .config import ConfigError, default_output_dir, load_config, validate
from .core import MajorizationError, compare_continuous, compare_weak, hinge_witness, read_density_csv
from .scenarios import EXIT_ERROR, EXIT_OK, EXIT_VIOLATION

BUILTIN_SCENARIOS = {
    "heat-msl": {"engine": "fpe", "model": "linear", "D": 1.0, "grid": 512, "t_end": 0.2,
                 "snapshots": [0.0, 0.01, 0.05, 0.2], "init": "builtin:cosine"},
    "heat-reversed": {"engine": "fpe", "model": "linear", "D": 1.0, "grid": 128, "t_end": 0.2,
                      "snapshots": [0.0, 0.01, 0.05, 0.2], "init": "builtin:cosine",
                      "reverse": True},
    "porous-msl": {"engine": "fpe", "model": "porous", "D": 1.0, "nu": 2.0, "grid": 128,
                   "t_end": 0.5, "snapshots": [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
                   "init": "builtin:bump"},
    "quantum-hermitian": {"engine": "quantum", "mode": "sine:2", "gamma": 0.0, "grid": 512,
                          "snapshots": [0.0, 1.0, 2.0, 5.0, 10.0]},
    "quantum-decay": {"engine": "quantum", "mode": "sine:1", "gamma": -0.1, "grid": 512,
                      "snapshots": [0.0, 1.0, 2.0, 5.0, 10.0]},
    "mixing-logistic": {"engine": "mixing", "map": "logistic", "n_max": 60},
    "mixing-rotation": {"engine": "mixing", "map": "rotation", "n_max": 120},
}


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p: argparse.ArgumentParser, battery=True):
    p.add_argument("--out", default=None, help="output directory (default $MAJCHAIN_OUTPUT_DIR)")
    p.add_argument("--seed", type=int, default=None)
    if battery:
        p.add_argument("--battery", default=None,
                       help="comma-separated phi ids, or 'standard' / 'icx'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="majchain",
                                 description="Majorization chains along density trajectories")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="compare two density CSVs")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--weak", action="store_true")
    p.add_argument("--thresholds", type=int, default=200,
                   help="number of hinge thresholds for the counterexample search")

    p = sub.add_parser("evolve-fpe", help="generalized Fokker-Planck run")
    p.add_argument("--model", choices=["linear", "porous"], default="linear")
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--t-end", type=float, default=0.2)
    p.add_argument("--snapshots", type=_floats, default=[0.0, 0.01, 0.05, 0.2])
    p.add_argument("--init", default="builtin:cosine")
    p.add_argument("--dt", type=float, default=0.0)
    _common(p)

    p = sub.add_parser("evolve-quantum", help="closed-form eigenmode evolution")
    p.add_argument("--mode", default="sine:1")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--snapshots", type=_floats, default=[0.0, 1.0, 2.0, 5.0])
    _common(p)

    p = sub.add_parser("mixing", help="correlation decay for an interval map")
    p.add_argument("--map", default="logistic")
    p.add_argument("--n-max", type=int, default=60)
    p.add_argument("--points", type=int, default=1_000_000)
    p.add_argument("--tol", type=float, default=0.02)
    _common(p, battery=False)

    p = sub.add_parser("verify-chain", help="certify a stored trajectory")
    p.add_argument("--in", dest="input", required=True, help="trajectory directory or CSV glob")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--full-pairwise", action="store_true")
    p.add_argument("--weak", action="store_true")
    p.add_argument("--long-range-pairs", type=int, default=16)
    _common(p)

    p = sub.add_parser("run", help="run a YAML scenario or builtin:<name>")
    p.add_argument("config")
    _common(p, battery=False)

    p = sub.add_parser("demo", help="run the acceptance suite and write its CSVs")
    p.add_argument("--only", default=None, help="comma-separated criterion slugs")
    _common(p, battery=False)
    return ap


def _out(args) -> Path:
    out = Path(args.out or default_output_dir())
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_check(args) -> int:
    f, g = read_density_csv(args.f), read_density_csv(args.g)
    v = (compare_weak if args.weak else compare_continuous)(f, g, args.tol)
    print(f"relation: {v.relation.value}")
    if v.witness is not None:
        print(f"f ≺ g fails at k={v.witness} (largest cumulative excess {v.excess:.3e})")
    if v.reverse_witness is not None:
        print(f"g ≺ f fails at k={v.reverse_witness}")
    top = float(max(f.values.max(), g.values.max()))
    th = np.linspace(0.0, top, args.thresholds)
    for a, b, label in ((f, g, "f ≺ g"), (g, f, "g ≺ f")):
        w = hinge_witness(a, b, th, args.tol)
        if w is not None:
            print(f"hinge counterexample to {label}: a={w!r}")
    return EXIT_OK


def cmd_run(args) -> int:
    if args.config.startswith("builtin:"):
        name = args.config.split(":", 1)[1]
        if name not in BUILTIN_SCENARIOS:
            raise ConfigError(f"unknown builtin scenario {name!r}; "
                              f"choose from {sorted(BUILTIN_SCENARIOS)}")
        raw = dict(BUILTIN_SCENARIOS[name])
        if args.out:
            raw["output_dir"] = args.out
        cfg = validate(raw)
    else:
        cfg = load_config(args.config)
        if args.out:
            cfg.output_dir = Path(args.out)
    if args.seed is not None:
        cfg.seed = args.seed
    return scenarios.run_scenario(cfg)


def _scenario_from_args(args, engine: str, keys: dict) -> int:
    raw = {"engine": engine, "output_dir": str(_out(args)), **keys}
    if getattr(args, "battery", None):
        raw["battery"] = args.battery
    if args.seed is not None:
        raw["seed"] = args.seed
    return scenarios.run_scenario(validate(raw))


def cmd_demo(args) -> int:
    out = _out(args)
    only = set(args.only.split(",")) if args.only else None
    results = acceptance.run_all(args.seed or 0, out, only)
    ok = all(r.passed for r in results)
    print(f"demo: {sum(r.passed for r in results)}/{len(results)} criteria pass -> {out}")
    return EXIT_OK if ok else EXIT_VIOLATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "check":
            return cmd_check(args)
        if args.command == "evolve-fpe":
            return _scenario_from_args(args, "fpe", {
                "model": args.model, "D": args.d, "nu": args.nu, "grid": args.grid,
                "t_end": args.t_end, "snapshots": args.snapshots, "init": args.init,
                "dt": args.dt, "verify": "none"})
        if args.command == "evolve-quantum":
            return _scenario_from_args(args, "quantum", {
                "mode": args.mode, "epsilon": args.epsilon, "gamma": args.gamma,
                "hbar": args.hbar, "grid": args.grid, "snapshots": args.snapshots,
                "verify": "none"})
        if args.command == "mixing":
            return _scenario_from_args(args, "mixing", {
                "map": args.map, "n_max": args.n_max, "points": args.points, "tol": args.tol})
        if args.command == "verify-chain":
            return _scenario_from_args(args, "verify", {
                "input": args.input, "tol": args.tol, "full_pairwise": args.full_pairwise,
                "weak": args.weak, "long_range_pairs": args.long_range_pairs})
        if args.command == "run":
            return cmd_run(args)
        if args.command == "demo":
            return cmd_demo(args)
    except (MajorizationError, ConfigError, ValueError, KeyError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
