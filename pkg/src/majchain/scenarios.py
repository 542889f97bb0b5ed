"""Engine runners shared by the command line and scenario configs."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import fpe, quantum
from .chain import ChainReport, verify_all
from .config import ScenarioConfig
from .convex import Battery, battery_from_ids, icx_battery, standard_battery
from .core import Grid, read_density_csv
from .mixing import default_observables, estimate_invariant_density, mixing_verdict, parse_map
from .reporting import write_json, write_lambda_csv, write_report_csv, write_rows
from .trajectory import Trajectory, load_trajectory, save_trajectory

log = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


def _battery(ids, weak=False) -> Battery:
    if ids is None:
        return icx_battery() if weak else standard_battery()
    return battery_from_ids(ids)


def initial_density(init: str, grid: Grid):
    if init.startswith("builtin:"):
        return fpe.builtin_initial(init.split(":", 1)[1], grid)
    d = read_density_csv(init)
    if d.grid != grid:
        raise ValueError(f"{init}: has {d.grid.n_cells} cells, expected {grid.n_cells}")
    return d


def run_fpe(params: dict, battery: Battery, out_dir: Path):
    grid = Grid(params["grid"])
    p0 = initial_density(params["init"], grid)
    model = fpe.make_model(params["model"], params["D"], params["nu"], float(p0.values.max()))
    cfg = fpe.FpeRunConfig(grid, params["t_end"], tuple(params["snapshots"]),
                           params.get("dt", 0.0), params.get("safety", 0.9))
    traj = fpe.fpe_evolve(p0, model, cfg)
    save_trajectory(traj, out_dir)
    write_lambda_csv(out_dir / "lambda.csv", fpe.lambda_table(traj, battery, model))
    drift = float(np.max(np.abs(traj.masses() - traj.masses()[0])))
    print(f"evolve-fpe: {len(traj)} snapshots, {traj.meta['steps']} steps, mass drift {drift:.3e}")
    return traj, model


def run_quantum(params: dict, battery: Battery, out_dir: Path):
    grid = Grid(params["grid"])
    mode = quantum.parse_mode(params["mode"], grid, params.get("epsilon"), params["gamma"],
                              params["hbar"])
    traj = quantum.quantum_trajectory(mode, params["snapshots"])
    save_trajectory(traj, out_dir)
    write_lambda_csv(out_dir / "lambda.csv", quantum.lambda_table(mode, traj, battery))
    rows = []
    if mode.gamma < 0:
        for t in traj.times:
            for phi in icx_battery().differentiable():
                b = quantum.nonhermitian_bound_check(mode, t, phi)
                rows.append((t, phi.id, b.lhs, b.rhs, b.holds, b.rhs_bare, b.holds_bare))
    write_rows(out_dir / "bound.csv",
               ["t", "phi_id", "lhs", "rhs", "holds", "rhs_bare", "holds_bare"], rows)
    if rows:
        n_bad = sum(not r[4] for r in rows)
        n_diff = sum(r[4] != r[6] for r in rows)
        print(f"evolve-quantum: decay bound holds on {len(rows) - n_bad}/{len(rows)} rows; "
              f"bare bound differs on {n_diff}")
    return traj, mode


def run_mixing(params: dict, out_dir: Path, seed: int):
    sys = parse_map(params["map"], seed)
    rho = estimate_invariant_density(sys, 1000, 1_000_000, Grid(256))
    sys = sys.with_density(rho)
    rep = mixing_verdict(sys, default_observables(), params["n_max"], params["tol"],
                         params["points"])
    rows = []
    for p in rep.pairs:
        for n, (v, e) in enumerate(zip(p.values, p.abs_err)):
            rows.append((n, p.pair_id, float(v), p.limit, float(e)))
    write_rows(out_dir / "correlations.csv", ["n", "pair_id", "value", "limit", "abs_err"], rows)
    for line in rep.summary_lines():
        print(line)
    return rep


def requested_checks(report: ChainReport, weak: bool) -> dict[str, bool]:
    if weak:
        return {"weak_chain": bool(report.weak_chain_holds),
                "msl": bool(report.msl_holds),
                "weak_sandwich": bool(report.sandwich.weak_holds)}
    return {"chain": bool(report.chain_holds),
            "msl": bool(report.msl_holds),
            "sl": bool(report.sl_holds),
            "sandwich": bool(report.sandwich.holds)}


def run_verify(traj: Trajectory, battery: Battery, out_dir: Path, *, tol: float = 1e-9,
               weak: bool = False, full_pairwise: bool = False, long_range_pairs: int = 16,
               seed: int = 0, residual_fn=None) -> tuple[ChainReport, int]:
    report = verify_all(traj, battery, tol=tol, long_range_pairs=long_range_pairs,
                        full_pairwise=full_pairwise, seed=seed, residual_fn=residual_fn)
    checks = requested_checks(report, weak)
    write_report_csv(out_dir / "report.csv", report)
    summary = report.summary()
    summary.update({"checks": checks, "battery": battery.ids, "weak": weak,
                    "n_snapshots": len(traj), "source": traj.source})
    write_json(out_dir / "summary.json", summary)
    for name, ok in checks.items():
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
    relevant = [v for v in report.violations if v.check in checks]
    for v in relevant[:5]:
        print(f"  violation {v.check} t1={v.t1!r} t2={v.t2!r} {v.witness} magnitude={v.magnitude:.3e}")
    return report, EXIT_OK if all(checks.values()) else EXIT_VIOLATION


def run_scenario(cfg: ScenarioConfig) -> int:
    """Dispatch one validated scenario; returns the process exit code."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = cfg.params
    if cfg.engine == "mixing":
        # a Not-mixing verdict is a finding, not a failed certification
        run_mixing(p, out, cfg.seed)
        return EXIT_OK

    if cfg.engine == "verify":
        weak = p["weak"]
        battery = _battery(cfg.battery, weak)
        traj = load_trajectory(p["input"])
        _, code = run_verify(traj, battery, out, tol=p["tol"], weak=weak,
                             full_pairwise=p["full_pairwise"],
                             long_range_pairs=p["long_range_pairs"], seed=cfg.seed)
        return code

    if cfg.engine == "fpe":
        battery = _battery(cfg.battery)
        traj, model = run_fpe(p, battery, out)
        mode = p["verify"]
        residual = (lambda d, phi: fpe.lambda_prime_rhs(d, model, phi)) if model.drift_free else None
    else:
        weak_default = p["gamma"] < 0
        mode = p["verify"] or ("weak" if weak_default else "strict")
        battery = _battery(cfg.battery, mode == "weak")
        traj, qmode = run_quantum(p, battery, out)
        t_last = traj.times[-1]
        residual = lambda d, phi: quantum.quantum_lambda_prime(qmode, t_last, phi)  # noqa: E731
    if mode == "none":
        return EXIT_OK
    if p.get("reverse"):
        traj = traj.reversed()
        residual = None
    _, code = run_verify(traj, battery, out, weak=(mode == "weak"), seed=cfg.seed,
                         residual_fn=residual)
    return code
