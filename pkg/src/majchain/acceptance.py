"""Exit criteria of the package, runnable from tests and from ``majchain demo``.

Each ``criterion_*`` function returns a :class:`CriterionResult` and, when
given an output directory, writes its plot-ready CSVs there. Nothing
time-dependent goes into the CSVs, so two runs with one seed are
byte-identical.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fpe, quantum
from .chain import verify_chain, verify_msl, verify_sandwich
from .convex import LINEAR, SQUARE, XLOGX, icx_battery, lambda_phi, standard_battery
from .core import (Density, Grid, Relation, compare_continuous, compare_discrete,
                   hinge_witness)
from .mixing import (default_observables, estimate_invariant_density, logistic,
                     mixing_verdict, rotation)
from .reporting import write_lambda_csv, write_report_csv, write_rows
from .trajectory import Trajectory, save_trajectory


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    runtime: float = 0.0
    budget: float | None = None
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g}s)" if self.budget else ""
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} [{self.runtime:.2f}s{budget}]"


# -- random generators ------------------------------------------------------

def random_probability_fraction(rng: np.random.Generator, n: int) -> list[Fraction]:
    """Exact probability vector with rational entries."""
    k = rng.integers(0, 100, size=n)
    if k.sum() == 0:
        k[rng.integers(n)] = 1
    total = int(k.sum())
    return [Fraction(int(v), total) for v in k]


def random_density(rng: np.random.Generator, grid: Grid, sparsity: float = 0.2) -> Density:
    """Random probability density with some exactly-zero cells."""
    v = rng.exponential(size=grid.n_cells) * (rng.random(grid.n_cells) >= sparsity)
    if v.sum() == 0:
        v[0] = 1.0
    return Density(grid, v).normalized()


def robin_hood(rng: np.random.Generator, values: np.ndarray, n_transfers: int = 8,
               integer: bool = False) -> np.ndarray:
    """Pairwise rich-to-poor transfers; each one moves the vector down the order."""
    v = np.array(values, dtype=np.int64 if integer else float)
    n = v.size
    for _ in range(n_transfers):
        i, j = rng.choice(n, size=2, replace=False)
        if v[i] < v[j]:
            i, j = j, i
        gap = v[i] - v[j]
        if integer:
            delta = int(rng.integers(0, gap // 2 + 1))
        else:
            delta = rng.random() * gap / 2
        v[i] -= delta
        v[j] += delta
    return v


def integer_step_pair(rng: np.random.Generator, n_cells: int = 8, vmax: int = 40,
                      comparable: bool = True) -> tuple[Density, Density]:
    """Equal-mass step densities with integer values in [0, vmax]."""
    grid = Grid(n_cells)
    g = rng.integers(0, vmax + 1, size=n_cells)
    if g.sum() == 0:
        g[0] = 1
    if comparable:
        f = robin_hood(rng, g, int(rng.integers(1, 6)), integer=True)
    else:
        while True:
            f = rng.multinomial(int(g.sum()), rng.dirichlet(np.ones(n_cells)))
            if f.max() <= vmax:
                break
    if rng.random() < 0.5:
        f, g = g, f
    return Density(grid, f.astype(float)), Density(grid, g.astype(float))


def concentrating_trajectory(n_cells: int = 100) -> Trajectory:
    """Entropy rises while ∫p^2 rises too: MSL fails, SL holds.

    Half-supported flat density -> nearly flat density with one tall spike.
    """
    grid = Grid(n_cells)
    p0 = np.zeros(n_cells)
    p0[: n_cells // 2] = 2.0
    spike = 15.0
    p1 = np.full(n_cells, (1.0 - spike * grid.h) / (1.0 - grid.h))
    p1[0] = spike
    return Trajectory((0.0, 1.0), (Density(grid, p0), Density(grid, p1)), "file")


# -- criteria -----------------------------------------------------------------

def _below(v) -> bool:
    return v.relation in (Relation.MAJORIZED_BY, Relation.EQUIVALENT)


def criterion_sandwich(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    bad_discrete = 0
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        p = random_probability_fraction(rng, n)
        uni = [Fraction(1, n)] * n
        delta = [Fraction(1)] + [Fraction(0)] * (n - 1)
        if not (_below(compare_discrete(uni, p)) and _below(compare_discrete(p, delta))):
            bad_discrete += 1
    grid = Grid(256)
    uni_d, delta_d = Density.uniform(grid), Density.delta(grid)
    bad_cont = 0
    rows = []
    for k in range(200):
        p = random_density(rng, grid)
        lo = compare_continuous(uni_d, p, 1e-9)
        hi = compare_continuous(p, delta_d, 1e-9)
        ok = _below(lo) and _below(hi)
        bad_cont += not ok
        rows.append((k, lo.relation.value, hi.relation.value, ok))
    dt = time.perf_counter() - t0
    if out:
        write_rows(out / "sandwich.csv", ["sample", "uniform_vs_p", "p_vs_delta", "pass"], rows)
    passed = bad_discrete == 0 and bad_cont == 0 and dt < 5.0
    return CriterionResult(1, "sandwich", passed,
                           f"discrete violations={bad_discrete}/1000, continuous={bad_cont}/200",
                           dt, 5.0)


def criterion_order_axioms(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 1)
    grid = Grid(64)
    refl_bad = 0
    for _ in range(500):
        d = random_density(rng, grid)
        if compare_continuous(d, d).relation is not Relation.EQUIVALENT:
            refl_bad += 1
    trans_bad = 0
    rows = []
    for k in range(300):
        x = random_density(rng, grid)
        y = Density(grid, robin_hood(rng, x.values, 10))
        z = Density(grid, robin_hood(rng, y.values, 10))
        yx, zy, zx = (compare_continuous(a, b) for a, b in ((y, x), (z, y), (z, x)))
        ok = _below(yx) and _below(zy) and _below(zx)
        trans_bad += not ok
        rows.append((k, yx.relation.value, zy.relation.value, zx.relation.value, ok))
    if out:
        write_rows(out / "transitivity.csv", ["triple", "y_vs_x", "z_vs_y", "z_vs_x", "pass"], rows)
    dt = time.perf_counter() - t0
    return CriterionResult(2, "order axioms", refl_bad == 0 and trans_bad == 0,
                           f"reflexivity violations={refl_bad}/500, transitivity={trans_bad}/300",
                           dt)


def battery_disagreement(f: Density, g: Density, verdict, n_thresholds: int = 200,
                         tol: float = 1e-9) -> bool:
    """True when the verdict contradicts the hinge + {x^2, x log x} battery."""
    top = float(max(f.values.max(), g.values.max()))
    thresholds = np.linspace(0.0, top, n_thresholds)

    def violates(a, b):
        if hinge_witness(a, b, thresholds, tol) is not None:
            return True
        return any(lambda_phi(a, phi) > lambda_phi(b, phi) + tol * max(1.0, abs(lambda_phi(b, phi)))
                   for phi in (SQUARE, XLOGX))

    fg, gf = violates(f, g), violates(g, f)
    rel = verdict.relation
    if rel is Relation.EQUIVALENT:
        return fg or gf
    if rel is Relation.MAJORIZED_BY:
        return fg
    if rel is Relation.MAJORIZES:
        return gf
    return not (fg or gf)


def criterion_oracle(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 2)
    disagreements = 0
    counts = {r.value: 0 for r in Relation}
    rows = []
    for k in range(500):
        f, g = integer_step_pair(rng, comparable=bool(k % 2))
        v = compare_continuous(f, g)
        counts[v.relation.value] += 1
        bad = battery_disagreement(f, g, v)
        disagreements += bad
        rows.append((k, v.relation.value, v.witness, v.reverse_witness, not bad))
    dt = time.perf_counter() - t0
    if out:
        write_rows(out / "oracle.csv", ["pair", "relation", "witness", "reverse_witness", "agree"],
                   rows)
    detail = f"disagreements={disagreements}/500, verdicts={counts}"
    return CriterionResult(3, "oracle equivalence", disagreements == 0 and dt < 30.0, detail,
                           dt, 30.0, {"counts": counts})


def heat_trajectory(n_cells: int = 512, times=(0.0, 0.01, 0.05, 0.2), D: float = 1.0):
    grid = Grid(n_cells)
    p0 = Density.from_function(grid, lambda x: 1.0 + np.cos(np.pi * x))
    model = fpe.linear_model(D)
    traj = fpe.fpe_evolve(p0, model, fpe.FpeRunConfig(grid, max(times), tuple(times)))
    return traj, model


def criterion_heat(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    traj, model = heat_trajectory()
    lam2 = np.array([lambda_phi(d, SQUARE) for d in traj.densities])
    exact = 1.0 + 0.5 * np.exp(-2.0 * np.pi**2 * np.array(traj.times))
    rel = float(np.max(np.abs(lam2 - exact) / exact))
    msl = verify_msl(traj, standard_battery(), 1e-8)
    chain = verify_chain(traj, 1e-9, seed=seed)
    lp0 = fpe.lambda_prime_rhs(traj.densities[0], model, SQUARE)
    lp_rel = abs(lp0 + np.pi**2) / np.pi**2
    dt = time.perf_counter() - t0
    if out:
        save_trajectory(traj, out)
        write_lambda_csv(out / "lambda.csv", fpe.lambda_table(traj, standard_battery(), model))
        write_report_csv(out / "report.csv", chain.merge(msl))
    passed = (rel <= 0.01 and msl.msl_holds and chain.chain_holds and lp_rel <= 0.02
              and dt < 60.0)
    return CriterionResult(
        4, "heat H-theorem", passed,
        f"max rel err lambda_x2={rel:.2e}, msl={msl.msl_holds}, chain={chain.chain_holds}, "
        f"lambda'(0)={lp0:.5f} (rel err {lp_rel:.2e})", dt, 60.0)


def porous_trajectory(n_cells: int = 128, t_end: float = 0.5, n_snap: int = 50):
    grid = Grid(n_cells)
    p0 = fpe.builtin_initial("bump", grid)
    model = fpe.porous_model(1.0, 2.0, float(p0.values.max()))
    times = tuple(np.linspace(0.0, t_end, n_snap))
    traj = fpe.fpe_evolve(p0, model, fpe.FpeRunConfig(grid, t_end, times))
    return traj, model


def criterion_porous(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    traj, model = porous_trajectory()
    drift = float(np.max(np.abs(traj.masses() - traj.masses()[0])))
    chain = verify_chain(traj, 1e-9, seed=seed)
    msl = verify_msl(traj, standard_battery(), 1e-8)
    sand = verify_sandwich(traj, None, 1e-9, standard_battery(),
                           lambda d, phi: fpe.lambda_prime_rhs(d, model, phi))
    dist = float(np.max(np.abs(traj.densities[-1].values - 1.0)))
    dt = time.perf_counter() - t0
    if out:
        save_trajectory(traj, out)
        write_lambda_csv(out / "lambda.csv", fpe.lambda_table(traj, standard_battery(), model))
        write_report_csv(out / "report.csv", chain.merge(msl).merge(sand))
    passed = (drift <= 1e-12 and chain.chain_holds and msl.msl_holds and sand.sandwich.holds
              and dist <= 1e-4 and dt < 120.0)
    return CriterionResult(
        5, "porous-medium MSL", passed,
        f"{len(traj)} snapshots, mass drift={drift:.1e}, chain={chain.chain_holds}, "
        f"msl={msl.msl_holds}, infimum={sand.sandwich.holds}, |p_final-1|max={dist:.1e}",
        dt, 120.0)


def criterion_quantum_hermitian(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    mode = quantum.sine_mode(Grid(512), k=2, gamma=0.0)
    times = np.linspace(0.0, 19.0, 20)
    traj = quantum.quantum_trajectory(mode, times)
    lam = {phi.id: np.array([lambda_phi(d, phi) for d in traj.densities])
           for phi in standard_battery()}
    max_dl = max(float(np.max(np.abs(col - col[0]))) for col in lam.values())
    chain = verify_chain(traj, 1e-9, full_pairwise=True)
    all_equiv = all(
        compare_continuous(a, b).relation is Relation.EQUIVALENT
        for i, a in enumerate(traj.densities) for b in traj.densities[i + 1:])
    dt = time.perf_counter() - t0
    if out:
        save_trajectory(traj, out)
        write_lambda_csv(out / "lambda.csv", quantum.lambda_table(mode, traj, standard_battery()))
    return CriterionResult(6, "quantum Hermitian", max_dl <= 1e-12 and all_equiv
                           and chain.chain_holds,
                           f"max |dlambda|={max_dl:.1e}, all pairs Equivalent={all_equiv}", dt)


def criterion_quantum_decay(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    mode = quantum.sine_mode(Grid(512), k=1, gamma=-0.1, hbar=1.0)
    times = np.linspace(0.0, 10.0, 11)
    traj = quantum.quantum_trajectory(mode, times)
    mass_err = float(np.max(np.abs(traj.masses() - np.exp(-0.2 * times))))
    lp_lin = quantum.quantum_lambda_prime(mode, 0.0, LINEAR)
    icx = icx_battery()
    chain = verify_chain(traj, 1e-9, full_pairwise=True)
    weak_msl = verify_msl(traj, icx, 1e-8)
    strict_fails_on_mass = (chain.chain_holds is False and all(
        v.witness == f"k={traj.grid.n_cells}" for v in chain.violations if v.check == "chain"))
    bounds = {phi.id: quantum.nonhermitian_bound_check(mode, 0.0, phi)
              for phi in icx.differentiable()}
    bounds_ok = all(b.holds for b in bounds.values())
    dt = time.perf_counter() - t0
    if out:
        save_trajectory(traj, out)
        write_lambda_csv(out / "lambda.csv", quantum.lambda_table(mode, traj, icx))
        write_rows(out / "bound.csv", ["t", "phi_id", "lhs", "rhs", "holds", "rhs_bare",
                                       "holds_bare"],
                   [(0.0, k, b.lhs, b.rhs, b.holds, b.rhs_bare, b.holds_bare)
                    for k, b in bounds.items()])
    passed = (mass_err <= 1e-10 and abs(lp_lin + 0.2) <= 1e-14 and chain.weak_chain_holds
              and weak_msl.msl_holds and strict_fails_on_mass and bounds_ok)
    return CriterionResult(
        7, "quantum decay", passed,
        f"mass err={mass_err:.1e}, lambda'_x(0)={lp_lin!r}, weak chain={chain.weak_chain_holds}, "
        f"icx msl={weak_msl.msl_holds}, strict fails on mass={strict_fails_on_mass}, "
        f"bounds ok={bounds_ok}", dt)


def criterion_mixing(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    grid = Grid(64)
    sys = logistic(seed)
    rho = estimate_invariant_density(sys, 1000, 1_000_000, grid)
    sym = float(grid.h * np.sum(np.abs(rho.values - rho.values[::-1])))
    log_rep = mixing_verdict(sys.with_density(rho), default_observables(), 60, 0.02, 1_000_000)
    tail_ok = all(np.all(p.abs_err[20:] <= 0.02) for p in log_rep.pairs)

    rot = rotation(seed=seed)
    rot_rho = estimate_invariant_density(rot, 0, 1_000_000, grid)
    rot_rep = mixing_verdict(rot.with_density(rot_rho), default_observables(), 120, 0.02,
                             1_000_000)
    # |corr| >= 0.1 recurs in every window of ten steps over the second half
    auto = next(p for p in rot_rep.pairs if p.pair_id == "cos2pix|cos2pix")
    tail = np.abs(auto.values[60:120]).reshape(6, 10)
    persistent = bool(np.all(tail.max(axis=1) >= 0.1))
    dt = time.perf_counter() - t0
    if out:
        rows = [(rep.system, n, p.pair_id, float(v), p.limit, float(e))
                for rep in (log_rep, rot_rep) for p in rep.pairs
                for n, (v, e) in enumerate(zip(p.values, p.abs_err))]
        write_rows(out / "correlations.csv", ["map", "n", "pair_id", "value", "limit", "abs_err"],
                   rows)
        write_rows(out / "invariant_density.csv", ["x_center", "value"],
                   zip(grid.centers.tolist(), rho.values.tolist()))
    passed = (log_rep.verdict == "Mixing-consistent" and tail_ok
              and rot_rep.verdict == "Not-mixing-evidence" and persistent and sym <= 0.02
              and dt < 60.0)
    return CriterionResult(
        8, "mixing", passed,
        f"logistic={log_rep.verdict} (tail within tol for n>=20: {tail_ok}), "
        f"rotation={rot_rep.verdict} (persistent |corr|>=0.1: {persistent}), "
        f"histogram asymmetry L1={sym:.4f}", dt, 60.0)


def criterion_msl_stronger(seed: int = 0, out: Path | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    traj = concentrating_trajectory()
    rep = verify_msl(traj, standard_battery())
    witnesses = {v.witness for v in rep.violations if v.check == "msl"}
    dt = time.perf_counter() - t0
    if out:
        save_trajectory(traj, out)
        write_report_csv(out / "report.csv", rep)
    passed = rep.msl_holds is False and rep.sl_holds is True and "x2" in witnesses
    return CriterionResult(9, "MSL stronger than SL", passed,
                           f"msl_holds={rep.msl_holds}, sl_holds={rep.sl_holds}, "
                           f"msl witnesses={sorted(witnesses)}", dt)


CRITERIA = (
    ("sandwich", criterion_sandwich),
    ("order-axioms", criterion_order_axioms),
    ("oracle", criterion_oracle),
    ("heat", criterion_heat),
    ("porous", criterion_porous),
    ("quantum-hermitian", criterion_quantum_hermitian),
    ("quantum-decay", criterion_quantum_decay),
    ("mixing", criterion_mixing),
    ("msl-vs-sl", criterion_msl_stronger),
)


def run_all(seed: int = 0, out: Path | None = None, only=None) -> list[CriterionResult]:
    results = []
    for slug, fn in CRITERIA:
        if only and slug not in only:
            continue
        sub = None
        if out is not None:
            sub = Path(out) / slug
            sub.mkdir(parents=True, exist_ok=True)
        res = fn(seed, sub)
        print(res.line(), flush=True)
        results.append(res)
    if out is not None:
        write_rows(Path(out) / "acceptance.csv", ["criterion", "name", "pass", "detail"],
                   ((r.number, r.name, r.passed, r.detail) for r in results))
    return results
