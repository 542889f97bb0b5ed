"""Certify or refute majorization-ordered chains along a trajectory.

Four checks, all read-only over a :class:`~majchain.trajectory.Trajectory`:

* chain: every later snapshot is majorized by every earlier one;
* msl: lambda_phi(t) = ∫ phi(p_t) is non-increasing for each battery member;
* sl: entropy -lambda_{x log x} is non-decreasing;
* sandwich: p_inf ≺ p_t ≺ p_0 for every snapshot, plus stationary residuals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .convex import XLOGX, Battery, ConvexTestFn, lambda_phi, standard_battery
from .core import DEFAULT_TOL, Density, compare_continuous, compare_weak
from .trajectory import Trajectory

log = logging.getLogger(__name__)

LAMBDA_TOL = 1e-8
LONG_RANGE_PAIRS = 16

ResidualFn = Callable[[Density, ConvexTestFn], float]


@dataclass(frozen=True)
class Violation:
    check: str
    t1: float
    t2: float
    witness: str  # battery id, or "k=<n>" for a cumulative-sum index
    magnitude: float


@dataclass(frozen=True)
class Row:
    check: str
    t1: float | None
    t2: float | None
    phi_id: str
    value: float
    passed: bool


@dataclass
class SandwichResult:
    holds: bool
    weak_holds: bool
    label: str  # "asymptotic-surrogate" when p_inf is the last snapshot
    failures: list[Violation] = field(default_factory=list)


@dataclass
class ChainReport:
    chain_holds: bool | None = None
    weak_chain_holds: bool | None = None
    msl_holds: bool | None = None
    sl_holds: bool | None = None
    violations: list[Violation] = field(default_factory=list)
    sandwich: SandwichResult | None = None
    stationary_residuals: dict[str, float] = field(default_factory=dict)
    lambdas: dict[str, np.ndarray] = field(default_factory=dict)
    rows: list[Row] = field(default_factory=list)

    def merge(self, other: "ChainReport") -> "ChainReport":
        for name in ("chain_holds", "weak_chain_holds", "msl_holds", "sl_holds", "sandwich"):
            val = getattr(other, name)
            if val is not None:
                setattr(self, name, val)
        self.violations += other.violations
        self.stationary_residuals.update(other.stationary_residuals)
        self.lambdas.update(other.lambdas)
        self.rows += other.rows
        return self

    @property
    def implication_ok(self) -> bool:
        """chain => msl and msl => sl, wherever both sides were evaluated."""
        ok = True
        if self.chain_holds and self.msl_holds is False:
            ok = False
        if self.msl_holds and "xlogx" in self.lambdas and self.sl_holds is False:
            ok = False
        return ok

    def summary(self) -> dict:
        out = {
            "chain_holds": self.chain_holds,
            "weak_chain_holds": self.weak_chain_holds,
            "msl_holds": self.msl_holds,
            "sl_holds": self.sl_holds,
            "implication_ok": self.implication_ok,
            "n_violations": len(self.violations),
            "stationary_residuals": self.stationary_residuals,
        }
        if self.sandwich is not None:
            out["sandwich"] = {"holds": self.sandwich.holds,
                               "weak_holds": self.sandwich.weak_holds,
                               "label": self.sandwich.label}
        return out


def _pairs(n: int, long_range_pairs: int, full_pairwise: bool, seed: int):
    if full_pairwise:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    pairs = [(k, k + 1) for k in range(n - 1)]
    far = [(i, j) for i in range(n) for j in range(i + 2, n)]
    if far and long_range_pairs > 0:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(far), size=min(long_range_pairs, len(far)), replace=False)
        pairs += [far[i] for i in sorted(pick)]
    return pairs


def verify_chain(traj: Trajectory, tol: float = DEFAULT_TOL,
                 long_range_pairs: int = LONG_RANGE_PAIRS, full_pairwise: bool = False,
                 seed: int = 0) -> ChainReport:
    """Check p_{t2} ≺ p_{t1} (and the weak version) on adjacent plus sampled pairs."""
    if len(traj) < 2:
        raise ValueError("need at least two snapshots")
    rep = ChainReport(chain_holds=True, weak_chain_holds=True)
    t, d = traj.times, traj.densities
    for i, j in _pairs(len(traj), long_range_pairs, full_pairwise, seed):
        v = compare_continuous(d[j], d[i], tol)
        ok = v.f_below_g
        rep.rows.append(Row("chain", t[i], t[j], "" if ok else f"k={v.witness}", v.excess, ok))
        if not ok:
            rep.chain_holds = False
            rep.violations.append(Violation("chain", t[i], t[j], f"k={v.witness}", v.excess))
        w = compare_weak(d[j], d[i], tol)
        wok = w.f_below_g
        rep.rows.append(Row("weak_chain", t[i], t[j], "" if wok else f"k={w.witness}",
                            w.excess, wok))
        if not wok:
            rep.weak_chain_holds = False
            rep.violations.append(Violation("weak_chain", t[i], t[j], f"k={w.witness}", w.excess))
    return rep


def lambda_columns(traj: Trajectory, battery: Battery) -> dict[str, np.ndarray]:
    return {phi.id: np.array([lambda_phi(d, phi) for d in traj.densities]) for phi in battery}


def verify_msl(traj: Trajectory, battery: Battery | None = None,
               tol: float = LAMBDA_TOL) -> ChainReport:
    """Adjacent differences of every lambda_phi must be <= tol * max(1, |lambda|).

    The entropy column (x log x) is evaluated even if the battery omits it.
    """
    if len(traj) < 2:
        raise ValueError("need at least two snapshots")
    battery = battery if battery is not None else standard_battery()
    lam = lambda_columns(traj, battery)
    rep = ChainReport(msl_holds=True, sl_holds=True, lambdas=lam)
    t = traj.times
    for phi_id, col in lam.items():
        for k in range(len(col) - 1):
            delta = float(col[k + 1] - col[k])
            ok = delta <= tol * max(1.0, abs(col[k]))
            rep.rows.append(Row("msl", t[k], t[k + 1], phi_id, delta, ok))
            if not ok:
                rep.msl_holds = False
                rep.violations.append(Violation("msl", t[k], t[k + 1], phi_id, delta))

    ent = lam[XLOGX.id] if XLOGX.id in lam else lambda_columns(traj, Battery([XLOGX]))[XLOGX.id]
    # S = -lambda_{x log x}; one code path with the msl column
    for k in range(len(ent) - 1):
        dS = float(ent[k] - ent[k + 1])
        ok = dS >= -tol * max(1.0, abs(ent[k]))
        rep.rows.append(Row("sl", t[k], t[k + 1], XLOGX.id, dS, ok))
        if not ok:
            rep.sl_holds = False
            rep.violations.append(Violation("sl", t[k], t[k + 1], XLOGX.id, -dS))
    return rep


def verify_sandwich(traj: Trajectory, p_inf: Density | None = None, tol: float = DEFAULT_TOL,
                    battery: Battery | None = None, residual_fn: ResidualFn | None = None,
                    residual_tol: float = LAMBDA_TOL) -> ChainReport:
    """p_inf ≺ p_t ≺ p_0 for every snapshot, and lambda' at p_inf.

    Without ``residual_fn`` the residual is the finite-difference slope over
    the last two snapshots.
    """
    label = "supplied" if p_inf is not None else "asymptotic-surrogate"
    p_inf = p_inf if p_inf is not None else traj.densities[-1]
    p0 = traj.densities[0]
    t0, t_last = traj.times[0], traj.times[-1]
    res = SandwichResult(True, True, label)
    rep = ChainReport(sandwich=res)

    for t, p in traj.snapshots:
        for name, lo, hi, ta, tb in (("sandwich_inf", p_inf, p, t, t_last),
                                     ("sandwich_sup", p, p0, t0, t)):
            v = compare_continuous(lo, hi, tol)
            w = compare_weak(lo, hi, tol)
            rep.rows.append(Row(name, ta, tb, "" if v.f_below_g else f"k={v.witness}",
                                v.excess, v.f_below_g))
            if not v.f_below_g:
                res.holds = False
                viol = Violation(name, ta, tb, f"k={v.witness}", v.excess)
                res.failures.append(viol)
                rep.violations.append(viol)
            if not w.f_below_g:
                res.weak_holds = False

    battery = battery if battery is not None else standard_battery()
    for phi in battery:
        if not phi.differentiable:
            continue
        if residual_fn is not None:
            r = residual_fn(p_inf, phi)
        elif len(traj) >= 2:
            a, b = traj.densities[-2], traj.densities[-1]
            r = (lambda_phi(b, phi) - lambda_phi(a, phi)) / (traj.times[-1] - traj.times[-2])
        else:
            r = 0.0
        rep.stationary_residuals[phi.id] = float(r)
        rep.rows.append(Row("stationary", t_last, None, phi.id, float(r), abs(r) <= residual_tol))
    return rep


def verify_lemma1_equivalence(traj: Trajectory, battery: Battery | None = None,
                              tol: float = DEFAULT_TOL, lambda_tol: float = LAMBDA_TOL) -> bool:
    """Whether the chain verdict and the battery-monotonicity verdict agree.

    A disagreement can only come from the battery being finite and is logged
    as a battery gap.
    """
    if len(traj) < 3:
        raise ValueError("need at least three snapshots")
    chain = verify_chain(traj, tol, long_range_pairs=0).chain_holds
    msl = verify_msl(traj, battery, lambda_tol).msl_holds
    if chain != msl:
        log.warning("BatteryGap: chain=%s but battery monotonicity=%s", chain, msl)
    return chain == msl


def verify_all(traj: Trajectory, battery: Battery | None = None, tol: float = DEFAULT_TOL,
               lambda_tol: float = LAMBDA_TOL, long_range_pairs: int = LONG_RANGE_PAIRS,
               full_pairwise: bool = False, seed: int = 0, p_inf: Density | None = None,
               residual_fn: ResidualFn | None = None) -> ChainReport:
    battery = battery if battery is not None else standard_battery()
    rep = ChainReport()
    if len(traj) >= 2:
        rep.merge(verify_chain(traj, tol, long_range_pairs, full_pairwise, seed))
        rep.merge(verify_msl(traj, battery, lambda_tol))
    else:
        rep.chain_holds = rep.weak_chain_holds = rep.msl_holds = rep.sl_holds = True
    rep.merge(verify_sandwich(traj, p_inf, tol, battery, residual_fn, lambda_tol))
    if not rep.implication_ok:
        log.warning("chain/msl/sl implication broken at the chosen tolerances")
    return rep
