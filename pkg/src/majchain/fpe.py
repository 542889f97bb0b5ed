"""Generalized Fokker-Planck evolution on (0, 1) with no-flux walls.

    dp/dt = -d/dx [F(x) Psi[p]] + d/dx [Omega[p] dp/dx]

Explicit, first order in time, conservative finite volumes. With F = 0 the
dissipation of every convex functional is available in closed form
(:func:`lambda_prime_rhs`), which is what the chain checks compare against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .convex import ConvexTestFn, lambda_phi
from .core import Density, Grid, MajorizationError
from .trajectory import Trajectory

log = logging.getLogger(__name__)

NEG_CLAMP = 1e-13
REFRESH_EVERY = 100


class StabilityViolation(MajorizationError):
    pass


class NegativeDensity(MajorizationError):
    pass


@dataclass(frozen=True)
class FpeModel:
    """Force and the two density functionals, all vectorized over cells.

    ``force`` may be ``None`` for F = 0.
    """

    omega: Callable[[np.ndarray], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray] = lambda p: p
    force: Callable[[np.ndarray], np.ndarray] | None = None
    omega_max_estimate: float = 1.0
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    @property
    def drift_free(self) -> bool:
        return self.force is None


def linear_model(D: float = 1.0, force=None) -> FpeModel:
    if D <= 0:
        raise ValueError("D must be positive")
    return FpeModel(
        omega=lambda p: np.full_like(p, D, dtype=float),
        psi=lambda p: p,
        force=force,
        omega_max_estimate=D,
        name="linear",
        params={"D": D},
    )


def porous_model(D: float = 1.0, nu: float = 2.0, p_max: float = 1.0, force=None) -> FpeModel:
    """Omega[p] = D nu p**(nu - 1); ``p_max`` seeds the stability estimate."""
    if D <= 0:
        raise ValueError("D must be positive")
    if nu < 1:
        raise ValueError("nu must be >= 1")
    return FpeModel(
        omega=lambda p: D * nu * np.power(np.maximum(p, 0.0), nu - 1.0),
        psi=lambda p: p,
        force=force,
        omega_max_estimate=D * nu * max(p_max, 1.0) ** (nu - 1.0),
        name="porous",
        params={"D": D, "nu": nu},
    )


MODELS = {"linear": linear_model, "porous": porous_model}


def make_model(name: str, D: float = 1.0, nu: float = 2.0, p_max: float = 1.0) -> FpeModel:
    if name == "linear":
        return linear_model(D)
    if name == "porous":
        return porous_model(D, nu, p_max)
    raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}")


def stable_dt(grid: Grid, omega_max: float, force_max: float = 0.0, safety: float = 0.9) -> float:
    """Largest explicit step: dt (2 Omega/h^2 + |F|/h) <= safety."""
    h = grid.h
    rate = 2.0 * omega_max / h**2 + force_max / h
    if rate <= 0:
        return np.inf
    return safety / rate


def _faces(p: np.ndarray, model: FpeModel, grid: Grid) -> np.ndarray:
    """Fluxes through the n-1 interior faces (walls carry zero flux)."""
    h = grid.h
    om = model.omega(p)
    om_face = 0.5 * (om[:-1] + om[1:])
    J = -om_face * (p[1:] - p[:-1]) / h
    if model.force is not None:
        xf = (np.arange(1, grid.n_cells)) * h
        F = np.asarray(model.force(xf), dtype=float)
        psi = model.psi(p)
        upwind = np.where(F >= 0, psi[:-1], psi[1:])
        J = J + F * upwind
    return J


def _step_values(p: np.ndarray, model: FpeModel, grid: Grid, dt: float) -> np.ndarray:
    J = _faces(p, model, grid)
    div = np.empty_like(p)
    div[0] = J[0]
    div[1:-1] = J[1:] - J[:-1]
    div[-1] = -J[-1]
    out = p - (dt / grid.h) * div
    if out.min() < 0:
        if out.min() < -NEG_CLAMP:
            raise NegativeDensity(f"density dropped to {out.min():.3e}")
        out = np.maximum(out, 0.0)
    return out


def _max_rates(p: np.ndarray, model: FpeModel, grid: Grid) -> tuple[float, float]:
    om = float(np.max(model.omega(p)))
    fm = 0.0
    if model.force is not None:
        fm = float(np.max(np.abs(model.force(np.arange(1, grid.n_cells) * grid.h))))
        # Psi slope enters the drift CFL; estimated with a finite difference
        fm *= max(1.0, _psi_slope(model, p))
    return om, fm


def _psi_slope(model: FpeModel, p: np.ndarray) -> float:
    eps = 1e-6
    return float(np.max(np.abs((model.psi(p + eps) - model.psi(p)) / eps)))


def fpe_step(p: Density, model: FpeModel, dt: float) -> Density:
    """One explicit conservative step; raises if ``dt`` breaks the stability bound."""
    om, fm = _max_rates(p.values, model, p.grid)
    limit = stable_dt(p.grid, max(om, 0.0), fm, safety=1.0)
    if not dt > 0 or dt > limit * (1 + 1e-12):
        raise StabilityViolation(f"dt={dt:.3e} exceeds the explicit limit {limit:.3e}")
    return Density(p.grid, _step_values(p.values, model, p.grid, dt))


@dataclass(frozen=True)
class FpeRunConfig:
    grid: Grid
    t_end: float
    snapshot_times: tuple[float, ...]
    dt: float = 0.0  # 0 means automatic
    safety: float = 0.9

    def __post_init__(self):
        st = tuple(sorted(float(t) for t in self.snapshot_times))
        object.__setattr__(self, "snapshot_times", st)
        if not 0 < self.safety <= 1:
            raise ValueError("safety must be in (0, 1]")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not st:
            raise ValueError("at least one snapshot time is required")
        if st[0] < 0 or st[-1] > self.t_end:
            raise ValueError("snapshot times must lie in [0, t_end]")
        if self.dt < 0:
            raise ValueError("dt must be nonnegative")


def fpe_evolve(p0: Density, model: FpeModel, cfg: FpeRunConfig) -> Trajectory:
    """Step from ``p0`` to ``cfg.t_end``, recording the step nearest each snapshot time.

    With ``cfg.dt == 0`` the step is picked from the stability bound and
    refreshed every 100 steps from the current largest Omega.
    """
    if p0.grid != cfg.grid:
        raise ValueError("initial density is not on the configured grid")
    if not p0.is_probability():
        raise ValueError(f"initial density has mass {p0.mass!r}, expected 1")

    grid = cfg.grid
    p = p0.values.copy()
    t = 0.0
    om, fm = _max_rates(p, model, grid)
    if cfg.dt > 0:
        limit = stable_dt(grid, om, fm, cfg.safety)
        if cfg.dt > limit:
            raise StabilityViolation(f"dt={cfg.dt:.3e} exceeds safety * limit = {limit:.3e}")
        dt = cfg.dt
    else:
        dt = stable_dt(grid, max(om, model.omega_max_estimate), fm, cfg.safety)

    pending = list(cfg.snapshot_times)
    times, dens = [], []
    steps = 0
    while pending:
        # snapshot at the step nearest the target time
        if t + 0.5 * dt >= pending[0] or t >= cfg.t_end:
            times.append(t)
            dens.append(Density(grid, p))
            pending.pop(0)
            while pending and t + 0.5 * dt >= pending[0]:
                log.warning("snapshot time %g collapses onto t=%g; skipped", pending[0], t)
                pending.pop(0)
            continue
        p = _step_values(p, model, grid, dt)
        t += dt
        steps += 1
        if steps % REFRESH_EVERY == 0:
            om, fm = _max_rates(p, model, grid)
            if cfg.dt == 0:
                dt = stable_dt(grid, om, fm, cfg.safety)
            elif cfg.dt > stable_dt(grid, om, fm, 1.0):
                raise StabilityViolation(f"dt={cfg.dt:.3e} became unstable at t={t:g}")
    return Trajectory(tuple(times), tuple(dens), "fpe",
                      {"model": model.name, **model.params, "steps": steps})


def centered_gradient(d: Density) -> np.ndarray:
    """dp/dx at cell centres; one-sided at the two boundary cells."""
    return np.gradient(d.values, d.grid.h, edge_order=1)


def lambda_prime_rhs(p: Density, model: FpeModel, phi: ConvexTestFn) -> float:
    """-∫ phi''(p) Omega[p] (dp/dx)^2 dx; nonpositive by construction."""
    if not model.drift_free:
        raise ValueError("the closed-form dissipation only holds with F = 0")
    d2 = phi.require_d2()
    g = centered_gradient(p)
    v = p.values
    w = np.asarray(d2(v), dtype=float) * model.omega(v)
    sq = g * g
    # 0 * inf where p vanishes with zero gradient counts as 0
    integrand = np.where(sq == 0.0, 0.0, w * sq)
    return float(-p.grid.h * np.sum(integrand))


def lambda_table(traj: Trajectory, battery, model: FpeModel | None = None):
    """Rows (t, phi_id, lambda, lambda_prime_rhs or None) for every snapshot and member."""
    rows = []
    for t, d in traj.snapshots:
        for phi in battery:
            lp = None
            if model is not None and model.drift_free and phi.differentiable:
                lp = lambda_prime_rhs(d, model, phi)
            rows.append((t, phi.id, lambda_phi(d, phi), lp))
    return rows


# -- builtin initial conditions -------------------------------------------

def _cosine_mode(x):
    return 1.0 + np.cos(np.pi * x)


def _bump(x):
    return 0.2 + np.exp(-((x - 0.5) ** 2) / (2 * 0.08**2))


def _step(x):
    return np.where(np.abs(x - 0.5) < 0.15, 3.0, 0.5)


INITIAL_CONDITIONS = {"cosine": _cosine_mode, "bump": _bump, "step": _step}


def builtin_initial(name: str, grid: Grid) -> Density:
    try:
        fn = INITIAL_CONDITIONS[name]
    except KeyError:
        raise ValueError(f"unknown builtin {name!r}; choose from {sorted(INITIAL_CONDITIONS)}") from None
    return Density.from_function(grid, fn).normalized()
