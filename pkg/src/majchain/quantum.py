"""Closed-form eigenmode densities under a (possibly non-Hermitian) Hamiltonian.

An eigenfunction with energy E = eps + i*gamma evolves as
psi(t) = psi0 * exp(-i E t / hbar), so |psi(x, t)|^2 = |psi0(x)|^2 exp(2 gamma t / hbar).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex import ConvexTestFn, NonIncreasingPhi, lambda_phi
from .core import Density, Grid, MajorizationError
from .trajectory import Trajectory

NORM_TOL = 1e-9


class PositiveGamma(MajorizationError):
    pass


@dataclass(frozen=True, eq=False)
class QuantumMode:
    grid: Grid
    psi0: np.ndarray
    epsilon: float = 0.0
    gamma: float = 0.0
    hbar: float = 1.0
    label: str = "custom"

    def __post_init__(self):
        psi = np.array(self.psi0, dtype=complex)
        if psi.shape != (self.grid.n_cells,):
            raise ValueError(f"psi0 must have {self.grid.n_cells} samples")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        norm = self.grid.h * np.sum(np.abs(psi) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"psi0 is not normalized (norm {norm!r})")
        psi.flags.writeable = False
        object.__setattr__(self, "psi0", psi)

    @property
    def rho0(self) -> np.ndarray:
        return np.abs(self.psi0) ** 2

    def growth(self, t: float) -> float:
        return float(np.exp(2.0 * self.gamma * t / self.hbar))

    def psi(self, t: float) -> np.ndarray:
        E = self.epsilon + 1j * self.gamma
        return self.psi0 * np.exp(-1j * E * t / self.hbar)


def _normalize(grid: Grid, psi: np.ndarray) -> np.ndarray:
    return psi / np.sqrt(grid.h * np.sum(np.abs(psi) ** 2))


def sine_mode(grid: Grid, k: int = 1, epsilon: float | None = None, gamma: float = 0.0,
              hbar: float = 1.0) -> QuantumMode:
    """Particle-in-a-box eigenfunction sqrt(2) sin(k pi x).

    ``epsilon`` defaults to the box energy (k pi hbar)^2 / 2 (unit mass).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    psi = _normalize(grid, np.sqrt(2.0) * np.sin(k * np.pi * grid.centers))
    if epsilon is None:
        epsilon = 0.5 * (k * np.pi * hbar) ** 2
    return QuantumMode(grid, psi, epsilon, gamma, hbar, label=f"sine:{k}")


def gauss_mode(grid: Grid, center: float = 0.5, width: float = 0.1, epsilon: float = 1.0,
               gamma: float = 0.0, hbar: float = 1.0) -> QuantumMode:
    psi = _normalize(grid, np.exp(-((grid.centers - center) ** 2) / (4 * width**2)))
    return QuantumMode(grid, psi, epsilon, gamma, hbar, label="gauss")


def parse_mode(spec: str, grid: Grid, epsilon=None, gamma=0.0, hbar=1.0) -> QuantumMode:
    """``sine:k`` or ``gauss``."""
    if spec.startswith("sine"):
        _, _, k = spec.partition(":")
        return sine_mode(grid, int(k or 1), epsilon, gamma, hbar)
    if spec == "gauss":
        return gauss_mode(grid, epsilon=1.0 if epsilon is None else epsilon, gamma=gamma, hbar=hbar)
    raise ValueError(f"unknown mode {spec!r}; use sine:<k> or gauss")


def mode_density(mode: QuantumMode, t: float) -> Density:
    if t < 0:
        raise ValueError("t must be nonnegative")
    if mode.gamma == 0:
        return Density(mode.grid, mode.rho0)
    return Density(mode.grid, mode.rho0 * mode.growth(t))


def quantum_lambda_prime(mode: QuantumMode, t: float, phi: ConvexTestFn) -> float:
    """(2 gamma / hbar) ∫ phi'(|psi|^2) |psi|^2 dx at time t."""
    d1 = phi.require_d1()
    rho = mode_density(mode, t).values
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(rho > 0, d1(rho) * rho, 0.0)
    return float(2.0 * mode.gamma / mode.hbar * mode.grid.h * np.sum(integrand))


@dataclass(frozen=True)
class BoundCheck:
    """Decay bound lambda'(t) <= (2 gamma/hbar) phi'(0) * mass(t).

    ``rhs_bare`` drops the mass factor; it coincides with ``rhs`` only while
    the norm is still one.
    """

    lhs: float
    rhs: float
    holds: bool
    rhs_bare: float
    holds_bare: bool


def nonhermitian_bound_check(mode: QuantumMode, t: float, phi: ConvexTestFn,
                             slack: float = 1e-12) -> BoundCheck:
    if mode.gamma >= 0:
        raise PositiveGamma(f"bound requires gamma < 0, got {mode.gamma}")
    if not phi.increasing:
        raise NonIncreasingPhi(f"{phi.id} is not increasing")
    d1 = phi.require_d1()
    lhs = quantum_lambda_prime(mode, t, phi)
    rate = 2.0 * mode.gamma / mode.hbar
    slope0 = float(d1(np.array([0.0]))[0])
    rhs = rate * slope0 * mode_density(mode, t).mass
    rhs_bare = rate * slope0
    return BoundCheck(lhs, rhs, lhs <= rhs + slack, rhs_bare, lhs <= rhs_bare + slack)


def quantum_trajectory(mode: QuantumMode, snapshot_times) -> Trajectory:
    times = [float(t) for t in snapshot_times]
    if any(t < 0 for t in times) or times != sorted(times):
        raise ValueError("snapshot times must be sorted and nonnegative")
    return Trajectory(tuple(times), tuple(mode_density(mode, t) for t in times), "quantum",
                      {"mode": mode.label, "epsilon": mode.epsilon, "gamma": mode.gamma,
                       "hbar": mode.hbar})


def lambda_table(mode: QuantumMode, traj: Trajectory, battery):
    rows = []
    for t, d in traj.snapshots:
        for phi in battery:
            lp = quantum_lambda_prime(mode, t, phi) if phi.differentiable else None
            rows.append((t, phi.id, lambda_phi(d, phi), lp))
    return rows
