"""Correlation decay for interval maps standing in for a flow on (0, 1).

One map iterate is one time unit. Correlations are midpoint-quadrature
integrals over initial conditions,

    C_n(f, g) = ∫ f(T^n x) g(x) dx,

compared against the equilibrium value <f>_* ∫ g dx where <f>_* is the
average of ``f`` under the (estimated) invariant density.

The doubling and tent maps lose one mantissa bit per iterate in floating
point, so they are advanced exactly: quadrature nodes (2j+1)/(2M) are kept as
integer numerators, and long orbits are generated from seeded random binary
digits (the full shift).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import Density, Grid, GridMismatch, MajorizationError

EDGE = 1e-15
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MANTISSA_BITS = 53


class DegenerateOrbit(MajorizationError):
    pass


@dataclass(frozen=True, eq=False)
class Observable:
    """Bounded piecewise-constant observable on a grid; values may be signed."""

    grid: Grid
    values: np.ndarray
    name: str = "obs"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn, name="obs") -> "Observable":
        return cls(grid, fn(grid.centers), name)

    @classmethod
    def from_density(cls, d: Density, name="density") -> "Observable":
        return cls(d.grid, d.values, name)

    def __call__(self, x):
        return self.values[self.grid.cell_index(x)]

    def mean(self) -> float:
        return float(self.grid.h * self.values.sum())

    def centered(self) -> "Observable":
        return Observable(self.grid, self.values - self.mean(), self.name)


# -- systems ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MapSystem:
    """An interval map with reproducible sampling.

    ``node_step`` (optional) advances integer numerators ``u`` of the nodes
    u / (2M) exactly; ``orbit_sampler`` (optional) returns an orbit of a
    given length from a numpy Generator.
    """

    name: str
    map: Callable[[np.ndarray], np.ndarray]
    seed: int = 0
    invariant_density_estimate: Density | None = None
    node_step: Callable[[np.ndarray, int], np.ndarray] | None = field(default=None, repr=False)
    orbit_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = field(default=None, repr=False)

    def apply(self, x):
        return np.clip(self.map(np.asarray(x, dtype=float)), EDGE, 1.0 - EDGE)

    def with_density(self, rho: Density) -> "MapSystem":
        return replace(self, invariant_density_estimate=rho)

    def orbit(self, n_transient: int, n_samples: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        if self.orbit_sampler is not None:
            return self.orbit_sampler(rng, n_transient + n_samples)[n_transient:]
        x = float(rng.uniform(EDGE, 1.0 - EDGE))
        out = np.empty(n_samples)
        for _ in range(n_transient):
            x = min(max(float(self.map(x)), EDGE), 1.0 - EDGE)
        for k in range(n_samples):
            out[k] = x
            x = min(max(float(self.map(x)), EDGE), 1.0 - EDGE)
        return out

    def node_images(self, n_points: int, n_max: int):
        """Yield T^n of the midpoint nodes for n = 0..n_max."""
        j = np.arange(n_points, dtype=np.int64)
        if self.node_step is not None:
            u = 2 * j + 1
            denom = 2 * n_points
            for n in range(n_max + 1):
                if n:
                    u = self.node_step(u, n_points)
                yield u / denom
            return
        x = (j + 0.5) / n_points
        for n in range(n_max + 1):
            if n:
                x = self.apply(x)
            yield x


def _logistic_orbit(rng, n):
    x = float(rng.uniform(0.1, 0.9))
    out = np.empty(n)
    for k in range(n):
        out[k] = x
        x = 4.0 * x * (1.0 - x)
        if x < EDGE:
            x = EDGE
        elif x > 1.0 - EDGE:
            x = 1.0 - EDGE
    return out


def _binary_shift_orbit(rng, n):
    """Orbit of the doubling map through a point with i.i.d. random binary digits."""
    bits = rng.integers(0, 2, size=n + MANTISSA_BITS, dtype=np.int8).astype(float)
    weights = 0.5 ** np.arange(1, MANTISSA_BITS + 1)
    windows = np.lib.stride_tricks.sliding_window_view(bits, MANTISSA_BITS)[:n]
    x = windows @ weights
    return np.clip(x, EDGE, 1.0 - EDGE)


def _tent_from_doubling(y):
    return np.clip(2.0 * np.minimum(y, 1.0 - y), EDGE, 1.0 - EDGE)


def _tent_orbit(rng, n):
    # tent(d(y)) = d(2y mod 1) with d(y) = 2 min(y, 1 - y)
    return _tent_from_doubling(_binary_shift_orbit(rng, n))


def _doubling_nodes(u, m):
    return (2 * u) % (2 * m)


def _tent_nodes(u, m):
    return np.where(u < m, 2 * u, 4 * m - 2 * u)


def logistic(seed: int = 0) -> MapSystem:
    return MapSystem("logistic", lambda x: 4.0 * x * (1.0 - x), seed,
                     orbit_sampler=_logistic_orbit)


def doubling(seed: int = 0) -> MapSystem:
    return MapSystem("doubling", lambda x: np.mod(2.0 * x, 1.0), seed,
                     node_step=_doubling_nodes, orbit_sampler=_binary_shift_orbit)


def tent(seed: int = 0) -> MapSystem:
    return MapSystem("tent", lambda x: 1.0 - np.abs(1.0 - 2.0 * x), seed,
                     node_step=_tent_nodes, orbit_sampler=_tent_orbit)


def rotation(alpha: float = GOLDEN, seed: int = 0) -> MapSystem:
    def orbit(rng, n):
        x0 = rng.uniform()
        return np.mod(x0 + alpha * np.arange(n), 1.0)

    return MapSystem(f"rotation:{alpha!r}", lambda x: np.mod(x + alpha, 1.0), seed,
                     orbit_sampler=orbit)


def identity(seed: int = 0) -> MapSystem:
    return MapSystem("identity", lambda x: x, seed)


def parse_map(spec: str, seed: int = 0) -> MapSystem:
    name, _, arg = spec.partition(":")
    if name == "logistic":
        return logistic(seed)
    if name == "doubling":
        return doubling(seed)
    if name == "tent":
        return tent(seed)
    if name == "rotation":
        return rotation(float(arg) if arg else GOLDEN, seed)
    if name == "identity":
        return identity(seed)
    raise ValueError(f"unknown map {spec!r}")


# -- estimators ---------------------------------------------------------------

def estimate_invariant_density(sys: MapSystem, n_transient: int, n_samples: int,
                               grid: Grid) -> Density:
    """Normalized histogram of one long orbit after a transient."""
    if n_samples < 10_000:
        raise ValueError("n_samples must be >= 1e4")
    xs = sys.orbit(n_transient, n_samples)
    counts = np.bincount(grid.cell_index(xs), minlength=grid.n_cells)
    if np.count_nonzero(counts) < 2:
        raise DegenerateOrbit(f"{sys.name}: orbit visits fewer than two cells")
    return Density(grid, counts / (n_samples * grid.h))


def _ensure_density(sys: MapSystem) -> Density:
    if sys.invariant_density_estimate is None:
        return estimate_invariant_density(sys, 1000, 1_000_000, Grid(256))
    return sys.invariant_density_estimate


def equilibrium_mean(f: Observable, rho: Density) -> float:
    """<f>_* = ∫ f rho dx, with f evaluated on rho's cell centres."""
    return float(rho.grid.h * np.sum(f(rho.grid.centers) * rho.values))


def correlation_limit(sys: MapSystem, f: Observable, g: Observable) -> float:
    return equilibrium_mean(f, _ensure_density(sys)) * g.mean()


def correlation(sys: MapSystem, f: Observable, g: Observable, n: int,
                n_points: int = 1_000_000) -> float:
    """∫ f(T^n x) g(x) dx by the midpoint rule with ``n_points`` nodes."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(correlation_sequence(sys, [f], [g], n, n_points)[0][-1])


def correlation_sequence(sys: MapSystem, fs: Sequence[Observable], gs: Sequence[Observable],
                         n_max: int, n_points: int = 1_000_000) -> np.ndarray:
    """C_n(fs[i], gs[i]) for n = 0..n_max, shape (len(fs), n_max + 1)."""
    if len(fs) != len(gs):
        raise ValueError("fs and gs must pair up")
    for f, g in zip(fs, gs):
        if f.grid != g.grid:
            raise GridMismatch("observables live on different grids")
    x0 = (np.arange(n_points) + 0.5) / n_points
    g_vals = [g(x0) for g in gs]
    out = np.empty((len(fs), n_max + 1))
    for n, xn in enumerate(sys.node_images(n_points, n_max)):
        cache = {}
        for i, (f, gv) in enumerate(zip(fs, g_vals)):
            fv = cache.get(id(f))
            if fv is None:
                fv = cache[id(f)] = f(xn)
            # fixed-order reduction for bit reproducibility
            out[i, n] = float(np.dot(fv, gv)) / n_points
    return out


def l1_norm_sequence(sys: MapSystem, f: Observable, n_max: int,
                     n_points: int = 1_000_000) -> np.ndarray:
    """∫ |f(T^n x)| dx for n = 0..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return np.array([float(np.abs(f(xn)).sum()) / n_points
                     for xn in sys.node_images(n_points, n_max)])


def invariance_defect(sys: MapSystem, rho: Density, a: float, b: float,
                      n_points: int = 1_000_000) -> tuple[float, float]:
    """(∫_A rho, ∫_{T^-1 A} rho) for A = [a, b)."""
    mask = (rho.grid.centers >= a) & (rho.grid.centers < b)
    direct = float(rho.grid.h * rho.values[mask].sum())
    x = (np.arange(n_points) + 0.5) / n_points
    imgs = sys.node_images(n_points, 1)
    next(imgs)
    tx = next(imgs)
    dens = rho.values[rho.grid.cell_index(x)]
    pre = float(np.sum(dens * ((tx >= a) & (tx < b)))) / n_points
    return direct, pre


# -- verdicts -----------------------------------------------------------------

MIXING = "Mixing-consistent"
NOT_MIXING = "Not-mixing-evidence"


@dataclass
class PairResult:
    pair_id: str
    values: np.ndarray
    limit: float
    n_settle: int | None
    verdict: str
    violating_n: int | None

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.values - self.limit)


@dataclass
class MixingReport:
    system: str
    tol: float
    n_max: int
    pairs: list[PairResult]

    @property
    def verdict(self) -> str:
        return MIXING if all(p.verdict == MIXING for p in self.pairs) else NOT_MIXING

    def summary_lines(self) -> list[str]:
        lines = []
        for p in self.pairs:
            extra = (f"n_settle={p.n_settle}" if p.verdict == MIXING
                     else f"violating_n={p.violating_n}")
            lines.append(f"{self.system} {p.pair_id}: {p.verdict} ({extra}, tol={self.tol:g})")
        lines.append(f"{self.system}: {self.verdict}")
        return lines


def settle_index(err: np.ndarray, tol: float) -> int | None:
    """Smallest n with err[m] <= tol for all m >= n, or None if the last value misses."""
    bad = np.flatnonzero(err > tol)
    if bad.size == 0:
        return 0
    n = int(bad[-1]) + 1
    return n if n < err.size else None


def mixing_verdict(sys: MapSystem, observables: Sequence[Observable], n_max: int,
                   tol: float = 0.02, n_points: int = 1_000_000) -> MixingReport:
    """Check every ordered pair of observables for settling onto the equilibrium value.

    A pair is Mixing-consistent when its correlation stays within ``tol`` of
    the limit from ``n_settle`` on, and ``n_settle`` leaves at least the
    second half of the horizon ``0..n_max`` settled.
    """
    if len(observables) < 2:
        raise ValueError("need at least two observables")
    sys = sys.with_density(_ensure_density(sys))
    pairs = [(i, j) for i in range(len(observables)) for j in range(len(observables))]
    fs = [observables[i] for i, _ in pairs]
    gs = [observables[j] for _, j in pairs]
    seq = correlation_sequence(sys, fs, gs, n_max, n_points)
    results = []
    for (i, j), f, g, vals in zip(pairs, fs, gs, seq):
        lim = correlation_limit(sys, f, g)
        err = np.abs(vals - lim)
        ns = settle_index(err, tol)
        ok = ns is not None and ns <= n_max // 2
        bad = np.flatnonzero(err > tol)
        results.append(PairResult(f"{f.name}|{g.name}", vals, lim, ns,
                                  MIXING if ok else NOT_MIXING,
                                  int(bad[-1]) if bad.size else None))
    return MixingReport(sys.name, tol, n_max, results)


def default_observables(grid: Grid | None = None) -> list[Observable]:
    """Two Lebesgue-centred observables: x - 1/2 and cos(2 pi x)."""
    grid = grid or Grid(4096)
    return [
        Observable.from_function(grid, lambda x: x, "x").centered(),
        Observable.from_function(grid, lambda x: np.cos(2 * np.pi * x), "cos2pix").centered(),
    ]
