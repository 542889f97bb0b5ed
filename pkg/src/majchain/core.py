"""Majorization and weak majorization for grid densities and discrete vectors.

A density is piecewise constant on a uniform grid of ``(0, 1)``, so its
decreasing rearrangement is just the sorted value vector and every integral
below is an exact midpoint sum.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
NORM_TOL = 1e-9


class MajorizationError(Exception):
    """Base class for errors raised by this package."""


class GridMismatch(MajorizationError):
    pass


class LengthMismatch(MajorizationError):
    pass


class InvalidDensity(MajorizationError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_cells`` cells on (0, 1)."""

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError(f"n_cells must be an integer >= 2, got {self.n_cells}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    def cell_index(self, x: np.ndarray) -> np.ndarray:
        """Index of the cell containing each point of ``x`` (clipped to the grid)."""
        idx = np.floor(np.asarray(x, dtype=float) * self.n_cells).astype(np.int64)
        return np.clip(idx, 0, self.n_cells - 1)


@dataclass(frozen=True, eq=False)
class Density:
    """Nonnegative piecewise-constant function on a :class:`Grid`.

    ``values`` holds one value per cell. The array is copied and frozen on
    construction so a density can be shared freely.
    """

    grid: Grid
    values: np.ndarray
    mass: float = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size != self.grid.n_cells:
            raise InvalidDensity(
                f"expected {self.grid.n_cells} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidDensity("density values must be finite")
        if np.any(v < 0):
            raise InvalidDensity("density values must be nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mass", float(self.grid.h * v.sum()))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Density":
        return cls(grid, fn(grid.centers))

    @classmethod
    def uniform(cls, grid: Grid, mass: float = 1.0) -> "Density":
        return cls(grid, np.full(grid.n_cells, mass))

    @classmethod
    def delta(cls, grid: Grid, cell: int = 0) -> "Density":
        """All unit mass in a single cell."""
        v = np.zeros(grid.n_cells)
        v[cell] = grid.n_cells
        return cls(grid, v)

    def is_probability(self, norm_tol: float = NORM_TOL) -> bool:
        return abs(self.mass - 1.0) <= norm_tol

    def normalized(self) -> "Density":
        if self.mass <= 0:
            raise InvalidDensity("cannot normalize a density with zero mass")
        return Density(self.grid, self.values / self.mass)

    def __eq__(self, other):
        if not isinstance(other, Density):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None


class Relation(enum.Enum):
    MAJORIZES = "Majorizes"
    MAJORIZED_BY = "MajorizedBy"
    EQUIVALENT = "Equivalent"
    INCOMPARABLE = "Incomparable"


@dataclass(frozen=True)
class Verdict:
    """Outcome of comparing ``f`` against ``g``.

    ``witness`` is the number ``k`` of largest values whose sum breaks
    ``f ≺ g`` (``None`` when ``f ≺ g`` holds); ``reverse_witness`` is the same
    for ``g ≺ f``. ``excess`` is the largest amount by which a cumulative sum
    of ``f`` exceeds that of ``g`` (positive only when ``f ≺ g`` fails).
    """

    relation: Relation
    witness: int | None = None
    reverse_witness: int | None = None
    excess: float = 0.0

    @property
    def f_below_g(self) -> bool:
        return self.relation in (Relation.MAJORIZED_BY, Relation.EQUIVALENT)

    @property
    def g_below_f(self) -> bool:
        return self.relation in (Relation.MAJORIZES, Relation.EQUIVALENT)


def _relation(fwd: bool, bwd: bool) -> Relation:
    if fwd and bwd:
        return Relation.EQUIVALENT
    if fwd:
        return Relation.MAJORIZED_BY
    if bwd:
        return Relation.MAJORIZES
    return Relation.INCOMPARABLE


def _check_grids(f: Density, g: Density) -> None:
    if f.grid != g.grid:
        raise GridMismatch(f"grids differ: {f.grid.n_cells} vs {g.grid.n_cells} cells")


def decreasing_rearrangement(d: Density) -> Density:
    # stable sort keeps ties in original index order
    order = np.argsort(-d.values, kind="stable")
    return Density(d.grid, d.values[order])


def cumulative_profile(d: Density) -> np.ndarray:
    """Integrals of the decreasing rearrangement over (0, k h), k = 1..n."""
    return d.grid.h * np.cumsum(np.sort(d.values)[::-1])


def _first_failure(diff: np.ndarray, slack: float) -> int | None:
    bad = np.flatnonzero(diff > slack)
    return int(bad[0]) + 1 if bad.size else None


def _compare_profiles(cf, cg, tol, *, strict):
    total = max(abs(cf[-1]), abs(cg[-1]))
    slack = tol * max(1.0, total)
    mass_ok = abs(cf[-1] - cg[-1]) <= tol if strict else True

    wf = _first_failure(cf - cg, slack)
    wg = _first_failure(cg - cf, slack)
    if strict and not mass_ok:
        # the full sum must match; record it as the failing index for the side that falls short
        n = cf.size
        if wf is None:
            wf = n
        if wg is None:
            wg = n
    fwd, bwd = wf is None, wg is None
    excess = float(np.max(cf - cg))
    if strict:
        excess = max(excess, abs(cf[-1] - cg[-1]))
    return Verdict(_relation(fwd, bwd), wf, wg, excess)


def compare_continuous(f: Density, g: Density, tol: float = DEFAULT_TOL) -> Verdict:
    """Decide ``f ≺ g`` / ``g ≺ f`` via cumulative sums of the rearrangements.

    Cumulative sums must agree within ``tol * max(1, |total|)`` and the total
    masses within ``tol``.
    """
    _check_grids(f, g)
    return _compare_profiles(cumulative_profile(f), cumulative_profile(g), tol, strict=True)


def compare_weak(f: Density, g: Density, tol: float = DEFAULT_TOL) -> Verdict:
    """Weak majorization: cumulative sums only, no equality of totals."""
    _check_grids(f, g)
    return _compare_profiles(cumulative_profile(f), cumulative_profile(g), tol, strict=False)


def _exact(v) -> Fraction:
    if isinstance(v, (Fraction, int, np.integer)):
        return Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)
    # floats are taken at their shortest decimal representation
    return Fraction(repr(float(v)))


def compare_discrete(x: Sequence, y: Sequence) -> Verdict:
    """Exact comparison of sums of the k largest components.

    Components may be ints, Fractions or floats; floats are read at their
    shortest round-trip decimal value so that e.g. ``(0.4, 0.35, 0.25)`` sums
    to exactly 1.
    """
    if len(x) != len(y):
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(y)}")
    if len(x) == 0:
        raise LengthMismatch("vectors must be non-empty")
    xs = sorted((_exact(v) for v in x), reverse=True)
    ys = sorted((_exact(v) for v in y), reverse=True)

    sx = sy = Fraction(0)
    wf = wg = None
    excess = Fraction(0)
    for k, (a, b) in enumerate(zip(xs, ys), start=1):
        sx += a
        sy += b
        excess = max(excess, sx - sy)
        if wf is None and sx > sy:
            wf = k
        if wg is None and sy > sx:
            wg = k
    if sx != sy:
        n = len(xs)
        wf = n if wf is None else wf
        wg = n if wg is None else wg
        excess = max(excess, abs(sx - sy))
    return Verdict(_relation(wf is None, wg is None), wf, wg, float(excess))


def hinge_integral(d: Density, a: float) -> float:
    return float(d.grid.h * np.maximum(d.values - a, 0.0).sum())


def hinge_witness(
    f: Density, g: Density, thresholds: Iterable[float], tol: float = DEFAULT_TOL
) -> float | None:
    """First threshold ``a`` with ∫(f - a)+ > ∫(g - a)+, or ``None``."""
    _check_grids(f, g)
    thresholds = np.asarray(list(thresholds), dtype=float)
    if thresholds.size == 0:
        raise ValueError("thresholds must be non-empty")
    # (n_thresholds, n_cells) in one shot
    lf = f.grid.h * np.maximum(f.values[None, :] - thresholds[:, None], 0.0).sum(axis=1)
    lg = g.grid.h * np.maximum(g.values[None, :] - thresholds[:, None], 0.0).sum(axis=1)
    bad = np.flatnonzero(lf > lg + tol * np.maximum(1.0, np.abs(lg)))
    return float(thresholds[bad[0]]) if bad.size else None


# -- CSV round trip --------------------------------------------------------

def write_density_csv(d: Density, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_center", "value"])
        for x, v in zip(d.grid.centers, d.values):
            w.writerow([repr(float(x)), repr(float(v))])


def read_density_csv(path: str | Path) -> Density:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x_center", "value"]:
        raise InvalidDensity(f"{path}: expected header 'x_center,value'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InvalidDensity(f"{path}: malformed row ({exc})") from None
    if data.shape[0] < 2:
        raise InvalidDensity(f"{path}: need at least two cells")
    grid = Grid(data.shape[0])
    if not np.allclose(data[:, 0], grid.centers, rtol=1e-12, atol=0.0):
        raise InvalidDensity(f"{path}: x_center is not a uniform cell-centred grid on (0,1)")
    return Density(grid, data[:, 1])
