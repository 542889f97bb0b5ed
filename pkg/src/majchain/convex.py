"""Battery of convex test functions used as monotone certificates.

Arguments are density values, which are nonnegative but may exceed 1, so
every member is convex on [0, inf). "Increasing" is likewise meant on
[0, inf); this is why x**2 and friends count as increasing here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Density

ArrayFn = Callable[[np.ndarray], np.ndarray]


class NonDifferentiablePhi(ValueError):
    pass


class NonIncreasingPhi(ValueError):
    pass


@dataclass(frozen=True)
class ConvexTestFn:
    id: str
    eval: ArrayFn
    d1: ArrayFn | None = None
    d2: ArrayFn | None = None
    increasing: bool = False
    differentiable: bool = True

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def require_d1(self) -> ArrayFn:
        if not self.differentiable or self.d1 is None:
            raise NonDifferentiablePhi(f"{self.id} has no first derivative")
        return self.d1

    def require_d2(self) -> ArrayFn:
        if not self.differentiable or self.d2 is None:
            raise NonDifferentiablePhi(f"{self.id} has no second derivative")
        return self.d2


class Battery(Sequence):
    """Ordered collection of :class:`ConvexTestFn` with unique ids."""

    def __init__(self, members):
        self.members = tuple(members)
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate battery ids: {ids}")

    def __getitem__(self, i):
        return self.members[i]

    def __len__(self):
        return len(self.members)

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.members]

    def get(self, phi_id: str) -> ConvexTestFn:
        for m in self.members:
            if m.id == phi_id:
                return m
        raise KeyError(phi_id)

    def select(self, ids: Sequence[str]) -> "Battery":
        return Battery([self.get(i) for i in ids])

    def differentiable(self) -> "Battery":
        return Battery([m for m in self.members if m.differentiable])

    def __repr__(self):
        return f"Battery({self.ids})"


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    return out


def _xlogx_d1(x):
    with np.errstate(divide="ignore"):
        return np.log(x) + 1.0


def _xlogx_d2(x):
    with np.errstate(divide="ignore"):
        return 1.0 / np.asarray(x, dtype=float)


def _exp(x):
    with np.errstate(over="ignore"):
        return np.exp(x)


def hinge(a: float) -> ConvexTestFn:
    """(x - a)+, increasing and non-differentiable at the kink."""
    return ConvexTestFn(
        id=f"hinge_{a:g}",
        eval=lambda x, a=a: np.maximum(np.asarray(x, dtype=float) - a, 0.0),
        increasing=True,
        differentiable=False,
    )


XLOGX = ConvexTestFn("xlogx", _xlogx, _xlogx_d1, _xlogx_d2, increasing=False)
SQUARE = ConvexTestFn("x2", lambda x: x**2, lambda x: 2.0 * x,
                      lambda x: np.full_like(np.asarray(x, dtype=float), 2.0), increasing=True)
POW15 = ConvexTestFn("x1.5", lambda x: np.power(x, 1.5), lambda x: 1.5 * np.sqrt(x),
                     lambda x: 0.75 / np.sqrt(x), increasing=True)
CUBE = ConvexTestFn("x3", lambda x: x**3, lambda x: 3.0 * x**2, lambda x: 6.0 * x,
                    increasing=True)
ABS = ConvexTestFn("abs", np.abs, increasing=True, differentiable=False)
EXP = ConvexTestFn("exp", _exp, _exp, _exp, increasing=True)
LINEAR = ConvexTestFn("x", lambda x: np.asarray(x, dtype=float),
                      lambda x: np.ones_like(np.asarray(x, dtype=float)),
                      lambda x: np.zeros_like(np.asarray(x, dtype=float)), increasing=True)

HINGE_LEVELS = (0.25, 0.5, 1.0, 2.0, 4.0)


def standard_battery() -> Battery:
    return Battery(
        [XLOGX, SQUARE, POW15, CUBE, ABS, *(hinge(a) for a in HINGE_LEVELS), EXP]
    )


def icx_battery() -> Battery:
    """Increasing members of the standard battery, plus the identity."""
    return Battery([m for m in standard_battery() if m.increasing] + [LINEAR])


def all_functions() -> Battery:
    """Every named member, for id lookup from the command line."""
    return Battery(list(standard_battery()) + [LINEAR])


def battery_from_ids(ids: Sequence[str] | str | None) -> Battery:
    """Resolve a comma-separated id list; ``standard``/``icx`` name whole batteries."""
    if ids is None:
        return standard_battery()
    if isinstance(ids, str):
        ids = [s.strip() for s in ids.split(",") if s.strip()]
    if list(ids) == ["standard"]:
        return standard_battery()
    if list(ids) == ["icx"]:
        return icx_battery()
    known = all_functions()
    out = []
    for i in ids:
        if i.startswith("hinge_") and i not in known.ids:
            out.append(hinge(float(i[len("hinge_"):])))
        else:
            out.append(known.get(i))
    return Battery(out)


def lambda_phi(d: Density, phi: ConvexTestFn) -> float:
    """∫ phi(p(x)) dx by the (exact) midpoint rule."""
    return float(d.grid.h * np.sum(phi(d.values)))


# -- vector-valued samples for spot checks of the Schur order ---------------

def _neg_entropy(v):
    v = np.asarray(v, dtype=float)
    return float(np.sum(_xlogx(v)))


def _top_k_sum(k):
    def fn(v):
        return float(np.sum(np.sort(np.asarray(v, dtype=float))[::-1][:k]))
    return fn


def schur_samples(n: int) -> dict[str, Callable[[np.ndarray], float]]:
    """Sample Schur-convex and symmetric quasi-convex functions on n-vectors.

    Keys prefixed ``schur:`` are Schur-convex, ``qcx:`` are symmetric
    quasi-convex. Only meant for one-directional spot checks.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    return {
        "schur:max": lambda v: float(np.max(v)),
        "schur:sum_squares": lambda v: float(np.sum(np.square(v))),
        "schur:neg_entropy": _neg_entropy,
        "qcx:max": lambda v: float(np.max(v)),
        "qcx:top2_sum": _top_k_sum(2),
        "qcx:l2_norm": lambda v: float(np.sqrt(np.sum(np.square(v)))),
    }
