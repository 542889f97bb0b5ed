"""Time-ordered density snapshots and their on-disk form.

A trajectory directory holds one ``t_<time>.csv`` density file per snapshot,
where ``<time>`` is the shortest round-trip decimal form of the time.
"""

from __future__ import annotations

import glob as _glob
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Density, GridMismatch, MajorizationError, read_density_csv, write_density_csv

SOURCES = ("fpe", "quantum", "mixing", "file")

_TIME_RE = re.compile(r"^t_(.+)\.csv$")


class TrajectoryError(MajorizationError):
    pass


@dataclass(frozen=True)
class Trajectory:
    times: tuple[float, ...]
    densities: tuple[Density, ...]
    source: str = "file"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        dens = tuple(self.densities)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "densities", dens)
        if len(times) != len(dens):
            raise TrajectoryError("times and densities differ in length")
        if not times:
            raise TrajectoryError("trajectory is empty")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise TrajectoryError("snapshot times must be strictly increasing")
        grid = dens[0].grid
        if any(d.grid != grid for d in dens):
            raise GridMismatch("all snapshots must share one grid")
        if self.source not in SOURCES:
            raise TrajectoryError(f"unknown source {self.source!r}")

    @classmethod
    def from_pairs(cls, pairs, source="file", **meta) -> "Trajectory":
        pairs = list(pairs)
        return cls(tuple(t for t, _ in pairs), tuple(d for _, d in pairs), source, dict(meta))

    @property
    def grid(self):
        return self.densities[0].grid

    @property
    def snapshots(self):
        return list(zip(self.times, self.densities))

    def __len__(self):
        return len(self.times)

    def reversed(self) -> "Trajectory":
        """Same densities played backwards on the original time stamps."""
        return Trajectory(self.times, self.densities[::-1], "file", dict(self.meta))

    def masses(self) -> np.ndarray:
        return np.array([d.mass for d in self.densities])


def time_token(t: float) -> str:
    return repr(float(t))


def snapshot_filename(t: float) -> str:
    return f"t_{time_token(t)}.csv"


def save_trajectory(traj: Trajectory, directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for t, d in traj.snapshots:
        p = directory / snapshot_filename(t)
        write_density_csv(d, p)
        paths.append(p)
    return paths


def load_trajectory(spec: str | Path, source: str = "file") -> Trajectory:
    """Load every ``t_<time>.csv`` from a directory or a glob pattern.

    Snapshots are ordered by parsed time, not by filename.
    """
    spec = str(spec)
    if Path(spec).is_dir():
        paths = sorted(Path(spec).glob("t_*.csv"))
    else:
        paths = [Path(p) for p in _glob.glob(spec)]
    if not paths:
        raise TrajectoryError(f"no snapshot files match {spec!r}")
    pairs = []
    for p in paths:
        m = _TIME_RE.match(p.name)
        if not m:
            raise TrajectoryError(f"{p.name}: expected a name of the form t_<time>.csv")
        try:
            t = float(m.group(1))
        except ValueError:
            raise TrajectoryError(f"{p.name}: cannot parse time {m.group(1)!r}") from None
        pairs.append((t, read_density_csv(p)))
    pairs.sort(key=lambda tp: tp[0])
    return Trajectory.from_pairs(pairs, source=source)
