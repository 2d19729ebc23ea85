"""Finite point configurations on a time-mark rectangle, unit-rate Poisson
sampling of them, atom insertion, and subset enumeration."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .mc import RngKey, rng_from_key

# 2**22 subsets is the largest enumeration the exact reconstruction and
# difference operators will attempt before refusing.
DEFAULT_ATOM_BUDGET = 22


class TimeCollisionError(ValueError):
    """Two atoms share a time coordinate (a measure-zero, degenerate input)."""


class AtomBudgetExceeded(RuntimeError):
    def __init__(self, n_atoms: int, budget: int):
        super().__init__(f"{n_atoms} atoms exceed the enumeration budget of {budget}")
        self.n_atoms = n_atoms
        self.budget = budget


@dataclass(frozen=True, order=True)
class Point:
    """One atom (t, theta) of the planar measure."""

    t: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"atom time must be finite and >= 0, got {self.t}")
        if not (np.isfinite(self.theta) and self.theta >= 0.0):
            raise ValueError(f"atom mark must be finite and >= 0, got {self.theta}")


@dataclass(frozen=True)
class Window:
    """Observation rectangle [0, T] x [0, M]."""

    T: float
    M: float

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0.0):
            raise ValueError(f"horizon T must be finite and > 0, got {self.T}")
        if not (np.isfinite(self.M) and self.M > 0.0):
            raise ValueError(f"mark ceiling M must be finite and > 0, got {self.M}")

    @property
    def area(self) -> float:
        return self.T * self.M

    def contains(self, p: Point) -> bool:
        return 0.0 <= p.t <= self.T and 0.0 <= p.theta <= self.M


@dataclass(frozen=True)
class Configuration:
    """Atoms on a window, sorted by strictly increasing time."""

    window: Window
    atoms: tuple[Point, ...]

    def __post_init__(self):
        prev = -1.0
        for p in self.atoms:
            if not self.window.contains(p):
                raise ValueError(f"atom {p} outside window {self.window}")
            if p.t == prev:
                raise TimeCollisionError(f"duplicate atom time {p.t}")
            if p.t < prev:
                raise ValueError("atoms must be sorted by increasing time")
            prev = p.t

    @classmethod
    def empty(cls, window: Window) -> "Configuration":
        return cls(window=window, atoms=())

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.atoms)

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([p.t for p in self.atoms], dtype=float)

    @cached_property
    def marks(self) -> np.ndarray:
        return np.array([p.theta for p in self.atoms], dtype=float)

    def restrict(self, window: Window) -> "Configuration":
        """Atoms of this configuration that fall inside the given window."""
        kept = tuple(p for p in self.atoms if window.contains(p))
        return Configuration(window=window, atoms=kept)


def sample_poisson(
    window: Window,
    rng_key: RngKey | None = None,
    *,
    rng: np.random.Generator | None = None,
) -> Configuration:
    """Unit-intensity Poisson sample on the window: Poisson(T*M) atoms, i.i.d.
    uniform on the rectangle, sorted by time.

    Deterministic given rng_key. Time ties (measure zero in theory, merely
    astronomically rare in floats) are resolved by resampling the tied atoms.
    """
    if rng is None:
        if rng_key is None:
            raise ValueError("need rng_key or rng")
        rng = rng_from_key(rng_key)
    n = int(rng.poisson(window.area))
    times = rng.uniform(0.0, window.T, size=n)
    marks = rng.uniform(0.0, window.M, size=n)
    order = np.argsort(times, kind="stable")
    times, marks = times[order], marks[order]
    while n > 1:
        tied = np.flatnonzero(np.diff(times) == 0.0)
        if tied.size == 0:
            break
        times[tied + 1] = rng.uniform(0.0, window.T, size=tied.size)
        order = np.argsort(times, kind="stable")
        times, marks = times[order], marks[order]
    atoms = tuple(Point(float(t), float(th)) for t, th in zip(times, marks))
    return Configuration(window=window, atoms=atoms)


def add_points(config: Configuration, extra: Iterable[Point]) -> Configuration:
    """Insert atoms into a configuration, keeping time order.

    An atom identical to an existing one is dropped (adding a point twice is
    the same as adding it once); a time shared with a *different* mark is a
    degenerate input and raises.
    """
    by_time = {p.t: p.theta for p in config.atoms}
    for p in extra:
        if not config.window.contains(p):
            raise ValueError(f"atom {p} outside window {config.window}")
        if p.t in by_time:
            if by_time[p.t] == p.theta:
                continue
            raise TimeCollisionError(
                f"time {p.t} already carries mark {by_time[p.t]}, got {p.theta}"
            )
        by_time[p.t] = p.theta
    atoms = tuple(Point(t, th) for t, th in sorted(by_time.items()))
    return Configuration(window=config.window, atoms=atoms)


def iter_subsets(
    config: Configuration,
    max_size: int | None = None,
    budget: int = DEFAULT_ATOM_BUDGET,
) -> Iterator[Configuration]:
    """Yield every nonempty sub-configuration of size 1..max_size."""
    n = len(config)
    if n > budget:
        raise AtomBudgetExceeded(n, budget)
    top = n if max_size is None else min(max_size, n)
    for k in range(1, top + 1):
        for combo in itertools.combinations(config.atoms, k):
            yield Configuration(window=config.window, atoms=combo)


def write_csv(config: Configuration, path, rng_key: RngKey | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if rng_key is not None:
            fh.write(f"# rng_key={rng_key[0]},{rng_key[1]}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "theta"])
        for p in config.atoms:
            writer.writerow([f"{p.t:.17g}", f"{p.theta:.17g}"])


def read_csv(path, window: Window) -> Configuration:
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["t", "theta"]:
            raise ValueError(f"{path}: expected CSV header 't,theta'")
        atoms = [Point(float(r[0]), float(r[1])) for r in reader if r]
    atoms.sort(key=lambda p: p.t)
    return Configuration(window=window, atoms=tuple(atoms))
