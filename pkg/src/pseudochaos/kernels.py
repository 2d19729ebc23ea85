"""Excitation kernels: pointwise evaluation, running integrals, iterated
self-convolutions and their sum (the resolvent).

A kernel is a nonnegative function on [0, inf). Two families are supported:

* exponential  a * exp(-b t)  with a >= 0, b > 0,
* tabulated values on a uniform grid, linearly interpolated and hard zero
  beyond the last node.

For a kernel with L1 mass < 1 the iterated convolutions
``phi_1 = phi``, ``phi_n = phi * phi_{n-1}`` have L1 mass ``|phi|_1 ** n``,
and their sum (the resolvent) has L1 mass ``|phi|_1 / (1 - |phi|_1)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class StabilityError(ValueError):
    """The kernel's L1 mass is >= 1, so it cannot drive a stable process."""


def _as_nonnegative_times(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("kernel argument must be nonnegative")
    return arr


@dataclass(frozen=True)
class Kernel:
    family: str
    alpha: float = 0.0
    beta: float = 1.0
    step: float = 0.0
    values: tuple[float, ...] = ()

    @classmethod
    def exponential(cls, alpha: float, beta: float) -> "Kernel":
        if not (np.isfinite(alpha) and alpha >= 0.0):
            raise ValueError(f"exponential amplitude must be >= 0, got {alpha}")
        if not (np.isfinite(beta) and beta > 0.0):
            raise ValueError(f"exponential decay rate must be > 0, got {beta}")
        return cls(family="exponential", alpha=float(alpha), beta=float(beta))

    @classmethod
    def zero(cls) -> "Kernel":
        return cls.exponential(0.0, 1.0)

    @classmethod
    def from_table(cls, step: float, values) -> "Kernel":
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError("table kernel needs at least one value")
        if not (np.isfinite(step) and step > 0.0):
            raise ValueError(f"table grid step must be > 0, got {step}")
        if any(not np.isfinite(v) or v < 0.0 for v in vals):
            raise ValueError("table kernel values must be finite and >= 0")
        return cls(family="table", step=float(step), values=vals)

    @classmethod
    def from_csv(cls, path) -> "Kernel":
        """Load a table kernel from CSV with header ``t,value``; the t column
        must be equally spaced, strictly increasing, and start at 0."""
        with open(path, newline="") as fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["t", "value"]:
                raise ValueError(f"{path}: expected CSV header 't,value'")
            ts, vs = [], []
            for row in reader:
                if not row:
                    continue
                ts.append(float(row[0]))
                vs.append(float(row[1]))
        if not ts:
            raise ValueError(f"{path}: empty kernel table")
        if abs(ts[0]) > 1e-12:
            raise ValueError(f"{path}: time grid must start at 0, got {ts[0]}")
        if len(ts) == 1:
            return cls.from_table(1.0, vs)
        steps = np.diff(ts)
        if np.any(steps <= 0.0):
            raise ValueError(f"{path}: time grid must be strictly increasing")
        h = float(steps[0])
        if np.any(np.abs(steps - h) > 1e-9 * max(h, 1.0)):
            raise ValueError(f"{path}: time grid must be equally spaced")
        return cls.from_table(h, vs)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        """Kernel value at t >= 0; accepts scalars or arrays."""
        arr = _as_nonnegative_times(t)
        if self.family == "exponential":
            out = self.alpha * np.exp(-self.beta * arr)
        else:
            grid = self.step * np.arange(len(self.values))
            out = np.interp(arr, grid, self.values, right=0.0)
        return out if isinstance(out, np.ndarray) and out.ndim else float(out)

    def partial_integral(self, s):
        """Integral of the kernel over [0, s]; nondecreasing with limit l1_norm."""
        arr = _as_nonnegative_times(s)
        if self.family == "exponential":
            out = (self.alpha / self.beta) * (1.0 - np.exp(-self.beta * arr))
        else:
            out = self._table_partial(arr)
        return out if isinstance(out, np.ndarray) and out.ndim else float(out)

    def _table_partial(self, arr):
        v = np.asarray(self.values)
        if len(v) == 1:
            return np.zeros_like(arr)
        h = self.step
        support = h * (len(v) - 1)
        # exact integral of the piecewise-linear interpolant
        node_cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[:-1] + v[1:]) * h)])
        clipped = np.minimum(arr, support)
        idx = np.minimum((clipped / h).astype(int), len(v) - 2)
        d = clipped - idx * h
        slope = (v[idx + 1] - v[idx]) / h
        return node_cum[idx] + v[idx] * d + 0.5 * slope * d * d

    # -- summary quantities -------------------------------------------------

    @cached_property
    def l1_norm(self) -> float:
        if self.family == "exponential":
            return self.alpha / self.beta
        v = np.asarray(self.values)
        return float(np.trapezoid(v, dx=self.step)) if len(v) > 1 else 0.0

    @cached_property
    def sup_norm(self) -> float:
        if self.family == "exponential":
            return self.alpha
        return float(max(self.values))

    @cached_property
    def is_nonincreasing(self) -> bool:
        if self.family == "exponential":
            return True
        return bool(np.all(np.diff(self.values) <= 0.0))

    def require_stable(self) -> None:
        if self.l1_norm >= 1.0:
            raise StabilityError(
                f"kernel L1 mass {self.l1_norm:.6g} >= 1 (needs < 1 for stability)"
            )


@dataclass(frozen=True)
class ConvolutionLadder:
    """Sampled iterated convolutions phi_1..phi_n on a uniform grid plus their
    sum, with the L1 mass omitted by the truncation reported as tail_bound."""

    kernel: Kernel
    step: float
    n_max: int
    grid: np.ndarray
    levels: np.ndarray      # shape (n_max, len(grid)); levels[0] is the kernel
    resolvent: np.ndarray
    tail_bound: float

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def level_at(self, n: int, t):
        if not 1 <= n <= self.n_max:
            raise ValueError(f"level must be in 1..{self.n_max}, got {n}")
        return np.interp(t, self.grid, self.levels[n - 1])

    def level_l1(self, n: int) -> float:
        if not 1 <= n <= self.n_max:
            raise ValueError(f"level must be in 1..{self.n_max}, got {n}")
        return float(np.trapezoid(self.levels[n - 1], dx=self.step))

    def resolvent_at(self, t):
        return np.interp(t, self.grid, self.resolvent)

    def resolvent_l1(self) -> float:
        """Grid integral of the resolvent; converges to l1 / (1 - l1) as the
        horizon and n_max grow and the step shrinks."""
        return float(np.trapezoid(self.resolvent, dx=self.step))


def build_ladder(kernel: Kernel, step: float, horizon: float, n_max: int = 40) -> ConvolutionLadder:
    """Build phi_1..phi_{n_max} by iterated discrete convolution (trapezoid rule).

    Requires the kernel's L1 mass to be < 1; the geometric decay of the level
    masses then bounds the truncated resolvent tail by
    ``l1 ** (n_max + 1) / (1 - l1)``.
    """
    if step <= 0.0:
        raise ValueError(f"grid step must be > 0, got {step}")
    if horizon <= 0.0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    kernel.require_stable()

    n_nodes = int(np.ceil(horizon / step)) + 1
    grid = step * np.arange(n_nodes)
    phi = np.asarray(kernel(grid), dtype=float)

    levels = np.empty((n_max, n_nodes))
    levels[0] = phi
    for n in range(1, n_max):
        prev = levels[n - 1]
        conv = np.convolve(phi, prev)[:n_nodes]
        # trapezoid end-point correction for the convolution integral
        levels[n] = step * (conv - 0.5 * (phi * prev[0] + phi[0] * prev))

    l1 = kernel.l1_norm
    tail = l1 ** (n_max + 1) / (1.0 - l1)
    return ConvolutionLadder(
        kernel=kernel,
        step=float(step),
        n_max=int(n_max),
        grid=grid,
        levels=levels,
        resolvent=levels.sum(axis=0),
        tail_bound=float(tail),
    )
