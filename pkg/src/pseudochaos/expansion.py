"""Expansion of the window-truncated event count over the uncompensated point
measure: closed-form coefficients for linear Hawkes, a brute-force coefficient
oracle, exact pathwise reconstruction, the alternating-sum characterization of
expandability, and the Monte Carlo estimator of compensated-chaos coefficients.

The order-k coefficient at points x_1..x_k (time sorted, x_(k) latest) is

    c_k = sum over S of {x_(1)..x_(k-1)} of (-1)^(k-1-|S|) 1{theta_(k) <= lambda_(t_(k)) on S},

with the intensity solved on the fixed sub-configuration S alone. Summing
c_k over all size-k subsets of a configuration's atoms for every k rebuilds
the event count exactly, atom for atom.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .configurations import (
    DEFAULT_ATOM_BUDGET,
    AtomBudgetExceeded,
    Configuration,
    Point,
    TimeCollisionError,
    Window,
    sample_poisson,
)
from .hawkes import HawkesCount, HawkesParams, intensity_on_configuration, solve_path
from .malliavin import Functional, iterated_difference
from .mc import MCEstimate, RngKey, rng_from_key

# paths are sampled per chunk of this size so the batch evaluator can
# vectorize; the chunk grid is part of the deterministic sampling layout
_CHUNK = 512


def _validate_points(window: Window, points: Sequence[Point]) -> list[Point]:
    pts = sorted(points, key=lambda p: p.t)
    if not pts:
        raise ValueError("need at least one point")
    for p in pts:
        if not window.contains(p):
            raise ValueError(f"point {p} outside window {window}")
    for a, b in zip(pts, pts[1:]):
        if a.t == b.t:
            raise TimeCollisionError(f"duplicate point time {a.t}")
    return pts


def hawkes_coefficient(
    params: HawkesParams,
    points: Sequence[Point],
    budget: int = DEFAULT_ATOM_BUDGET,
) -> int:
    """Closed-form expansion coefficient of the Hawkes event count.

    Symmetric in the points (they are time sorted internally); always an
    integer, and in {0, 1} for a single point.
    """
    pts = _validate_points(params.window, points)
    k = len(pts)
    if k - 1 > budget:
        raise AtomBudgetExceeded(k - 1, budget)
    last = pts[-1]
    if k == 1:
        return int(last.theta <= params.mu)
    total = 0
    for size in range(k):
        sign = (-1) ** (k - 1 - size)
        for combo in itertools.combinations(pts[:-1], size):
            sub = Configuration(window=params.window, atoms=combo)
            lam = intensity_on_configuration(params, sub, last.t)
            total += sign * int(last.theta <= lam)
    return total


def coefficient_oracle(
    F: Functional,
    window: Window,
    points: Sequence[Point],
    budget: int = DEFAULT_ATOM_BUDGET,
) -> float:
    """Brute-force coefficient of any functional: the iterated difference at
    the empty configuration (under the window-emptying measure the coefficient
    expectation collapses to this single deterministic subset sum)."""
    _validate_points(window, points)
    return iterated_difference(F, Configuration.empty(window), points, budget=budget)


@dataclass(frozen=True)
class ReconstructionReport:
    source: Configuration
    per_size: tuple[int, ...]   # sum of c_k over size-k atom subsets, k = 1..n
    total: int
    event_count: int            # from the path solver on the same configuration
    exact_match: bool


def _coefficient_table(params: HawkesParams, config: Configuration) -> np.ndarray:
    """Sum of c_k over all size-k subsets for every k, sharing triangular
    solves across subsets.

    Atoms are time sorted, so the subsets of atoms strictly before atom i are
    exactly the bitmasks below 2**i. active[mask] carries which atoms the
    triangular solve accepts on sub-configuration `mask`; the alternating
    subset sum of the acceptance indicator of atom i over those masks is the
    coefficient of mask + {i}. Accumulation order matches the path solver
    (ascending time, rejected atoms contributing exact zeros), so every
    indicator decision is bitwise identical to solve_path's.
    """
    n = len(config)
    times, marks = config.times, config.marks
    mu, kernel = params.mu, params.kernel
    per_size = np.zeros(n + 1)
    active = np.zeros(1, dtype=np.int64)
    sizes = np.zeros(1, dtype=np.int64)
    for i in range(n):
        lam = np.full(1 << i, mu)
        if i:
            row = kernel(times[i] - times[:i])
            for j in range(i):
                lam += row[j] * ((active >> j) & 1)
        ind = marks[i] <= lam
        active = np.concatenate([active, active | (np.int64(1 << i) * ind)])
        g = ind.astype(np.int64)
        for b in range(i):
            blocks = g.reshape(-1, 2, 1 << b)
            blocks[:, 1, :] -= blocks[:, 0, :]
            g = blocks.reshape(-1)
        per_size += np.bincount(sizes + 1, weights=g, minlength=n + 1)
        sizes = np.concatenate([sizes, sizes + 1])
    return per_size[1:]


def reconstruct(
    params: HawkesParams,
    source: Configuration,
    budget: int = DEFAULT_ATOM_BUDGET,
    method: str = "shared",
) -> ReconstructionReport:
    """Evaluate the full expansion on a configuration and compare it with the
    path solver's event count.

    method="shared" reuses triangular solves across subsets; method="direct"
    calls hawkes_coefficient on every subset. Both produce identical reports;
    the direct route exists as the plain-reading cross-check.
    """
    n = len(source)
    if n > budget:
        raise AtomBudgetExceeded(n, budget)
    if method == "shared":
        sums = _coefficient_table(params, source)
        per_size = tuple(int(round(v)) for v in sums)
    elif method == "direct":
        # coefficient queries validate against the params window; lift it when
        # the source lives on a larger one (exact-thinning candidates may)
        query_params = params
        if source.window != params.window:
            query_params = HawkesParams(
                mu=params.mu, kernel=params.kernel, window=source.window
            )
        acc = [0] * n
        for k in range(1, n + 1):
            for combo in itertools.combinations(source.atoms, k):
                acc[k - 1] += hawkes_coefficient(query_params, combo, budget=budget)
        per_size = tuple(acc)
    else:
        raise ValueError(f"unknown method {method!r}")
    total = sum(per_size)
    event_count = solve_path(params, source).event_count
    return ReconstructionReport(
        source=source,
        per_size=per_size,
        total=total,
        event_count=event_count,
        exact_match=(total == event_count),
    )


@dataclass(frozen=True)
class CharacterizationReport:
    """Alternating-sum test of expandability over the uncompensated measure:
    the signed, scaled integrals of expected iterated differences must add up
    to E[F]."""

    terms: tuple[MCEstimate, ...]   # order j = 1..j_max, signed and scaled
    cumulative: MCEstimate          # per-path sum of all terms
    reference: MCEstimate           # plain estimate of E[F] on the same paths
    residual: MCEstimate            # per-path cumulative minus reference
    truncation_budget: float        # allowance for the omitted tail of the series

    @property
    def j_max(self) -> int:
        return len(self.terms)


def _signed_subsets(j_max: int) -> list[list[tuple[int, int]]]:
    """For each order j: the (mask, sign) pairs of the alternating subset sum
    over the first j points."""
    table = []
    for j in range(1, j_max + 1):
        pairs = []
        for mask in range(1 << j):
            pairs.append((mask, (-1) ** (j - bin(mask).count("1"))))
        table.append(pairs)
    return table


def characterization_check(
    F: Functional,
    window: Window,
    j_max: int,
    n_paths: int,
    rng_key: RngKey,
    points_per_path: int = 1,
) -> CharacterizationReport:
    """Estimate each term (-1)^(j+1)/j! * integral of E[D^j F] over the window
    power by drawing j uniform points and an independent configuration, and
    compare the cumulative sum against E[F] estimated on the same paths.

    Point draws nested in j share configuration evaluations; standard errors
    are computed over per-path averages, so multiple point draws per path stay
    statistically honest. Time ties among sampled atoms are measure zero and
    are not re-sampled here.
    """
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")
    seed, base_index = rng_key
    T, M, area = window.T, window.M, window.area
    n_subsets = 1 << j_max
    signed = _signed_subsets(j_max)
    scale = [
        ((-1.0) ** (j + 1)) * area**j / math.factorial(j) for j in range(1, j_max + 1)
    ]
    include = np.array(
        [[(mask >> k) & 1 for k in range(j_max)] for mask in range(n_subsets)],
        dtype=bool,
    )

    term_paths = np.empty((j_max, n_paths))
    ref_paths = np.empty(n_paths)
    for chunk_idx, start in enumerate(range(0, n_paths, _CHUNK)):
        stop = min(start + _CHUNK, n_paths)
        m = stop - start
        rng = rng_from_key((seed, base_index + chunk_idx))

        counts = rng.poisson(area, size=m)
        w_base = int(counts.max()) if m else 0
        width = w_base + j_max
        base_t = rng.uniform(0.0, T, size=(m, w_base))
        base_th = rng.uniform(0.0, M, size=(m, w_base))
        pad = np.arange(w_base) >= counts[:, None]
        # pads sort past every real atom and can never be accepted
        base_t[pad] = T + 1.0 + np.broadcast_to(np.arange(w_base), (m, w_base))[pad]
        base_th[pad] = np.inf
        order = np.argsort(base_t, axis=1, kind="stable")
        base_t = np.take_along_axis(base_t, order, axis=1)
        base_th = np.take_along_axis(base_th, order, axis=1)

        q = points_per_path
        pts_t = rng.uniform(0.0, T, size=(m, q, j_max))
        pts_th = rng.uniform(0.0, M, size=(m, q, j_max))
        full_t = np.concatenate(
            [np.repeat(base_t[:, None, :], q, axis=1), pts_t], axis=2
        )
        full_th = np.concatenate(
            [np.repeat(base_th[:, None, :], q, axis=1), pts_th], axis=2
        )
        order = np.argsort(full_t, axis=2, kind="stable")
        full_t = np.take_along_axis(full_t, order, axis=2)
        full_th = np.take_along_axis(full_th, order, axis=2)
        point_id = np.where(order >= w_base, order - w_base, -1)

        n_valid = np.broadcast_to((counts + j_max)[:, None], (m, q))
        flat_t = full_t.reshape(m * q, width)
        flat_valid = n_valid.reshape(m * q)
        counts_by_subset = np.empty((n_subsets, m * q))
        for mask in range(n_subsets):
            keep = (point_id < 0) | include[mask][np.clip(point_id, 0, None)]
            marks = np.where(keep, full_th, np.inf).reshape(m * q, width)
            counts_by_subset[mask] = F.eval_packed(flat_t, marks, flat_valid)

        ref_paths[start:stop] = counts_by_subset[0].reshape(m, q)[:, 0]
        for j in range(1, j_max + 1):
            diff = np.zeros(m * q)
            for mask, sign in signed[j - 1]:
                diff += sign * counts_by_subset[mask]
            term_paths[j - 1, start:stop] = scale[j - 1] * diff.reshape(m, q).mean(axis=1)

    terms = tuple(
        MCEstimate.from_samples(term_paths[j], seed=seed) for j in range(j_max)
    )
    cumulative_paths = term_paths.sum(axis=0)
    last = terms[-1]
    budget = abs(last.mean) + 3.0 * (last.se or 0.0)
    return CharacterizationReport(
        terms=terms,
        cumulative=MCEstimate.from_samples(cumulative_paths, seed=seed),
        reference=MCEstimate.from_samples(ref_paths, seed=seed),
        residual=MCEstimate.from_samples(cumulative_paths - ref_paths, seed=seed),
        truncation_budget=float(budget),
    )


def chaotic_coefficient_mc(
    params: HawkesParams,
    j: int,
    points: Sequence[Point],
    n_paths: int,
    rng_key: RngKey,
) -> MCEstimate:
    """Monte Carlo estimate of the compensated-chaos coefficient E[D^j H_T] at
    fixed points: unlike the uncompensated coefficients there is no closed
    form, so each sample needs a fresh simulated configuration."""
    if j != len(points):
        raise ValueError(f"expected {j} points, got {len(points)}")
    pts = sorted(points, key=lambda p: p.t)
    for a, b in zip(pts, pts[1:]):
        if a.t == b.t:
            raise TimeCollisionError(f"duplicate point time {a.t}")
    seed, base_index = rng_key
    F = HawkesCount(params)
    # envelope window so points beyond the horizon or mark ceiling are legal
    # inputs; F itself ignores them, which is the point of the t > T example
    env = Window(
        T=max(params.window.T, max(p.t for p in pts) + 1.0),
        M=max(params.window.M, max(p.theta for p in pts) + 1.0),
    )
    samples = np.empty(n_paths)
    for p in range(n_paths):
        rng = rng_from_key((seed, base_index + p))
        while True:
            omega = sample_poisson(params.window, rng=rng)
            if not ({a.t for a in omega.atoms} & {x.t for x in pts}):
                break
        lifted = Configuration(window=env, atoms=omega.atoms)
        samples[p] = iterated_difference(F, lifted, pts)
    return MCEstimate.from_samples(samples, seed=seed)
