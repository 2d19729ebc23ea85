"""Chain-counting process: a nondecreasing integer-valued process that carries
the self-exciting intensity of a Hawkes process without being a counting
process.

A chain is a time-ordered tuple of atoms whose first mark sits below the
baseline and whose every later mark sits below the kernel evaluated at the gap
to its predecessor. Each atom contributes a jump equal to the number of chains
ending at it, so jumps of size two and more occur; atoms whose mark exceeds
both the baseline and the kernel sup are ignored entirely.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .configurations import Configuration, Window, sample_poisson
from .hawkes import HawkesParams
from .mc import MCEstimate, RngKey, rng_from_key


def _require_uncensored_window(params: HawkesParams) -> None:
    needed = max(params.mu, params.kernel.sup_norm)
    if params.window.M < needed:
        raise ValueError(
            f"mark ceiling M={params.window.M} must be >= max(mu, kernel sup) = "
            f"{needed}, otherwise admissible chain links are censored"
        )


def chain_counts(params: HawkesParams, source: Configuration) -> np.ndarray:
    """Number of chains (of any length) ending at each atom.

    Dynamic program in time order: an atom starts a chain when its mark is at
    most the baseline, and extends every chain ending at a strictly earlier
    atom whose gap the kernel still covers.
    """
    _require_uncensored_window(params)
    times, marks = source.times, source.marks
    mu, kernel = params.mu, params.kernel
    n = len(times)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = np.int64(marks[i] <= mu)
        if i:
            links = marks[i] <= kernel(times[i] - times[:i])
            c += (links * counts[:i]).sum()
        counts[i] = c
    return counts


def chain_length_totals(params: HawkesParams, source: Configuration) -> np.ndarray:
    """Totals of chains by exact length up to the longest realized chain;
    partitions chain_counts."""
    _require_uncensored_window(params)
    times, marks = source.times, source.marks
    n = len(times)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    links = np.zeros((n, n), dtype=np.int64)
    for i in range(1, n):
        links[i, :i] = marks[i] <= params.kernel(times[i] - times[:i])
    v = (marks <= params.mu).astype(np.int64)
    totals = [v.sum()]
    for _ in range(1, n):
        v = links @ v
        if not v.any():
            break
        totals.append(v.sum())
    while totals and totals[-1] == 0:
        totals.pop()
    return np.array(totals, dtype=np.int64)


@dataclass(frozen=True)
class BranchingPath:
    params: HawkesParams
    source: Configuration
    counts: tuple[int, ...]   # chains ending at each atom; the jump size there

    @cached_property
    def jump_times(self) -> np.ndarray:
        return self.source.times[np.asarray(self.counts) > 0]

    @cached_property
    def jump_sizes(self) -> np.ndarray:
        c = np.asarray(self.counts)
        return c[c > 0]

    @property
    def total(self) -> int:
        """Value at the horizon."""
        return int(sum(self.counts))

    def value(self, t: float) -> int:
        c = np.asarray(self.counts)
        return int(c[self.source.times <= t].sum())

    def intensity(self, t: float) -> float:
        """mu plus the kernel-weighted chain counts of atoms strictly before t."""
        before = self.source.times < t
        lam = self.params.mu
        if before.any():
            vals = self.params.kernel(t - self.source.times[before])
            lam += float((vals * np.asarray(self.counts)[before]).sum())
        return lam

    @cached_property
    def compensator(self) -> float:
        """Exact integral of the intensity over [0, T] via kernel primitives."""
        T, mu = self.params.window.T, self.params.mu
        tail = self.params.kernel.partial_integral(T - self.source.times)
        return mu * T + float((np.asarray(self.counts) * tail).sum())

    @property
    def residual(self) -> float:
        return self.total - self.compensator

    @cached_property
    def jump_histogram(self) -> Counter:
        return Counter(int(s) for s in self.jump_sizes)


def branching_path(params: HawkesParams, source: Configuration) -> BranchingPath:
    counts = chain_counts(params, source)
    return BranchingPath(params=params, source=source, counts=tuple(int(c) for c in counts))


@dataclass(frozen=True)
class ResidualReport:
    residual: MCEstimate       # E[X_T - integral of intensity]; martingale says 0
    total_mean: MCEstimate     # E[X_T]; shares the Hawkes mean
    compensator_mean: MCEstimate


def martingale_residual(params: HawkesParams, n_paths: int, rng_key: RngKey) -> ResidualReport:
    _require_uncensored_window(params)
    seed, base_index = rng_key
    totals = np.empty(n_paths)
    comps = np.empty(n_paths)
    for p in range(n_paths):
        path = branching_path(params, sample_poisson(params.window, (seed, base_index + p)))
        totals[p] = path.total
        comps[p] = path.compensator
    return ResidualReport(
        residual=MCEstimate.from_samples(totals - comps, seed=seed),
        total_mean=MCEstimate.from_samples(totals, seed=seed),
        compensator_mean=MCEstimate.from_samples(comps, seed=seed),
    )


def conditional_residual(
    params: HawkesParams,
    n_prefixes: int,
    n_continuations: int,
    rng_key: RngKey,
    split: float = 0.5,
) -> MCEstimate:
    """One-step conditional martingale check: freeze the configuration up to
    split*T, resample the future, and average the forward residual
    X_T - X_s - integral_s^T of the intensity. Estimates are per-prefix means,
    so the standard error is taken over independent prefixes."""
    _require_uncensored_window(params)
    if not 0.0 < split < 1.0:
        raise ValueError(f"split must be in (0, 1), got {split}")
    seed, base_index = rng_key
    T, M = params.window.T, params.window.M
    s = split * T
    kernel, mu = params.kernel, params.mu
    prefix_means = np.empty(n_prefixes)
    for p in range(n_prefixes):
        rng = rng_from_key((seed, base_index + p))
        prefix = sample_poisson(Window(T=s, M=M), rng=rng)
        vals = np.empty(n_continuations)
        for c in range(n_continuations):
            future = sample_poisson(Window(T=T - s, M=M), rng=rng)
            atoms = prefix.atoms + tuple(
                type(a)(a.t + s, a.theta) for a in future.atoms
            )
            merged = Configuration(window=Window(T=T, M=M), atoms=atoms)
            counts = chain_counts(params, merged)
            after = merged.times > s
            forward_jump = counts[after].sum()
            lower = np.maximum(s - merged.times, 0.0)
            forward_comp = mu * (T - s) + float(
                (counts * (kernel.partial_integral(T - merged.times)
                           - kernel.partial_integral(lower))).sum()
            )
            vals[c] = forward_jump - forward_comp
        prefix_means[p] = vals.mean()
    return MCEstimate.from_samples(prefix_means, seed=seed)


@dataclass(frozen=True)
class JumpHistogram:
    counts: dict[int, int]      # pooled jump sizes across paths
    n_paths: int
    n_jumps: int
    frac_ge2: float             # fraction of jumps of size >= 2
    frac_ge2_se: float          # cluster (per-path) delta-method standard error
    ignored_fraction: float     # atoms with mark above max(mu, kernel sup)

    def frequency(self, size: int) -> float:
        return self.counts.get(size, 0) / self.n_jumps if self.n_jumps else 0.0


def jump_size_histogram(params: HawkesParams, n_paths: int, rng_key: RngKey) -> JumpHistogram:
    _require_uncensored_window(params)
    seed, base_index = rng_key
    threshold = max(params.mu, params.kernel.sup_norm)
    pooled: Counter = Counter()
    big = np.empty(n_paths)
    tot = np.empty(n_paths)
    n_atoms = 0
    n_ignored = 0
    for p in range(n_paths):
        source = sample_poisson(params.window, (seed, base_index + p))
        path = branching_path(params, source)
        pooled.update(path.jump_histogram)
        sizes = path.jump_sizes
        big[p] = (sizes >= 2).sum()
        tot[p] = len(sizes)
        n_atoms += len(source)
        n_ignored += int((source.marks > threshold).sum())
    n_jumps = int(tot.sum())
    frac = float(big.sum() / n_jumps) if n_jumps else 0.0
    if n_paths > 1 and n_jumps:
        resid = big - frac * tot
        se = float(np.std(resid, ddof=1) / np.sqrt(n_paths) / tot.mean())
    else:
        se = 0.0
    return JumpHistogram(
        counts=dict(sorted(pooled.items())),
        n_paths=n_paths,
        n_jumps=n_jumps,
        frac_ge2=frac,
        frac_ge2_se=se,
        ignored_fraction=(n_ignored / n_atoms) if n_atoms else 0.0,
    )
