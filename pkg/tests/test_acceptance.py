"""Full-scale acceptance suite. Each test prints a PASS line with its headline
numbers; run with `pytest -s tests/test_acceptance.py` to see them.

Every tolerance is pinned here: Monte Carlo comparisons use 3 standard errors,
quadrature comparisons use the analytic error budget reported alongside the
value, and integer identities are asserted exactly.
"""
import math

import numpy as np
import pytest

from pseudochaos import (
    Configuration,
    ConstantFunctional,
    ExperimentSpec,
    HawkesCount,
    HawkesParams,
    Kernel,
    MCEstimate,
    Point,
    RectangleCount,
    Window,
    build_ladder,
    chain_length_totals,
    characterization_check,
    coefficient_oracle,
    conditional_residual,
    expected_count_analytic,
    hawkes_coefficient,
    ipp_check_order1,
    iterated_difference,
    jump_size_histogram,
    martingale_residual,
    reconstruction_audit,
    run_experiment,
    sample_poisson,
    solve_path,
)
from pseudochaos.harness import random_distinct_points

EXP = Kernel.exponential(0.5, 1.0)
ZERO = Kernel.zero()
DEFAULT = HawkesParams(mu=1.0, kernel=EXP, window=Window(T=5.0, M=4.0))
CLOSED_FORM_MEAN_T5 = 10.0 - 2.0 * (1.0 - math.exp(-2.5))  # 8.16417...

# pinned on the first verified run of criterion 8 (seed 8000, 10^4 paths);
# the 3-se band around it is a regression fence, not a theory value
FRAC_GE2_REGRESSION = 0.223262


def _report(criterion: str, detail: str) -> None:
    print(f"PASS {criterion}: {detail}")


def test_criterion_1_exact_pathwise_reconstruction():
    params = HawkesParams(mu=1.0, kernel=EXP, window=Window(T=3.0, M=2.0))
    audit = reconstruction_audit(params, 1000, (1000, 0))
    assert audit.n_exact == audit.n_checked
    assert audit.n_checked >= 950
    assert audit.n_checked + audit.n_skipped_budget == 1000
    _report(
        "criterion 1 (exact reconstruction)",
        f"{audit.n_exact}/{audit.n_checked} exact, {audit.n_skipped_budget} over budget",
    )


def test_criterion_2_coefficient_oracle_equivalence():
    F = HawkesCount(DEFAULT)
    rng = np.random.default_rng(2000)
    for i in range(500):
        k = int(rng.integers(1, 7))
        pts = random_distinct_points(rng, DEFAULT.window, k)
        closed = hawkes_coefficient(DEFAULT, pts)
        brute = coefficient_oracle(F, DEFAULT.window, pts)
        assert closed == brute, (i, k, pts)
    _report("criterion 2 (coefficient oracle)", "500/500 queries agree exactly")


def test_criterion_3_hawkes_mean_matches_resolvent():
    ladder = build_ladder(EXP, 0.01, 6.0)
    ana = expected_count_analytic(DEFAULT, ladder)
    assert abs(ana.value - CLOSED_FORM_MEAN_T5) <= ana.error_budget + 1e-9
    spec = ExperimentSpec("hawkes_mean", DEFAULT, 10_000, seed=3000, thinning="exact")
    mc = run_experiment(spec).headline
    assert mc.within(ana.value, slack=ana.error_budget)
    _report(
        "criterion 3 (mean vs resolvent)",
        f"mc {mc.mean:.4f} +- {mc.se:.4f} vs analytic {ana.value:.5f}",
    )


def test_criterion_4_poisson_reductions():
    params = HawkesParams(mu=1.0, kernel=ZERO, window=Window(T=5.0, M=4.0))
    mc = run_experiment(ExperimentSpec("hawkes_mean", params, 10_000, seed=4000)).headline
    assert mc.within(5.0)
    F = HawkesCount(params)
    rng = np.random.default_rng(4001)
    for i in range(100):
        pts = random_distinct_points(rng, params.window, 2)
        base = sample_poisson(params.window, (4002, i))
        assert iterated_difference(F, base, pts) == 0.0
    _report(
        "criterion 4 (flat-kernel reduction)",
        f"mc {mc.mean:.4f} +- {mc.se:.4f} vs 5.0; 100/100 second differences vanish",
    )


def test_criterion_5_characterization_identity():
    window = Window(T=2.0, M=1.0)
    rect = characterization_check(RectangleCount(window), window, 2, 20_000, (5000, 0))
    assert rect.cumulative.within(window.area)
    assert rect.terms[1].mean == 0.0 and rect.terms[1].se == 0.0

    poisson = HawkesParams(mu=1.0, kernel=ZERO, window=Window(T=2.0, M=2.0))
    flat = characterization_check(
        HawkesCount(poisson), poisson.window, 2, 20_000, (5001, 0)
    )
    assert flat.cumulative.within(2.0)
    assert flat.terms[1].mean == 0.0 and flat.terms[1].se == 0.0

    hawkes = HawkesParams(mu=1.0, kernel=EXP, window=Window(T=2.0, M=4.0))
    report = characterization_check(
        HawkesCount(hawkes), hawkes.window, 4, 60_000, (5002, 0), points_per_path=4
    )
    assert report.residual.within(0.0, slack=report.truncation_budget)
    _report(
        "criterion 5 (characterization)",
        f"rect {rect.cumulative.mean:.4f}~{window.area}, flat {flat.cumulative.mean:.4f}~2, "
        f"hawkes residual {report.residual.mean:.4f} +- {report.residual.se:.4f} "
        f"(budget {report.truncation_budget:.4f})",
    )


def test_criterion_6_integration_by_parts():
    window = Window(T=2.0, M=2.0)
    flat = HawkesParams(mu=1.0, kernel=ZERO, window=window)
    excite = HawkesParams(mu=1.0, kernel=EXP, window=window)

    chk_flat = ipp_check_order1(HawkesCount(flat), window, 10_000, (6000, 0))
    assert chk_flat.diff.within(0.0)
    assert chk_flat.lhs.within(2.0) and chk_flat.rhs.within(2.0)

    chk_exp = ipp_check_order1(HawkesCount(excite), window, 10_000, (6001, 0))
    assert chk_exp.diff.within(0.0)

    chk_rect = ipp_check_order1(RectangleCount(window), window, 10_000, (6002, 0))
    assert chk_rect.diff.within(0.0)
    assert chk_rect.lhs.mean == window.area and chk_rect.lhs.se == 0.0

    chk_const = ipp_check_order1(ConstantFunctional(3.0, window), window, 10_000, (6003, 0))
    assert chk_const.lhs.mean == 0.0 and chk_const.lhs.se == 0.0
    assert chk_const.rhs.within(0.0)
    _report(
        "criterion 6 (integration by parts)",
        f"diffs {chk_flat.diff.mean:.4f}, {chk_exp.diff.mean:.4f}, "
        f"{chk_rect.diff.mean:.4f}; constant lhs exactly 0",
    )


def test_criterion_7_branching_martingale():
    report = martingale_residual(DEFAULT, 10_000, (7000, 0))
    assert report.residual.within(0.0)
    assert report.total_mean.within(CLOSED_FORM_MEAN_T5)
    cond = conditional_residual(DEFAULT, 500, 8, (7001, 0))
    assert cond.within(0.0)
    _report(
        "criterion 7 (branching martingale)",
        f"residual {report.residual.mean:.4f} +- {report.residual.se:.4f}, "
        f"mean {report.total_mean.mean:.4f} vs {CLOSED_FORM_MEAN_T5:.5f}, "
        f"conditional {cond.mean:.4f} +- {cond.se:.4f}",
    )


def test_criterion_8_not_a_counting_process():
    hist = jump_size_histogram(DEFAULT, 10_000, (8000, 0))
    assert hist.frac_ge2 > 0.01
    assert abs(hist.frac_ge2 - FRAC_GE2_REGRESSION) <= 3.0 * hist.frac_ge2_se
    # the thinning path only ever jumps by one
    for i in range(200):
        path = solve_path(DEFAULT, sample_poisson(DEFAULT.window, (8001, i)))
        assert path.event_count == len(path.events)
        assert len({p.t for p in path.events}) == path.event_count
    _report(
        "criterion 8 (not a counting process)",
        f"frac(jump >= 2) = {hist.frac_ge2:.4f} +- {hist.frac_ge2_se:.4f} "
        f"(regression {FRAC_GE2_REGRESSION}); thinning jumps all unit",
    )


def test_criterion_9_convolution_ladder():
    ladder = build_ladder(EXP, 0.01, 40.0)
    worst_mass = max(abs(ladder.level_l1(n) - 0.5**n) for n in range(1, 11))
    assert worst_mass < 1e-4
    ts = np.linspace(0.0, 10.0, 201)
    worst_point = float(np.max(np.abs(ladder.resolvent_at(ts) - 0.5 * np.exp(-0.5 * ts))))
    assert worst_point < 5e-4
    assert abs(ladder.resolvent_l1() - 1.0) < 1e-2
    quarter = build_ladder(Kernel.exponential(0.25, 1.0), 0.01, 40.0)
    assert abs(quarter.resolvent_l1() - 1.0 / 3.0) < 1e-3
    _report(
        "criterion 9 (convolution ladder)",
        f"mass err {worst_mass:.2e}, pointwise err {worst_point:.2e}, "
        f"resolvent L1 {ladder.resolvent_l1():.4f} and {quarter.resolvent_l1():.4f}",
    )


def test_criterion_10_chain_length_tail():
    p_tail = 8
    bound = DEFAULT.mu * DEFAULT.window.T * 0.5**p_tail / (1 - 0.5)
    masses = np.empty(10_000)
    for i in range(len(masses)):
        totals = chain_length_totals(DEFAULT, sample_poisson(DEFAULT.window, (10_000, i)))
        masses[i] = totals[p_tail:].sum()
    est = MCEstimate.from_samples(masses)
    assert est.mean <= bound + 3.0 * est.se
    _report(
        "criterion 10 (chain-length tail)",
        f"mass beyond {p_tail}: {est.mean:.5f} +- {est.se:.5f} vs bound {bound:.5f}",
    )
