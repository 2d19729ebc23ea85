import math

import numpy as np
import pytest

from pseudochaos import (
    ExperimentSpec,
    HawkesParams,
    Kernel,
    Window,
    build_ladder,
    expected_count_analytic,
    reconstruction_audit,
    run_experiment,
)

CLOSED_FORM_T5 = 10.0 - 2.0 * (1.0 - math.exp(-2.5))  # resolvent double integral


def test_analytic_mean_zero_kernel(zero_kernel):
    params = HawkesParams(mu=1.0, kernel=zero_kernel, window=Window(T=5.0, M=4.0))
    ladder = build_ladder(zero_kernel, 0.01, 6.0)
    ana = expected_count_analytic(params, ladder)
    assert ana.value == 5.0
    assert ana.error_budget == 0.0


def test_analytic_mean_matches_closed_form(params_default, exp_kernel):
    ladder = build_ladder(exp_kernel, 0.01, 6.0)
    ana = expected_count_analytic(params_default, ladder)
    assert abs(ana.value - CLOSED_FORM_T5) <= ana.error_budget + 1e-9
    assert ana.error_budget < 1e-3


def test_analytic_mean_is_linear_in_mu(exp_kernel):
    ladder = build_ladder(exp_kernel, 0.01, 6.0)
    one = expected_count_analytic(
        HawkesParams(mu=1.0, kernel=exp_kernel, window=Window(T=5.0, M=4.0)), ladder
    )
    two = expected_count_analytic(
        HawkesParams(mu=2.0, kernel=exp_kernel, window=Window(T=5.0, M=4.0)), ladder
    )
    assert two.value == pytest.approx(2.0 * one.value, rel=1e-12)


def test_analytic_mean_requires_covering_horizon(params_default, exp_kernel):
    ladder = build_ladder(exp_kernel, 0.01, 3.0)
    with pytest.raises(ValueError, match="horizon"):
        expected_count_analytic(params_default, ladder)


def test_run_experiment_is_deterministic(tmp_path, params_default):
    spec = ExperimentSpec("hawkes_mean", params_default, 300, seed=5)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    res_a = run_experiment(spec, out_dir=out_a)
    res_b = run_experiment(spec, out_dir=out_b)
    assert res_a.headline == res_b.headline
    for name in ("results.csv", "paths.csv", "run.jsonl"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_run_experiment_parallel_matches_serial(tmp_path, params_default):
    spec = ExperimentSpec("hawkes_mean", params_default, 600, seed=6)
    serial = run_experiment(spec, out_dir=tmp_path / "serial", n_jobs=1)
    parallel = run_experiment(spec, out_dir=tmp_path / "parallel", n_jobs=2)
    assert serial.headline == parallel.headline
    assert (tmp_path / "serial" / "paths.csv").read_bytes() == (
        tmp_path / "parallel" / "paths.csv"
    ).read_bytes()


def test_single_path_has_no_standard_error(params_default):
    spec = ExperimentSpec("hawkes_mean", params_default, 1, seed=7)
    assert run_experiment(spec).headline.se is None


def test_se_halves_when_paths_quadruple(params_default):
    small = run_experiment(ExperimentSpec("hawkes_mean", params_default, 400, seed=8))
    large = run_experiment(ExperimentSpec("hawkes_mean", params_default, 1600, seed=9))
    ratio = large.headline.se / small.headline.se
    assert 0.3 <= ratio <= 0.7


def test_reconstruction_audit_small_window(params_small):
    audit = reconstruction_audit(params_small, 150, (21, 0))
    assert audit.n_checked == 150
    assert audit.n_exact == 150
    assert audit.n_skipped_budget == 0


def test_reconstruction_audit_zero_kernel_all_exact(zero_kernel):
    # flat kernel: the expansion carries order-one terms only
    params = HawkesParams(mu=1.0, kernel=zero_kernel, window=Window(T=3.0, M=2.0))
    audit = reconstruction_audit(params, 100, (23, 0))
    assert audit.n_exact == audit.n_checked == 100


def test_reconstruction_audit_skips_over_budget(exp_kernel):
    params = HawkesParams(mu=1.0, kernel=exp_kernel, window=Window(T=3.0, M=4.0))
    audit = reconstruction_audit(params, 60, (22, 0), budget=6)
    assert audit.n_skipped_budget > 0
    assert audit.n_exact == audit.n_checked
    assert audit.n_checked + audit.n_skipped_budget == 60


def test_run_experiment_reconstruction_statistic(params_small):
    spec = ExperimentSpec("reconstruction", params_small, 80, seed=10)
    res = run_experiment(spec)
    audit = res.extra["audit"]
    assert audit.n_exact == audit.n_checked == 80
    assert res.headline.mean == 1.0


def test_run_experiment_branching_statistics(tmp_path, params_default):
    spec = ExperimentSpec("histogram", params_default, 250, seed=11)
    res = run_experiment(spec, out_dir=tmp_path)
    assert 0.0 < res.extra["frac_jumps_ge2"] < 1.0
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "residual_mean,residual_se,frac_jumps_ge2"
    jumps = (tmp_path / "jumps.csv").read_text().splitlines()
    assert jumps[0] == "path_id,t,jump_size"
    assert len(jumps) > 1


def test_run_experiment_characterization_statistic(params_small):
    spec = ExperimentSpec("characterization", params_small, 400, seed=12, j_max=2)
    res = run_experiment(spec)
    report = res.extra["report"]
    assert report.j_max == 2
    assert res.headline == report.residual


def test_run_experiment_ipp_statistic(params_small):
    spec = ExperimentSpec("ipp", params_small, 400, seed=13)
    res = run_experiment(spec)
    assert res.extra["check"].diff == res.headline


def test_spec_validation(params_small):
    with pytest.raises(ValueError, match="statistic"):
        ExperimentSpec("nonsense", params_small, 10, seed=0)
    with pytest.raises(ValueError, match="n_paths"):
        ExperimentSpec("hawkes_mean", params_small, 0, seed=0)
