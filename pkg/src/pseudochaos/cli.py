"""Command-line front end: flat key=value configs, subcommand dispatch, CSV output.

Exit codes: 0 success, 1 failed check or I/O error, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import expansion, harness
from .configurations import Point, Window, read_csv, sample_poisson
from .hawkes import HawkesCount, HawkesParams
from .kernels import Kernel, StabilityError, build_ladder
from .malliavin import ConstantFunctional, RectangleCount, ipp_check_order1


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mu: float = 1.0
    T: float = 5.0
    M: float = 4.0
    kernel: str = "exp"          # exp | table | zero
    alpha: float = 0.5
    beta: float = 1.0
    table: str = ""              # CSV path for table kernels
    seed: int = 7
    n_paths: int = 10_000
    h: float = 0.01              # quadrature grid step
    n_max: int = 40              # convolution ladder depth
    j_max: int = 4               # characterization orders
    points_per_path: int = 1
    thinning: str = "capped"     # capped | exact
    budget: int = 22
    split: float = 0.5


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_PARSERS = {"float": float, "int": int, "str": str}
_REQUIRED = ("mu", "T", "M", "kernel")


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines with # comments into a validated RunConfig."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[_FIELD_TYPES[key]](val)
        except ValueError:
            raise ConfigError(f"line {lineno}: malformed {_FIELD_TYPES[key]} for {key!r}: {val!r}")
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing key {key!r}")
    if values["kernel"] == "exp":
        for key in ("alpha", "beta"):
            if key not in values:
                raise ConfigError(f"missing key {key!r} (required for kernel = exp)")
    elif values["kernel"] == "table":
        if not values.get("table"):
            raise ConfigError("missing key 'table' (required for kernel = table)")
    elif values["kernel"] != "zero":
        raise ConfigError(f"unknown kernel {values['kernel']!r}; pick exp, table or zero")
    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.mu <= 0.0:
        raise ConfigError(f"mu must be > 0, got {cfg.mu}")
    kernel = build_kernel(cfg)
    if kernel.l1_norm >= 1.0:
        raise StabilityError(
            f"kernel L1 mass {kernel.l1_norm:.6g} >= 1 "
            f"(kernel={cfg.kernel}, alpha={cfg.alpha}, beta={cfg.beta})"
        )
    if cfg.thinning not in ("capped", "exact"):
        raise ConfigError(f"thinning must be 'capped' or 'exact', got {cfg.thinning!r}")
    try:
        build_params(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        # repr would quote strings in a way the parser keeps literally
        lines.append(f"{f.name} = {value}" if isinstance(value, str) else f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"


def build_kernel(cfg: RunConfig) -> Kernel:
    if cfg.kernel == "exp":
        return Kernel.exponential(cfg.alpha, cfg.beta)
    if cfg.kernel == "zero":
        return Kernel.zero()
    return Kernel.from_csv(cfg.table)


def build_params(cfg: RunConfig) -> HawkesParams:
    return HawkesParams(mu=cfg.mu, kernel=build_kernel(cfg), window=Window(T=cfg.T, M=cfg.M))


def _load_config(ns) -> RunConfig:
    if ns.config:
        cfg = parse_config(Path(ns.config).read_text())
    else:
        cfg = RunConfig()
        validate_config(cfg)
    if ns.seed is not None:
        cfg.seed = ns.seed
    if ns.paths is not None:
        cfg.n_paths = ns.paths
    return cfg


def _emit(rows, header, out_dir, name):
    if out_dir is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / name, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path / name}")


def _parse_points(text: str) -> list[Point]:
    points = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            t, theta = chunk.split(":")
            points.append(Point(float(t), float(theta)))
        except ValueError as exc:
            raise ConfigError(f"bad point {chunk!r}, expected t:theta") from exc
    if not points:
        raise ConfigError("no points given")
    return points


def cmd_simulate(cfg: RunConfig, ns) -> int:
    spec = harness.ExperimentSpec(
        "hawkes_mean", build_params(cfg), cfg.n_paths, cfg.seed, thinning=cfg.thinning
    )
    res = harness.run_experiment(spec, out_dir=ns.out)
    h = res.headline
    print(f"event count over {h.n} paths ({cfg.thinning}): {h.mean:.5f} +- {h.se:.5f}")
    print(f"overflow fraction: {res.extra['overflow_fraction']:.5f}")
    return 0


def cmd_expect(cfg: RunConfig, ns) -> int:
    params = build_params(cfg)
    ladder = build_ladder(build_kernel(cfg), cfg.h, cfg.T, cfg.n_max)
    ana = harness.expected_count_analytic(params, ladder)
    spec = harness.ExperimentSpec("hawkes_mean", params, cfg.n_paths, cfg.seed, thinning="exact")
    mc = harness.run_experiment(spec, out_dir=ns.out).headline
    ok = mc.within(ana.value, slack=ana.error_budget)
    print(f"analytic mean: {ana.value:.5f} (error budget {ana.error_budget:.2g})")
    print(f"mc mean ({mc.n} paths, exact thinning): {mc.mean:.5f} +- {mc.se:.5f}")
    print("agreement within 3 se + budget:", "yes" if ok else "NO")
    return 0 if ok else 1


def cmd_coeff(cfg: RunConfig, ns) -> int:
    params = build_params(cfg)
    queries = []
    if ns.points:
        queries.append(_parse_points(ns.points))
    if ns.random:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(ns.random):
            k = int(rng.integers(1, ns.k_max + 1))
            queries.append(harness.random_distinct_points(rng, params.window, k))
    if not queries:
        raise ConfigError("coeff needs --points or --random N")
    k_top = max(len(q) for q in queries)
    header = ["k"] + [f"{name}_{i}" for i in range(1, k_top + 1) for name in ("t", "theta")]
    header.append("c_k")
    rows = []
    for q in queries:
        flat = []
        for p in sorted(q, key=lambda p: p.t):
            flat += [p.t, p.theta]
        flat += [""] * (2 * k_top - len(flat))
        rows.append([len(q)] + flat + [expansion.hawkes_coefficient(params, q)])
    _emit(rows, header, ns.out, "coefficients.csv")
    return 0


def cmd_reconstruct(cfg: RunConfig, ns) -> int:
    params = build_params(cfg)
    if ns.atoms:
        source = read_csv(ns.atoms, params.window)
        provenance = ns.atoms
    else:
        source = sample_poisson(params.window, (cfg.seed, 0))
        provenance = f"rng_key={cfg.seed},0"
    report = expansion.reconstruct(params, source, budget=cfg.budget)
    rows = [[k + 1, v] for k, v in enumerate(report.per_size)]
    rows.append(["source", provenance])
    rows.append(["total", report.total])
    rows.append(["event_count", report.event_count])
    rows.append(["exact_match", report.exact_match])
    _emit(rows, ["k", "coefficient_sum"], ns.out, "reconstruction.csv")
    return 0 if report.exact_match else 1


def cmd_branching(cfg: RunConfig, ns) -> int:
    spec = harness.ExperimentSpec("histogram", build_params(cfg), cfg.n_paths, cfg.seed)
    res = harness.run_experiment(spec, out_dir=ns.out)
    total = res.extra["total_mean"]
    print(f"mean value at horizon: {total.mean:.5f} +- {total.se:.5f}")
    print(f"fraction of jumps >= 2: {res.extra['frac_jumps_ge2']:.5f}")
    return 0


def cmd_characterize(cfg: RunConfig, ns) -> int:
    params = build_params(cfg)
    report = expansion.characterization_check(
        HawkesCount(params), params.window, cfg.j_max, cfg.n_paths,
        (cfg.seed, 0), points_per_path=cfg.points_per_path,
    )
    rows = [[j + 1, t.mean, t.se] for j, t in enumerate(report.terms)]
    _emit(rows, ["order", "term_mean", "term_se"], ns.out, "characterization.csv")
    print(f"cumulative: {report.cumulative.mean:.5f} +- {report.cumulative.se:.5f}")
    print(f"reference E[F]: {report.reference.mean:.5f} +- {report.reference.se:.5f}")
    print(f"residual: {report.residual.mean:.5f} +- {report.residual.se:.5f} "
          f"(truncation budget {report.truncation_budget:.5f})")
    ok = report.residual.within(0.0, slack=report.truncation_budget)
    print("identity holds within 3 se + budget:", "yes" if ok else "NO")
    return 0 if ok else 1


def cmd_ipp(cfg: RunConfig, ns) -> int:
    params = build_params(cfg)
    window = params.window
    cases = [
        ("hawkes_count", HawkesCount(params)),
        ("window_count", RectangleCount(window)),
        ("constant", ConstantFunctional(3.0, window)),
    ]
    ok = True
    for name, F in cases:
        check = ipp_check_order1(F, window, cfg.n_paths, (cfg.seed, 0))
        good = check.diff.within(0.0)
        if name == "constant":
            good = good and check.lhs.mean == 0.0
        ok &= good
        print(f"{name}: lhs {check.lhs.mean:.5f} rhs {check.rhs.mean:.5f} "
              f"diff {check.diff.mean:.5f} +- {check.diff.se:.5f} -> {'ok' if good else 'FAIL'}")
    return 0 if ok else 1


def cmd_selfcheck(cfg: RunConfig, ns) -> int:
    results = harness.selfcheck(seed=cfg.seed)
    failed = 0
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        failed += not r.passed
    return 0 if failed == 0 else 1


_COMMANDS = {
    "simulate": cmd_simulate,
    "coeff": cmd_coeff,
    "reconstruct": cmd_reconstruct,
    "expect": cmd_expect,
    "branching": cmd_branching,
    "characterize": cmd_characterize,
    "ipp": cmd_ipp,
    "selfcheck": cmd_selfcheck,
}


def build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pseudochaos",
        description="expansion coefficients, reconstruction audits and Monte Carlo "
                    "checks for self-exciting counting processes",
    )
    ap.add_argument("--config", help="path to a key = value config file")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", help="directory for CSV artifacts")
    ap.add_argument("--paths", type=int, help="override the number of Monte Carlo paths")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        if name == "coeff":
            sp.add_argument("--points", help="comma-separated t:theta pairs")
            sp.add_argument("--random", type=int, default=0, help="emit N random queries")
            sp.add_argument("--k-max", dest="k_max", type=int, default=4)
        if name == "reconstruct":
            sp.add_argument("--atoms", help="CSV of atoms (t,theta) to reconstruct")
    return ap


def main(argv=None) -> int:
    ns = build_argparser().parse_args(argv)
    try:
        cfg = _load_config(ns)
        return _COMMANDS[ns.command](cfg, ns)
    except (ConfigError, StabilityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
