"""Batch experiment driver.

Subcommands:
  run    one filter execution over a simulated scenario
  mc     Monte-Carlo averaging over independent seeds
  sweep  repeat mc over a grid of one scenario parameter

Outputs are comma-delimited text with a header row, plus a long-format
series file (experiment, scan, metric, value) for external plotting.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .distributions import BetaGaussianComponent, BetaParams, GaussianComponent
from .metrics import ospa
from .pmbm import (
    BetaDetection,
    FilterConfig,
    FixedDetection,
    PmbmPosterior,
    PoissonIntensity,
    estimate,
    step,
)
from .sim import (
    ScenarioConfig,
    generate_measurements,
    generate_truth,
    load_scenario,
    ncv_matrices,
    observation_matrices,
)

__all__ = [
    "ScanRecord",
    "RunReport",
    "build_birth",
    "run_filter",
    "run_single",
    "run_monte_carlo",
    "run_sweep",
    "load_filter_config",
    "main",
]

OUTPUT_DIR_ENV = "RPMBM_OUTPUT_DIR"

#: scans used for the aggregate detection-probability estimate
PD_WINDOW = (30, 60)

OSPA_CUTOFF = 100.0
OSPA_ORDER = 1.0


@dataclass(frozen=True)
class ScanRecord:
    scan: int
    ospa: float
    truth_count: int
    estimated_count: int
    expected_cardinality: float
    p_d_estimate: float | None
    wall_time_ms: float


@dataclass(frozen=True)
class RunReport:
    records: tuple[ScanRecord, ...]

    @property
    def mean_ospa(self) -> float:
        return float(np.mean([r.ospa for r in self.records]))

    @property
    def mean_abs_cardinality_error(self) -> float:
        return float(
            np.mean([abs(r.truth_count - r.estimated_count) for r in self.records])
        )

    def mean_p_d(self, window: tuple[int, int] = PD_WINDOW) -> float:
        vals = [
            r.p_d_estimate
            for r in self.records
            if window[0] <= r.scan <= window[1] and r.p_d_estimate is not None
        ]
        return float(np.mean(vals)) if vals else math.nan


def load_filter_config(path) -> FilterConfig:
    data = yaml.safe_load(Path(path).read_text()) or {}
    section = data.get("filter", {}) if isinstance(data, dict) else {}
    known = set(FilterConfig.__dataclass_fields__)
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"unknown filter keys: {sorted(unknown)}")
    return FilterConfig(**section)


def build_birth(cfg: ScenarioConfig, mode: str = "r-pmbm") -> PoissonIntensity:
    beta = BetaParams(*cfg.birth_beta) if mode == "r-pmbm" else None
    comps = tuple(
        BetaGaussianComponent(
            cfg.birth_weight, beta, GaussianComponent(np.asarray(m, float), cfg.birth_cov)
        )
        for m in cfg.birth_means
    )
    return PoissonIntensity(comps)


def run_filter(
    cfg: ScenarioConfig,
    seed: int,
    mode: str = "r-pmbm",
    fcfg: FilterConfig = FilterConfig(),
) -> RunReport:
    """Simulate one scenario realization and filter it scan by scan."""
    if mode not in ("r-pmbm", "fixed-pd"):
        raise ValueError(f"unknown mode {mode!r}")
    truth = generate_truth(cfg, seed)
    scans = generate_measurements(truth, cfg, seed + 10_000_019)
    motion = ncv_matrices(cfg.delta_t, cfg.sigma_v)
    obs = observation_matrices(cfg.sigma_eps)
    birth = build_birth(cfg, mode)
    detection = BetaDetection() if mode == "r-pmbm" else FixedDetection(cfg.p_d_true)
    clutter_density = max(cfg.clutter_density, 1e-300)

    post = PmbmPosterior()
    records = []
    for k in range(1, cfg.duration + 1):
        t0 = time.perf_counter()
        post = step(
            post, scans[k - 1].observations, motion, obs, birth,
            cfg.p_s, clutter_density, fcfg, detection,
        )
        est = estimate(post, fcfg.extract_threshold)
        elapsed = (time.perf_counter() - t0) * 1e3
        truth_pos = [x[:2] for _, x in truth.scans[k - 1]]
        est_pos = [x[:2] for _, x in est.states]
        err = ospa(est_pos, truth_pos, OSPA_CUTOFF, OSPA_ORDER)
        records.append(
            ScanRecord(
                scan=k,
                ospa=err,
                truth_count=len(truth_pos),
                estimated_count=est.cardinality_count,
                expected_cardinality=est.cardinality_expected,
                p_d_estimate=est.p_d_estimate,
                wall_time_ms=elapsed,
            )
        )
    return RunReport(tuple(records))


# ---------------------------------------------------------------------------
# delimited-text output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_records(report: RunReport, path) -> None:
    lines = ["scan,ospa,truth_count,estimated_count,expected_cardinality,"
             "p_d_estimate,wall_time_ms"]
    for r in report.records:
        lines.append(",".join(_fmt(v) for v in dataclasses.astuple(r)))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def read_records(path) -> RunReport:
    lines = Path(path).read_text().strip().splitlines()[1:]
    records = []
    for line in lines:
        scan, o, tc, ec, xc, pd, wt = line.split(",")
        records.append(
            ScanRecord(
                int(scan), float(o), int(tc), int(ec), float(xc),
                float(pd) if pd else None, float(wt),
            )
        )
    return RunReport(tuple(records))


def _write_long_series(rows, path) -> None:
    lines = ["experiment,scan,metric,value"]
    for exp, scan, metric, value in rows:
        lines.append(f"{exp},{scan},{metric},{_fmt(value)}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def average_reports(reports: list[RunReport]) -> RunReport:
    """Pointwise per-scan average; p_d averages skip runs with no estimate."""
    n_scans = len(reports[0].records)
    out = []
    for k in range(n_scans):
        recs = [rep.records[k] for rep in reports]
        pds = [r.p_d_estimate for r in recs if r.p_d_estimate is not None]
        out.append(
            ScanRecord(
                scan=recs[0].scan,
                ospa=float(np.mean([r.ospa for r in recs])),
                truth_count=recs[0].truth_count,
                estimated_count=round(np.mean([r.estimated_count for r in recs])),
                expected_cardinality=float(
                    np.mean([r.expected_cardinality for r in recs])
                ),
                p_d_estimate=float(np.mean(pds)) if pds else None,
                wall_time_ms=float(np.mean([r.wall_time_ms for r in recs])),
            )
        )
    return RunReport(tuple(out))


# ---------------------------------------------------------------------------
# drivers


def run_single(cfg_path, seed: int, mode: str, out_path, fcfg=None) -> RunReport:
    cfg = load_scenario(cfg_path)
    fcfg = fcfg or load_filter_config(cfg_path)
    report = run_filter(cfg, seed, mode, fcfg)
    write_records(report, out_path)
    return report


def _mc_worker(args):
    cfg_dict, seed, mode, fcfg_dict = args
    cfg = ScenarioConfig(**cfg_dict)
    return seed, run_filter(cfg, seed, mode, FilterConfig(**fcfg_dict))


def run_monte_carlo(
    cfg_path,
    n_runs: int,
    base_seed: int,
    out_path,
    mode: str = "r-pmbm",
    threads: int = 1,
    fcfg=None,
    cfg=None,
    experiment: str = "mc",
) -> RunReport:
    """Average n_runs independent seeds pointwise; write the averaged series,
    the per-run aggregate table, and a plot-ready long-format series."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if cfg is None:
        cfg = load_scenario(cfg_path)
    if fcfg is None:
        fcfg = load_filter_config(cfg_path) if cfg_path else FilterConfig()
    seeds = [base_seed + i for i in range(n_runs)]
    if threads > 1:
        cfg_dict = {f: getattr(cfg, f) for f in ScenarioConfig.__dataclass_fields__}
        fcfg_dict = dataclasses.asdict(fcfg)
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(_mc_worker, [(cfg_dict, s, mode, fcfg_dict) for s in seeds])
            )
        results.sort(key=lambda sr: sr[0])
        reports = [rep for _, rep in results]
    else:
        reports = [run_filter(cfg, s, mode, fcfg) for s in seeds]

    averaged = average_reports(reports)
    out_path = Path(out_path)
    write_records(averaged, out_path)

    agg_lines = ["seed,mean_ospa,mean_abs_cardinality_error,mean_p_d"]
    for s, rep in zip(seeds, reports):
        agg_lines.append(
            f"{s},{_fmt(rep.mean_ospa)},{_fmt(rep.mean_abs_cardinality_error)},"
            f"{_fmt(rep.mean_p_d())}"
        )
    out_path.with_suffix(".aggregate.csv").write_text("\n".join(agg_lines) + "\n")

    rows = []
    for r in averaged.records:
        rows.append((experiment, r.scan, "ospa", r.ospa))
        rows.append((experiment, r.scan, "truth_count", r.truth_count))
        rows.append((experiment, r.scan, "estimated_count", r.estimated_count))
        rows.append((experiment, r.scan, "expected_cardinality", r.expected_cardinality))
        if r.p_d_estimate is not None:
            rows.append((experiment, r.scan, "p_d_estimate", r.p_d_estimate))
    _write_long_series(rows, out_path.with_suffix(".series.csv"))
    return averaged


def run_sweep(
    cfg_path,
    param: str,
    values: list[float],
    n_runs: int,
    base_seed: int,
    out_dir,
    mode: str = "r-pmbm",
    threads: int = 1,
) -> list[tuple[float, float]]:
    """Repeat the MC experiment over a parameter grid; returns
    [(value, mean ospa over all scans), ...] and writes a table."""
    if param not in ("sigma_eps", "lambda_c"):
        raise ValueError(f"sweep parameter must be sigma_eps or lambda_c, got {param}")
    base = load_scenario(cfg_path)
    fcfg = load_filter_config(cfg_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = []
    for v in values:
        cfg = dataclasses.replace(base, **{param: v})
        averaged = run_monte_carlo(
            None, n_runs, base_seed, out_dir / f"{param}_{v:g}.csv",
            mode=mode, threads=threads, fcfg=fcfg, cfg=cfg,
            experiment=f"{param}={v:g}",
        )
        table.append((v, averaged.mean_ospa))
    lines = [f"{param},mean_ospa"] + [f"{v:g},{_fmt(o)}" for v, o in table]
    (out_dir / "sweep_table.csv").write_text("\n".join(lines) + "\n")
    return table


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rpmbm", description="multi-object tracking simulation driver"
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="scenario YAML file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--mode", choices=["r-pmbm", "fixed-pd"], default="r-pmbm")
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("run", help="single filter execution")
    common(sp)

    sp = sub.add_parser("mc", help="Monte-Carlo averaged execution")
    common(sp)
    sp.add_argument("--runs", type=int, default=100)

    sp = sub.add_parser("sweep", help="MC experiment over a parameter grid")
    common(sp)
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--sweep-param", required=True, choices=["sigma_eps", "lambda_c"])
    sp.add_argument("--sweep-values", required=True,
                    help="comma-separated grid, e.g. 5,10,15,20,25")
    return p


def _default_out(args, suffix: str) -> Path:
    if args.out:
        return Path(args.out)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"{args.command}_{args.mode}_seed{args.seed}{suffix}"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        load_scenario(args.config)
        load_filter_config(args.config)
    except (OSError, ValueError, TypeError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            out = _default_out(args, ".csv")
            report = run_single(args.config, args.seed, args.mode, out)
            print(f"wrote {out}  mean_ospa={report.mean_ospa:.3f}")
        elif args.command == "mc":
            out = _default_out(args, ".csv")
            report = run_monte_carlo(
                args.config, args.runs, args.seed, out,
                mode=args.mode, threads=args.threads,
            )
            print(f"wrote {out}  mean_ospa={report.mean_ospa:.3f}")
        else:
            values = [float(v) for v in args.sweep_values.split(",")]
            out = _default_out(args, "")
            table = run_sweep(
                args.config, args.sweep_param, values, args.runs,
                args.seed, out, mode=args.mode, threads=args.threads,
            )
            for v, o in table:
                print(f"{args.sweep_param}={v:g}  mean_ospa={o:.3f}")
    except Exception as exc:  # execution failure, config already validated
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
