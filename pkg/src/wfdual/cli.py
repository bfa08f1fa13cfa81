"""Command-line entry point.

Subcommands: spde, dual, duality, moments, diagnose, coeffs.
Exit codes: 0 pass, 1 statistical failure, 2 config error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import diagnostics as diag
from .config import ConfigError, ExperimentConfig
from .drift import DriftSpec, binomial_coeffs, check_condition, validate
from .duality import estimate_indicator, verify_duality
from .output import trajectory_rows, write_csv, write_json
from .particles import (coupled_filter_identity, format_label,
                        run_coupled_truncations, run_system)
from .replicas import resolve_threads
from .spde import simulate_field


def _load_config(path: str) -> ExperimentConfig:
    return ExperimentConfig.from_toml(path)


def cmd_coeffs(args) -> int:
    if args.binomial_q is not None:
        spec = binomial_coeffs(args.binomial_q, args.k)
    elif args.config:
        spec = _load_config(args.config).drift_spec()
    else:
        print("coeffs: need --binomial-q or --config", file=sys.stderr)
        return 2
    report = validate(spec)
    print(f"coeffs: {spec.coeffs}")
    print(f"b_inf:  {spec.b_inf}")
    if spec.tail_mass:
        print(f"tail mass beyond truncation: {spec.tail_mass:.6g}")
    print(f"mu:     {spec.mu}")
    ks, ps = spec.offspring
    print("offspring: " + ", ".join(
        f"p[{'inf' if k == float('inf') else int(k)}]={p:.6g}"
        for k, p in zip(ks, ps)))
    print(f"validation: {'pass' if report.passed else 'FAIL'}"
          + (" (linear_only)" if report.linear_only else ""))
    for msg in report.messages:
        print("  note: " + msg)
    for r in args.scan_r:
        ok = check_condition(spec, r)
        print(f"condition at R={r:g}: {'pass' if ok else 'fail'}")
    return 0 if report.passed else 1


def cmd_spde(args) -> int:
    cfg = _load_config(args.config)
    h = cfg.config_hash()
    state, snaps = simulate_field(cfg.initial_condition(), cfg.drift_spec(),
                                  cfg.domain(), cfg.T, cfg.dt_field, cfg.seed,
                                  snapshot_times=cfg.snapshot_times or [cfg.T])
    rows = []
    for t, values in snaps:
        for x, u in zip(state.grid, values):
            rows.append((t, float(x), float(u)))
    out = os.path.join(cfg.output_dir, "field_snapshots.csv")
    write_csv(out, ["t", "x", "u"], rows, h)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def cmd_dual(args) -> int:
    cfg = _load_config(args.config)
    h = cfg.config_hash()
    spec = cfg.drift_spec()
    sample_times = cfg.sample_times or list(np.linspace(0, cfg.T, 11)[1:])
    coupled = args.coupled_m or cfg.coupled_m
    if coupled:
        m_list = ([int(v) for v in args.coupled_m.split(",")]
                  if isinstance(coupled, str) else [int(v) for v in coupled])
        summaries = run_coupled_truncations(cfg.points, spec, cfg.T,
                                            cfg.dt_particles, cfg.seed, m_list,
                                            l=cfg.l, k_mode=cfg.k_mode,
                                            sample_times=sample_times,
                                            hard_cap=cfg.hard_cap)
        for m, summ in zip(m_list, summaries):
            out = os.path.join(cfg.output_dir, f"population_m{m}.csv")
            write_csv(out, ["t", "|I|", "n_branch", "n_branch_neg", "K"],
                      trajectory_rows(summ.samples), h)
            print(f"wrote {out}")
        identity = coupled_filter_identity(summaries, m_list)
        print(f"norm-filter set identity across truncations: "
              f"{'holds' if identity else 'VIOLATED'}")
        return 0 if identity else 1
    summ = run_system(cfg.points, spec, cfg.T, cfg.dt_particles, cfg.seed,
                      l=cfg.l, m=cfg.m, k_mode=cfg.k_mode,
                      sample_times=sample_times, hard_cap=cfg.hard_cap)
    out = os.path.join(cfg.output_dir, "population.csv")
    write_csv(out, ["t", "|I|", "n_branch", "n_branch_neg", "K"],
              trajectory_rows(summ.samples), h)
    terminal = {"positions": summ.positions,
                "labels": [format_label(a) for a in summ.labels],
                "n_alive": summ.n_alive, "n_branch": summ.n_branch,
                "n_branch_neg": summ.n_branch_neg, "K": summ.K,
                "aborted": summ.aborted}
    write_json(os.path.join(cfg.output_dir, "terminal.json"), terminal, h)
    print(f"wrote {out}")
    return 0


def cmd_duality(args) -> int:
    cfg = _load_config(args.config)
    h = cfg.config_hash()
    report = verify_duality(cfg.initial_condition(), cfg.drift_spec(),
                            cfg.points, cfg.T, domain=cfg.domain(),
                            dt_field=cfg.dt_field, field_reps=cfg.reps_field,
                            dt_particles=cfg.dt_particles,
                            dual_reps=cfg.reps_dual, seed=cfg.seed, l=cfg.l,
                            m=cfg.m, k_mode=cfg.k_mode,
                            z_threshold=cfg.z_threshold,
                            hard_cap=cfg.hard_cap,
                            threads=resolve_threads(cfg.threads))
    out = os.path.join(cfg.output_dir, "duality.json")
    write_json(out, report.to_dict(), h)
    print(f"lhs {report.lhs.mean:.6f} +- {report.lhs.stderr:.6f}   "
          f"rhs {report.rhs.mean:.6f} +- {report.rhs.stderr:.6f}   "
          f"z = {report.z:.3f} -> {'pass' if report.passed else 'FAIL'}")
    print(f"wrote {out}")
    return 0 if report.passed else 1


def cmd_moments(args) -> int:
    cfg = _load_config(args.config)
    h = cfg.config_hash()
    reps = cfg.reps or cfg.reps_dual
    table = estimate_indicator(cfg.initial_condition(), cfg.drift_spec(),
                               cfg.moment_x, cfg.moment_t, cfg.l_list,
                               cfg.m_list, dt=cfg.dt_particles, reps=reps,
                               seed=cfg.seed, hard_cap=cfg.hard_cap,
                               threads=resolve_threads(cfg.threads),
                               diagonal_only=cfg.diagonal_only)
    rows = [(r["l"], r["m"], r["mean"], r["stderr"], r["reps"])
            for r in table.rows]
    out = os.path.join(cfg.output_dir, "moments_grid.csv")
    write_csv(out, ["l", "m", "mean", "stderr", "reps"], rows, h)
    write_json(os.path.join(cfg.output_dir, "moments_summary.json"),
               table.to_dict(), h)
    print(f"indicator estimate {table.indicator_estimate:.6f} "
          f"(stabilized: {table.stabilized})")
    print(f"wrote {out}")
    return 0 if table.stabilized else 1


def cmd_diagnose(args) -> int:
    cfg = _load_config(args.config)
    h = cfg.config_hash()
    spec = cfg.drift_spec()
    threads = resolve_threads(cfg.threads)
    reps = cfg.reps or 1000
    if reps < diag.MIN_EFFECTIVE_REPS:
        print(f"diagnose: need at least {diag.MIN_EFFECTIVE_REPS} replicas",
              file=sys.stderr)
        return 2
    checks = [args.check] if args.check != "all" else cfg.checks
    all_pass = True
    for check in checks:
        if check == "branching":
            rep = diag.check_branching_identity(
                spec, cfg.points or [0.0, 0.0], cfg.T, dt=cfg.dt_particles,
                reps=reps, seed=cfg.seed, l=cfg.l, m=cfg.m,
                hard_cap=cfg.hard_cap, threads=threads,
                z_threshold=cfg.z_threshold)
            rows = [(rep.lhsE, rep.rhsE, rep.z, rep.reps)]
            write_csv(os.path.join(cfg.output_dir, "diagnostic_branching.csv"),
                      ["lhsE", "rhsE", "z", "reps"], rows, h)
            passed = rep.passed
        elif check == "supermartingale":
            rep = diag.check_supermartingale(
                spec, cfg.R, cfg.points or [0.0, 0.0], cfg.times,
                dt=cfg.dt_particles, reps=reps, seed=cfg.seed,
                hard_cap=cfg.hard_cap, threads=threads)
            rows = [(t, e.mean, e.stderr, e.reps)
                    for t, e in zip(rep.times, rep.estimates)]
            write_csv(os.path.join(cfg.output_dir,
                                   "diagnostic_supermartingale.csv"),
                      ["t", "mean", "stderr", "reps"], rows, h)
            passed = rep.passed
        elif check == "comingdown":
            rep = diag.check_coming_down(
                cfg.mu, cfg.l_list, cfg.moment_x, cfg.t_list,
                dt=cfg.dt_particles, reps=reps, seed=cfg.seed,
                hard_cap=cfg.hard_cap, threads=threads)
            rows = [(r["l"], r["t"], r["mean"], r["stderr"], r["reps"])
                    for r in rep.rows()]
            write_csv(os.path.join(cfg.output_dir, "diagnostic_comingdown.csv"),
                      ["l", "t", "mean", "stderr", "reps"], rows, h)
            passed = rep.passed
        elif check == "reflection":
            rep = diag.check_reflection(
                spec, cfg.m_list, cfg.delta, reps=reps, seed=cfg.seed,
                dt=cfg.dt_particles, positions=cfg.points or [0.0],
                horizon=cfg.horizon, hard_cap=cfg.hard_cap, threads=threads)
            rows = [(r["m"], r["mean"], r["stderr"], r["reps"], r["excluded"])
                    for r in rep.rows()]
            write_csv(os.path.join(cfg.output_dir, "diagnostic_reflection.csv"),
                      ["m", "mean", "stderr", "reps", "excluded"], rows, h)
            passed = rep.stabilized
        else:
            print(f"unknown check {check!r}", file=sys.stderr)
            return 2
        write_json(os.path.join(cfg.output_dir, f"diagnostic_{check}.json"),
                   {"check": check, "pass": passed, "details": rep.to_dict()},
                   h)
        print(f"{check}: {'pass' if passed else 'FAIL'}")
        all_pass = all_pass and passed
    return 0 if all_pass else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wfdual",
                                description="Wright-Fisher SPDE / "
                                            "branching-coalescing dual lab")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", help="validate a drift spec, scan condition")
    c.add_argument("--binomial-q", type=float, default=None)
    c.add_argument("--k", type=int, default=8)
    c.add_argument("--config", default=None)
    c.add_argument("--scan-r", type=lambda s: [float(v) for v in s.split(",")],
                   default=[])
    c.set_defaults(fn=cmd_coeffs)

    for name, fn in (("spde", cmd_spde), ("duality", cmd_duality),
                     ("moments", cmd_moments)):
        q = sub.add_parser(name)
        q.add_argument("--config", required=True)
        q.set_defaults(fn=fn)

    d = sub.add_parser("dual")
    d.add_argument("--config", required=True)
    d.add_argument("--coupled-m", default=None)
    d.set_defaults(fn=cmd_dual)

    g = sub.add_parser("diagnose")
    g.add_argument("--config", required=True)
    g.add_argument("--check", default="all",
                   choices=["all", "branching", "supermartingale",
                            "comingdown", "reflection"])
    g.set_defaults(fn=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
