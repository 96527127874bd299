"""Command-line front end.

Subcommands: ``capacity`` (solve one sensor), ``plan`` (emit a stage plan
as JSON), ``simulate`` (Monte Carlo run writing trajectories.csv and
summary.csv), and ``verify`` (exact identity suites plus the MSE bound).

Exit codes: 0 success, 1 verification failure, 2 config/validation error,
3 solver non-convergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .channel import (ConvergenceError, DiscreteChannel,
                      GaussianBooleanChannel, capacity, gaussian_boolean_mi,
                      product_channel)
from .config import ConfigError, RunConfig, load_config
from .policy import (PrecisionModeSet, mse_lower_bound, plan_joint_boolean,
                     resolve_sensor, resolve_suite)
from .sim import (expected_stage_reduction, one_step_identity_error,
                  random_density, random_partition, run_trajectories,
                  aggregate, verify_mse_bound)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def _fmt_vec(v) -> str:
    return "(" + ", ".join(_fmt(x) for x in v) + ")"


def cmd_capacity(cfg: RunConfig, sensor_name: str) -> int:
    sensor = cfg.sensor(sensor_name)
    tol = cfg.tolerances
    if isinstance(sensor, DiscreteChannel):
        result = capacity(sensor, tol=tol.capacity_tol,
                          max_iters=tol.capacity_max_iters)
        report = {"sensor": sensor_name,
                  "optimum": [float(x) for x in result.optimum],
                  "value_bits": result.value,
                  "iterations": result.iterations, "gap": result.gap}
    elif isinstance(sensor, GaussianBooleanChannel):
        value = gaussian_boolean_mi(sensor, 0.5)
        report = {"sensor": sensor_name, "optimum": [0.5, 0.5],
                  "value_bits": value, "iterations": 0, "gap": 0.0}
    else:
        assert isinstance(sensor, PrecisionModeSet)
        resolved = resolve_sensor(sensor, cfg.gamma,
                                  capacity_tol=tol.capacity_tol,
                                  capacity_max_iters=tol.capacity_max_iters)
        report = {"sensor": sensor_name, "chosen_mode": resolved.mode_index,
                  "optimum": [1.0 - resolved.u_star, resolved.u_star],
                  "value_bits": resolved.entropy_gain,
                  "net_gain": resolved.entropy_gain - cfg.gamma * resolved.cost,
                  "iterations": 0, "gap": 0.0}
        print(f"sensor {sensor_name}: chosen mode {resolved.mode_index} "
              f"(net gain {_fmt(report['net_gain'])} bits)")
    print(f"sensor {sensor_name}: u* = {_fmt_vec(report['optimum'])}")
    print(f"sensor {sensor_name}: value = {_fmt(report['value_bits'])} bits "
          f"(iterations {report['iterations']}, gap {_fmt(report['gap'])})")
    print(json.dumps(report))
    return EXIT_OK


def _plan_document(cfg: RunConfig) -> dict:
    prior = cfg.prior
    from .belief import PiecewiseDensity

    p = prior if prior is not None else PiecewiseDensity.uniform()
    plan = plan_joint_boolean(p, cfg.suite(),
                              capacity_tol=cfg.tolerances.capacity_tol,
                              capacity_max_iters=cfg.tolerances.capacity_max_iters)
    m = len(cfg.sensors)
    cells = []
    for label, cell in enumerate(plan.partition.cells):
        cells.append({"label": label,
                      "bits": format(label, f"0{m}b"),
                      "intervals": [[float(_fmt(a)), float(_fmt(b))]
                                    for a, b in cell],
                      "mass": float(_fmt(plan.operating_point[label]))})
    regions = [{"sensor": name,
                "intervals": [[float(_fmt(a)), float(_fmt(b))]
                              for a, b in region]}
               for name, region in zip(cfg.sensor_names, plan.sensor_regions)]
    doc = {"cells": cells, "sensor_regions": regions,
           "per_sensor_u": [float(_fmt(u)) for u in plan.per_sensor_u]}
    if plan.chosen_modes is not None:
        doc["chosen_modes"] = list(plan.chosen_modes)
    return doc


def cmd_plan(cfg: RunConfig, out_dir: str | None) -> int:
    doc = _plan_document(cfg)
    text = json.dumps(doc, indent=2)
    print(text)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "plan.json"), "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out_dir: str, threads: int) -> int:
    exp = cfg.experiment()
    resolved = resolve_suite(exp.suite,
                             capacity_tol=cfg.tolerances.capacity_tol,
                             capacity_max_iters=cfg.tolerances.capacity_max_iters)
    trajectories = run_trajectories(exp, threads=threads)
    agg = aggregate(trajectories)
    h0 = exp.prior_density().entropy()
    phi = resolved.entropy_gain
    gain = resolved.net_gain

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trajectories.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rep", "stage", "entropy_bits", "mean", "sq_error"])
        for rep, traj in enumerate(trajectories):
            for n in range(exp.stages + 1):
                writer.writerow([rep, n, _fmt(traj.entropy[n]),
                                 _fmt(traj.post_mean[n]),
                                 _fmt(traj.sq_error[n])])
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "mean_entropy", "std_entropy", "mse",
                         "mse_bound", "predicted_value"])
        for n in agg.stages:
            writer.writerow([int(n), _fmt(agg.mean_entropy[n]),
                             _fmt(agg.std_entropy[n]), _fmt(agg.mse[n]),
                             _fmt(mse_lower_bound(h0, int(n), phi)),
                             _fmt(h0 - int(n) * gain)])

    print(f"schedule: {exp.schedule}")
    print(f"replications: {exp.replications}, stages: {exp.stages}")
    print(f"fitted slope: {_fmt(agg.slope)} bits/stage")
    print(f"predicted slope: {_fmt(-gain)} bits/stage")
    print(f"wrote {os.path.join(out_dir, 'trajectories.csv')} and "
          f"{os.path.join(out_dir, 'summary.csv')}")
    return EXIT_OK


def _verify_checks(cfg: RunConfig, threads: int):
    """Yield (name, tolerance, observed, passed, note) for each check."""
    suite = cfg.suite()
    resolved = resolve_suite(suite)
    discrete = [s for s in cfg.sensors if isinstance(s, DiscreteChannel)]
    all_discrete = all(not s.is_gaussian for s in resolved.sensors)

    rng = np.random.default_rng(cfg.seed)
    if all_discrete:
        channels = [s.channel for s in resolved.sensors]
        worst = 0.0
        for _ in range(40):
            ch = channels[int(rng.integers(len(channels)))]
            p = random_density(rng)
            part = random_partition(rng, ch.num_inputs)
            worst = max(worst, one_step_identity_error(p, part, ch))
        yield ("one-step entropy identity", 1e-10, worst, worst <= 1e-10, "")

        caps = [capacity(ch, tol=1e-12) for ch in channels]
        mixed = capacity(product_channel(channels), tol=1e-12)
        err = abs(mixed.value - sum(c.value for c in caps))
        yield ("joint capacity factorization", 1e-6, err, err <= 1e-6, "")

        from .belief import PiecewiseDensity

        diffs = []
        for p in (PiecewiseDensity.uniform(), random_density(rng)):
            joint = expected_stage_reduction(p, suite, "joint")
            seq = expected_stage_reduction(p, suite, "sequential")
            diffs.append(abs(joint - seq))
        err = max(diffs)
        yield ("sequential equals joint gain", 1e-9, err, err <= 1e-9, "")
    else:
        note = "skipped: suite has continuous-output sensors"
        yield ("one-step entropy identity", 1e-10, 0.0, True, note)
        yield ("joint capacity factorization", 1e-6, 0.0, True, note)
        yield ("sequential equals joint gain", 1e-9, 0.0, True, note)

    report = verify_mse_bound(cfg.experiment(), threads=threads)
    note = (f"min MSE/bound ratio {_fmt(report.min_ratio)}, fitted slope "
            f"{_fmt(report.aggregate.slope)} vs predicted "
            f"{_fmt(-resolved.entropy_gain)} bits/stage")
    yield ("mean-square error lower bound", 1.0, report.min_ratio,
           report.passed, note)


def cmd_verify(cfg: RunConfig, threads: int) -> int:
    failures = 0
    for name, tol, observed, passed, note in _verify_checks(cfg, threads):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}: observed {_fmt(observed)} (tol {_fmt(tol)})"
        if note:
            line += f" [{note}]"
        print(line)
        failures += 0 if passed else 1
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entsearch",
        description="Entropy-optimal adaptive search: solve, plan, simulate.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", required=True, help="JSON config file")

    sp = sub.add_parser("capacity", help="solve one sensor's operating point")
    add_common(sp)
    sp.add_argument("sensor", help="sensor name from the config")

    sp = sub.add_parser("plan", help="emit the stage plan for the prior")
    add_common(sp)
    sp.add_argument("--out", help="directory for plan.json")

    sp = sub.add_parser("simulate", help="run the Monte Carlo experiment")
    add_common(sp)
    sp.add_argument("--out", required=True, help="directory for CSV output")
    sp.add_argument("--seed", type=int, help="override the config seed")
    sp.add_argument("--schedule", choices=["joint", "sequential"],
                    help="override the config schedule")
    sp.add_argument("--reps", type=int, help="override replications")
    sp.add_argument("--stages", type=int, help="override stages")
    sp.add_argument("--threads", type=int, default=1,
                    help="worker threads (results are thread-count invariant)")

    sp = sub.add_parser("verify", help="run the exact identity suites")
    add_common(sp)
    sp.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "capacity":
            return cmd_capacity(cfg, args.sensor)
        if args.command == "plan":
            return cmd_plan(cfg, args.out)
        if args.command == "simulate":
            cfg = load_config(args.config)
            overrides = {k: getattr(args, k) for k in
                         ("seed", "schedule", "stages") if getattr(args, k)
                         is not None}
            if args.reps is not None:
                overrides["replications"] = args.reps
            exp_cfg = cfg.experiment(**overrides)
            cfg = _with_experiment(cfg, exp_cfg)
            return cmd_simulate(cfg, args.out, args.threads)
        if args.command == "verify":
            return cmd_verify(cfg, args.threads)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as err:
        print(f"convergence failure: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


def _with_experiment(cfg: RunConfig, exp) -> RunConfig:
    """Copy of cfg with simulation fields replaced by the override result."""
    return RunConfig(sensor_names=cfg.sensor_names, sensors=cfg.sensors,
                     gamma=cfg.gamma, stages=exp.stages,
                     replications=exp.replications, seed=exp.seed,
                     schedule=exp.schedule, prior=cfg.prior,
                     tolerances=cfg.tolerances)


if __name__ == "__main__":
    sys.exit(main())
