"""Benchmark harness: solves scenarios, times trials, and emits CSV artifacts.

A run writes, under the output directory:

    config.yaml                  exact configuration used (round-trippable)
    <method>/trajectory_iterNNN.csv   snapshot per recorded solver iteration
    <method>/residuals.csv       per-iteration residual/cost history
    <method>/timings.csv         one row per trial plus a mean row
    compare.csv                  joint timing table (only with compare=True)

Trajectory files carry the header `tau,t,px,py,theta,v,w,a` with the control
columns blank on the final row; residual files carry
`iter,residual_inf,residual_2,cost,ilqr_iters,seconds`. Every trajectory row
is re-checked against the dynamics recursion at write time.

Timing measures the solver call only. The `seconds` column of residuals.csv
stays blank unless per-iteration timing is requested, keeping default outputs
byte-reproducible across runs.
"""

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .admm import SolveReport, STATUS_FAILED, admm_solve
from .barrier import barrier_solve
from .costs import TrackingCost
from .errors import PlannerError
from .ilqr import Trajectory
from .scenarios import ScenarioConfig, save_config
from .vehicle import BicycleModel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

METHODS = ("admm", "barrier")


@dataclass
class TrialRecord:
    method: str
    scenario: str
    trial: int
    seconds: float
    status: str
    final_cost: float
    max_violation: float
    message: str = ""


def build_problem(config: ScenarioConfig):
    """Instantiate the solver inputs described by a scenario configuration."""
    dynamics = BicycleModel(config.vehicle)
    cost = TrackingCost(config.weights, config.reference)
    x0 = config.initial_state.as_array()
    return x0, cost, dynamics


def solve_scenario(config: ScenarioConfig, method: str) -> SolveReport:
    """Run one solver on a scenario; barrier infeasibility propagates."""
    x0, cost, dynamics = build_problem(config)
    if method == "admm":
        return admm_solve(
            x0,
            cost,
            dynamics,
            config.bounds,
            config.obstacles,
            config.horizon,
            config.admm,
            use_ego_heading=config.ego_heading_ellipses,
        )
    if method == "barrier":
        return barrier_solve(
            x0,
            cost,
            dynamics,
            config.bounds,
            config.obstacles,
            config.horizon,
            config.barrier,
            use_ego_heading=config.ego_heading_ellipses,
        )
    raise ValueError(f"unknown method {method!r}")


def run_trials(config: ScenarioConfig, method: str, trials: int, parallel=False):
    """Solve the same configuration `trials` times, recording wall time.

    Failures are captured per trial; remaining trials still run. Parallel
    execution is offered for non-timing sweeps only.
    """

    def one(index):
        start = time.perf_counter()
        try:
            report = solve_scenario(config, method)
            seconds = time.perf_counter() - start
            return (
                TrialRecord(
                    method,
                    config.name,
                    index,
                    seconds,
                    report.status,
                    report.final_cost,
                    report.max_violation,
                ),
                report,
            )
        except PlannerError as exc:
            seconds = time.perf_counter() - start
            record = TrialRecord(
                method, config.name, index, seconds, STATUS_FAILED,
                math.nan, math.nan, message=str(exc),
            )
            return record, None

    if parallel:
        with ThreadPoolExecutor() as pool:
            outcomes = list(pool.map(one, range(1, trials + 1)))
    else:
        outcomes = [one(i) for i in range(1, trials + 1)]
    records = [r for r, _ in outcomes]
    reports = [rep for _, rep in outcomes]
    return records, reports


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trajectory_csv(traj: Trajectory, dynamics, path, tol=1e-8):
    """Emit one trajectory, re-validating the dynamics recursion row by row."""
    for tau in range(traj.horizon):
        nxt = dynamics.step(traj.states[tau], traj.controls[tau])
        if np.max(np.abs(nxt - traj.states[tau + 1])) > tol:
            raise PlannerError(
                f"trajectory breaks the dynamics recursion at time index {tau}"
            )
    h = dynamics.params.timestep
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tau", "t", "px", "py", "theta", "v", "w", "a"])
        for tau in range(traj.horizon + 1):
            px, py, theta, v = traj.states[tau]
            if tau < traj.horizon:
                w, a = traj.controls[tau]
                tail = [_format(float(w)), _format(float(a))]
            else:
                tail = ["", ""]
            writer.writerow(
                [tau, _format(tau * h), _format(float(px)), _format(float(py)),
                 _format(float(theta)), _format(float(v))] + tail
            )


def write_residuals_csv(report: SolveReport, path, include_seconds=False):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["iter", "residual_inf", "residual_2", "cost", "ilqr_iters", "seconds"]
        )
        for i in range(len(report.primal_inf_history)):
            seconds = (
                _format(report.iteration_seconds[i]) if include_seconds else ""
            )
            writer.writerow(
                [
                    i + 1,
                    _format(report.primal_inf_history[i]),
                    _format(report.primal_two_history[i]),
                    _format(report.cost_history[i]),
                    report.ilqr_iterations[i],
                    seconds,
                ]
            )


def write_timings_csv(records, path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["method", "scenario", "trial", "seconds", "status",
             "final_cost", "max_violation"]
        )
        for r in records:
            writer.writerow(
                [r.method, r.scenario, r.trial, _format(r.seconds), r.status,
                 _format(r.final_cost), _format(r.max_violation)]
            )
        if records:
            mean = sum(r.seconds for r in records) / len(records)
            writer.writerow(
                [records[0].method, records[0].scenario, "mean", _format(mean),
                 "", "", ""]
            )


def write_compare_csv(records_by_method, path):
    """Joint per-trial timing table across methods, plus a mean row."""
    methods = list(records_by_method)
    trials = max(len(v) for v in records_by_method.values())
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        header = ["trial"]
        for m in methods:
            header += [f"{m}_seconds", f"{m}_status"]
        writer.writerow(header)
        for i in range(trials):
            row = [i + 1]
            for m in methods:
                recs = records_by_method[m]
                if i < len(recs):
                    row += [_format(recs[i].seconds), recs[i].status]
                else:
                    row += ["", ""]
            writer.writerow(row)
        row = ["mean"]
        for m in methods:
            recs = records_by_method[m]
            mean = sum(r.seconds for r in recs) / len(recs) if recs else math.nan
            row += [_format(mean), ""]
        writer.writerow(row)


def parse_snapshot_policy(text: str):
    """Parse `all` or a comma list of 1-based iteration indices and `last`."""
    text = text.strip().lower()
    if text == "all":
        return "all"
    picks = set()
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "last":
            picks.add("last")
        else:
            picks.add(int(token))
    if not picks:
        raise ValueError("empty snapshot policy")
    return picks


def emit_iterates(report: SolveReport, dynamics, out_dir, policy="1,2,last",
                  include_seconds=False):
    """Write the residual history and the selected per-iteration snapshots."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    picks = parse_snapshot_policy(policy) if isinstance(policy, str) else policy
    total = len(report.snapshots)
    if picks == "all":
        chosen = set(range(1, total + 1))
    else:
        chosen = {total if p == "last" else p for p in picks}
    paths = []
    for index in sorted(i for i in chosen if 1 <= i <= total):
        path = out_dir / f"trajectory_iter{index:03d}.csv"
        write_trajectory_csv(report.snapshots[index - 1], dynamics, path)
        paths.append(path)
    residual_path = out_dir / "residuals.csv"
    write_residuals_csv(report, residual_path, include_seconds)
    paths.append(residual_path)
    return paths


def run(
    config: ScenarioConfig,
    method: str,
    trials: int,
    out_dir,
    snapshots: str = "1,2,last",
    compare: bool = False,
    include_seconds: bool = False,
    parallel: bool = False,
) -> int:
    """Execute trials, write all artifacts, and return a process exit code."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_config(config, out_dir / "config.yaml")
    except OSError as exc:
        print(f"cannot prepare output directory {out_dir}: {exc}")
        return EXIT_IO

    _, _, dynamics = build_problem(config)
    methods = list(METHODS) if compare else [method]
    records_by_method = {}
    any_failed = False
    try:
        for m in methods:
            records, reports = run_trials(config, m, trials, parallel=parallel)
            records_by_method[m] = records
            method_dir = out_dir / m
            method_dir.mkdir(exist_ok=True)
            write_timings_csv(records, method_dir / "timings.csv")
            emitted = next((rep for rep in reports if rep is not None), None)
            if emitted is not None:
                emit_iterates(emitted, dynamics, method_dir, snapshots,
                              include_seconds)
            for record in records:
                suffix = f" ({record.message})" if record.message else ""
                print(
                    f"{m} trial {record.trial}: {record.status} "
                    f"in {record.seconds:.4f} s{suffix}"
                )
            if all(r.status == STATUS_FAILED for r in records):
                any_failed = True
        if compare:
            write_compare_csv(records_by_method, out_dir / "compare.csv")
    except OSError as exc:
        print(f"I/O failure while writing artifacts: {exc}")
        return EXIT_IO
    return EXIT_SOLVER if any_failed else EXIT_OK
