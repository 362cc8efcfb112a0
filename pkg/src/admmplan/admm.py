"""Consensus ADMM wrapper around the iLQR engine.

The constrained planning problem is split into a smooth subproblem (tracking
cost plus a quadratic consensus penalty, solved by iLQR under the dynamics)
and a projection subproblem (per-timestep Euclidean projection of the
constraint-relevant block onto the box and keep-out sets). A scaled dual
variable ties the two together:

    y   <- argmin  cost(y) + sigma/2 ||sel(y) - z + lam/sigma||^2   (iLQR)
    z   <- project(sel(y) + lam/sigma)                              (per stamp)
    lam <- lam + sigma (sel(y) - z)

where sel(y) extracts (px, py, steer, accel) per time stamp. The loop stops
on the max-norm primal residual ||sel(y) - z||; the dynamics-feasible y is
returned, with its residual constraint violation reported alongside since
feasibility is only reached in the limit.

Initially infeasible trajectories are fine: the first iterate is a plain
zero-control rollout, which is the advertised advantage over barrier-style
constrained iLQR.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import ilqr
from .ilqr import ILQRSettings
from .constraints import (
    FEASIBILITY_TOL,
    InputBounds,
    obstacle_violation,
    project_timestep,
)
from .errors import NonConvergence, RegularizationExhausted

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_FAILED = "failed"

BLOCK_DIM = 4  # (px, py, steer, accel)


@dataclass
class ADMMSettings:
    sigma: float = 10.0
    max_admm_iters: int = 20
    primal_tolerance: float = 1e-3
    ilqr: ILQRSettings = field(default_factory=ILQRSettings)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.max_admm_iters < 1:
            raise ValueError("max_admm_iters must be at least 1")


@dataclass
class ConsensusState:
    """Constraint-side copy z and scaled duals lam, one 4-wide block per
    stamp. The final block's control slots are zero padding (controls end at
    T-1) and are excluded from the residual by construction."""

    z: np.ndarray  # (T+1, 4)
    lam: np.ndarray  # (T+1, 4)
    sigma: float


@dataclass
class SolveReport:
    """Outcome of a constrained solve plus per-iteration diagnostics."""

    trajectory: ilqr.Trajectory
    status: str
    primal_inf_history: list = field(default_factory=list)
    primal_two_history: list = field(default_factory=list)
    cost_history: list = field(default_factory=list)
    ilqr_iterations: list = field(default_factory=list)
    iteration_seconds: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # trajectory per iteration
    seconds: float = 0.0
    max_violation: float = 0.0
    iterations: int = 0
    message: str = ""

    @property
    def final_cost(self) -> float:
        return self.cost_history[-1] if self.cost_history else float("nan")


def select(traj: ilqr.Trajectory) -> np.ndarray:
    """Extract the constraint-relevant blocks (px, py, steer, accel) per stamp.

    The block at the final stamp carries zeros in the control slots.
    """
    T = traj.horizon
    blocks = np.zeros((T + 1, BLOCK_DIM))
    blocks[:, :2] = traj.states[:, :2]
    blocks[:T, 2:] = traj.controls
    return blocks


def primal_residual(traj: ilqr.Trajectory, z: np.ndarray):
    """Max-norm (and 2-norm, for plotting) of select(y) - z."""
    diff = select(traj) - z
    return float(np.max(np.abs(diff))), float(np.linalg.norm(diff))


class PenalizedCost:
    """Base cost plus the quadratic consensus penalty of one ADMM iteration.

    Stage stamps penalize the full (px, py, steer, accel) block; the terminal
    stamp penalizes position only. The penalty Hessian is the constant
    sigma * I on the selected components.
    """

    def __init__(self, base, consensus: ConsensusState):
        self.base = base
        self.sigma = consensus.sigma
        # Effective penalty centers z - lam/sigma, fixed for the iteration.
        self.centers = consensus.z - consensus.lam / consensus.sigma

    def _offsets(self, tau, x, u=None):
        c = self.centers[tau]
        if u is None:
            return np.array([x[0] - c[0], x[1] - c[1]])
        return np.array([x[0] - c[0], x[1] - c[1], u[0] - c[2], u[1] - c[3]])

    def stage(self, tau, x, u) -> float:
        off = self._offsets(tau, x, u)
        return self.base.stage(tau, x, u) + 0.5 * self.sigma * float(off @ off)

    def stage_expansion(self, tau, x, u):
        # Expansion blocks are freshly allocated by the base model, so they
        # can be updated in place.
        l_x, l_u, l_xx, l_ux, l_uu = self.base.stage_expansion(tau, x, u)
        off = self._offsets(tau, x, u)
        l_x[:2] += self.sigma * off[:2]
        l_u += self.sigma * off[2:]
        l_xx[0, 0] += self.sigma
        l_xx[1, 1] += self.sigma
        l_uu[0, 0] += self.sigma
        l_uu[1, 1] += self.sigma
        return l_x, l_u, l_xx, l_ux, l_uu

    def terminal(self, x) -> float:
        off = self._offsets(len(self.centers) - 1, x)
        return self.base.terminal(x) + 0.5 * self.sigma * float(off @ off)

    def terminal_expansion(self, x):
        g_x, g_xx = self.base.terminal_expansion(x)
        off = self._offsets(len(self.centers) - 1, x)
        g_x[:2] += self.sigma * off
        g_xx[0, 0] += self.sigma
        g_xx[1, 1] += self.sigma
        return g_x, g_xx


def penalized_costs(base, z, lam, sigma) -> PenalizedCost:
    """Augment a base cost model with the consensus penalty."""
    return PenalizedCost(base, ConsensusState(np.asarray(z, float), np.asarray(lam, float), sigma))


def trajectory_violation(
    traj: ilqr.Trajectory,
    bounds: InputBounds,
    obstacles,
    timestep: float,
    use_ego_heading: bool = False,
) -> float:
    """Largest constraint violation along a trajectory (0 when feasible)."""
    worst = 0.0
    for tau in range(traj.horizon):
        w, a = traj.controls[tau]
        worst = max(
            worst,
            abs(w) - bounds.max_steer,
            a - bounds.max_accel,
            bounds.min_accel - a,
        )
    for tau in range(traj.horizon + 1):
        heading = traj.states[tau, 2] if use_ego_heading else None
        for obs in obstacles:
            worst = max(
                worst,
                obstacle_violation(
                    traj.states[tau, :2], obs, tau, timestep, heading_override=heading
                ),
            )
    return max(worst, 0.0)


def admm_solve(
    x0,
    cost,
    dynamics,
    bounds: InputBounds,
    obstacles,
    horizon: int,
    settings: ADMMSettings | None = None,
    use_ego_heading: bool = False,
    initialization: str = "rollout",
) -> SolveReport:
    """Plan a constrained trajectory by consensus splitting.

    Args:
        x0: initial state array.
        cost: base cost model (stage/terminal with expansions).
        dynamics: model with step/jacobians; its `params.timestep` drives the
            moving-obstacle schedule.
        bounds: control box limits.
        obstacles: keep-out ellipses (may be empty).
        horizon: number of control stamps T.
        settings: penalty, iteration, and tolerance knobs.
        use_ego_heading: orient keep-out ellipses with the ego heading
            instead of each obstacle's own heading.
        initialization: consensus seed when the unconstrained probe is
            infeasible. "rollout" (default) starts from the zero-control
            rollout, which engages the constraints gently; "unconstrained"
            starts from the probe's optimum, which reaches better objective
            values on far-from-feasible starts at the price of a rougher
            dual transient.

    Returns:
        SolveReport with the final dynamics-feasible trajectory, residual and
        cost histories, and the trajectory's residual constraint violation.
        Internal solver failures are reported as status "failed" on a partial
        report rather than raised.
    """
    settings = settings or ADMMSettings()
    timestep = dynamics.params.timestep
    start = time.perf_counter()

    # Probe: solve the unconstrained base problem first. If its optimum is
    # already feasible the splitting has nothing to do; consensus holds
    # exactly and the solve is finished. (On an infeasible probe the result
    # is discarded: seeding the consensus from a deeply violating optimum
    # produces far worse projection targets than the plain rollout.)
    try:
        probe = ilqr.solve(
            x0, cost, dynamics, settings.ilqr,
            initial_controls=np.zeros((horizon, 2)),
        )
    except RegularizationExhausted as exc:
        rollout0 = ilqr.rollout(dynamics, np.asarray(x0, float), np.zeros((horizon, 2)))
        report = SolveReport(rollout0, STATUS_FAILED, message=str(exc))
        report.seconds = time.perf_counter() - start
        return report

    if (
        trajectory_violation(
            probe.trajectory, bounds, obstacles, timestep, use_ego_heading
        )
        <= FEASIBILITY_TOL
    ):
        report = SolveReport(probe.trajectory, STATUS_CONVERGED)
        report.primal_inf_history = [0.0]
        report.primal_two_history = [0.0]
        report.cost_history = [probe.cost]
        report.ilqr_iterations = [probe.iterations]
        report.iteration_seconds = [time.perf_counter() - start]
        report.snapshots = [probe.trajectory.copy()]
        report.iterations = 1
        report.seconds = time.perf_counter() - start
        return report

    if initialization == "unconstrained":
        y = probe.trajectory
    elif initialization == "rollout":
        y = ilqr.rollout(dynamics, np.asarray(x0, float), np.zeros((horizon, 2)))
    else:
        raise ValueError(f"unknown initialization {initialization!r}")
    z = select(y)
    lam = np.zeros_like(z)
    report = SolveReport(y, STATUS_MAX_ITERS)
    # The residual test only ends the solve once the constraints have bitten
    # at least once; before that a feasible iterate just means the consensus
    # has nothing to say yet while the objective is still improving.
    engaged = False

    for iteration in range(1, settings.max_admm_iters + 1):
        iter_start = time.perf_counter()
        penalized = penalized_costs(cost, z, lam, settings.sigma)
        try:
            result = ilqr.solve(
                x0, penalized, dynamics, settings.ilqr, initial_controls=y.controls
            )
            y = result.trajectory
            sel = select(y)
            targets = sel + lam / settings.sigma
            for tau in range(horizon + 1):
                z[tau] = project_timestep(
                    targets[tau],
                    obstacles,
                    bounds,
                    tau,
                    timestep,
                    ego_heading=y.states[tau, 2],
                    use_ego_heading=use_ego_heading,
                )
        except (RegularizationExhausted, NonConvergence) as exc:
            report.status = STATUS_FAILED
            report.message = str(exc)
            break
        lam += settings.sigma * (sel - z)
        res_inf, res_two = primal_residual(y, z)

        report.trajectory = y
        report.iterations = iteration
        report.primal_inf_history.append(res_inf)
        report.primal_two_history.append(res_two)
        report.cost_history.append(ilqr.total_cost(cost, y))
        report.ilqr_iterations.append(result.iterations)
        report.iteration_seconds.append(time.perf_counter() - iter_start)
        report.snapshots.append(y.copy())

        if res_inf >= settings.primal_tolerance:
            engaged = True
        elif engaged:
            report.status = STATUS_CONVERGED
            break

    report.max_violation = trajectory_violation(
        report.trajectory, bounds, obstacles, timestep, use_ego_heading
    )
    report.seconds = time.perf_counter() - start
    return report


def is_consensus_feasible(z, obstacles, bounds, timestep, tol=FEASIBILITY_TOL):
    """Check every consensus block against its constraint set."""
    for tau, block in enumerate(np.asarray(z)):
        if abs(block[2]) > bounds.max_steer + tol:
            return False
        if not bounds.min_accel - tol <= block[3] <= bounds.max_accel + tol:
            return False
        for obs in obstacles:
            if obstacle_violation(block[:2], obs, tau, timestep) > tol:
                return False
    return True
