"""Log-barrier constrained iLQR, the comparison baseline.

Hard constraints g_i <= 0 are replaced by -(1/t) log(-g_i) penalties and the
smooth problem is solved by iLQR inside an outer loop that multiplies the
sharpness t by a fixed factor. The method needs a strictly feasible iterate
at all times: the seed rollout is checked up front, and line-search steps
that leave the barrier domain are rejected by an infinite cost.

Obstacle barrier Hessians keep only the Gauss-Newton (first-derivative outer
product) term so the quadratic model stays positive semidefinite; box-limit
barriers use their exact one-dimensional second derivatives.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import ilqr
from .ilqr import ILQRSettings
from .admm import SolveReport, STATUS_CONVERGED, STATUS_FAILED, trajectory_violation
from .constraints import UNBOUNDED_LIMIT, InputBounds
from .errors import BarrierDomainViolation, RegularizationExhausted


@dataclass
class BarrierSettings:
    initial_sharpness: float = 1.0  # starting t; barrier weight is 1/t
    tighten_factor: float = 5.0
    outer_iters: int = 5
    margin: float = 1e-6  # strict-feasibility slack on every g
    ilqr: ILQRSettings = field(default_factory=ILQRSettings)

    def __post_init__(self):
        if self.initial_sharpness <= 0:
            raise ValueError("initial_sharpness must be positive")
        if self.tighten_factor <= 1:
            raise ValueError("tighten_factor must exceed 1")


class BarrierCost:
    """Base cost plus log-barrier terms for the box and keep-out constraints.

    Evaluations outside the barrier domain return +inf so the line search
    backtracks; expansions raise BarrierDomainViolation instead, since they
    are only ever requested on accepted (feasible) nominal trajectories.
    """

    def __init__(
        self,
        base,
        bounds: InputBounds,
        obstacles,
        sharpness: float,
        timestep: float,
        horizon: int,
        margin: float = 1e-6,
        use_ego_heading: bool = False,
    ):
        self.base = base
        self.bounds = bounds
        self.obstacles = obstacles
        self.sharpness = sharpness
        self.timestep = timestep
        self.horizon = horizon
        self.margin = margin
        self.use_ego_heading = use_ego_heading

    def _control_gaps(self, u):
        """Positive distances -g to each finite box face."""
        gaps = []
        if self.bounds.max_steer < UNBOUNDED_LIMIT:
            gaps.append(self.bounds.max_steer - u[0])
            gaps.append(u[0] + self.bounds.max_steer)
        if self.bounds.max_accel < UNBOUNDED_LIMIT:
            gaps.append(self.bounds.max_accel - u[1])
        if self.bounds.min_accel > -UNBOUNDED_LIMIT:
            gaps.append(u[1] - self.bounds.min_accel)
        return gaps

    def _obstacle_slacks(self, tau, x):
        """Positive values -h = d'Ad - 1 per obstacle."""
        p = np.asarray(x[:2], dtype=float)
        slacks = []
        heading = x[2] if self.use_ego_heading else None
        for obs in self.obstacles:
            d = p - obs.center_at(tau, self.timestep)
            A = obs.shape(heading)
            slacks.append((float(d @ A @ d - 1.0), A, d))
        return slacks

    def _barrier_value(self, tau, x, u=None):
        total = 0.0
        if u is not None:
            for gap in self._control_gaps(u):
                if gap <= self.margin:
                    return math.inf
                total -= math.log(gap)
        for slack, _, _ in self._obstacle_slacks(tau, x):
            if slack <= self.margin:
                return math.inf
            total -= math.log(slack)
        return total / self.sharpness

    def stage(self, tau, x, u) -> float:
        penalty = self._barrier_value(tau, x, u)
        if not math.isfinite(penalty):
            return math.inf
        return self.base.stage(tau, x, u) + penalty

    def terminal(self, x) -> float:
        penalty = self._barrier_value(self.horizon, x)
        if not math.isfinite(penalty):
            return math.inf
        return self.base.terminal(x) + penalty

    def stage_expansion(self, tau, x, u):
        # Expansion blocks are freshly allocated by the base model.
        l_x, l_u, l_xx, l_ux, l_uu = self.base.stage_expansion(tau, x, u)
        inv_t = 1.0 / self.sharpness

        b = self.bounds
        if b.max_steer < UNBOUNDED_LIMIT:
            hi, lo = b.max_steer - u[0], u[0] + b.max_steer
            self._check_domain(min(hi, lo), tau)
            l_u[0] += inv_t * (1.0 / hi - 1.0 / lo)
            l_uu[0, 0] += inv_t * (1.0 / hi**2 + 1.0 / lo**2)
        if b.max_accel < UNBOUNDED_LIMIT:
            hi = b.max_accel - u[1]
            self._check_domain(hi, tau)
            l_u[1] += inv_t / hi
            l_uu[1, 1] += inv_t / hi**2
        if b.min_accel > -UNBOUNDED_LIMIT:
            lo = u[1] - b.min_accel
            self._check_domain(lo, tau)
            l_u[1] -= inv_t / lo
            l_uu[1, 1] += inv_t / lo**2

        gx, gxx = self._obstacle_expansion(tau, x)
        l_x[:2] += gx
        l_xx[:2, :2] += gxx
        return l_x, l_u, l_xx, l_ux, l_uu

    def terminal_expansion(self, x):
        g_x, g_xx = self.base.terminal_expansion(x)
        gx, gxx = self._obstacle_expansion(self.horizon, x)
        g_x[:2] += gx
        g_xx[:2, :2] += gxx
        return g_x, g_xx

    def _obstacle_expansion(self, tau, x):
        gx = np.zeros(2)
        gxx = np.zeros((2, 2))
        inv_t = 1.0 / self.sharpness
        for slack, A, d in self._obstacle_slacks(tau, x):
            self._check_domain(slack, tau)
            grad_s = 2.0 * A @ d
            gx -= inv_t * grad_s / slack
            gxx += inv_t * np.outer(grad_s, grad_s) / slack**2
        return gx, gxx

    def _check_domain(self, gap, tau):
        if gap <= self.margin:
            raise BarrierDomainViolation(
                f"iterate left the barrier domain at time index {tau}", tau=tau
            )


def check_strict_feasibility(
    traj: ilqr.Trajectory,
    bounds: InputBounds,
    obstacles,
    timestep: float,
    margin: float,
    use_ego_heading: bool = False,
):
    """Raise BarrierDomainViolation at the first stamp violating any g < -margin."""
    for tau in range(traj.horizon + 1):
        x = traj.states[tau]
        heading = x[2] if use_ego_heading else None
        for obs in obstacles:
            d = x[:2] - obs.center_at(tau, timestep)
            if float(d @ obs.shape(heading) @ d) - 1.0 <= margin:
                raise BarrierDomainViolation(
                    f"trajectory is not strictly clear of an obstacle at time index {tau}",
                    tau=tau,
                )
        if tau < traj.horizon:
            u = traj.controls[tau]
            gaps = [
                bounds.max_steer - u[0],
                u[0] + bounds.max_steer,
                bounds.max_accel - u[1],
                u[1] - bounds.min_accel,
            ]
            if min(gaps) <= margin:
                raise BarrierDomainViolation(
                    f"controls are not strictly inside their box at time index {tau}",
                    tau=tau,
                )


def barrier_costs(
    base, bounds, obstacles, weight, timestep, horizon, margin=1e-6, use_ego_heading=False
) -> BarrierCost:
    """Augment a base cost with log barriers at barrier weight 1/t = weight."""
    return BarrierCost(
        base, bounds, obstacles, 1.0 / weight, timestep, horizon, margin, use_ego_heading
    )


def barrier_solve(
    x0,
    cost,
    dynamics,
    bounds: InputBounds,
    obstacles,
    horizon: int,
    settings: BarrierSettings | None = None,
    use_ego_heading: bool = False,
) -> SolveReport:
    """Constrained solve by the outer-inner log-barrier loop.

    Raises:
        BarrierDomainViolation: the zero-control seed rollout (or, defensively,
        a later nominal iterate) is not strictly feasible. This is the
        documented limitation that the consensus solver avoids.
    """
    settings = settings or BarrierSettings()
    timestep = dynamics.params.timestep
    start = time.perf_counter()

    y = ilqr.rollout(dynamics, np.asarray(x0, float), np.zeros((horizon, 2)))
    check_strict_feasibility(
        y, bounds, obstacles, timestep, settings.margin, use_ego_heading
    )

    report = SolveReport(y, STATUS_CONVERGED)
    sharpness = settings.initial_sharpness
    for _ in range(settings.outer_iters):
        iter_start = time.perf_counter()
        barrier = BarrierCost(
            cost,
            bounds,
            obstacles,
            sharpness,
            timestep,
            horizon,
            settings.margin,
            use_ego_heading,
        )
        try:
            result = ilqr.solve(
                x0, barrier, dynamics, settings.ilqr, initial_controls=y.controls
            )
        except RegularizationExhausted as exc:
            report.status = STATUS_FAILED
            report.message = str(exc)
            break
        y = result.trajectory
        report.trajectory = y
        report.iterations += 1
        report.cost_history.append(ilqr.total_cost(cost, y))
        report.ilqr_iterations.append(result.iterations)
        report.iteration_seconds.append(time.perf_counter() - iter_start)
        report.snapshots.append(y.copy())
        violation = trajectory_violation(
            y, bounds, obstacles, timestep, use_ego_heading
        )
        report.primal_inf_history.append(violation)
        report.primal_two_history.append(violation)
        sharpness *= settings.tighten_factor

    report.max_violation = trajectory_violation(
        report.trajectory, bounds, obstacles, timestep, use_ego_heading
    )
    report.seconds = time.perf_counter() - start
    return report
