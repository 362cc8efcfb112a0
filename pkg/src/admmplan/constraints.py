"""Inequality constraints and the per-timestep Euclidean projections onto them.

Three constraint families are supported: a steering box, an acceleration box,
and elliptical keep-out regions around (possibly moving) obstacles. The
keep-out test for position p against an obstacle with center c and shape
matrix A is

    violation(p) = 1 - (p - c)' A (p - c)    (<= 0 means safe)

with A = R diag(1/e_a^2, 1/e_b^2) R', so the safe boundary is the ellipse
with semi-axes (e_a, e_b) rotated by the obstacle heading.

`project_timestep` is the consensus-update workhorse: it clamps the input
components onto the boxes and pushes the position outside every keep-out
ellipse by cyclic nearest-point projection.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateProjection, NonConvergence

# Constraint values larger than this count as violated in feasibility scans.
FEASIBILITY_TOL = 1e-6
# Boundary residual targeted by the single-ellipse nearest-point solve.
PROJECTION_TOL = 1e-9
MAX_PROJECTION_SWEEPS = 50
# Box limits at or beyond this magnitude are treated as absent.
UNBOUNDED_LIMIT = 1e8


@dataclass(frozen=True)
class InputBounds:
    """Box limits on the control vector (steer, accel)."""

    max_steer: float = 0.6
    max_accel: float = 3.0
    min_accel: float = -3.0

    def __post_init__(self):
        if self.max_steer <= 0:
            raise ValueError("max_steer must be positive")
        if not self.min_accel < 0 < self.max_accel:
            raise ValueError("need min_accel < 0 < max_accel")


@dataclass(frozen=True)
class Obstacle:
    """Keep-out ellipse translating at constant velocity.

    The heading is fixed (the ellipse does not rotate as it moves);
    `semi_major >= semi_minor > 0`. Time index tau and the sample period map
    to the center via center0 + tau * timestep * velocity.
    """

    center0: tuple
    velocity: tuple = (0.0, 0.0)
    heading: float = 0.0
    semi_major: float = 5.0
    semi_minor: float = 2.5

    def __post_init__(self):
        object.__setattr__(self, "center0", tuple(float(c) for c in self.center0))
        object.__setattr__(self, "velocity", tuple(float(c) for c in self.velocity))
        if not self.semi_major >= self.semi_minor > 0:
            raise ValueError("need semi_major >= semi_minor > 0")

    def center_at(self, tau: int, timestep: float) -> np.ndarray:
        return np.array(self.center0) + tau * timestep * np.array(self.velocity)

    def shape(self, heading_override: float | None = None) -> np.ndarray:
        heading = self.heading if heading_override is None else heading_override
        return _cached_shape(heading, self.semi_major, self.semi_minor)


def ellipse_shape(heading: float, semi_major: float, semi_minor: float) -> np.ndarray:
    """Symmetric positive-definite quadratic form of a rotated ellipse.

    The returned 2x2 matrix A satisfies (p - c)' A (p - c) = 1 on the
    boundary of the ellipse with the given semi-axes rotated by `heading`.
    """
    if semi_major <= 0 or semi_minor <= 0:
        raise ValueError("semi-axes must be positive")
    c, s = math.cos(heading), math.sin(heading)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([semi_major**-2, semi_minor**-2]) @ rot.T


@lru_cache(maxsize=512)
def _cached_shape(heading, semi_major, semi_minor):
    shape = ellipse_shape(heading, semi_major, semi_minor)
    shape.setflags(write=False)
    return shape


@lru_cache(maxsize=512)
def _cached_rotation(heading):
    c, s = math.cos(heading), math.sin(heading)
    rot = np.array([[c, -s], [s, c]])
    rot.setflags(write=False)
    return rot


def obstacle_violation(
    p, obstacle: Obstacle, tau: int, timestep: float, heading_override=None
) -> float:
    """Keep-out violation of position p at time index tau; <= 0 is safe."""
    d = np.asarray(p, dtype=float) - obstacle.center_at(tau, timestep)
    A = obstacle.shape(heading_override)
    return float(1.0 - d @ A @ d)


def project_inputs(u, bounds: InputBounds) -> np.ndarray:
    """Exact Euclidean projection of (steer, accel) onto the box limits."""
    return np.array(
        [
            min(max(float(u[0]), -bounds.max_steer), bounds.max_steer),
            min(max(float(u[1]), bounds.min_accel), bounds.max_accel),
        ]
    )


def _ellipse_frame(shape):
    """Decompose a shape matrix into (rotation, semi_major, semi_minor)."""
    evals, evecs = np.linalg.eigh(np.asarray(shape, dtype=float))
    # ascending eigenvalues: 1/a^2 <= 1/b^2
    a = 1.0 / math.sqrt(evals[0])
    b = 1.0 / math.sqrt(evals[1])
    return evecs, a, b


def _nearest_boundary_point(qx, qy, a, b):
    """Nearest point on the axis-aligned ellipse boundary to an interior point.

    Solves the KKT condition x = a^2 qx/(a^2+t), y = b^2 qy/(b^2+t) on the
    on-boundary equation F(t) = 0, where F is strictly decreasing on
    (-b^2, 0]. Safeguarded Newton iterations; the on-axis and near-center
    degeneracies are handled analytically.
    """
    if abs(qy) <= 1e-12 * b:
        # Points (numerically) on the major axis: the nearest boundary point
        # leaves the axis when |qx| is inside the evolute cusp (a^2 - b^2)/a.
        cusp = (a * a - b * b) / a
        if abs(qx) >= cusp:
            return math.copysign(a, qx), 0.0
        x = a * a * qx / (a * a - b * b)
        return x, b * math.sqrt(max(0.0, 1.0 - (x / a) ** 2))

    fa2 = (a * qx) ** 2
    fb2 = (b * qy) ** 2

    def value_slope(t):
        ga, gb = a * a + t, b * b + t
        val = fa2 / (ga * ga) + fb2 / (gb * gb) - 1.0
        slope = -2.0 * (fa2 / (ga**3) + fb2 / (gb**3))
        return val, slope

    lo, hi = -b * b, 0.0  # F(lo+) = +inf, F(hi) < 0 for interior points
    t = -b * b + b * abs(qy)  # exact root when qx = 0
    for _ in range(200):
        val, slope = value_slope(t)
        if abs(val) < PROJECTION_TOL:
            break
        if val > 0.0:
            lo = t
        else:
            hi = t
        t_new = t - val / slope
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        t = t_new
    return a * a * qx / (a * a + t), b * b * qy / (b * b + t)


def _project_with_frame(p, center, rot, a, b) -> np.ndarray:
    """Nearest boundary point for an interior p, in a known ellipse frame."""
    d = p - center
    if d[0] == 0.0 and d[1] == 0.0:
        warnings.warn(
            "projection target is the ellipse center; returning the "
            "minor-axis boundary point",
            DegenerateProjection,
        )
        return center + b * rot[:, 1]
    q = rot.T @ d
    # Fold into the closed first quadrant, solve, unfold.
    sx = 1.0 if q[0] >= 0.0 else -1.0
    sy = 1.0 if q[1] >= 0.0 else -1.0
    nx, ny = _nearest_boundary_point(sx * q[0], sy * q[1], a, b)
    return center + rot @ np.array([sx * nx, sy * ny])


def project_outside_ellipse(p, shape, center) -> np.ndarray:
    """Euclidean-nearest point of p outside (or on) the ellipse boundary.

    Points already satisfying the keep-out constraint are returned unchanged.
    An exact-center input has no unique nearest point; the minor-axis boundary
    point is returned and a DegenerateProjection warning is issued.
    """
    p = np.asarray(p, dtype=float)
    center = np.asarray(center, dtype=float)
    d = p - center
    shape = np.asarray(shape, dtype=float)
    if 1.0 - d @ shape @ d <= 0.0:
        return p.copy()
    rot, a, b = _ellipse_frame(shape)
    return _project_with_frame(p, center, rot, a, b)


def project_timestep(
    block,
    obstacles,
    bounds: InputBounds,
    tau: int,
    timestep: float,
    ego_heading: float = 0.0,
    use_ego_heading: bool = False,
) -> np.ndarray:
    """Project one consensus block (px, py, steer, accel) onto the constraints.

    Inputs are clamped onto their boxes; the position is pushed outside every
    keep-out ellipse at time index tau by cyclic projection. By default the
    obstacle's own heading orients each ellipse; `use_ego_heading` switches to
    the ego heading supplied in `ego_heading`.

    Raises:
        NonConvergence: cyclic projection failed to clear all ellipses within
        the sweep budget (overlapping obstacles leaving no nearby feasible
        point).
    """
    block = np.asarray(block, dtype=float)
    out = block.copy()
    out[2:] = project_inputs(block[2:], bounds)
    if not obstacles:
        return out

    frames = []
    for obs in obstacles:
        heading = ego_heading if use_ego_heading else obs.heading
        frames.append(
            (
                _cached_rotation(heading),
                obs.semi_major,
                obs.semi_minor,
                obs.center_at(tau, timestep),
            )
        )
    p = out[:2]
    # One extra pass so a sweep that ends clean can be verified and returned.
    for _ in range(MAX_PROJECTION_SWEEPS + 1):
        clean = True
        for rot, a, b, c in frames:
            q = rot.T @ (p - c)
            if 1.0 - (q[0] / a) ** 2 - (q[1] / b) ** 2 > FEASIBILITY_TOL:
                p = _project_with_frame(p, c, rot, a, b)
                clean = False
        if clean:
            out[:2] = p
            return out
    raise NonConvergence(
        f"cyclic ellipse projection did not converge at time index {tau}"
    )
