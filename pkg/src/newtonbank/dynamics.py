"""Canonical dynamics for the twelve scenarios and their sampled states.

Each scenario has a fixed scene geometry (module constants below) and a
closed-form or RK4-integrated motion. All objects have unit mass, so the
net force equals the acceleration. Velocity and force are exported as
unit direction vectors only; magnitudes are factored out.

Canonical dynamics table (knobs read from SimParams in parentheses):

     1  arc throw        ballistic arc from 1 m height   (speed, direction)
     2  vertical fall    released from rest at 2 m
     3  projectile       ballistic launch from ground    (speed, direction)
     4  airborne drift   force-free straight line        (speed, direction)
     5  stability        at rest, net force zero
     6  drop onto plane  free fall, then at rest at the support height
     7  conical swing    uniform circular motion of a conical pendulum
                                                         (pendulum_length)
     8  continuous push  pushed from rest against sliding friction, RK4
                                                         (direction, friction_mu)
     9  incline slide    slides from rest down a 30 degree plane (friction_mu)
    10  friction slide   decelerates to a stop on a flat surface
                                                         (speed, direction, friction_mu)
    11  vertical toss    straight up and back down       (speed)
    12  pendulum swing   planar pendulum released from rest, RK4
                                                         (direction, pendulum_length)

Scenario 12 reads its release angle from ``initial_direction``, interpreted
as the pivot-to-bob unit vector at t = 0. Scenarios 8 and 10 use only the
horizontal component of ``initial_direction``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import rotation_matrix
from .catalog import ViewpointSpec, scenario_spec
from .errors import ParameterError

DEFAULT_GRAVITY = 9.81
DEFAULT_FRICTION = 0.3
DEFAULT_DT = 1e-3

RAW_FEATURE_DIM = 10  # camera-frame position, velocity dir, force dir, phase
STATES_PER_ENTRY = 10

_ZERO_SPEED = 1e-9

# Scene geometry. Start points sit off the world origin so that every
# viewpoint of a scenario produces a distinct camera-frame position track.
ARC_START = np.array([0.0, 0.0, 1.0])
FALL_START = np.array([1.0, 0.0, 2.0])
LAUNCH_START = np.array([0.0, 0.0, 0.0])
DRIFT_START = np.array([-1.0, 0.0, 1.5])
REST_POSITION = np.array([0.5, 0.0, 0.5])
DROP_START = np.array([0.0, 0.0, 2.0])
DROP_REST_HEIGHT = 0.25
SWING_PIVOT = np.array([0.0, 0.0, 2.0])
SWING_CONE_ANGLE = math.radians(30.0)
PUSH_START = np.array([-1.0, 0.0, 0.25])
PUSH_FORCE = 5.0
INCLINE_START = np.array([-0.75, 0.0, 1.0])
INCLINE_ANGLE = math.radians(30.0)
SLIDE_START = np.array([-1.5, 0.0, 0.25])
TOSS_START = np.array([0.0, 0.0, 0.25])
PENDULUM_PIVOT = np.array([0.0, 0.0, 1.5])
PENDULUM_RELEASE_ANGLE = 0.6  # rad, default via canonical_params


@dataclass(frozen=True)
class SimParams:
    gravity: float = DEFAULT_GRAVITY
    friction_mu: float = DEFAULT_FRICTION
    pendulum_length: float = 1.0
    initial_speed: float = 3.0
    initial_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    duration: float = 1.5
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.duration < 10 * self.dt:
            raise ParameterError(
                f"duration {self.duration} shorter than 10 steps of dt={self.dt}"
            )
        if abs(np.linalg.norm(self.initial_direction) - 1.0) > 1e-9:
            raise ParameterError(
                f"initial_direction must be a unit vector, got {self.initial_direction}"
            )
        if self.gravity <= 0 or self.friction_mu < 0 or self.pendulum_length <= 0:
            raise ParameterError("gravity and pendulum_length must be positive, friction_mu nonnegative")

    @property
    def direction(self) -> np.ndarray:
        return np.asarray(self.initial_direction, dtype=float)


@dataclass(frozen=True)
class TrajectoryState:
    t: float
    position: np.ndarray
    velocity_dir: np.ndarray
    force_dir: np.ndarray
    speed: float


@dataclass
class Trajectory:
    scenario_id: int
    states: list[TrajectoryState]
    params: SimParams | None = field(repr=False, default=None)

    @property
    def positions(self) -> np.ndarray:
        return np.stack([s.position for s in self.states])

    @property
    def total_time(self) -> float:
        return self.states[-1].t


def _unit_or_zero(vec: np.ndarray) -> tuple[np.ndarray, float]:
    mag = float(np.linalg.norm(vec))
    if mag <= _ZERO_SPEED:
        return np.zeros(3), 0.0
    return vec / mag, mag


def _horizontal_unit(direction: np.ndarray) -> np.ndarray:
    flat = np.array([direction[0], direction[1], 0.0])
    norm = np.linalg.norm(flat)
    if norm < 1e-9:
        raise ParameterError("surface scenarios need a direction with a horizontal component")
    return flat / norm


def rk4_integrate(deriv, y0: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Classic fixed-step RK4 over the given time grid; returns (len(ts), dim)."""
    out = np.empty((len(ts), len(y0)))
    out[0] = y0
    for i in range(len(ts) - 1):
        h = ts[i + 1] - ts[i]
        y = out[i]
        k1 = deriv(ts[i], y)
        k2 = deriv(ts[i] + h / 2, y + h / 2 * k1)
        k3 = deriv(ts[i] + h / 2, y + h / 2 * k2)
        k4 = deriv(ts[i] + h, y + h * k3)
        out[i + 1] = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return out


def _ballistic(p0, v0, g, ts):
    down = np.array([0.0, 0.0, -g])
    pos = p0 + np.outer(ts, v0) + 0.5 * np.outer(ts**2, down)
    vel = v0 + np.outer(ts, down)
    force = np.tile(down, (len(ts), 1))
    return pos, vel, force


def _kinematics(scenario_id: int, p: SimParams, ts: np.ndarray):
    """Positions, velocities, net forces (unit mass) at every grid time."""
    n = len(ts)
    g = p.gravity
    zeros = np.zeros((n, 3))

    if scenario_id == 1:
        return _ballistic(ARC_START, p.initial_speed * p.direction, g, ts)

    if scenario_id == 2:
        return _ballistic(FALL_START, np.zeros(3), g, ts)

    if scenario_id == 3:
        return _ballistic(LAUNCH_START, p.initial_speed * p.direction, g, ts)

    if scenario_id == 4:
        v0 = p.initial_speed * p.direction
        pos = DRIFT_START + np.outer(ts, v0)
        return pos, np.tile(v0, (n, 1)), zeros

    if scenario_id == 5:
        return np.tile(REST_POSITION, (n, 1)), zeros, zeros

    if scenario_id == 6:
        drop = DROP_START[2] - DROP_REST_HEIGHT
        t_impact = math.sqrt(2 * drop / g)
        pos, vel, force = _ballistic(DROP_START, np.zeros(3), g, ts)
        resting = ts >= t_impact
        pos[resting] = np.array([DROP_START[0], DROP_START[1], DROP_REST_HEIGHT])
        vel[resting] = 0.0
        force[resting] = 0.0
        return pos, vel, force

    if scenario_id == 7:
        length = p.pendulum_length
        radius = length * math.sin(SWING_CONE_ANGLE)
        z_bob = SWING_PIVOT[2] - length * math.cos(SWING_CONE_ANGLE)
        omega = math.sqrt(g / (length * math.cos(SWING_CONE_ANGLE)))
        c, s = np.cos(omega * ts), np.sin(omega * ts)
        pos = np.column_stack([radius * c, radius * s, np.full(n, z_bob)])
        vel = np.column_stack([-radius * omega * s, radius * omega * c, np.zeros(n)])
        force = np.column_stack([-radius * omega**2 * c, -radius * omega**2 * s, np.zeros(n)])
        return pos, vel, force

    if scenario_id == 8:
        direction = _horizontal_unit(p.direction)
        accel = PUSH_FORCE - p.friction_mu * g
        if accel <= 0:
            raise ParameterError("push force does not exceed friction, object never moves")
        line = rk4_integrate(lambda t, y: np.array([y[1], accel]), np.zeros(2), ts)
        pos = PUSH_START + np.outer(line[:, 0], direction)
        vel = np.outer(line[:, 1], direction)
        force = np.tile(accel * direction, (n, 1))
        return pos, vel, force

    if scenario_id == 9:
        downslope = np.array([math.cos(INCLINE_ANGLE), 0.0, -math.sin(INCLINE_ANGLE)])
        accel = g * (math.sin(INCLINE_ANGLE) - p.friction_mu * math.cos(INCLINE_ANGLE))
        if accel <= 0:
            raise ParameterError("friction exceeds the incline pull, object never moves")
        pos = INCLINE_START + 0.5 * accel * np.outer(ts**2, downslope)
        vel = accel * np.outer(ts, downslope)
        force = np.tile(accel * downslope, (n, 1))
        return pos, vel, force

    if scenario_id == 10:
        direction = _horizontal_unit(p.direction)
        decel = p.friction_mu * g
        if decel <= 0:
            raise ParameterError("friction slide needs friction_mu > 0")
        t_stop = p.initial_speed / decel
        t_moving = np.minimum(ts, t_stop)
        dist = p.initial_speed * t_moving - 0.5 * decel * t_moving**2
        speed = np.maximum(p.initial_speed - decel * ts, 0.0)
        pos = SLIDE_START + np.outer(dist, direction)
        vel = np.outer(speed, direction)
        force = np.where((ts < t_stop)[:, None], -decel * direction, 0.0)
        return pos, vel, force

    if scenario_id == 11:
        up = np.array([0.0, 0.0, 1.0])
        return _ballistic(TOSS_START, p.initial_speed * up, g, ts)

    if scenario_id == 12:
        length = p.pendulum_length
        direction = p.direction
        theta0 = math.atan2(math.hypot(direction[0], direction[1]), -direction[2])
        swing_plane = (
            _horizontal_unit(direction)
            if math.hypot(direction[0], direction[1]) >= 1e-9
            else np.array([1.0, 0.0, 0.0])
        )
        angles = rk4_integrate(
            lambda t, y: np.array([y[1], -(g / length) * math.sin(y[0])]),
            np.array([theta0, 0.0]),
            ts,
        )
        theta, theta_dot = angles[:, 0], angles[:, 1]
        theta_dd = -(g / length) * np.sin(theta)
        radial = np.outer(np.sin(theta), swing_plane)
        radial[:, 2] -= np.cos(theta)
        tangent = np.outer(np.cos(theta), swing_plane)
        tangent[:, 2] += np.sin(theta)
        pos = PENDULUM_PIVOT + length * radial
        vel = length * theta_dot[:, None] * tangent
        force = length * (theta_dd[:, None] * tangent - theta_dot[:, None] ** 2 * radial)
        return pos, vel, force

    raise AssertionError(f"no dynamics for scenario {scenario_id}")


def simulate(scenario_id: int, params: SimParams) -> Trajectory:
    """Simulate a scenario on the fixed dt grid covering params.duration."""
    scenario_spec(scenario_id)  # validates the id
    n_steps = int(round(params.duration / params.dt))
    ts = np.arange(n_steps + 1) * params.dt
    pos, vel, force = _kinematics(scenario_id, params, ts)
    states = []
    for k in range(len(ts)):
        vdir, speed = _unit_or_zero(vel[k])
        fdir, _ = _unit_or_zero(force[k])
        states.append(TrajectoryState(float(ts[k]), pos[k], vdir, fdir, speed))
    return Trajectory(scenario_id, states, params)


def canonical_params(scenario_id: int) -> SimParams:
    """Default parameters per scenario; durations end just as the motion does."""
    scenario_spec(scenario_id)
    sin60 = math.sin(math.radians(60.0))
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    theta0 = PENDULUM_RELEASE_ANGLE
    table = {
        1: dict(initial_speed=6.0, initial_direction=(0.5, 0.0, sin60), duration=1.225),
        2: dict(initial_speed=0.0, initial_direction=(0.0, 0.0, -1.0), duration=0.638),
        3: dict(initial_speed=10.0, initial_direction=(inv_sqrt2, 0.0, inv_sqrt2), duration=1.441),
        4: dict(initial_speed=2.0, initial_direction=(1.0, 0.0, 0.0), duration=1.5),
        5: dict(initial_speed=0.0, initial_direction=(0.0, 0.0, 1.0), duration=2.0),
        6: dict(initial_speed=0.0, initial_direction=(0.0, 0.0, -1.0), duration=1.2),
        7: dict(initial_speed=0.0, initial_direction=(1.0, 0.0, 0.0), duration=1.866),
        8: dict(initial_speed=0.0, initial_direction=(1.0, 0.0, 0.0), duration=1.2),
        9: dict(initial_speed=0.0, initial_direction=(1.0, 0.0, 0.0), duration=1.2),
        10: dict(initial_speed=3.0, initial_direction=(1.0, 0.0, 0.0), duration=1.4),
        11: dict(initial_speed=3.0, initial_direction=(0.0, 0.0, 1.0), duration=0.611),
        12: dict(
            initial_speed=0.0,
            initial_direction=(math.sin(theta0), 0.0, -math.cos(theta0)),
            duration=2.052,
        ),
    }
    return SimParams(**table[scenario_id])


def sample_states(traj: Trajectory, n: int = STATES_PER_ENTRY) -> list[TrajectoryState]:
    """Pick n states equally spaced by index, always keeping both endpoints."""
    if n < 2:
        raise ParameterError(f"need at least 2 sampled states, got {n}")
    total = len(traj.states)
    if total < n:
        raise ParameterError(f"trajectory has {total} states, cannot sample {n}")
    return [traj.states[int(round(k * (total - 1) / (n - 1)))] for k in range(n)]


def state_raw_features(state: TrajectoryState, view: ViewpointSpec, total_time: float) -> np.ndarray:
    """Deterministic 10-component state feature for one viewpoint.

    Camera-frame position, velocity direction, and force direction (rotation
    only, the camera offset is not subtracted), plus the normalized phase
    t / total_time.
    """
    if total_time <= 0:
        raise ParameterError("total_time must be positive")
    rot = rotation_matrix(view.azimuth, view.elevation)
    return np.concatenate(
        [rot @ state.position, rot @ state.velocity_dir, rot @ state.force_dir,
         [state.t / total_time]]
    )


def trajectory_raw_features(traj: Trajectory, view: ViewpointSpec, n: int = STATES_PER_ENTRY) -> np.ndarray:
    """Raw features of the n sampled states, stacked as an (n, 10) array."""
    sampled = sample_states(traj, n)
    total = traj.total_time
    return np.stack([state_raw_features(s, view, total) for s in sampled])
