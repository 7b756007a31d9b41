"""Pinhole projection of 3D trajectories onto a viewpoint's image plane.

Coordinate conventions used throughout:

- World frame: right-handed, z up. The camera orbits the world origin at a
  fixed distance, positioned by (azimuth, elevation) in degrees, and looks
  at the origin.
- Camera frame: x right, y up, z depth along the viewing direction, so
  points in front of the camera have positive z.
- Image frame: u right, v up, in normalized image units (focal / depth),
  not pixels. Camera distance is a canonical constant because force
  magnitude and camera distance are factored out of the catalog.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import FlowUndefinedError, ParameterError, ProjectionError

if TYPE_CHECKING:
    from .dynamics import Trajectory, TrajectoryState

CANONICAL_DISTANCE = 10.0
CANONICAL_FOCAL = 1.0

_FLOW_EPS = 1e-9


def rotation_matrix(azimuth: float, elevation: float) -> np.ndarray:
    """World-to-camera rotation for a camera at (azimuth, elevation) degrees.

    Rows are the camera's right / up / forward axes expressed in world
    coordinates, so ``R @ p`` maps a world vector into the camera frame.
    """
    a = math.radians(azimuth)
    e = math.radians(elevation)
    ca, sa = math.cos(a), math.sin(a)
    ce, se = math.cos(e), math.sin(e)
    right = (-sa, ca, 0.0)
    up = (-se * ca, -se * sa, ce)
    forward = (-ce * ca, -ce * sa, -se)
    return np.array([right, up, forward], dtype=float)


@dataclass(frozen=True)
class Camera:
    azimuth: float
    elevation: float
    distance: float = CANONICAL_DISTANCE
    focal: float = CANONICAL_FOCAL

    def __post_init__(self):
        if self.distance <= 0:
            raise ParameterError(f"camera distance must be positive, got {self.distance}")

    @property
    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.azimuth, self.elevation)

    @property
    def position(self) -> np.ndarray:
        a = math.radians(self.azimuth)
        e = math.radians(self.elevation)
        return self.distance * np.array(
            [math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e)]
        )


def camera_for_view(view) -> Camera:
    """Build the canonical catalog camera for a ViewpointSpec."""
    return Camera(view.azimuth, view.elevation)


@dataclass(frozen=True)
class ImagePoint:
    u: float
    v: float


def project_point(cam: Camera, point) -> ImagePoint:
    """Project a world point through the pinhole camera."""
    rel = cam.rotation @ (np.asarray(point, dtype=float) - cam.position)
    depth = rel[2]
    if depth <= 1e-12:
        raise ProjectionError(f"point {np.asarray(point).tolist()} is at or behind the camera plane")
    return ImagePoint(cam.focal * rel[0] / depth, cam.focal * rel[1] / depth)


def project_curve(cam: Camera, traj: "Trajectory | Sequence[TrajectoryState]") -> list[ImagePoint]:
    """Project every trajectory state, preserving order and count."""
    states = traj.states if hasattr(traj, "states") else list(traj)
    points = []
    for i, state in enumerate(states):
        try:
            points.append(project_point(cam, state.position))
        except ProjectionError:
            raise ProjectionError(f"state {i} is at or behind the camera plane") from None
    return points


def image_direction(cam: Camera, vec) -> np.ndarray:
    """Unit image-plane direction of a world vector; zero if along the optical axis."""
    in_plane = (cam.rotation @ np.asarray(vec, dtype=float))[:2]
    norm = float(np.linalg.norm(in_plane))
    if norm < _FLOW_EPS:
        return np.zeros(2)
    return in_plane / norm


def project_flow(cam: Camera, state: "TrajectoryState") -> np.ndarray:
    """Image-plane direction of a state's instantaneous 3D motion.

    Returns a unit 2-vector, or the zero vector when the motion is along
    the optical axis. Raises FlowUndefinedError for zero-velocity states;
    callers treat those as static.
    """
    if float(np.linalg.norm(state.velocity_dir)) < _FLOW_EPS:
        raise FlowUndefinedError("flow direction undefined for a zero-velocity state")
    rel = cam.rotation @ (np.asarray(state.position, dtype=float) - cam.position)
    if rel[2] <= 1e-12:
        raise ProjectionError("state is at or behind the camera plane")
    return image_direction(cam, state.velocity_dir)
