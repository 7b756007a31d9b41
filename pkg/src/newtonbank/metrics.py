"""Curve comparison metrics: sliding-alignment F-measure, MHD, angular error."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricError, ParameterError

RESAMPLE_POINTS = 120
THRESHOLD_FRACTION = 0.05  # of the ground-truth arc length
_ZERO_LENGTH = 1e-12


@dataclass(frozen=True)
class Curve3D:
    points: np.ndarray  # (n, 3)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise MetricError(f"curve needs at least 2 points of 3 coordinates, got {pts.shape}")
        if not np.isfinite(pts).all():
            raise MetricError("curve has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def arc_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


@dataclass(frozen=True)
class FMeasureResult:
    precision: float
    recall: float
    f: float
    best_offset: int
    threshold: float


def resample(curve: Curve3D, n: int) -> Curve3D:
    """n points uniformly spaced by arc length, endpoints kept exactly."""
    if n < 2:
        raise ParameterError(f"need at least 2 resampled points, got {n}")
    seg = np.linalg.norm(np.diff(curve.points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] < _ZERO_LENGTH:
        raise MetricError("cannot resample a zero-length curve")
    targets = np.linspace(0.0, cum[-1], n)
    cols = [np.interp(targets, cum, curve.points[:, k]) for k in range(3)]
    return Curve3D(np.column_stack(cols))


def slide_align(a: Curve3D, b: Curve3D) -> tuple[int, float]:
    """Slide the shorter curve along the longer; min mean pointwise distance.

    Exhaustive scan over every integer offset; ties go to the smallest
    offset. Both curves should already share a per-point spacing.
    """
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    ns = len(short)
    best_offset, best_mean = 0, math.inf
    for offset in range(len(long_) - ns + 1):
        mean = float(
            np.linalg.norm(short.points - long_.points[offset:offset + ns], axis=1).mean()
        )
        if mean < best_mean:
            best_offset, best_mean = offset, mean
    return best_offset, best_mean


def f_measure(pred: Curve3D, gt: Curve3D, threshold: float) -> FMeasureResult:
    """Precision/recall/F over aligned point pairs within the distance threshold.

    Overhang of the longer curve has no aligned counterpart and counts
    against recall when the ground truth is longer, against precision when
    the prediction is longer. Scores are percentages in [0, 100].
    """
    if threshold <= 0:
        raise ParameterError(f"threshold must be positive, got {threshold}")
    offset, _ = slide_align(pred, gt)
    if len(pred) <= len(gt):
        dists = np.linalg.norm(pred.points - gt.points[offset:offset + len(pred)], axis=1)
    else:
        dists = np.linalg.norm(pred.points[offset:offset + len(gt)] - gt.points, axis=1)
    tp = int((dists <= threshold).sum())
    precision = 100.0 * tp / len(pred)
    recall = 100.0 * tp / len(gt)
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return FMeasureResult(precision, recall, f, offset, threshold)


def mhd(a: Curve3D, b: Curve3D) -> float:
    """Modified Hausdorff Distance: max of the two directed mean nearest distances."""
    diff = a.points[:, None, :] - b.points[None, :, :]
    d = np.linalg.norm(diff, axis=2)
    return float(max(d.min(axis=1).mean(), d.min(axis=0).mean()))


def angular_error(pred: np.ndarray, gt: np.ndarray) -> float:
    """Angle in radians between two image-plane directions.

    Zero vs zero is a perfect match (0); zero vs nonzero is maximally
    uninformative and scores pi/2 by convention.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    n_pred = float(np.linalg.norm(pred))
    n_gt = float(np.linalg.norm(gt))
    if n_pred < 1e-9 and n_gt < 1e-9:
        return 0.0
    if n_pred < 1e-9 or n_gt < 1e-9:
        return math.pi / 2
    cos = float(np.dot(pred / n_pred, gt / n_gt))
    return math.acos(max(-1.0, min(1.0, cos)))


def resample_pair(pred: Curve3D, gt: Curve3D, n_longer: int = RESAMPLE_POINTS) -> tuple[Curve3D, Curve3D]:
    """Resample two curves to a shared per-point spacing before alignment.

    The longer curve gets n_longer points; the shorter one gets however
    many points that spacing implies. Zero-length curves pass through
    unchanged (a static state's path is a point).
    """
    len_pred, len_gt = pred.arc_length, gt.arc_length
    longest = max(len_pred, len_gt)
    if longest < _ZERO_LENGTH:
        return pred, gt
    spacing = longest / (n_longer - 1)

    def _counts(length: float) -> int:
        return max(2, int(round(length / spacing)) + 1)

    new_pred = pred if len_pred < _ZERO_LENGTH else resample(pred, _counts(len_pred))
    new_gt = gt if len_gt < _ZERO_LENGTH else resample(gt, _counts(len_gt))
    return new_pred, new_gt


def default_threshold(gt: Curve3D) -> float:
    """F-measure threshold: a fixed fraction of the ground-truth arc length."""
    return max(THRESHOLD_FRACTION * gt.arc_length, 1e-9)
