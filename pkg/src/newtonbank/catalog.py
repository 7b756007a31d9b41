"""The twelve Newtonian scenarios and the 66-entry scenario x viewpoint catalog.

Scenarios are distinguished by the path of the object, whether the applied
force is continuous, and whether the object touches a support surface.
Each scenario declares a camera symmetry class which fixes how many
viewpoints it contributes to the catalog:

    full   8 azimuths (0, 45, ..., 315)          scenarios 1, 3, 4, 8, 9, 10
    half   4 azimuths (0, 45, 90, 135)           scenarios 2, 12
    axial  3 elevations (15, 45, 75), azimuth 0  scenarios 6, 7, 11
    point  1 viewpoint                           scenario 5

6*8 + 2*4 + 3*3 + 1 = 66 entries, ordered by (scenario_id, azimuth,
elevation) and numbered 1..66.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import CatalogError

AXIAL_ELEVATIONS = (15.0, 45.0, 75.0)
DEFAULT_ELEVATION = 30.0


class MotionClass(Enum):
    PROJECTILE = "projectile"
    LINEAR = "linear"
    FALL = "fall"
    SWING = "swing"
    ROLL = "roll"
    SLIDE = "slide"
    STATIC = "static"
    PUSH = "push"


class ForceMode(Enum):
    IMPULSE = "impulse"
    CONTINUOUS = "continuous"
    NONE = "none"


class Symmetry(Enum):
    FULL = "full"
    AXIAL = "axial"
    HALF = "half"
    POINT = "point"


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    name: str
    motion_class: MotionClass
    force_mode: ForceMode
    contact: bool
    symmetry: Symmetry


@dataclass(frozen=True)
class ViewpointSpec:
    azimuth: float
    elevation: float


@dataclass(frozen=True)
class CatalogEntry:
    entry_id: int
    scenario_id: int
    viewpoint: ViewpointSpec


SCENARIO_SPECS: tuple[ScenarioSpec, ...] = (
    ScenarioSpec(1, "arc throw", MotionClass.PROJECTILE, ForceMode.IMPULSE, False, Symmetry.FULL),
    ScenarioSpec(2, "vertical fall", MotionClass.FALL, ForceMode.NONE, False, Symmetry.HALF),
    ScenarioSpec(3, "projectile launch", MotionClass.PROJECTILE, ForceMode.IMPULSE, False, Symmetry.FULL),
    ScenarioSpec(4, "airborne drift", MotionClass.LINEAR, ForceMode.IMPULSE, False, Symmetry.FULL),
    ScenarioSpec(5, "stability", MotionClass.STATIC, ForceMode.NONE, True, Symmetry.POINT),
    ScenarioSpec(6, "drop onto plane", MotionClass.FALL, ForceMode.NONE, False, Symmetry.AXIAL),
    ScenarioSpec(7, "conical swing", MotionClass.SWING, ForceMode.NONE, False, Symmetry.AXIAL),
    ScenarioSpec(8, "continuous push", MotionClass.PUSH, ForceMode.CONTINUOUS, True, Symmetry.FULL),
    ScenarioSpec(9, "incline slide", MotionClass.SLIDE, ForceMode.NONE, True, Symmetry.FULL),
    ScenarioSpec(10, "friction slide", MotionClass.SLIDE, ForceMode.IMPULSE, True, Symmetry.FULL),
    ScenarioSpec(11, "vertical toss", MotionClass.LINEAR, ForceMode.IMPULSE, False, Symmetry.AXIAL),
    ScenarioSpec(12, "pendulum swing", MotionClass.SWING, ForceMode.NONE, False, Symmetry.HALF),
)

_SPEC_BY_ID = {spec.id: spec for spec in SCENARIO_SPECS}


def scenario_spec(scenario_id: int) -> ScenarioSpec:
    """Return the canonical spec for a scenario id in 1..12."""
    try:
        return _SPEC_BY_ID[scenario_id]
    except KeyError:
        raise CatalogError(f"unknown scenario id {scenario_id!r}, expected 1..12") from None


def enumerate_viewpoints(scenario: ScenarioSpec) -> list[ViewpointSpec]:
    """List the catalog viewpoints of a scenario, in catalog order."""
    if scenario.id not in _SPEC_BY_ID:
        raise CatalogError(f"unknown scenario id {scenario.id!r}")
    if scenario.symmetry is Symmetry.FULL:
        return [ViewpointSpec(45.0 * k, DEFAULT_ELEVATION) for k in range(8)]
    if scenario.symmetry is Symmetry.HALF:
        # Views 180 degrees apart show the same motion mirrored, so only
        # the first half of the azimuth sweep is kept.
        return [ViewpointSpec(45.0 * k, DEFAULT_ELEVATION) for k in range(4)]
    if scenario.symmetry is Symmetry.AXIAL:
        return [ViewpointSpec(0.0, e) for e in AXIAL_ELEVATIONS]
    return [ViewpointSpec(0.0, DEFAULT_ELEVATION)]


def build_catalog() -> list[CatalogEntry]:
    """Enumerate all 66 scenario x viewpoint entries in deterministic order."""
    entries: list[CatalogEntry] = []
    for spec in SCENARIO_SPECS:
        views = sorted(enumerate_viewpoints(spec), key=lambda v: (v.azimuth, v.elevation))
        for view in views:
            entries.append(CatalogEntry(len(entries) + 1, spec.id, view))
    return entries


_CATALOG = build_catalog()


def lookup(entry_id: int) -> CatalogEntry:
    """Return the catalog entry for an id in 1..66."""
    if not isinstance(entry_id, int) or not 1 <= entry_id <= len(_CATALOG):
        raise CatalogError(f"entry id {entry_id!r} outside 1..{len(_CATALOG)}")
    return _CATALOG[entry_id - 1]
