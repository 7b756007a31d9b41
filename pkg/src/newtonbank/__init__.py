"""Newtonian scenario bank: simulation, state retrieval, and motion metrics."""

from .catalog import (
    CatalogEntry,
    ScenarioSpec,
    ViewpointSpec,
    build_catalog,
    enumerate_viewpoints,
    lookup,
    scenario_spec,
)
from .camera import Camera, ImagePoint, camera_for_view, project_curve, project_flow, project_point
from .dynamics import (
    SimParams,
    Trajectory,
    TrajectoryState,
    canonical_params,
    sample_states,
    simulate,
    state_raw_features,
    trajectory_raw_features,
)
from .matching import (
    EncoderParams,
    FusionConfig,
    MatchResult,
    ScenarioBank,
    StateDescriptorMatrix,
    TrainConfig,
    TrainResult,
    cosine_sim,
    encode,
    fuse,
    identity_params,
    image_scores,
    loss_gradients,
    motion_scores,
    nll_loss,
    one_hot,
    predict,
    score_entry,
    train_encoder,
)
from .metrics import (
    Curve3D,
    FMeasureResult,
    angular_error,
    f_measure,
    mhd,
    resample,
    resample_pair,
    slide_align,
)
from .store import (
    BankData,
    QueryRecord,
    QuerySet,
    build_bank,
    noisy_queryset,
    queryset_from_bank,
    read_bank,
    read_params,
    read_queryset,
    write_bank,
    write_params,
    write_queryset,
)

__version__ = "0.1.0"
