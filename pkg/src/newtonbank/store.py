"""File formats and bank construction.

Bank file layout (single file, text header then binary payload):

    NEWTONBANK/1\n
    <manifest byte length>\n
    <manifest JSON, UTF-8>
    <payload: float32 little-endian, C-order, shape (entries, D, states)>

The manifest carries the catalog, the per-entry sampled trajectory states
(t, position, velocity direction, force direction), the descriptor dim,
an encoder tag, and the build seed. The payload holds one D x 10
state-descriptor matrix per entry, in entry_id order. Encoder parameter
files use the same header scheme with a float64 payload.

Query sets are flat CSV, one record per row: an id, optional ground-truth
entry and state, an optional ground-truth 3D curve packed into one field
("x y z;x y z;..."), and the raw feature columns f0..f{R-1}. Any external
feature extractor can produce this file.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .catalog import CatalogEntry, ViewpointSpec, build_catalog
from .dynamics import (
    RAW_FEATURE_DIM,
    STATES_PER_ENTRY,
    TrajectoryState,
    canonical_params,
    sample_states,
    simulate,
    state_raw_features,
    trajectory_raw_features,
)
from .errors import IngestionError, StorageError
from .matching import (
    DEFAULT_DESCRIPTOR_DIM,
    EncoderParams,
    ScenarioBank,
    StateDescriptorMatrix,
    encode,
    identity_params,
)
from .metrics import Curve3D

BANK_MAGIC = "NEWTONBANK/1"
PARAMS_MAGIC = "NEWTONBANK-PARAMS/1"


@dataclass
class BankData:
    bank: ScenarioBank
    trajectories: list[list[TrajectoryState]]  # sampled states per entry
    encoder_tag: str
    seed: int
    raw_dim: int = RAW_FEATURE_DIM

    @property
    def states_per_entry(self) -> int:
        return self.bank.stacked.shape[2]


def build_bank(descriptor_dim: int = DEFAULT_DESCRIPTOR_DIM,
               params: EncoderParams | None = None,
               seed: int = 0,
               n_states: int = STATES_PER_ENTRY) -> BankData:
    """Simulate all scenarios and encode the 66 state-descriptor matrices."""
    if params is None:
        params = identity_params(descriptor_dim, RAW_FEATURE_DIM)
        tag = "identity"
    else:
        tag = "trained"
    catalog = build_catalog()
    trajectories = {
        sid: simulate(sid, canonical_params(sid)) for sid in range(1, 13)
    }
    matrices = []
    sampled: list[list[TrajectoryState]] = []
    for entry in catalog:
        traj = trajectories[entry.scenario_id]
        feats = trajectory_raw_features(traj, entry.viewpoint, n_states)
        columns = np.column_stack([encode(f, params) for f in feats])
        matrices.append(StateDescriptorMatrix(entry.entry_id, columns))
        sampled.append(sample_states(traj, n_states))
    bank = ScenarioBank(catalog, matrices, descriptor_dim)
    return BankData(bank, sampled, tag, seed, raw_dim=int(params.weight.shape[1]))


def _state_row(state: TrajectoryState) -> list[float]:
    return [
        float(state.t),
        *map(float, state.position),
        *map(float, state.velocity_dir),
        *map(float, state.force_dir),
    ]


def _state_from_row(row: list[float]) -> TrajectoryState:
    pos = np.array(row[1:4])
    vdir = np.array(row[4:7])
    fdir = np.array(row[7:10])
    # magnitudes are factored out of the bank; keep a unit flag as speed
    return TrajectoryState(row[0], pos, vdir, fdir, float(np.linalg.norm(vdir)))


def write_bank(path: str, data: BankData) -> None:
    """Serialize a bank; the write is atomic (temp file + rename)."""
    stacked = data.bank.stacked
    payload = np.ascontiguousarray(stacked, dtype="<f4").tobytes()
    manifest = {
        "format": BANK_MAGIC,
        "descriptor_dim": data.bank.descriptor_dim,
        "states_per_entry": int(stacked.shape[2]),
        "entry_count": len(data.bank),
        "encoder": data.encoder_tag,
        "seed": data.seed,
        "raw_dim": data.raw_dim,
        "payload_bytes": len(payload),
        "catalog": [
            {
                "entry_id": e.entry_id,
                "scenario_id": e.scenario_id,
                "azimuth": e.viewpoint.azimuth,
                "elevation": e.viewpoint.elevation,
            }
            for e in data.bank.catalog
        ],
        "trajectories": [[_state_row(s) for s in states] for states in data.trajectories],
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(f"{BANK_MAGIC}\n".encode())
            fh.write(f"{len(blob)}\n".encode())
            fh.write(blob)
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"cannot write bank to {path}: {exc}") from exc


def _read_header(fh, magic: str, path: str) -> dict:
    first = fh.readline().decode("ascii", "replace").strip()
    if first != magic:
        raise StorageError(f"{path}: expected {magic} header, found {first!r}")
    try:
        length = int(fh.readline().strip())
        return json.loads(fh.read(length))
    except (ValueError, json.JSONDecodeError) as exc:
        raise StorageError(f"{path}: corrupt manifest: {exc}") from exc


def read_bank(path: str) -> BankData:
    """Load a bank file; rejects unknown versions and truncated payloads."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise StorageError(f"cannot read bank at {path}: {exc}") from exc
    with fh:
        manifest = _read_header(fh, BANK_MAGIC, path)
        entries = manifest["entry_count"]
        dim = manifest["descriptor_dim"]
        n_states = manifest["states_per_entry"]
        payload = fh.read()
    expected = entries * dim * n_states * 4
    if len(payload) != expected or manifest.get("payload_bytes") != expected:
        raise StorageError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    stacked = np.frombuffer(payload, dtype="<f4").reshape(entries, dim, n_states)
    catalog = [
        CatalogEntry(c["entry_id"], c["scenario_id"], ViewpointSpec(c["azimuth"], c["elevation"]))
        for c in manifest["catalog"]
    ]
    matrices = [
        StateDescriptorMatrix(catalog[i].entry_id, stacked[i].astype(np.float64))
        for i in range(entries)
    ]
    trajectories = [
        [_state_from_row(row) for row in states] for states in manifest["trajectories"]
    ]
    bank = ScenarioBank(catalog, matrices, dim)
    return BankData(
        bank, trajectories, manifest["encoder"], manifest["seed"],
        raw_dim=manifest.get("raw_dim", RAW_FEATURE_DIM),
    )


def write_params(path: str, params: EncoderParams) -> None:
    sections = [params.weight, params.bias, params.classifier_weight, params.classifier_bias]
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in sections)
    manifest = {
        "format": PARAMS_MAGIC,
        "descriptor_dim": int(params.weight.shape[0]),
        "raw_dim": int(params.weight.shape[1]),
        "entries": int(params.classifier_weight.shape[0]),
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(f"{PARAMS_MAGIC}\n".encode())
            fh.write(f"{len(blob)}\n".encode())
            fh.write(blob)
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"cannot write params to {path}: {exc}") from exc


def read_params(path: str) -> EncoderParams:
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise StorageError(f"cannot read params at {path}: {exc}") from exc
    with fh:
        manifest = _read_header(fh, PARAMS_MAGIC, path)
        d, r, n = manifest["descriptor_dim"], manifest["raw_dim"], manifest["entries"]
        payload = fh.read()
    counts = [d * r, d, n * d, n]
    if len(payload) != sum(counts) * 8:
        raise StorageError(f"{path}: params payload truncated")
    flat = np.frombuffer(payload, dtype="<f8")
    offsets = np.cumsum([0] + counts)
    return EncoderParams(
        flat[offsets[0]:offsets[1]].reshape(d, r).copy(),
        flat[offsets[1]:offsets[2]].copy(),
        flat[offsets[2]:offsets[3]].reshape(n, d).copy(),
        flat[offsets[3]:offsets[4]].copy(),
    )


@dataclass
class QueryRecord:
    id: str
    features: np.ndarray
    gt_entry: int | None = None
    gt_state: int | None = None
    gt_curve: Curve3D | None = None


@dataclass
class QuerySet:
    records: list[QueryRecord]
    raw_dim: int


def _pack_curve(curve: Curve3D | None) -> str:
    if curve is None:
        return ""
    return ";".join(" ".join(repr(float(v)) for v in pt) for pt in curve.points)


def _unpack_curve(text: str) -> Curve3D | None:
    if not text:
        return None
    pts = [[float(v) for v in chunk.split()] for chunk in text.split(";")]
    return Curve3D(np.array(pts))


def write_queryset(path: str, records: list[QueryRecord]) -> None:
    if not records:
        raise IngestionError("refusing to write an empty query set")
    raw_dim = len(records[0].features)
    header = ["id", "gt_entry", "gt_state", "gt_curve"] + [f"f{i}" for i in range(raw_dim)]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for rec in records:
                writer.writerow(
                    [
                        rec.id,
                        "" if rec.gt_entry is None else rec.gt_entry,
                        "" if rec.gt_state is None else rec.gt_state,
                        _pack_curve(rec.gt_curve),
                    ]
                    + [repr(float(v)) for v in rec.features]
                )
    except OSError as exc:
        raise StorageError(f"cannot write query set to {path}: {exc}") from exc


def read_queryset(path: str) -> QuerySet:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise StorageError(f"cannot read query set at {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:4] != ["id", "gt_entry", "gt_state", "gt_curve"]:
            raise IngestionError(f"{path}: not a query set CSV (bad header)")
        raw_dim = len(header) - 4
        if raw_dim < 1:
            raise IngestionError(f"{path}: no feature columns")
        records = []
        for ln, row in enumerate(reader, start=2):
            if len(row) != 4 + raw_dim:
                raise IngestionError(f"{path}: line {ln} has {len(row)} fields, expected {4 + raw_dim}")
            try:
                gt_entry = int(row[1]) if row[1] else None
                gt_state = int(row[2]) if row[2] else None
                features = np.array([float(v) for v in row[4:]])
                curve = _unpack_curve(row[3])
            except ValueError as exc:
                raise IngestionError(f"{path}: line {ln}: {exc}") from exc
            if gt_entry is not None and not 1 <= gt_entry <= 66:
                raise IngestionError(f"{path}: line {ln}: gt_entry {gt_entry} outside 1..66")
            if gt_state is not None and gt_state < 1:
                raise IngestionError(f"{path}: line {ln}: gt_state {gt_state} must be >= 1")
            records.append(QueryRecord(row[0], features, gt_entry, gt_state, curve))
    if not records:
        raise IngestionError(f"{path}: query set has no records")
    return QuerySet(records, raw_dim)


def queryset_from_bank(data: BankData) -> list[QueryRecord]:
    """One query per bank state, carrying full ground truth (closed loop)."""
    records = []
    for entry, states in zip(data.bank.catalog, data.trajectories):
        total_time = states[-1].t
        curve = Curve3D(np.stack([s.position for s in states]))
        for k, state in enumerate(states, start=1):
            features = state_raw_features(state, entry.viewpoint, total_time)
            records.append(
                QueryRecord(
                    f"e{entry.entry_id:02d}s{k:02d}", features,
                    gt_entry=entry.entry_id, gt_state=k, gt_curve=curve,
                )
            )
    return records


def noisy_queryset(data: BankData, sigma: float, seed: int) -> list[QueryRecord]:
    """Bank-state queries with Gaussian feature noise, for training runs."""
    rng = np.random.default_rng(seed)
    records = queryset_from_bank(data)
    for rec in records:
        rec.features = rec.features + rng.normal(0.0, sigma, size=rec.features.shape)
    return records


def write_report_csv(path: str, metric: str, per_scenario: dict[int, float], average: float) -> None:
    """Twelve per-scenario columns plus the average, one labelled row."""
    header = ["metric"] + [f"scenario_{i}" for i in range(1, 13)] + ["avg"]
    row = [metric] + [
        repr(float(per_scenario[i])) if i in per_scenario else "nan" for i in range(1, 13)
    ] + [repr(float(average))]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerow(row)
    except OSError as exc:
        raise StorageError(f"cannot write report to {path}: {exc}") from exc


def write_loss_csv(path: str, losses: list[float]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss"])
            for i, loss in enumerate(losses):
                writer.writerow([i, repr(float(loss))])
    except OSError as exc:
        raise StorageError(f"cannot write loss curve to {path}: {exc}") from exc


def write_state_sims_csv(path: str, sims: np.ndarray) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state", "similarity"])
            for i, s in enumerate(sims, start=1):
                writer.writerow([i, repr(float(s))])
    except OSError as exc:
        raise StorageError(f"cannot write similarities to {path}: {exc}") from exc
