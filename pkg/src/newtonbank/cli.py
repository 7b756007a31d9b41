"""Command-line surface tying simulation, bank building, retrieval,
training, evaluation, and plotting together.

Verbs: `bank build`, `bank inspect`, `query`, `train`, `eval`, `plot`.
When --bank is omitted, the bank is looked up at $NEWTON_BANK_DIR/bank.nbk.

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 numeric
failure. Error messages go to stderr.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import store
from .camera import camera_for_view, project_curve, project_flow
from .errors import (
    BankError,
    CatalogError,
    FlowUndefinedError,
    IngestionError,
    MetricError,
    ParameterError,
    ProjectionError,
    StorageError,
    TrainingError,
)
from .matching import (
    FusionConfig,
    TrainConfig,
    encode,
    identity_params,
    predict,
    train_encoder,
)
from .metrics import Curve3D, default_threshold, f_measure, mhd, angular_error, resample_pair

BANK_DIR_ENV = "NEWTON_BANK_DIR"
DEFAULT_BANK_NAME = "bank.nbk"


def _default_bank_path(required: bool = True) -> str | None:
    bank_dir = os.environ.get(BANK_DIR_ENV)
    if bank_dir:
        return os.path.join(bank_dir, DEFAULT_BANK_NAME)
    if required:
        raise ParameterError(f"no --bank given and ${BANK_DIR_ENV} is not set")
    return None


def _resolve_bank(args) -> str:
    return args.bank if args.bank else _default_bank_path()


def _load_params(args, data: store.BankData):
    if getattr(args, "params", None):
        return store.read_params(args.params)
    return identity_params(data.bank.descriptor_dim, data.raw_dim, n_entries=len(data.bank))


def _check_feature_dim(queries: store.QuerySet, data: store.BankData) -> None:
    if queries.raw_dim != data.raw_dim:
        raise IngestionError(
            f"query features have {queries.raw_dim} components, bank expects {data.raw_dim}"
        )


def cmd_bank_build(args) -> int:
    out = args.out if args.out else _default_bank_path()
    params = store.read_params(args.params) if args.params else None
    data = store.build_bank(descriptor_dim=args.dim, params=params, seed=args.seed)
    store.write_bank(out, data)
    payload = len(data.bank) * data.bank.descriptor_dim * data.states_per_entry * 4
    print(f"wrote bank with {len(data.bank)} entries ({payload} payload bytes) to {out}")
    return 0


def cmd_bank_inspect(args) -> int:
    path = _resolve_bank(args)
    data = store.read_bank(path)
    counts: dict[int, int] = {}
    for entry in data.bank.catalog:
        counts[entry.scenario_id] = counts.get(entry.scenario_id, 0) + 1
    payload = len(data.bank) * data.bank.descriptor_dim * data.states_per_entry * 4
    print(f"bank: {path}")
    print(f"format: {store.BANK_MAGIC}")
    print(f"entries: {len(data.bank)}")
    print(f"descriptor_dim: {data.bank.descriptor_dim}")
    print(f"states_per_entry: {data.states_per_entry}")
    print(f"raw_dim: {data.raw_dim}")
    print(f"encoder: {data.encoder_tag}")
    print(f"seed: {data.seed}")
    print(f"payload_bytes: {payload}")
    print("views per scenario: " + " ".join(f"{sid}:{counts[sid]}" for sid in sorted(counts)))
    return 0


def cmd_query(args) -> int:
    data = store.read_bank(_resolve_bank(args))
    queries = store.read_queryset(args.queries)
    _check_feature_dim(queries, data)
    params = _load_params(args, data)
    cfg = FusionConfig(args.lam)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        from . import figures
    for rec in queries.records:
        result = predict(encode(rec.features, params), data.bank, params, cfg)
        conf = float(result.confidences[result.entry_id - 1])
        print(f"{rec.id} h={result.entry_id} s_h={result.state} confidence={conf:.6f}")
        if args.out:
            store.write_state_sims_csv(
                os.path.join(args.out, f"{rec.id}_sims.csv"), result.per_state_sims
            )
            entry = data.bank.catalog[result.entry_id - 1]
            points = project_curve(camera_for_view(entry.viewpoint),
                                   data.trajectories[result.entry_id - 1])
            figures.save_query_figure(
                points, os.path.join(args.out, f"{rec.id}_curve.svg"), rec.id
            )
    return 0


def cmd_train(args) -> int:
    data = store.read_bank(_resolve_bank(args))
    queries = store.read_queryset(args.queries)
    _check_feature_dim(queries, data)
    unlabeled = [rec.id for rec in queries.records if rec.gt_entry is None]
    if unlabeled:
        raise IngestionError(f"training needs gt_entry for every record, missing: {unlabeled}")
    dataset = [(rec.features, rec.gt_entry) for rec in queries.records]
    config = TrainConfig(
        iters=args.iters, batch_size=args.batch, fusion=FusionConfig(args.lam), seed=args.seed
    )
    result = train_encoder(dataset, data.bank, config)
    os.makedirs(args.out, exist_ok=True)
    params_path = os.path.join(args.out, "encoder.params")
    loss_path = os.path.join(args.out, "loss.csv")
    store.write_params(params_path, result.params)
    store.write_loss_csv(loss_path, result.losses)
    from . import figures
    figures.save_loss_figure(result.losses, os.path.join(args.out, "loss.svg"))
    final = result.losses[-1] if result.losses else float("nan")
    print(f"trained {args.iters} iterations, final loss {final!r}")
    print(f"wrote {params_path} and {loss_path}")
    return 0


def _flow_or_zero(cam, state) -> np.ndarray:
    try:
        return project_flow(cam, state)
    except FlowUndefinedError:
        return np.zeros(2)


def _require(records, field: str, metric: str) -> None:
    missing = [rec.id for rec in records if getattr(rec, field) is None]
    if missing:
        raise IngestionError(f"metric {metric} needs {field} for every record, missing: {missing}")


def cmd_eval(args) -> int:
    data = store.read_bank(_resolve_bank(args))
    queries = store.read_queryset(args.queries)
    _check_feature_dim(queries, data)
    params = _load_params(args, data)
    cfg = FusionConfig(args.lam)
    records = queries.records
    _require(records, "gt_entry", args.metric)
    if args.metric in ("fmeasure", "mhd"):
        _require(records, "gt_curve", args.metric)
    if args.metric == "flow":
        _require(records, "gt_state", args.metric)
        for rec in records:
            if rec.gt_state > data.states_per_entry:
                raise IngestionError(
                    f"record {rec.id}: gt_state {rec.gt_state} exceeds "
                    f"{data.states_per_entry} states per entry"
                )

    by_scenario: dict[int, list[float]] = {}
    for rec in records:
        result = predict(encode(rec.features, params), data.bank, params, cfg)
        pred_entry = result.entry_id
        pred_curve = Curve3D(np.stack([s.position for s in data.trajectories[pred_entry - 1]]))
        if args.metric == "fmeasure":
            pred_r, gt_r = resample_pair(pred_curve, rec.gt_curve)
            threshold = args.threshold if args.threshold else default_threshold(rec.gt_curve)
            value = f_measure(pred_r, gt_r, threshold).f
        elif args.metric == "mhd":
            pred_r, gt_r = resample_pair(pred_curve, rec.gt_curve)
            value = mhd(pred_r, gt_r)
        else:
            pred_cam = camera_for_view(data.bank.catalog[pred_entry - 1].viewpoint)
            pred_state = data.trajectories[pred_entry - 1][result.state - 1]
            gt_cam = camera_for_view(data.bank.catalog[rec.gt_entry - 1].viewpoint)
            gt_state = data.trajectories[rec.gt_entry - 1][rec.gt_state - 1]
            value = angular_error(_flow_or_zero(pred_cam, pred_state),
                                  _flow_or_zero(gt_cam, gt_state))
        scenario = data.bank.catalog[rec.gt_entry - 1].scenario_id
        by_scenario.setdefault(scenario, []).append(value)

    per_scenario = {sid: float(np.mean(vals)) for sid, vals in by_scenario.items()}
    average = float(np.mean(list(per_scenario.values())))
    header = ["metric"] + [f"scenario_{i}" for i in range(1, 13)] + ["avg"]
    row = [args.metric] + [
        repr(per_scenario[i]) if i in per_scenario else "nan" for i in range(1, 13)
    ] + [repr(average)]
    print(",".join(header))
    print(",".join(row))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        store.write_report_csv(os.path.join(args.out, "report.csv"),
                               args.metric, per_scenario, average)
        from . import figures
        figures.save_report_figure(args.metric, per_scenario, average,
                                   os.path.join(args.out, "report.svg"))
    return 0


def cmd_plot(args) -> int:
    data = store.read_bank(_resolve_bank(args))
    if not 1 <= args.entry <= len(data.bank):
        raise CatalogError(f"entry {args.entry} outside 1..{len(data.bank)}")
    out = args.out if args.out else f"entry_{args.entry}.svg"
    from . import figures
    figures.save_trajectory_figure(data, args.entry, out)
    print(f"wrote {out}")
    return 0


def _add_bank_flag(parser) -> None:
    parser.add_argument("--bank", help=f"bank file (default ${BANK_DIR_ENV}/{DEFAULT_BANK_NAME})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newtonbank",
        description="Newtonian scenario bank: simulate, match, train, evaluate, plot.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bank = sub.add_parser("bank", help="build or inspect a scenario bank")
    bank_sub = bank.add_subparsers(dest="bank_command", required=True)
    build = bank_sub.add_parser("build", help="simulate all scenarios and write the bank")
    build.add_argument("--out", help="output path (default $NEWTON_BANK_DIR/bank.nbk)")
    build.add_argument("--dim", type=int, default=64, help="descriptor dimension")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--params", help="encode with trained parameters instead of identity")
    build.set_defaults(func=cmd_bank_build)
    inspect = bank_sub.add_parser("inspect", help="print bank metadata")
    _add_bank_flag(inspect)
    inspect.set_defaults(func=cmd_bank_inspect)

    query = sub.add_parser("query", help="match query features against the bank")
    _add_bank_flag(query)
    query.add_argument("--queries", required=True, help="query set CSV")
    query.add_argument("--lambda", type=float, default=0.5, dest="lam",
                       help="image-side fusion weight in [0,1]")
    query.add_argument("--params", help="trained encoder parameters")
    query.add_argument("--out", help="directory for per-query similarity CSVs and curve SVGs")
    query.set_defaults(func=cmd_query)

    train = sub.add_parser("train", help="train the encoder on a labeled query set")
    _add_bank_flag(train)
    train.add_argument("--queries", required=True)
    train.add_argument("--iters", type=int, default=5000)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--batch", type=int, default=32)
    train.add_argument("--lambda", type=float, default=0.5, dest="lam")
    train.add_argument("--out", required=True, help="directory for params, loss CSV, loss figure")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="score predictions against ground truth")
    _add_bank_flag(ev)
    ev.add_argument("--queries", required=True)
    ev.add_argument("--metric", required=True, choices=("fmeasure", "mhd", "flow"))
    ev.add_argument("--threshold", type=float,
                    help="absolute F-measure distance threshold in meters")
    ev.add_argument("--lambda", type=float, default=0.5, dest="lam")
    ev.add_argument("--params", help="trained encoder parameters")
    ev.add_argument("--out", help="directory for report.csv and report.svg")
    ev.set_defaults(func=cmd_eval)

    plot = sub.add_parser("plot", help="render one catalog entry's trajectory")
    _add_bank_flag(plot)
    plot.add_argument("--entry", type=int, required=True)
    plot.add_argument("--out", help="output SVG path")
    plot.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream consumer closed stdout early (e.g. piping into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (ParameterError, CatalogError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StorageError, IngestionError, BankError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ProjectionError, MetricError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
