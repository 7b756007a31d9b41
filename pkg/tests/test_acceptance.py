"""Acceptance suite: eight criteria, one test and one printed line each.

Run with `pytest tests/test_acceptance.py -s` to see the PASS/FAIL lines.
"""
import math
import os
import time

import numpy as np
import pytest

from newtonbank.catalog import SCENARIO_SPECS, build_catalog, enumerate_viewpoints
from newtonbank.cli import main
from newtonbank.dynamics import SimParams, rk4_integrate, simulate
from newtonbank.matching import (
    EncoderParams,
    FusionConfig,
    ScenarioBank,
    StateDescriptorMatrix,
    TrainConfig,
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
    train_encoder,
)
from newtonbank.metrics import Curve3D, angular_error, f_measure, mhd, slide_align
from newtonbank.store import build_bank, noisy_queryset, queryset_from_bank, write_bank, write_queryset

G = 9.81

# per-scenario viewpoint counts from the catalog definition (sum 66)
VIEW_COUNTS = [8, 4, 8, 8, 1, 3, 3, 8, 8, 8, 3, 4]


@pytest.fixture(scope="module")
def bank_data():
    return build_bank()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory, bank_data):
    root = tmp_path_factory.mktemp("acceptance")
    bank_path = str(root / "bank.nbk")
    queries_path = str(root / "queries.csv")
    write_bank(bank_path, bank_data)
    write_queryset(queries_path, queryset_from_bank(bank_data))
    return {"root": root, "bank": bank_path, "queries": queries_path}


def _report(number, slug, failures, elapsed, budget):
    if elapsed > budget:
        failures.append(f"took {elapsed:.3f} s, budget {budget} s")
    status = "PASS" if not failures else "FAIL"
    print(f"[criterion {number}] {slug}: {status} ({elapsed * 1000:.1f} ms)")
    assert not failures, f"criterion {number} ({slug}): " + "; ".join(failures)


def test_criterion_1_catalog_exactness():
    failures = []
    start = time.perf_counter()
    catalog = build_catalog()
    counts = [len(enumerate_viewpoints(spec)) for spec in SCENARIO_SPECS]
    elapsed = time.perf_counter() - start
    if len(catalog) != 66:
        failures.append(f"catalog has {len(catalog)} entries")
    if counts != VIEW_COUNTS:
        failures.append(f"view counts {counts}")
    if sum(counts) != 66:
        failures.append(f"view counts sum to {sum(counts)}")
    _report(1, "catalog-exactness", failures, elapsed, 0.001)


def test_criterion_2_physics_oracles():
    failures = []
    start = time.perf_counter()

    # projectile apex via RK4 against v_z / g
    vz = 10.0 / math.sqrt(2.0)
    ts = np.arange(0, 1.0 + 1e-9, 1e-3)
    flight = rk4_integrate(lambda t, y: np.array([y[1], -G]), np.array([0.0, vz]), ts)
    apex_rk4 = ts[int(np.argmax(flight[:, 0]))]
    apex_exact = vz / G
    if abs(apex_rk4 - apex_exact) / apex_exact > 0.01:
        failures.append(f"apex {apex_rk4} vs {apex_exact}")

    # friction stop via RK4 against v0 / (mu g)
    decel = 0.3 * G
    ts = np.arange(0, 1.5 + 1e-9, 1e-3)
    slide = rk4_integrate(lambda t, y: np.array([-decel if y[0] > 0 else 0.0]),
                          np.array([3.0]), ts)
    stop_rk4 = ts[int(np.argmax(slide[:, 0] <= 0.0))]
    stop_exact = 3.0 / decel
    if abs(stop_rk4 - stop_exact) / stop_exact > 0.01:
        failures.append(f"stop {stop_rk4} vs {stop_exact}")

    # small-angle pendulum period and energy drift over one period
    theta0 = 0.1
    period_exact = 2 * math.pi * math.sqrt(1.0 / G)
    params = SimParams(initial_speed=0.0,
                       initial_direction=(math.sin(theta0), 0.0, -math.cos(theta0)),
                       duration=2.2, dt=1e-3)
    traj = simulate(12, params)
    half = min((s for s in traj.states if 0.5 < s.t < 1.5), key=lambda s: s.speed)
    period_sim = 2 * half.t
    if abs(period_sim - period_exact) / period_exact > 0.01:
        failures.append(f"period {period_sim} vs {period_exact}")
    one_period = [s for s in traj.states if s.t <= period_exact]
    energy = np.array([0.5 * s.speed**2 + G * s.position[2] for s in one_period])
    drift = np.abs(energy - energy[0]).max() / abs(energy[0])
    if drift >= 1e-6:
        failures.append(f"energy drift {drift}")

    _report(2, "physics-oracles", failures, time.perf_counter() - start, 1.0)


def test_criterion_3_gradient_check():
    failures = []
    start = time.perf_counter()
    rng = np.random.default_rng(42)
    catalog = build_catalog()
    names = ("weight", "bias", "classifier_weight", "classifier_bias")
    step = 1e-5
    lams = [0.0, 0.5, 1.0]
    for config_idx in range(100):
        dim, raw, states = 6, 4, 3
        bank = ScenarioBank(
            catalog,
            [StateDescriptorMatrix(i + 1, rng.normal(size=(dim, states))) for i in range(66)],
            dim,
        )
        params = EncoderParams(rng.normal(size=(dim, raw)), rng.normal(size=dim),
                               rng.normal(size=(66, dim)), rng.normal(size=66))
        x_raw = rng.normal(size=raw)
        label = int(rng.integers(1, 67))
        cfg = FusionConfig(lams[config_idx % 3])

        def forward(p):
            x = encode(x_raw, p)
            return nll_loss(one_hot(label, 66),
                            fuse(image_scores(x, p), motion_scores(x, bank), cfg))

        _, grads = loss_gradients(x_raw, label, bank, params, cfg)
        fields = {n: getattr(params, n) for n in names}
        for name in names:
            arr = fields[name]
            fd = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                plus, minus = arr.copy(), arr.copy()
                plus[idx] += step
                minus[idx] -= step
                fd[idx] = (forward(EncoderParams(**{**fields, name: plus}))
                           - forward(EncoderParams(**{**fields, name: minus}))) / (2 * step)
            analytic = getattr(grads, name)
            denom = max(np.linalg.norm(analytic), np.linalg.norm(fd), 1e-12)
            rel = np.linalg.norm(analytic - fd) / denom
            if rel >= 1e-4:
                failures.append(f"config {config_idx} {name}: rel err {rel:.2e}")
    _report(3, "gradient-check", failures, time.perf_counter() - start, 10.0)


def test_criterion_4_self_retrieval(bank_data):
    failures = []
    start = time.perf_counter()
    bank = bank_data.bank
    params = identity_params(bank.descriptor_dim, bank_data.raw_dim)
    cfg = FusionConfig(0.0)
    misses = 0
    argmax_mismatches = 0
    for e in range(66):
        for s in range(10):
            x = bank.stacked[e, :, s]
            result = predict(x, bank, params, cfg)
            if (result.entry_id, result.state) != (e + 1, s + 1):
                misses += 1
            brute = [cosine_sim(x, bank.matrices[result.entry_id - 1].values[:, i])
                     for i in range(10)]
            if result.state - 1 != int(np.argmax(brute)):
                argmax_mismatches += 1
    if misses:
        failures.append(f"{misses}/660 self-retrievals missed")
    if argmax_mismatches:
        failures.append(f"{argmax_mismatches} state argmax mismatches vs brute force")
    _report(4, "self-retrieval", failures, time.perf_counter() - start, 1.0)


def test_criterion_5_training_convergence(bank_data):
    failures = []
    start = time.perf_counter()
    records = noisy_queryset(bank_data, sigma=0.01, seed=7)
    dataset = [(rec.features, rec.gt_entry) for rec in records]
    cfg = TrainConfig(iters=2000, batch_size=64, fusion=FusionConfig(0.0), seed=0)
    result = train_encoder(dataset, bank_data.bank, cfg)

    correct = sum(
        predict(encode(f, result.params), bank_data.bank, result.params, cfg.fusion).entry_id == y
        for f, y in dataset
    )
    accuracy = 100.0 * correct / len(dataset)
    if accuracy < 95.0:
        failures.append(f"top-1 accuracy {accuracy:.2f}%")
    head = float(np.mean(result.losses[:100]))
    tail = float(np.mean(result.losses[-100:]))
    if not tail < head:
        failures.append(f"loss moving average {head:.6f} -> {tail:.6f} did not decrease")
    _report(5, "training-convergence", failures, time.perf_counter() - start, 60.0)


def test_criterion_6_metric_suite():
    failures = []
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    for i in range(100):
        curve = Curve3D(np.cumsum(rng.normal(size=(int(rng.integers(5, 40)), 3)), axis=0))
        tau = float(rng.uniform(1e-4, 2.0))
        f = f_measure(curve, curve, tau).f
        if f != 100.0:
            failures.append(f"curve {i}: f_measure(c,c)={f}")
        if mhd(curve, curve) != 0.0:
            failures.append(f"curve {i}: mhd(c,c) nonzero")
    for i in range(100):
        a = Curve3D(np.cumsum(rng.normal(size=(int(rng.integers(4, 15)), 3)), axis=0))
        b = Curve3D(np.cumsum(rng.normal(size=(int(rng.integers(15, 40)), 3)), axis=0))
        got = slide_align(a, b)
        short, long_ = (a, b) if len(a) <= len(b) else (b, a)
        means = [
            float(np.mean(np.linalg.norm(short.points - long_.points[k:k + len(short)], axis=1)))
            for k in range(len(long_) - len(short) + 1)
        ]
        expected = (int(np.argmin(means)), float(min(means)))
        if got[0] != expected[0] or abs(got[1] - expected[1]) > 1e-12:
            failures.append(f"pair {i}: slide_align {got} vs exhaustive {expected}")
    cases = [
        ((1.0, 0.0), (1.0, 0.0), 0.0),
        ((1.0, 0.0), (0.0, 1.0), math.pi / 2),
        ((1.0, 0.0), (-1.0, 0.0), math.pi),
    ]
    for u, v, expected in cases:
        got = angular_error(np.array(u), np.array(v))
        if got != expected:
            failures.append(f"angular_error{u, v} = {got}")
    _report(6, "metric-suite", failures, time.perf_counter() - start, 5.0)


def test_criterion_7_closed_loop(workspace, capsys):
    failures = []
    start = time.perf_counter()
    expected = {"fmeasure": 100.0, "mhd": 0.0, "flow": 0.0}
    for metric, value in expected.items():
        code = main(["eval", "--bank", workspace["bank"], "--queries", workspace["queries"],
                     "--metric", metric, "--lambda", "0"])
        out = capsys.readouterr().out
        if code != 0:
            failures.append(f"{metric}: exit code {code}")
            continue
        fields = out.strip().splitlines()[-1].split(",")
        values = [float(v) for v in fields[1:]]
        if len(values) != 13:
            failures.append(f"{metric}: {len(values)} numeric columns")
        if values != [value] * 13:
            failures.append(f"{metric}: row {values}")
    elapsed = time.perf_counter() - start
    with capsys.disabled():
        _report(7, "closed-loop", failures, elapsed, 5.0)


def test_criterion_8_determinism(workspace, capsys, tmp_path):
    failures = []
    start = time.perf_counter()
    banks = [str(tmp_path / "a.nbk"), str(tmp_path / "b.nbk")]
    for path in banks:
        if main(["bank", "build", "--out", path, "--seed", "11"]) != 0:
            failures.append("bank build failed")
    if open(banks[0], "rb").read() != open(banks[1], "rb").read():
        failures.append("bank files differ across runs")

    trains = [str(tmp_path / "t1"), str(tmp_path / "t2")]
    for out in trains:
        code = main(["train", "--bank", workspace["bank"], "--queries", workspace["queries"],
                     "--iters", "50", "--seed", "3", "--batch", "16", "--out", out])
        if code != 0:
            failures.append(f"train failed with exit {code}")
    for name in ("encoder.params", "loss.csv", "loss.svg"):
        a = open(os.path.join(trains[0], name), "rb").read()
        b = open(os.path.join(trains[1], name), "rb").read()
        if a != b:
            failures.append(f"{name} differs across runs")
    capsys.readouterr()
    elapsed = time.perf_counter() - start
    with capsys.disabled():
        _report(8, "determinism", failures, elapsed, 90.0)
