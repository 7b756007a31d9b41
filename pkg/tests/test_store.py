import numpy as np
import pytest

from newtonbank.errors import IngestionError, StorageError
from newtonbank.matching import init_params
from newtonbank.metrics import Curve3D
from newtonbank.store import (
    QueryRecord,
    build_bank,
    noisy_queryset,
    queryset_from_bank,
    read_bank,
    read_params,
    read_queryset,
    write_bank,
    write_loss_csv,
    write_params,
    write_queryset,
    write_report_csv,
    write_state_sims_csv,
)


@pytest.fixture(scope="module")
def bank_data():
    return build_bank()


def test_build_bank_shapes(bank_data):
    assert len(bank_data.bank) == 66
    assert bank_data.bank.stacked.shape == (66, 64, 10)
    assert len(bank_data.trajectories) == 66
    assert all(len(states) == 10 for states in bank_data.trajectories)
    assert bank_data.raw_dim == 10


def test_bank_columns_nonzero_and_pairwise_distinct(bank_data):
    cols = bank_data.bank.stacked.transpose(0, 2, 1).reshape(660, 64)
    norms = np.linalg.norm(cols, axis=1)
    assert norms.min() > 0.0
    gram = cols @ cols.T
    sq = norms**2
    dists = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * gram, 0.0))
    np.fill_diagonal(dists, np.inf)
    assert dists.min() > 1e-3


def test_bank_round_trip(tmp_path, bank_data):
    path = str(tmp_path / "bank.nbk")
    write_bank(path, bank_data)
    loaded = read_bank(path)
    expected = bank_data.bank.stacked.astype("<f4").astype(np.float64)
    assert np.array_equal(loaded.bank.stacked, expected)
    assert loaded.bank.catalog == bank_data.bank.catalog
    assert loaded.encoder_tag == bank_data.encoder_tag
    assert loaded.seed == bank_data.seed
    assert loaded.raw_dim == bank_data.raw_dim
    for got, want in zip(loaded.trajectories, bank_data.trajectories):
        for s_got, s_want in zip(got, want):
            assert s_got.t == s_want.t
            assert np.array_equal(s_got.position, s_want.position)
            assert np.array_equal(s_got.velocity_dir, s_want.velocity_dir)
            assert np.array_equal(s_got.force_dir, s_want.force_dir)


def test_bank_payload_size(tmp_path, bank_data):
    path = str(tmp_path / "bank.nbk")
    write_bank(path, bank_data)
    with open(path, "rb") as fh:
        fh.readline()
        manifest_len = int(fh.readline())
        fh.read(manifest_len)
        payload = fh.read()
    assert len(payload) == 66 * 64 * 10 * 4 == 168_960


def test_bank_write_is_deterministic(tmp_path, bank_data):
    a = str(tmp_path / "a.nbk")
    b = str(tmp_path / "b.nbk")
    write_bank(a, bank_data)
    write_bank(b, build_bank())
    assert open(a, "rb").read() == open(b, "rb").read()


def test_bank_rejects_unknown_version(tmp_path, bank_data):
    path = str(tmp_path / "bank.nbk")
    write_bank(path, bank_data)
    blob = open(path, "rb").read()
    bad = str(tmp_path / "bad.nbk")
    with open(bad, "wb") as fh:
        fh.write(blob.replace(b"NEWTONBANK/1", b"NEWTONBANK/9", 1))
    with pytest.raises(StorageError):
        read_bank(bad)


def test_bank_rejects_truncated_payload(tmp_path, bank_data):
    path = str(tmp_path / "bank.nbk")
    write_bank(path, bank_data)
    blob = open(path, "rb").read()
    cut = str(tmp_path / "cut.nbk")
    with open(cut, "wb") as fh:
        fh.write(blob[:-100])
    with pytest.raises(StorageError):
        read_bank(cut)


def test_bank_missing_file():
    with pytest.raises(StorageError):
        read_bank("/nonexistent/bank.nbk")


def test_params_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    params = init_params(16, 10, rng)
    path = str(tmp_path / "p.params")
    write_params(path, params)
    loaded = read_params(path)
    assert np.array_equal(loaded.weight, params.weight)
    assert np.array_equal(loaded.bias, params.bias)
    assert np.array_equal(loaded.classifier_weight, params.classifier_weight)
    assert np.array_equal(loaded.classifier_bias, params.classifier_bias)


def test_params_rejects_wrong_magic(tmp_path, bank_data):
    path = str(tmp_path / "bank.nbk")
    write_bank(path, bank_data)
    with pytest.raises(StorageError):
        read_params(path)


def test_queryset_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    curve = Curve3D(rng.normal(size=(10, 3)))
    records = [
        QueryRecord("full", rng.normal(size=10), gt_entry=12, gt_state=6, gt_curve=curve),
        QueryRecord("bare", rng.normal(size=10)),
    ]
    path = str(tmp_path / "q.csv")
    write_queryset(path, records)
    loaded = read_queryset(path)
    assert loaded.raw_dim == 10
    assert [r.id for r in loaded.records] == ["full", "bare"]
    full, bare = loaded.records
    assert np.array_equal(full.features, records[0].features)
    assert (full.gt_entry, full.gt_state) == (12, 6)
    assert np.array_equal(full.gt_curve.points, curve.points)
    assert bare.gt_entry is None and bare.gt_state is None and bare.gt_curve is None


def test_queryset_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(IngestionError):
        read_queryset(str(path))


def test_queryset_rejects_out_of_range_entry(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,gt_entry,gt_state,gt_curve,f0\nx,67,,,1.0\n")
    with pytest.raises(IngestionError):
        read_queryset(str(path))


def test_queryset_rejects_ragged_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,gt_entry,gt_state,gt_curve,f0,f1\nx,,,,1.0\n")
    with pytest.raises(IngestionError):
        read_queryset(str(path))


def test_queryset_rejects_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("id,gt_entry,gt_state,gt_curve,f0\n")
    with pytest.raises(IngestionError):
        read_queryset(str(path))


def test_queryset_from_bank_closes_the_loop(bank_data):
    records = queryset_from_bank(bank_data)
    assert len(records) == 660
    # identity encoding pads the raw features; they must equal the stored columns
    for idx in (0, 59, 333, 659):
        rec = records[idx]
        entry_idx = rec.gt_entry - 1
        column = bank_data.bank.stacked[entry_idx, :, rec.gt_state - 1]
        assert np.array_equal(column[:10], rec.features)
        assert np.all(column[10:] == 0.0)
        assert rec.gt_curve is not None and len(rec.gt_curve) == 10


def test_noisy_queryset_is_seeded(bank_data):
    a = noisy_queryset(bank_data, sigma=0.01, seed=5)
    b = noisy_queryset(bank_data, sigma=0.01, seed=5)
    c = noisy_queryset(bank_data, sigma=0.01, seed=6)
    assert all(np.array_equal(x.features, y.features) for x, y in zip(a, b))
    assert not all(np.array_equal(x.features, y.features) for x, y in zip(a, c))


def test_report_csv_has_13_numeric_columns(tmp_path):
    path = str(tmp_path / "report.csv")
    write_report_csv(path, "fmeasure", {i: 100.0 for i in range(1, 13)}, 100.0)
    lines = open(path).read().strip().splitlines()
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[0] == "fmeasure"
    numbers = [float(v) for v in fields[1:]]
    assert len(numbers) == 13
    assert numbers == [100.0] * 13


def test_loss_csv_one_row_per_iteration(tmp_path):
    path = str(tmp_path / "loss.csv")
    write_loss_csv(path, [0.5, 0.4, 0.3])
    lines = open(path).read().strip().splitlines()
    assert lines[0] == "iteration,loss"
    assert len(lines) == 4


def test_state_sims_csv(tmp_path):
    path = str(tmp_path / "sims.csv")
    write_state_sims_csv(path, np.linspace(0, 1, 10))
    lines = open(path).read().strip().splitlines()
    assert len(lines) == 11
    assert lines[1].startswith("1,")
