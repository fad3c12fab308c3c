import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from fleam import dataset as ds
from fleam import unsw_synth
from fleam.encoding import Encoder

HEADER = ",".join(ds.TRAINING_SET.columns)


def _row(**over):
    base = {c: "0" for c in ds.TRAINING_SET.columns}
    base.update(proto="tcp", service="-", state="FIN", attack_cat="Normal", label="0", id="1")
    base.update(over)
    return ",".join(str(base[c]) for c in ds.TRAINING_SET.columns)


def test_header_only_file(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text(HEADER + "\n")
    r = ds.load_csv(p)
    assert len(r) == 0 and r.rejected == 0 and r.schema is ds.TRAINING_SET


def test_non_numeric_duration_rejected(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("\n".join([HEADER, _row(dur="0.5"), _row(dur="abc"), _row(label="1", dur="")]) + "\n")
    r = ds.load_csv(p)
    assert len(r) == 2 and r.rejected == 1 and r.rejected_lines == [3]
    assert r.frame["dur"].tolist() == [0.5, 0.0]


def test_bad_label_and_short_row_rejected(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("\n".join([HEADER, _row(label="2"), "1,2,3", _row()]) + "\n")
    r = ds.load_csv(p)
    assert len(r) == 1 and r.rejected == 2


def test_missing_file_and_unknown_header(tmp_path):
    with pytest.raises(ds.IngestionError):
        ds.load_csv(tmp_path / "nope.csv")
    (tmp_path / "x.csv").write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ds.IngestionError):
        ds.load_csv(tmp_path / "x.csv")


@pytest.mark.parametrize("header", [True, False])
def test_raw_layout_count_identity(tmp_path, header):
    p = tmp_path / "raw.csv"
    unsw_synth.write_csv(p, 500, seed=1, header=header)
    with p.open("a") as fh:
        fh.write(",".join(["x"] * 49) + "\n")
    r = ds.load_csv(p)
    assert r.schema is ds.RAW49
    assert len(r) == r.data_lines - r.rejected and r.rejected == 1


def test_single_record_scales_to_zero():
    df = pd.DataFrame({"a": [3.0], "b": [7.0]})
    enc = Encoder.fit(df, numeric=["a", "b"])
    assert enc.transform(df).tolist() == [[0.0, 0.0]]


def test_two_records_hit_endpoints():
    df = pd.DataFrame({"a": [1.0, 5.0], "b": [2.0, 2.0]})
    out = Encoder.fit(df, numeric=["a", "b"]).transform(df)
    assert out[:, 0].tolist() == [0.0, 1.0] and out[:, 1].tolist() == [0.0, 0.0]


def test_no_test_statistics_leak(unsw_small):
    recs = ds.load_csv(unsw_small)
    part = ds.partition(recs, ds.ShardPlan(n_workers=3, seed=2))
    train = np.sort(np.concatenate(part.shards))
    _, enc = ds.preprocess(recs, train)
    ref = ds.fit_encoder(recs.take(train))
    assert enc.to_dict() == ref.to_dict()
    full = ds.fit_encoder(recs)
    assert full.to_dict() != enc.to_dict()


def test_encoder_roundtrip(tmp_path, unsw_small):
    recs = ds.load_csv(unsw_small)
    enc = ds.fit_encoder(recs)
    enc.save(tmp_path / "e.json")
    again = Encoder.load(tmp_path / "e.json")
    assert np.array_equal(enc.transform(recs.frame), again.transform(recs.frame))


def test_single_worker_gets_all_training_rows():
    labels = np.random.default_rng(0).integers(0, 2, 1000)
    p = ds.partition(labels, ds.ShardPlan(n_workers=1))
    assert len(p.shards) == 1
    assert sorted(np.concatenate([p.shards[0], p.test]).tolist()) == list(range(1000))


def test_uniform_shards_balanced_on_100k():
    labels = np.random.default_rng(0).integers(0, 2, 100_000)
    p = ds.partition(labels, ds.ShardPlan(n_workers=4))
    total = sum(len(s) for s in p.shards)
    for s in p.shards:
        assert abs(len(s) / total - 0.25) <= 0.02


def test_dirichlet_skew_over_seed_sweep():
    labels = np.random.default_rng(0).integers(0, 2, 20_000)
    skewed = 0
    for seed in range(20):
        p = ds.partition(labels, ds.ShardPlan(n_workers=4, mode="dirichlet", alpha=0.2, seed=seed))
        sizes = [len(s) for s in p.shards]
        skewed += min(sizes) == 0 or max(sizes) / min(sizes) > 2
    assert skewed > 10


def test_label_presence_failure():
    labels = np.zeros(40, dtype=int)
    labels[0] = 1
    with pytest.raises(ds.PartitionError):
        ds.partition(labels, ds.ShardPlan(n_workers=4, n_folds=40, fold=5))


def test_plan_validation():
    with pytest.raises(ds.PartitionError):
        ds.ShardPlan(n_workers=0)
    with pytest.raises(ds.PartitionError):
        ds.ShardPlan(fractions=(0.5, 0.5))
    with pytest.raises(ds.PartitionError):
        ds.ShardPlan(fold=10)


def test_manifest_roundtrip(tmp_path):
    labels = np.random.default_rng(1).integers(0, 2, 500)
    p = ds.partition(labels, ds.ShardPlan(fractions=(0.7, 0.1, 0.1, 0.1), seed=3))
    p.save(tmp_path / "m.json")
    q = ds.Partition.load(tmp_path / "m.json")
    assert q.plan == p.plan
    assert all(np.array_equal(a, b) for a, b in zip(p.shards, q.shards))


@settings(max_examples=40, deadline=None)
@given(st.integers(20, 800), st.integers(1, 5), st.sampled_from(["uniform", "dirichlet"]),
       st.integers(0, 1000), st.integers(0, 9))
def test_partition_disjoint_complete_deterministic(n, m, mode, seed, fold):
    labels = np.arange(n) % 2
    plan = ds.ShardPlan(n_workers=m, mode=mode, seed=seed, fold=fold)
    p = ds.partition(labels, plan)
    allidx = np.concatenate(p.shards + [p.test])
    assert len(allidx) == n and len(np.unique(allidx)) == n
    q = ds.partition(labels, plan)
    assert all(np.array_equal(a, b) for a, b in zip(p.shards, q.shards))
    if mode == "uniform" and m > 1:
        assert all(set(labels[s]) == {0, 1} for s in p.shards)


def test_kfold_folds_cover_everything():
    tests = [ds.kfold_split(103, 10, f, 0)[1] for f in range(10)]
    assert sorted(np.concatenate(tests).tolist()) == list(range(103))
