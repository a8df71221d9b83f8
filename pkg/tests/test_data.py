import json

import numpy as np
import pytest

import artifact.data as data_mod
from artifact.data import (
    CSV_HEADER,
    DEFAULT_RANGES,
    Dataset,
    LabeledSample,
    ParamRanges,
    generate,
    label_of,
    meta_path,
    read_csv,
    write_csv,
)
from artifact.engine import EngineParams
from artifact.errors import (
    DegenerateSampleError,
    DomainError,
    GenerationQualityError,
    ParseError,
    ValidationError,
)


# --- labels -----------------------------------------------------------------

def test_label_quartiles():
    assert label_of(0.0) == 0
    assert label_of(0.24999) == 0
    assert label_of(0.25) == 1  # boundary belongs to the upper bin
    assert label_of(0.49) == 1
    assert label_of(0.50) == 2
    assert label_of(0.74) == 2
    assert label_of(0.75) == 3
    assert label_of(1.0) == 3


def test_label_domain():
    with pytest.raises(DomainError):
        label_of(-0.01)
    with pytest.raises(DomainError):
        label_of(1.01)


# --- ranges -----------------------------------------------------------------

def test_default_ranges():
    r = DEFAULT_RANGES
    assert r.t_c == (0.4, 2.5)
    assert r.t_h == (3.0, 4.5)
    assert r.t_l == (1.0, 7.0)
    assert r.p_c == (0.0, 0.3)
    assert r.p_h == (0.0, 1.0)
    assert ParamRanges.from_dict(r.to_dict()) == r


def test_range_validation():
    with pytest.raises(DomainError):
        ParamRanges(t_c=(2.5, 0.4))  # reversed
    with pytest.raises(DomainError):
        ParamRanges(t_h=(0.0, 4.5))  # temperature lower bound not positive
    with pytest.raises(DomainError):
        ParamRanges(p_h=(0.0, 1.5))  # outside [0, 1]


# --- generation --------------------------------------------------------------

def test_generate_contract(small_dataset):
    ds = small_dataset
    assert len(ds) == 600
    assert len(ds.train_idx) == 420  # 70% split
    assert len(ds.val_idx) == 180
    assert not set(ds.train_idx) & set(ds.val_idx)
    x = ds.feature_matrix()
    assert x.shape == (600, 4)
    assert np.all(np.isfinite(x))
    assert ds.meta["seed"] == 7 and ds.meta["n"] == 600
    assert ds.meta["redraws"] == 0


def test_generate_deterministic(small_dataset):
    again = generate(600, seed=7)
    assert again.samples == small_dataset.samples
    assert again.train_idx == small_dataset.train_idx


def test_label_balance(small_dataset):
    # labels follow a uniform p_h, so the four quartile bins should be
    # statistically even; 600 draws keep each within a few sigma of 150
    counts = np.bincount(small_dataset.label_array(), minlength=4)
    assert counts.sum() == 600
    assert counts.min() > 100 and counts.max() < 200


def test_labels_recomputable_from_params(small_dataset):
    for s in small_dataset.samples[:50]:
        assert s.label == label_of(s.params.p_h)


def test_samples_nest_across_sizes():
    # per-sample substreams: a shorter dataset is a prefix of a longer one
    a = generate(40, seed=31)
    b = generate(80, seed=31)
    assert b.samples[:40] == a.samples


def test_generate_validation():
    with pytest.raises(DomainError):
        generate(0, seed=1)
    with pytest.raises(DomainError):
        generate(10, seed=1, train_frac=1.0)


def test_generation_quality_budget(monkeypatch):
    # force every draw to look degenerate; the 10% budget must trip
    def always_degenerate(params, variant="consistent"):
        raise DegenerateSampleError("forced")

    monkeypatch.setattr(data_mod, "exchange_moment_ratios", always_degenerate)
    with pytest.raises(GenerationQualityError):
        generate(50, seed=0)


def test_sample_validation():
    good = EngineParams(p_h=0.8)
    with pytest.raises(ValidationError):
        LabeledSample((1.0, 1.0, 1.0), 3, good)  # wrong arity
    with pytest.raises(ValidationError):
        LabeledSample((1.0, 1.0, 1.0, float("nan")), 3, good)
    with pytest.raises(ValidationError):
        LabeledSample((1.0, 1.0, 1.0, 1.0), 1, good)  # label contradicts p_h


def test_dataset_partition_enforced():
    ds = generate(6, seed=3)
    with pytest.raises(ValidationError):
        Dataset(ds.samples, ds.train_idx, ds.train_idx[:1])


# --- csv round trip -----------------------------------------------------------

def test_write_read_round_trip(tmp_path, small_dataset):
    p = tmp_path / "ds.csv"
    write_csv(small_dataset, p)
    back = read_csv(p)
    assert back.samples == small_dataset.samples  # %.17g is lossless
    assert back.train_idx == small_dataset.train_idx
    assert back.val_idx == small_dataset.val_idx
    assert back.meta["seed"] == small_dataset.meta["seed"]


def test_write_is_byte_deterministic(tmp_path, small_dataset):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(small_dataset, p1)
    write_csv(small_dataset, p2)
    assert p1.read_bytes() == p2.read_bytes()
    # the only timestamp lives in the sidecar, not the csv
    assert b"generated_at" not in p1.read_bytes()
    assert "generated_at" in json.loads(meta_path(p1).read_text())


def test_csv_header_layout(tmp_path, small_dataset):
    p = tmp_path / "ds.csv"
    write_csv(small_dataset, p)
    lines = p.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 601
    assert lines[1].split(",")[10] in ("train", "val")


def test_read_csv_error_reporting(tmp_path):
    p = tmp_path / "bad.csv"

    p.write_text("c1,c2,nope\n")
    with pytest.raises(ParseError, match="header"):
        read_csv(p)

    p.write_text(CSV_HEADER + "\n1.0,1.0,1.0\n")
    with pytest.raises(ParseError, match="line 2"):
        read_csv(p)

    p.write_text(CSV_HEADER + "\n1,1,1,1,0,1,3.5,2,0,0.1,train\n1,1,1,1,0,1,3.5,2,0,0.1,test\n")
    with pytest.raises(ParseError, match="line 3"):
        read_csv(p)

    p.write_text(CSV_HEADER + "\n1,1,1,1,zero,1,3.5,2,0,0.1,train\n")
    with pytest.raises(ParseError, match="line 2"):
        read_csv(p)

    with pytest.raises(ParseError):
        read_csv(tmp_path / "missing.csv")


def test_read_csv_rejects_inconsistent_label(tmp_path):
    # label column must match the recomputed quartile of p_h
    p = tmp_path / "bad.csv"
    p.write_text(CSV_HEADER + "\n1,1,1,1,3,1,3.5,2,0,0.1,train\n")
    with pytest.raises(ParseError, match="line 2"):
        read_csv(p)


def test_read_csv_without_sidecar(tmp_path, small_dataset):
    p = tmp_path / "ds.csv"
    write_csv(small_dataset, p)
    meta_path(p).unlink()
    back = read_csv(p)
    assert back.meta == {}
    assert back.samples[0].features == small_dataset.samples[0].features
