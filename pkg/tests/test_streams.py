"""Synthetic generators and file-backed streams."""

from __future__ import annotations

import numpy as np
import pytest

from fcdc import (
    ConfigError,
    CountStreamConfig,
    DEFAULT_COUNT_K_MAX,
    DEFAULT_COUNT_WEIGHTS,
    GaussianStreamConfig,
    StreamFormatError,
    count_stream,
    count_values,
    gaussian_matrix,
    gaussian_stream,
    read_csv,
    read_jsonl,
    write_jsonl,
)


def test_gaussian_matrix_deterministic():
    cfg = GaussianStreamConfig(seed=5, n_samples=100)
    a = gaussian_matrix(cfg)
    b = gaussian_matrix(cfg)
    assert np.array_equal(a, b)
    c = gaussian_matrix(GaussianStreamConfig(seed=6, n_samples=100))
    assert not np.array_equal(a, c)


def test_gaussian_matrix_moments():
    cfg = GaussianStreamConfig(seed=0, n_samples=40_000)
    Z = gaussian_matrix(cfg)
    assert Z.shape == (40_000, 2)
    assert np.abs(Z.mean(axis=0)).max() < 0.02
    assert np.abs(np.cov(Z.T) - np.eye(2)).max() < 0.03


def test_gaussian_matrix_general_moments():
    mean = (1.0, -2.0)
    cov = ((2.0, 0.6), (0.6, 1.0))
    cfg = GaussianStreamConfig(seed=3, n_samples=50_000, mean=mean, covariance=cov)
    Z = gaussian_matrix(cfg)
    assert np.allclose(Z.mean(axis=0), mean, atol=0.03)
    assert np.allclose(np.cov(Z.T), cov, atol=0.05)


def test_gaussian_stream_records():
    cfg = GaussianStreamConfig(seed=5, n_samples=10)
    recs = list(gaussian_stream(cfg))
    assert [r.k for r in recs] == list(range(10))
    assert all(r.source_tag == "gaussian" for r in recs)
    assert np.array_equal(np.vstack([r.payload for r in recs]), gaussian_matrix(cfg))


def test_gaussian_validation():
    assert GaussianStreamConfig(n_samples=-1).validate() == ["n_samples must be >= 0"]
    bad_shape = GaussianStreamConfig(mean=(0.0,), covariance=((1.0, 0.0), (0.0, 1.0)))
    assert "covariance must be 1x1 to match mean" in bad_shape.validate()
    asym = GaussianStreamConfig(covariance=((1.0, 0.2), (0.0, 1.0)))
    assert "covariance must be symmetric" in asym.validate()
    indef = GaussianStreamConfig(covariance=((1.0, 2.0), (2.0, 1.0)))
    assert "covariance is not positive definite" in indef.validate()
    with pytest.raises(ConfigError):
        indef.check()


def test_count_values_distribution():
    cfg = CountStreamConfig(seed=3, n_samples=1356)
    vals = count_values(cfg)
    assert np.array_equal(vals, count_values(cfg))
    assert vals.min() >= 0 and vals.max() <= DEFAULT_COUNT_K_MAX
    assert np.all(np.equal(np.mod(vals, 1), 0))
    counts = np.bincount(vals.astype(int), minlength=DEFAULT_COUNT_K_MAX + 1)
    assert int(np.argmax(counts)) in (8, 9, 10, 11)
    # every category with nonzero weight shows up over 1356 draws
    assert np.all(counts[np.asarray(DEFAULT_COUNT_WEIGHTS) >= 2.0] > 0)


def test_count_stream_records():
    cfg = CountStreamConfig(seed=1, n_samples=25)
    recs = list(count_stream(cfg))
    assert [r.k for r in recs] == list(range(25))
    assert all(r.source_tag == "counts" for r in recs)
    assert all(isinstance(r.payload["vehicles"], int) for r in recs)


def test_count_single_category():
    weights = [0.0] * 21
    weights[5] = 1.0
    vals = count_values(CountStreamConfig(seed=2, n_samples=50, weights=tuple(weights)))
    assert set(vals.tolist()) == {5.0}


def test_count_validation():
    assert CountStreamConfig(weights=(1.0, 2.0)).validate() == [
        "weights must have k_max+1 = 21 entries"]
    bad = CountStreamConfig(weights=tuple([-1.0] + [1.0] * 20))
    assert "weights must be finite and nonnegative" in bad.validate()
    zero = CountStreamConfig(weights=tuple([0.0] * 21))
    assert "at least one weight must be positive" in zero.validate()


def test_jsonl_round_trip(tmp_path):
    path = tmp_path / "stream.jsonl"
    recs = list(gaussian_stream(GaussianStreamConfig(seed=4, n_samples=8)))
    write_jsonl(path, recs)
    back = list(read_jsonl(path))
    assert [r.k for r in back] == [r.k for r in recs]
    assert all(r.source_tag == str(path) for r in back)
    for mine, theirs in zip(recs, back):
        assert np.array_equal(mine.payload, theirs.payload)


def test_jsonl_count_round_trip(tmp_path):
    path = tmp_path / "counts.jsonl"
    recs = list(count_stream(CountStreamConfig(seed=4, n_samples=8)))
    write_jsonl(path, recs)
    back = list(read_jsonl(path))
    assert [r.payload for r in back] == [r.payload for r in recs]


def test_jsonl_sequential_k_when_absent(tmp_path):
    path = tmp_path / "stream.jsonl"
    path.write_text('{"vec":[1.0]}\n\n{"vec":[2.0]}\n{"k":7,"vec":[3.0]}\n{"vec":[4.0]}\n')
    recs = list(read_jsonl(path))
    assert [r.k for r in recs] == [0, 1, 7, 8]


def test_jsonl_errors_name_path_and_line(tmp_path):
    cases = [
        ('{"vec":[1.0]}\n{bad json\n', "invalid JSON"),
        ('{"vec":[]}\n', "vec must be a nonempty number list"),
        ('{"vec":[1.0,"x"]}\n', "vec must be a nonempty number list"),
        ('{"vehicles":-3}\n', "vehicles must be a nonnegative integer"),
        ('{"vehicles":2.5}\n', "vehicles must be a nonnegative integer"),
        ('{"k":"a","vec":[1.0]}\n', "k must be an integer"),
        ('{"other":1}\n', "record needs a vec or vehicles field"),
        ('[1,2]\n', "record must be a JSON object"),
    ]
    for text, message in cases:
        path = tmp_path / "bad.jsonl"
        path.write_text(text)
        lineno = len(text.strip().splitlines())
        with pytest.raises(StreamFormatError) as err:
            list(read_jsonl(path))
        assert f"{path}:{lineno}" in str(err.value)
        assert message in str(err.value)


def test_read_jsonl_missing_file(tmp_path):
    with pytest.raises(StreamFormatError, match="stream file not found"):
        list(read_jsonl(tmp_path / "nope.jsonl"))


def test_csv_vector_stream(tmp_path):
    path = tmp_path / "stream.csv"
    path.write_text("k,x0,x1\n0,1.5,-2.0\n1,0.25,3.5\n")
    recs = list(read_csv(path))
    assert [r.k for r in recs] == [0, 1]
    assert recs[0].payload.tolist() == [1.5, -2.0]
    assert recs[1].payload.tolist() == [0.25, 3.5]


def test_csv_counts_without_k(tmp_path):
    path = tmp_path / "counts.csv"
    path.write_text("vehicles\n3\n0\n11\n")
    recs = list(read_csv(path))
    assert [r.k for r in recs] == [0, 1, 2]
    assert [r.payload["vehicles"] for r in recs] == [3, 0, 11]


def test_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(StreamFormatError, match="missing header row"):
        list(read_csv(empty))

    only_k = tmp_path / "only_k.csv"
    only_k.write_text("k\n0\n")
    with pytest.raises(StreamFormatError, match="no data columns"):
        list(read_csv(only_k))

    ragged = tmp_path / "ragged.csv"
    ragged.write_text("k,x0\n0,1.0,9.9\n")
    with pytest.raises(StreamFormatError, match="expected 2 fields, got 3"):
        list(read_csv(ragged))

    bad_num = tmp_path / "bad_num.csv"
    bad_num.write_text("k,x0\n0,oops\n")
    with pytest.raises(StreamFormatError, match=f"{bad_num}:2"):
        list(read_csv(bad_num))


def test_empty_streams():
    assert list(gaussian_stream(GaussianStreamConfig(seed=1, n_samples=0))) == []
    assert list(count_stream(CountStreamConfig(seed=1, n_samples=0))) == []
