import json

import numpy as np
import pytest

import vlasso as v
from vlasso import serialize


def test_matrix_csv_roundtrip(tmp_path):
    M = np.random.default_rng(0).standard_normal((6, 4))
    path = tmp_path / "m.csv"
    serialize.save_matrix_csv(path, M)
    assert np.allclose(serialize.load_matrix_csv(path), M, atol=1e-15)


def test_matrix_binary_roundtrip(tmp_path):
    M = np.random.default_rng(1).standard_normal((5, 7))
    path = tmp_path / "m.bin"
    serialize.save_matrix_bin(path, M)
    out = serialize.load_matrix_bin(path)
    assert np.array_equal(out, M)
    with open(path, "rb") as fh:
        assert fh.read(5) == b"VLAS1"


def test_binary_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE!" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        serialize.load_matrix_bin(path)


def test_binary_truncated(tmp_path):
    M = np.ones((2, 2)) / np.sqrt(2)
    path = tmp_path / "m.bin"
    serialize.save_matrix_bin(path, M)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="truncated"):
        serialize.load_matrix_bin(path)


def test_load_design_dispatch(tmp_path):
    X = v.gen_gaussian_design(6, 8, seed=2)
    bin_path = tmp_path / "x.bin"
    csv_path = tmp_path / "x.csv"
    serialize.save_matrix_bin(bin_path, X.entries)
    serialize.save_matrix_csv(csv_path, X.entries)
    assert np.array_equal(serialize.load_design(bin_path).entries, X.entries)
    assert np.allclose(serialize.load_design(csv_path).entries, X.entries)


def test_vector_roundtrip(tmp_path):
    y = np.random.default_rng(3).standard_normal(9)
    path = tmp_path / "y.csv"
    serialize.save_matrix_csv(path, y.reshape(-1, 1))
    assert np.allclose(serialize.load_vector(path), y)


def test_ground_truth_json_roundtrip():
    t = v.gen_ground_truth(25, 3, 4.0, 1.5, seed=10)
    d = serialize.ground_truth_to_json(t)
    back = serialize.ground_truth_from_json(json.loads(json.dumps(d)))
    assert np.array_equal(back.beta, t.beta)
    assert np.array_equal(back.support, t.support)
    assert back.sigma == t.sigma
    assert back.seed == 10


def test_observation_json_roundtrip(tmp_path):
    X = v.gen_gaussian_design(7, 12, seed=1)
    t = v.gen_ground_truth(12, 2, 3.0, 1.0, seed=2)
    obs = v.observe(X, t, seed=3)
    path = tmp_path / "obs.json"
    serialize.write_json(path, serialize.observation_to_json(obs))
    back = serialize.observation_from_json_file(path)
    assert np.array_equal(back.y, obs.y)
    assert np.array_equal(back.noise, obs.noise)
    assert back.seed == 3
    # load_vector on an observation JSON returns y
    assert np.array_equal(serialize.load_vector(path), obs.y)
