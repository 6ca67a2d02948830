import numpy as np
import pytest

from scheda import (
    LinearClassifier,
    Rng,
    init_composite,
    init_params,
    load_any,
    load_classifier,
    load_composite,
    load_dae,
    save_classifier,
    save_composite,
    save_dae,
)
from scheda.errors import FormatError


def test_dae_round_trip_bit_exact(tmp_path):
    p = init_params(11, 6, Rng(42), enc_transfer="relu")
    path = tmp_path / "model.ckpt"
    save_dae(p, path)
    q = load_dae(path)
    assert np.array_equal(p.weights, q.weights)
    assert np.array_equal(p.enc_bias, q.enc_bias)
    assert np.array_equal(p.dec_bias, q.dec_bias)
    assert (q.enc_transfer, q.dec_transfer) == ("relu", "sigmoid")


def test_dae_magic(tmp_path):
    path = tmp_path / "model.ckpt"
    p = init_params(3, 2, Rng(0))
    save_dae(p, path)
    data = path.read_bytes()
    assert data[:4] == b"SDA1"
    # save twice: byte-identical
    save_dae(p, tmp_path / "again.ckpt")
    assert (tmp_path / "again.ckpt").read_bytes() == data


def test_dae_truncation_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    save_dae(init_params(3, 2, Rng(0)), path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(FormatError, match="truncated"):
        load_dae(path)


def test_dae_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    save_dae(init_params(3, 2, Rng(0)), path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(FormatError, match="trailing"):
        load_dae(path)


def test_wrong_magic_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    path.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(FormatError, match="magic"):
        load_dae(path)
    with pytest.raises(FormatError, match="magic"):
        load_any(path)


def test_composite_round_trip(tmp_path):
    p = init_composite(9, [4, 3], [0.2, 0.4], Rng(7))
    path = tmp_path / "comp.ckpt"
    save_composite(p, path)
    q = load_composite(path)
    assert path.read_bytes()[:4] == b"SDC1"
    assert len(q.partitions) == 2
    for a, b in zip(p.partitions, q.partitions):
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)
        assert a.level == b.level
    assert np.array_equal(p.dec_bias, q.dec_bias)


def test_classifier_round_trip(tmp_path):
    clf = LinearClassifier(np.random.rand(3, 5), np.random.rand(3), 0.01)
    path = tmp_path / "clf.ckpt"
    save_classifier(clf, path)
    q = load_classifier(path)
    assert path.read_bytes()[:4] == b"SLR1"
    assert np.array_equal(clf.weights, q.weights)
    assert np.array_equal(clf.bias, q.bias)
    assert clf.reg_strength == q.reg_strength


def test_load_any_dispatches(tmp_path):
    from scheda import CompositeParams, DaeParams

    save_dae(init_params(3, 2, Rng(0)), tmp_path / "a.ckpt")
    save_composite(init_composite(3, [2], [0.1], Rng(0)), tmp_path / "b.ckpt")
    save_classifier(LinearClassifier(np.zeros((2, 3)), np.zeros(2), 1.0), tmp_path / "c.ckpt")
    assert isinstance(load_any(tmp_path / "a.ckpt"), DaeParams)
    assert isinstance(load_any(tmp_path / "b.ckpt"), CompositeParams)
    assert isinstance(load_any(tmp_path / "c.ckpt"), LinearClassifier)
