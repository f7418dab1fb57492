"""Small feed-forward network for multi-label classification.

One hidden layer with a rectified nonlinearity, one sigmoid output per
target label, binary cross-entropy loss, plain stochastic gradient
descent in fixed-size batches, and early stopping on a seeded validation
slice. Training is pure numpy and bit-reproducible given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .serde import pack_blob, unpack_blob

NETWORK_MAGIC = b"MLPN1"


@dataclass(frozen=True)
class NetworkConfig:
    hidden: int = 256
    learning_rate: float = 0.05
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 5
    val_fraction: float = 0.1

    def to_meta(self) -> dict:
        return {
            "hidden": self.hidden,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "val_fraction": self.val_fraction,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> NetworkConfig:
        return cls(
            hidden=meta["hidden"],
            learning_rate=meta["learning_rate"],
            batch_size=meta["batch_size"],
            max_epochs=meta["max_epochs"],
            patience=meta["patience"],
            val_fraction=meta["val_fraction"],
        )


@dataclass
class MlpModel:
    w1: np.ndarray  # (n_inputs, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, n_outputs)
    b2: np.ndarray  # (n_outputs,)
    config: NetworkConfig
    seed: int

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.w2.shape[1]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise TrainingError(
                f"dimension mismatch: model expects {self.n_inputs} features, "
                f"got {x.shape[1] if x.ndim == 2 else x.shape}"
            )
        hidden = np.maximum(x @ self.w1 + self.b1, 0.0)
        return _sigmoid(hidden @ self.w2 + self.b2)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce(proba: np.ndarray, targets: np.ndarray) -> float:
    eps = 1e-12
    clipped = np.clip(proba, eps, 1.0 - eps)
    per_sample = -(targets * np.log(clipped)
                   + (1.0 - targets) * np.log(1.0 - clipped)).sum(axis=1)
    return float(per_sample.mean())


def train_mlp(x: np.ndarray, targets: np.ndarray,
              config: NetworkConfig | None = None, seed: int = 0) -> MlpModel:
    """Train on binary target indicators, shape (n, n_outputs)."""
    if config is None:
        config = NetworkConfig()
    x = np.asarray(x, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or targets.ndim != 2 or len(x) != len(targets):
        raise TrainingError("training matrix and targets disagree in shape")
    if len(x) == 0:
        raise TrainingError("empty sample list")
    n, d = x.shape
    n_outputs = targets.shape[1]
    rng = np.random.default_rng(seed)

    w1 = rng.normal(0.0, np.sqrt(2.0 / max(d, 1)), size=(d, config.hidden))
    b1 = np.zeros(config.hidden)
    w2 = rng.normal(0.0, np.sqrt(1.0 / config.hidden),
                    size=(config.hidden, n_outputs))
    b2 = np.zeros(n_outputs)

    n_val = int(round(config.val_fraction * n))
    n_val = min(max(n_val, 1), n - 1) if n >= 2 else 0
    order = rng.permutation(n)
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    x_train, y_train = x[train_idx], targets[train_idx]
    x_val, y_val = x[val_idx], targets[val_idx]

    best = (w1.copy(), b1.copy(), w2.copy(), b2.copy())
    best_loss = np.inf
    wait = 0
    lr = config.learning_rate
    n_train = len(x_train)

    for _ in range(config.max_epochs):
        perm = rng.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            batch = perm[start:start + config.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            hidden_pre = xb @ w1 + b1
            hidden = np.maximum(hidden_pre, 0.0)
            proba = _sigmoid(hidden @ w2 + b2)
            grad_out = (proba - yb) / len(xb)
            grad_w2 = hidden.T @ grad_out
            grad_b2 = grad_out.sum(axis=0)
            grad_hidden = (grad_out @ w2.T) * (hidden_pre > 0.0)
            grad_w1 = xb.T @ grad_hidden
            grad_b1 = grad_hidden.sum(axis=0)
            w1 -= lr * grad_w1
            b1 -= lr * grad_b1
            w2 -= lr * grad_w2
            b2 -= lr * grad_b2
        if n_val == 0:
            continue
        hidden = np.maximum(x_val @ w1 + b1, 0.0)
        val_loss = _bce(_sigmoid(hidden @ w2 + b2), y_val)
        if val_loss < best_loss - 1e-9:
            best_loss = val_loss
            best = (w1.copy(), b1.copy(), w2.copy(), b2.copy())
            wait = 0
        else:
            wait += 1
            if wait >= config.patience:
                break

    if n_val == 0:
        best = (w1, b1, w2, b2)
    return MlpModel(w1=best[0], b1=best[1], w2=best[2], b2=best[3],
                    config=config, seed=seed)


def mlp_to_blob(model: MlpModel, magic: bytes = NETWORK_MAGIC) -> bytes:
    meta = {
        "kind": "mlp",
        "seed": model.seed,
        "config": model.config.to_meta(),
    }
    return pack_blob(magic, meta, [model.w1, model.b1, model.w2, model.b2])


def mlp_from_blob(data: bytes, magic: bytes = NETWORK_MAGIC) -> MlpModel:
    meta, arrays = unpack_blob(data, magic)
    w1, b1, w2, b2 = arrays
    return MlpModel(w1=w1, b1=b1, w2=w2, b2=b2,
                    config=NetworkConfig.from_meta(meta["config"]),
                    seed=meta["seed"])
