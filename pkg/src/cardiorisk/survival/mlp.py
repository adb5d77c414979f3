"""Discrete-time MLP survival model trained with the combined focal/rank loss.

The network is a stack of equal-width linear layers with leaky-rectifier
activations and dropout, ending in an exponential normalization over the
grid bins plus the no-event bucket. Forward and backward passes are written
out explicitly; training is plain mini-batch gradient descent with Adam
moment estimates and is deterministic under the configured seed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .grid import DiscreteSurvivalDistribution, SurvivalCurve, TimeGrid
from .losses import LossConfig, deephit_focal_nll, rank_loss, softmax_scores

__all__ = ["MlpSpec", "TrainParams", "MlpSurvivalModel", "train_mlp_deephit"]


@dataclass(frozen=True)
class MlpSpec:
    hidden_layers: int = 4
    hidden_units: int = 32
    leaky_slope: float = 0.01
    dropout: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.hidden_layers < 1 or self.hidden_units < 1:
            raise ConfigurationError("need at least one hidden layer and unit")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError("dropout must lie in [0, 1)")


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 128
    augment: bool = False
    augment_fraction: float = 0.5
    augment_range: tuple[float, float] = (0.8, 1.2)

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 2:
            raise ConfigurationError("invalid optimizer parameters")


@dataclass
class MlpSurvivalModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    spec: MlpSpec
    grid: TimeGrid
    feature_names: list[str] = field(default_factory=list)

    def _forward(self, X, train_rng=None):
        """Returns scores plus per-layer caches for backpropagation."""
        a = X
        pre, acts, masks = [], [a], []
        n_hidden = len(self.weights) - 1
        for i in range(n_hidden):
            z = a @ self.weights[i] + self.biases[i]
            pre.append(z)
            a = np.where(z > 0, z, self.spec.leaky_slope * z)
            if train_rng is not None and self.spec.dropout > 0:
                keep = 1.0 - self.spec.dropout
                mask = (train_rng.random(a.shape) < keep) / keep
                a = a * mask
                masks.append(mask)
            else:
                masks.append(None)
            acts.append(a)
        scores = a @ self.weights[-1] + self.biases[-1]
        return scores, pre, acts, masks

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        scores, *_ = self._forward(X)
        return scores

    def predict_probs(self, X: np.ndarray) -> np.ndarray:
        """Dropout is inference-disabled, so repeated calls are identical."""
        return softmax_scores(self.predict_scores(X))

    def predict_distribution(self, x: np.ndarray) -> DiscreteSurvivalDistribution:
        probs = self.predict_probs(np.atleast_2d(x))[0]
        return DiscreteSurvivalDistribution(probs=probs, grid=self.grid)

    def predict_survival(self, X: np.ndarray) -> list[SurvivalCurve]:
        probs = self.predict_probs(X)
        return [
            DiscreteSurvivalDistribution(probs=p, grid=self.grid).survival_curve()
            for p in probs
        ]

    def to_dict(self) -> dict:
        return {
            "kind": "mlp_deephit",
            "spec": {
                "hidden_layers": self.spec.hidden_layers,
                "hidden_units": self.spec.hidden_units,
                "leaky_slope": self.spec.leaky_slope,
                "dropout": self.spec.dropout,
                "seed": self.spec.seed,
            },
            "grid": {"horizon": self.grid.horizon, "n_bins": self.grid.n_bins},
            "feature_names": self.feature_names,
            "layers": [
                {"w": w.tolist(), "b": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MlpSurvivalModel":
        return cls(
            weights=[np.asarray(layer["w"], dtype=float) for layer in payload["layers"]],
            biases=[np.asarray(layer["b"], dtype=float) for layer in payload["layers"]],
            spec=MlpSpec(**payload["spec"]),
            grid=TimeGrid(**payload["grid"]),
            feature_names=list(payload["feature_names"]),
        )


def _init_model(n_features: int, spec: MlpSpec, grid: TimeGrid) -> MlpSurvivalModel:
    rng = np.random.default_rng(spec.seed)
    sizes = [n_features] + [spec.hidden_units] * spec.hidden_layers + [grid.n_outputs]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpSurvivalModel(weights=weights, biases=biases, spec=spec, grid=grid)


def _backward(model: MlpSurvivalModel, grad_scores, pre, acts, masks):
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = grad_scores
    grads_w[-1] = acts[-1].T @ delta
    grads_b[-1] = delta.sum(axis=0)
    for i in range(len(model.weights) - 2, -1, -1):
        delta = delta @ model.weights[i + 1].T
        if masks[i] is not None:
            delta = delta * masks[i]
        delta = delta * np.where(pre[i] > 0, 1.0, model.spec.leaky_slope)
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
    return grads_w, grads_b


def combined_loss_and_grad(scores, bin_idx, y, delta, loss_cfg: LossConfig):
    """Batch-mean combined loss and its gradient w.r.t. the scores."""
    probs = softmax_scores(scores)
    n = probs.shape[0]
    l1, g1 = deephit_focal_nll(probs, bin_idx, delta, loss_cfg.gamma)
    if loss_cfg.alpha < 1.0:
        l2, g2 = rank_loss(probs, bin_idx, y, delta, loss_cfg.rank_sigma)
    else:
        l2, g2 = 0.0, np.zeros_like(probs)
    loss = loss_cfg.alpha * l1 / n + (1.0 - loss_cfg.alpha) * l2 / n
    grad = loss_cfg.alpha * g1 / n + (1.0 - loss_cfg.alpha) * g2 / n
    return loss, grad


def train_mlp_deephit(
    X: np.ndarray,
    y: np.ndarray,
    delta: np.ndarray,
    spec: MlpSpec = MlpSpec(),
    loss_cfg: LossConfig = LossConfig(),
    grid: TimeGrid = TimeGrid(),
    params: TrainParams = TrainParams(),
    feature_names: list[str] | None = None,
    continuous_mask: np.ndarray | None = None,
) -> MlpSurvivalModel:
    """Train the discrete-time MLP on normalized features.

    Optional augmentation scales the continuous features of a random half of
    every batch by a uniform factor in [0.8, 1.2]. If the loss turns NaN the
    last finite parameter state is restored and training stops.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta)
    if X.shape[0] != y.size or y.size != delta.size:
        raise ConfigurationError("X, y and delta must have matching first dimensions")
    bin_idx = grid.bin_index(y)
    model = _init_model(X.shape[1], spec, grid)
    if feature_names:
        model.feature_names = list(feature_names)
    if continuous_mask is None:
        continuous_mask = np.ones(X.shape[1], dtype=bool)

    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 0xC0FFEE)))
    n = X.shape[0]
    params_flat = model.weights + model.biases
    m_state = [np.zeros_like(p) for p in params_flat]
    v_state = [np.zeros_like(p) for p in params_flat]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    snapshot = None

    for _epoch in range(params.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, params.batch_size):
            batch = order[lo : lo + params.batch_size]
            if batch.size < 2:
                continue
            xb = X[batch]
            if params.augment:
                half = rng.random(batch.size) < params.augment_fraction
                factors = rng.uniform(*params.augment_range, size=batch.size)
                xb = xb.copy()
                scaled = xb[half][:, continuous_mask] * factors[half, None]
                xb[np.ix_(half, continuous_mask)] = scaled
            scores, pre, acts, masks = model._forward(xb, train_rng=rng)
            loss, grad_scores = combined_loss_and_grad(
                scores, bin_idx[batch], y[batch], delta[batch], loss_cfg
            )
            if not np.isfinite(loss):
                warnings.warn("training loss diverged; restoring last checkpoint", stacklevel=2)
                if snapshot is not None:
                    model.weights = [w.copy() for w in snapshot[0]]
                    model.biases = [b.copy() for b in snapshot[1]]
                return model
            snapshot = ([w.copy() for w in model.weights], [b.copy() for b in model.biases])
            grads_w, grads_b = _backward(model, grad_scores, pre, acts, masks)
            step += 1
            grads = grads_w + grads_b
            params_flat = model.weights + model.biases
            for p, g, m_st, v_st in zip(params_flat, grads, m_state, v_state):
                m_st *= beta1
                m_st += (1 - beta1) * g
                v_st *= beta2
                v_st += (1 - beta2) * g * g
                m_hat = m_st / (1 - beta1**step)
                v_hat = v_st / (1 - beta2**step)
                p -= params.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return model
