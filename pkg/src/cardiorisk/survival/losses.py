"""Discrete-time survival losses: focal likelihood and pairwise rank loss.

Both losses consume a batch of discrete survival distributions (rows summing
to one over the grid bins plus the no-event bucket) and return gradients with
respect to the pre-normalization scores, chained through the softmax.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError

__all__ = ["LossConfig", "softmax_scores", "deephit_focal_nll", "rank_loss"]

_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossConfig:
    """Weights of the combined loss alpha * L1 + (1 - alpha) * L2."""

    alpha: float = 0.5
    gamma: float = 2.0
    rank_sigma: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError("alpha must lie in [0, 1]")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be non-negative")
        if self.rank_sigma <= 0:
            raise ConfigurationError("rank sigma must be positive")


def softmax_scores(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax: the exponential normalization producing distributions."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _chain_to_scores(probs: np.ndarray, grad_p: np.ndarray) -> np.ndarray:
    inner = np.sum(grad_p * probs, axis=1, keepdims=True)
    return probs * (grad_p - inner)


def deephit_focal_nll(
    probs: np.ndarray,
    bin_idx: np.ndarray,
    delta: np.ndarray,
    gamma: float = 0.0,
):
    """Focal-modified likelihood term of the discrete survival loss.

    For events the probability of the observed bin is scored; for censored
    samples the mass beyond the bin containing the observation time (one
    minus the cumulative probability through that bin) is scored. The focal
    exponent gamma down-weights well-predicted samples and gamma = 0 recovers
    the plain likelihood term exactly.

    Returns (loss_sum, gradients w.r.t. pre-normalization scores).
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    bin_idx = np.asarray(bin_idx, dtype=int)
    delta = np.asarray(delta).astype(bool)
    n, k = probs.shape
    if bin_idx.size != n or delta.size != n:
        raise DataError("probs, bin indices and event flags must align")
    if np.any(bin_idx < 0) or np.any(bin_idx >= k - 1):
        raise DataError("bin indices must address a grid bin, not the no-event bucket")
    if gamma < 0:
        raise ConfigurationError("gamma must be non-negative")

    rows = np.arange(n)
    cum = np.cumsum(probs, axis=1)
    p_event = probs[rows, bin_idx]
    surv = 1.0 - cum[rows, bin_idx]

    target = np.where(delta, p_event, surv)
    clipped = np.maximum(target, _PROB_FLOOR)
    if np.any(target < _PROB_FLOOR):
        warnings.warn("probability underflow clamped at 1e-12 in the likelihood term", stacklevel=2)
    one_minus = 1.0 - target
    log_t = np.log(clipped)

    if gamma == 0.0:
        loss_terms = -log_t
        dl_dtarget = -1.0 / clipped
    else:
        focal = one_minus**gamma
        loss_terms = -focal * log_t
        with np.errstate(divide="ignore", invalid="ignore"):
            dl_dtarget = np.where(
                one_minus <= 0.0,
                0.0,
                gamma * one_minus ** (gamma - 1.0) * log_t - focal / clipped,
            )

    # d target / d p_m: events touch only their own bin; censored samples
    # lose mass through every bin up to and including theirs.
    grad_p = np.zeros_like(probs)
    ev = delta
    grad_p[rows[ev], bin_idx[ev]] = dl_dtarget[ev]
    if np.any(~ev):
        cz = np.flatnonzero(~ev)
        mask = np.arange(k)[None, :] <= bin_idx[cz, None]
        grad_p[cz] = -dl_dtarget[cz, None] * mask

    return float(np.sum(loss_terms)), _chain_to_scores(probs, grad_p)


def rank_loss(
    probs: np.ndarray,
    bin_idx: np.ndarray,
    y: np.ndarray,
    delta: np.ndarray,
    rank_sigma: float = 0.1,
):
    """Concordance-style pairwise loss over ordered comparable pairs.

    For every pair where subject i has an event strictly before subject j's
    time, the difference of cumulative risks at i's bin enters
    exp(-(F_i - F_j) / sigma), so a correctly ordered pair with a wide margin
    contributes almost nothing.

    Returns (loss_sum, gradients w.r.t. pre-normalization scores).
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    bin_idx = np.asarray(bin_idx, dtype=int)
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(bool)
    n, k = probs.shape
    if n < 2:
        raise DataError("rank loss needs a batch of at least two samples")
    if rank_sigma <= 0:
        raise ConfigurationError("rank sigma must be positive")

    cum = np.cumsum(probs, axis=1)
    # F[a, i] = cumulative risk of subject a at subject i's bin.
    F = cum[:, bin_idx]
    comparable = delta[:, None] & (y[:, None] < y[None, :])
    if not np.any(comparable):
        return 0.0, np.zeros_like(probs)
    diag = np.diagonal(F)
    margins = diag[:, None] - F.T  # row i, col j: F_i(y_i) - F_j(y_i)
    E = np.where(comparable, np.exp(-margins / rank_sigma), 0.0)
    loss = float(np.sum(E))

    # d loss / d F_i(y_i) and d loss / d F_j(y_i), then back through cumsum.
    dF_own = -E.sum(axis=1) / rank_sigma
    grad_cum = np.zeros_like(probs)
    np.add.at(grad_cum, (np.arange(n), bin_idx), dF_own)
    contrib = E / rank_sigma  # dL/dF_j(y_i) per pair (i, j)
    by_bin = np.zeros((k, n))
    np.add.at(by_bin, bin_idx, contrib)
    grad_cum += by_bin.T
    # cum[a, m] feeds every F at bins >= m: suffix-sum over bins.
    grad_p = np.cumsum(grad_cum[:, ::-1], axis=1)[:, ::-1]
    return loss, _chain_to_scores(probs, grad_p)
