"""Discrete time grid, discrete survival distributions and survival curves."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError

__all__ = ["TimeGrid", "DiscreteSurvivalDistribution", "SurvivalCurve", "risk_within"]


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant intervals over (0, horizon] plus a no-event bucket."""

    horizon: float = 11.0
    n_bins: int = 25

    def __post_init__(self):
        if self.horizon <= 0 or self.n_bins < 1:
            raise ConfigurationError("horizon and bin count must be positive")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_bins + 1)

    @property
    def times(self) -> np.ndarray:
        """Right edges of the bins: the grid survival curves are defined on."""
        return self.edges[1:]

    @property
    def n_outputs(self) -> int:
        return self.n_bins + 1

    def bin_index(self, y) -> np.ndarray:
        """Bin k covers (edges[k], edges[k+1]]; times beyond the horizon clamp."""
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise DataError("event/observation times must be positive")
        k = np.searchsorted(self.edges[1:], y, side="left")
        return np.minimum(k, self.n_bins - 1).astype(int)


@dataclass(frozen=True)
class DiscreteSurvivalDistribution:
    """Probabilities over the grid bins plus the no-event bucket."""

    probs: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.shape != (self.grid.n_outputs,):
            raise DataError(f"expected {self.grid.n_outputs} probabilities, got {p.shape}")
        if abs(float(p.sum()) - 1.0) > 1e-6:
            raise DataError(f"probabilities sum to {p.sum()}, not 1")
        if np.any(p < -1e-9) or np.any(p > 1 + 1e-9):
            raise DataError("probabilities must lie in [0, 1]")

    def survival_curve(self) -> "SurvivalCurve":
        s = 1.0 - np.cumsum(self.probs[: self.grid.n_bins])
        return SurvivalCurve(times=self.grid.times, survival=np.clip(s, 0.0, 1.0))


@dataclass(frozen=True)
class SurvivalCurve:
    """Monotone non-increasing survival probability over a time grid."""

    times: np.ndarray
    survival: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.survival, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "survival", s)
        if t.shape != s.shape or t.ndim != 1 or t.size == 0:
            raise DataError("times and survival values must be equal-length 1-D arrays")
        if np.any(np.diff(t) <= 0):
            raise DataError("curve times must be strictly increasing")
        if np.any(s < -1e-9) or np.any(s > 1 + 1e-9):
            raise DataError("survival values must lie in [0, 1]")
        if np.any(np.diff(s) > 1e-9):
            raise DataError("survival curve must be monotone non-increasing")

    def at(self, t) -> np.ndarray:
        """Linear interpolation with S(0) = 1; beyond the grid the last value holds."""
        return np.interp(t, np.concatenate([[0.0], self.times]), np.concatenate([[1.0], self.survival]))


def risk_within(curve: SurvivalCurve, horizon: float = 5.0) -> float:
    """Probability of the event within ``horizon``: 1 - S(horizon)."""
    if horizon > curve.times[-1]:
        warnings.warn(
            f"horizon {horizon} beyond the grid end {curve.times[-1]}; clamping",
            stacklevel=2,
        )
        horizon = float(curve.times[-1])
    return float(1.0 - curve.at(horizon))
