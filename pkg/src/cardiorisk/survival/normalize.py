"""Quantile normalization of feature columns to [0, 1]."""
from __future__ import annotations

import warnings

import numpy as np

from ..errors import DataError

__all__ = ["QuantileNormalizer"]


class QuantileNormalizer:
    """Maps each column through its empirical CDF.

    Values seen in training land uniformly on [0, 1]; unseen values clamp to
    the range ends and missing values pass through as NaN. Constant columns
    map everything to 0.5.
    """

    def __init__(self):
        self.columns: list[str] = []
        self._sorted: dict[str, np.ndarray] = {}

    def fit(self, table: dict[str, np.ndarray]) -> "QuantileNormalizer":
        self.columns = list(table.keys())
        self._sorted = {}
        for name in self.columns:
            values = np.asarray(table[name], dtype=float)
            finite = np.sort(values[np.isfinite(values)])
            if finite.size < 10:
                raise DataError(f"column {name!r} has {finite.size} finite values; need >= 10")
            if finite[0] == finite[-1]:
                warnings.warn(f"column {name!r} is constant; mapping to 0.5", stacklevel=2)
            self._sorted[name] = finite
        return self

    def apply_column(self, name: str, values) -> np.ndarray:
        if name not in self._sorted:
            raise DataError(f"column {name!r} was not fitted")
        values = np.asarray(values, dtype=float)
        ref = self._sorted[name]
        if ref[0] == ref[-1]:
            out = np.full(values.shape, 0.5)
            out[np.isnan(values)] = np.nan
            return out
        grid = np.linspace(0.0, 1.0, ref.size)
        return np.interp(values, ref, grid, left=0.0, right=1.0)

    def apply(self, table: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        return {name: self.apply_column(name, table[name]) for name in self.columns}

    def apply_matrix(self, X: np.ndarray) -> np.ndarray:
        """Columns of ``X`` must follow ``self.columns`` order."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.columns):
            raise DataError(f"expected {len(self.columns)} columns, got {X.shape[1]}")
        out = np.empty_like(X)
        for j, name in enumerate(self.columns):
            out[:, j] = self.apply_column(name, X[:, j])
        return out

    def to_dict(self) -> dict:
        return {
            "columns": self.columns,
            "quantiles": {name: self._sorted[name].tolist() for name in self.columns},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "QuantileNormalizer":
        norm = cls()
        norm.columns = list(payload["columns"])
        norm._sorted = {name: np.asarray(payload["quantiles"][name], dtype=float) for name in norm.columns}
        return norm
