"""Survival and classification evaluation metrics.

Censoring-aware metrics use inverse-probability-of-censoring weights from a
Kaplan-Meier estimate of the censoring distribution, evaluated
left-continuously.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .survival.grid import SurvivalCurve

__all__ = [
    "StepFunction",
    "EvaluationReport",
    "km_estimator",
    "antolini_cindex",
    "integrated_brier",
    "cumulative_dynamic_auc",
    "roc_auc",
    "average_precision",
    "sens_spec_gmean",
]


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function starting at 1.0 before the first knot."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        if k.shape != v.shape:
            raise DataError("knots and values must align")
        if k.size and np.any(np.diff(k) <= 0):
            raise DataError("knots must be strictly increasing")

    def at(self, t, side: str = "right") -> np.ndarray:
        """Evaluate; side='left' gives the left-continuous value S(t-)."""
        idx = np.searchsorted(self.knots, t, side=side)
        padded = np.concatenate([[1.0], self.values])
        return padded[idx]


def km_estimator(y, delta, censoring: bool = False) -> StepFunction:
    """Product-limit estimator of the survival (or censoring) distribution.

    With ``censoring=True`` the event indicator is flipped, estimating the
    probability of remaining uncensored.
    """
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(int)
    if y.size == 0:
        raise DataError("Kaplan-Meier needs at least one sample")
    events = 1 - delta if censoring else delta
    order = np.argsort(y, kind="stable")
    ys, es = y[order], events[order]
    times = np.unique(ys[es == 1])
    if times.size == 0:
        return StepFunction(knots=np.empty(0), values=np.empty(0))
    n = y.size
    values = []
    surv = 1.0
    for t in times:
        at_risk = n - np.searchsorted(ys, t, side="left")
        d = int(np.sum(es[ys == t]))
        surv *= 1.0 - d / at_risk
        values.append(surv)
    return StepFunction(knots=times, values=np.asarray(values))


def _curve_matrix(curves: list[SurvivalCurve], times: np.ndarray) -> np.ndarray:
    """S[a, b] = survival of subject a evaluated at times[b]."""
    return np.stack([c.at(times) for c in curves])


def antolini_cindex(curves: list[SurvivalCurve], y, delta) -> float:
    """Time-dependent concordance over comparable pairs.

    A pair (i, j) with an event for i strictly before j's time is concordant
    when S_i(y_i) < S_j(y_i); prediction ties count one half. Returns NaN
    when no pair is comparable.
    """
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(int)
    if len(curves) != y.size or y.size < 2:
        raise DataError("need one curve per subject and at least two subjects")
    S = _curve_matrix(curves, y)  # S[a, i] = S_a(y_i)
    conc = ties = total = 0
    for i in np.flatnonzero(delta == 1):
        later = y > y[i]
        if not np.any(later):
            continue
        si = S[i, i]
        sj = S[later, i]
        conc += int(np.sum(sj > si))
        ties += int(np.sum(sj == si))
        total += int(np.sum(later))
    if total == 0:
        return math.nan
    return (conc + 0.5 * ties) / total


def integrated_brier(curves: list[SurvivalCurve], y, delta, times=None) -> float:
    """Graf's time-dependent Brier score with IPCW, trapezoid-integrated.

    At each time t, subjects with an observed event before t contribute
    S(t)^2 weighted by 1/G(y-), subjects still at risk contribute
    (1 - S(t))^2 weighted by 1/G(t). Terms with a zero censoring weight are
    dropped with a warning.
    """
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(int)
    if times is None:
        times = curves[0].times
    times = np.asarray(times, dtype=float)
    G = km_estimator(y, delta, censoring=True)
    S = _curve_matrix(curves, times)
    g_at_y = G.at(y, side="left")
    n = y.size
    dropped = 0
    bs = np.zeros(times.size)
    for b, t in enumerate(times):
        had_event = (y <= t) & (delta == 1)
        at_risk = y > t
        g_t = float(G.at(np.asarray([t]), side="right")[0])
        total = 0.0
        if np.any(had_event):
            w = g_at_y[had_event]
            ok = w > 0
            dropped += int(np.sum(~ok))
            total += float(np.sum((S[had_event, b][ok] ** 2) / w[ok]))
        if np.any(at_risk):
            if g_t > 0:
                total += float(np.sum((1.0 - S[at_risk, b]) ** 2)) / g_t
            else:
                dropped += int(np.sum(at_risk))
        bs[b] = total / n
    if dropped:
        warnings.warn(f"{dropped} Brier terms dropped for zero censoring weight", stacklevel=2)
    if times.size == 1:
        return float(bs[0])
    return float(np.trapezoid(bs, times) / (times[-1] - times[0]))


def cumulative_dynamic_auc(curves: list[SurvivalCurve], y, delta, horizons):
    """Cumulative/dynamic AUC at each horizon plus the mean over horizons.

    Cases at horizon t are subjects with an observed event by t, controls are
    subjects still under observation after t; case weights are 1/G(y-).
    Horizons lacking either group are skipped with NaN.
    """
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(int)
    horizons = np.asarray(horizons, dtype=float)
    G = km_estimator(y, delta, censoring=True)
    g_at_y = G.at(y, side="left")
    S = _curve_matrix(curves, horizons)
    values = np.full(horizons.size, math.nan)
    for b, t in enumerate(horizons):
        cases = (y <= t) & (delta == 1)
        controls = y > t
        if not np.any(cases) or not np.any(controls):
            warnings.warn(f"horizon {t}: no cases or no controls, skipped", stacklevel=2)
            continue
        risk = 1.0 - S[:, b]
        w = g_at_y[cases]
        ok = w > 0
        if not np.any(ok):
            continue
        rc = risk[cases][ok]
        w = 1.0 / w[ok]
        rk = risk[controls]
        wins = (rc[:, None] > rk[None, :]).astype(float)
        wins += 0.5 * (rc[:, None] == rk[None, :])
        values[b] = float(np.sum(w[:, None] * wins) / (np.sum(w) * rk.size))
    mean = float(np.nanmean(values)) if np.any(np.isfinite(values)) else math.nan
    return values, mean


def roc_auc(scores, labels) -> float:
    """Rank-statistic AUC with tie correction; NaN when one class is missing."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return math.nan
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    # average ranks over ties
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(np.sum(ranks[labels == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(scores, labels) -> float:
    """Area under the precision-recall curve with step interpolation."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0 or n_pos == labels.size:
        return math.nan
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    sorted_scores = scores[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(1 - sorted_labels)
    # evaluate only at the last index of each tied-score group
    last = np.flatnonzero(np.append(np.diff(sorted_scores) != 0, True))
    precision = tp[last] / (tp[last] + fp[last])
    recall = tp[last] / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def sens_spec_gmean(scores, labels, threshold: float):
    """Sensitivity, specificity and their geometric mean at a threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    pred = scores >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    fn = int(np.sum(~pred & (labels == 1)))
    tn = int(np.sum(~pred & (labels == 0)))
    fp = int(np.sum(pred & (labels == 0)))
    sens = tp / (tp + fn) if tp + fn else math.nan
    spec = tn / (tn + fp) if tn + fp else math.nan
    gmean = math.sqrt(sens * spec) if not (math.isnan(sens) or math.isnan(spec)) else math.nan
    return sens, spec, gmean


def best_gmean_threshold(scores, labels) -> float:
    """Threshold maximizing the G-mean over the observed score values."""
    scores = np.asarray(scores, dtype=float)
    best_t, best_g = float(scores[0]), -1.0
    for t in np.unique(scores):
        _s, _p, g = sens_spec_gmean(scores, labels, float(t))
        if not math.isnan(g) and g > best_g:
            best_g, best_t = g, float(t)
    return best_t


@dataclass(frozen=True)
class EvaluationReport:
    """Survival evaluation summary matching the comparison-table columns."""

    c_index: float
    auc_5y: float
    ibs: float
    mean_cd_auc: float
    cd_auc: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "c_index": self.c_index,
            "auc_5y": self.auc_5y,
            "ibs": self.ibs,
            "mean_cd_auc": self.mean_cd_auc,
            "cd_auc": {str(k): v for k, v in self.cd_auc.items()},
        }


def evaluate_survival(
    curves: list[SurvivalCurve],
    y,
    delta,
    horizon_5y: float = 5.0,
    cd_horizons=None,
) -> EvaluationReport:
    """Full evaluation: Antolini C-index, AUC within 5 years, iBS and c/d AUC.

    The 5-year AUC labels subjects with an event inside the horizon positive
    and subjects observed beyond it negative; subjects censored earlier are
    excluded.
    """
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta).astype(int)
    c_index = antolini_cindex(curves, y, delta)
    ibs = integrated_brier(curves, y, delta)
    if cd_horizons is None:
        grid_times = curves[0].times
        cd_horizons = grid_times[(grid_times > np.min(y)) & (grid_times < np.max(y))]
        if len(cd_horizons) == 0:
            cd_horizons = grid_times
    cd_values, cd_mean = cumulative_dynamic_auc(curves, y, delta, cd_horizons)

    risk5 = np.asarray([1.0 - float(c.at(horizon_5y)) for c in curves])
    keep = ((y <= horizon_5y) & (delta == 1)) | (y > horizon_5y)
    labels = ((y <= horizon_5y) & (delta == 1)).astype(int)
    auc5 = roc_auc(risk5[keep], labels[keep]) if np.any(keep) else math.nan
    return EvaluationReport(
        c_index=c_index,
        auc_5y=auc5,
        ibs=ibs,
        mean_cd_auc=cd_mean,
        cd_auc={float(h): float(v) for h, v in zip(cd_horizons, cd_values)},
    )
