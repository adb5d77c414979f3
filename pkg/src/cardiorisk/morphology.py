"""Cardiac-cycle templates, PQRST delineation and short-strip rhythm features.

The template is the R-aligned per-position median of all cycles; wave
amplitudes are deviations from the template baseline (the median of the
template itself) and timings are absolute offsets from the R peak in ms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .hrv import poincare_stats
from .rpeak import BeatToBeatSeries, RPeakSeries
from .signal import EcgRecord

__all__ = [
    "Cycle",
    "CycleTemplate",
    "PqrstFeatures",
    "RhythmFeatures",
    "extract_cycles",
    "build_template",
    "delineate",
    "rhythm_features",
]

# Wave search windows relative to R, in ms. Q and S are the nearest valleys,
# P and T the largest absolute deviations inside their windows.
Q_WINDOW_MS = (-80.0, 0.0)
S_WINDOW_MS = (0.0, 80.0)
P_WINDOW_MS = (-350.0, -50.0)
T_WINDOW_MS = (120.0, 500.0)


@dataclass(frozen=True)
class Cycle:
    """One cardiac cycle centered on its R peak."""

    samples: np.ndarray
    r_index: int


@dataclass(frozen=True)
class CycleTemplate:
    """Median beat with per-position contribution counts."""

    samples: np.ndarray
    r_index: int
    fs: float
    baseline: float
    coverage: np.ndarray

    def __post_init__(self):
        if not 0 <= self.r_index < self.samples.size:
            raise DataError("template R index out of bounds")
        if np.any(self.coverage < 1):
            raise DataError("every retained template position needs coverage >= 1")


@dataclass(frozen=True)
class PqrstFeatures:
    """Wave timings (ms, absolute offsets from R) and amplitudes (mV vs baseline).

    Missing waves are NaN; P/T inversion flags are False when the wave is
    missing.
    """

    p_timing: float
    q_timing: float
    r_timing: float
    s_timing: float
    t_timing: float
    p_amplitude: float
    q_amplitude: float
    r_amplitude: float
    s_amplitude: float
    t_amplitude: float
    p_inverted: bool = False
    t_inverted: bool = False

    def as_dict(self) -> dict[str, float]:
        return {
            "p_timing": self.p_timing,
            "q_timing": self.q_timing,
            "r_timing": self.r_timing,
            "s_timing": self.s_timing,
            "t_timing": self.t_timing,
            "p_amplitude": self.p_amplitude,
            "q_amplitude": self.q_amplitude,
            "r_amplitude": self.r_amplitude,
            "s_amplitude": self.s_amplitude,
            "t_amplitude": self.t_amplitude,
        }


@dataclass(frozen=True)
class RhythmFeatures:
    """Short HRV features of a 30 s strip."""

    mean_hr: float
    sdnn: float
    sd1_sd2: float

    def as_dict(self) -> dict[str, float]:
        return {"mean_hr": self.mean_hr, "sd1_sd2": self.sd1_sd2, "sdnn": self.sdnn}


def extract_cycles(record: EcgRecord, peaks: RPeakSeries) -> list[Cycle]:
    """Cut one cycle per interior R peak.

    The half-width of each cycle is the distance to the nearest adjacent
    R peak, so cycles never overlap more than one beat.
    """
    if len(peaks) < 3:
        raise DataError("need at least three peaks to extract cycles")
    idx = peaks.indices
    x = record.samples
    cycles = []
    for k in range(1, len(idx) - 1):
        half = min(idx[k] - idx[k - 1], idx[k + 1] - idx[k])
        lo = max(idx[k] - half, 0)
        hi = min(idx[k] + half + 1, x.size)
        cycles.append(Cycle(samples=x[lo:hi].copy(), r_index=int(idx[k] - lo)))
    return cycles


def build_template(cycles: list[Cycle], fs: float) -> CycleTemplate:
    """Align cycles on their R peaks and aggregate with the per-position median.

    Cycles are padded with missing markers to the largest half-widths; end
    positions contributed by half the cycles or fewer are trimmed so the
    median never runs over sparse tails.
    """
    if len(cycles) < 2:
        raise DataError("need at least two cycles to build a template")
    left = max(c.r_index for c in cycles)
    right = max(c.samples.size - c.r_index - 1 for c in cycles)
    width = left + right + 1
    stack = np.full((len(cycles), width), np.nan)
    for row, c in enumerate(cycles):
        start = left - c.r_index
        stack[row, start : start + c.samples.size] = c.samples
    coverage = np.sum(~np.isnan(stack), axis=0)
    keep = 2 * coverage > len(cycles)
    first = int(np.argmax(keep))
    last = width - int(np.argmax(keep[::-1]))
    stack = stack[:, first:last]
    coverage = coverage[first:last]
    samples = np.nanmedian(stack, axis=0)
    return CycleTemplate(
        samples=samples,
        r_index=left - first,
        fs=fs,
        baseline=float(np.median(samples)),
        coverage=coverage,
    )


def _window_slice(template: CycleTemplate, lo_ms: float, hi_ms: float) -> slice:
    fs = template.fs
    lo = template.r_index + int(math.ceil(lo_ms / 1000.0 * fs))
    hi = template.r_index + int(math.floor(hi_ms / 1000.0 * fs))
    lo = max(lo, 0)
    hi = min(hi, template.samples.size - 1)
    return slice(lo, hi + 1) if hi >= lo else slice(0, 0)


def delineate(template: CycleTemplate) -> PqrstFeatures:
    """Locate P, Q, R, S and T on the template.

    Q and S are the deepest valleys within 80 ms of R; P and T are the
    largest absolute deviations in their windows, with inversion flagged
    when the extremum is negative. A flat template yields all-missing
    features rather than an error.
    """
    fs = template.fs
    span_before = template.r_index / fs * 1000.0
    span_after = (template.samples.size - 1 - template.r_index) / fs * 1000.0
    if span_before < 250.0 or span_after < 250.0:
        raise DataError("template must span at least 250 ms on both sides of R")

    dev = template.samples - template.baseline
    ms_per_sample = 1000.0 / fs

    def valley(lo_ms, hi_ms):
        sl = _window_slice(template, lo_ms, hi_ms)
        w = dev[sl]
        if w.size == 0 or np.max(np.abs(w)) == 0.0:
            return math.nan, math.nan
        pos = sl.start + int(np.argmin(w))
        return abs(pos - template.r_index) * ms_per_sample, float(dev[pos])

    def extremum(lo_ms, hi_ms):
        sl = _window_slice(template, lo_ms, hi_ms)
        w = dev[sl]
        if w.size == 0 or np.max(np.abs(w)) == 0.0:
            return math.nan, math.nan, False
        pos = sl.start + int(np.argmax(np.abs(w)))
        amp = float(dev[pos])
        return abs(pos - template.r_index) * ms_per_sample, amp, amp < 0

    flat = np.max(np.abs(dev)) == 0.0
    if flat:
        nan = math.nan
        return PqrstFeatures(nan, nan, nan, nan, nan, nan, nan, nan, nan, nan)

    # Exclude R itself from the Q/S windows: one sample margin on each side.
    q_t, q_a = valley(Q_WINDOW_MS[0], -ms_per_sample)
    s_t, s_a = valley(ms_per_sample, S_WINDOW_MS[1])
    p_t, p_a, p_inv = extremum(P_WINDOW_MS[0], P_WINDOW_MS[1] - ms_per_sample)
    t_t, t_a, t_inv = extremum(T_WINDOW_MS[0] + ms_per_sample, T_WINDOW_MS[1])
    return PqrstFeatures(
        p_timing=p_t,
        q_timing=q_t,
        r_timing=template.r_index * ms_per_sample,
        s_timing=s_t,
        t_timing=t_t,
        p_amplitude=p_a,
        q_amplitude=q_a,
        r_amplitude=float(dev[template.r_index]),
        s_amplitude=s_a,
        t_amplitude=t_a,
        p_inverted=p_inv,
        t_inverted=t_inv,
    )


def rhythm_features(bb: BeatToBeatSeries) -> RhythmFeatures:
    """Mean HR, SDNN and Poincare SD1/SD2 of one beat-to-beat strip."""
    if len(bb) < 3:
        raise DataError("rhythm features need at least three intervals")
    mean_iv = float(np.mean(bb.intervals))
    sdnn = float(np.std(bb.intervals))
    x, y = bb.consecutive_pairs()
    sd1, sd2, ratio, _area, _degenerate = poincare_stats(x, y)
    return RhythmFeatures(mean_hr=60000.0 / mean_iv, sdnn=sdnn, sd1_sd2=ratio)
