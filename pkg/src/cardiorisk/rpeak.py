"""Hamilton-style R-peak detection and inter-beat interval series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .signal import EcgRecord

__all__ = [
    "RPeakSeries",
    "BeatToBeatSeries",
    "detect_r_peaks",
    "compute_rri",
    "ectopic_filter",
]

REFRACTORY_S = 0.200
ENVELOPE_WINDOW_S = 0.080
THRESHOLD_COEF = 0.3125
SEARCHBACK_FACTOR = 1.5
REFINE_WINDOW_S = 0.040


@dataclass(frozen=True)
class RPeakSeries:
    """Detected R-peak positions as sample indices and seconds."""

    indices: np.ndarray
    fs: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        object.__setattr__(self, "indices", idx)
        if idx.size and np.any(np.diff(idx) <= 0):
            raise DataError("peak indices must be strictly increasing")
        if idx.size and np.any(np.diff(idx) < REFRACTORY_S * self.fs - 0.5):
            raise DataError("peaks violate the 200 ms refractory period")

    @property
    def times(self) -> np.ndarray:
        return self.indices / self.fs

    @classmethod
    def from_times(cls, times, fs: float) -> "RPeakSeries":
        return cls(indices=np.round(np.asarray(times, dtype=float) * fs).astype(int), fs=fs)

    def __len__(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class BeatToBeatSeries:
    """Ordered inter-beat intervals (ms) with segment boundaries.

    ``segment_ids`` marks the source strip of each interval; a change of id
    between adjacent intervals flags a nonconsecutive join, and statistics
    based on interval differences never straddle such a join.
    """

    intervals: np.ndarray
    onset_times: np.ndarray = field(default=None)
    segment_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=float)
        object.__setattr__(self, "intervals", iv)
        if iv.size and (np.any(iv <= 0) or np.any(iv >= 5000)):
            raise DataError("intervals must lie in (0, 5000) ms")
        onsets = self.onset_times
        if onsets is None:
            onsets = np.concatenate([[0.0], np.cumsum(iv[:-1]) / 1000.0]) if iv.size else np.empty(0)
        object.__setattr__(self, "onset_times", np.asarray(onsets, dtype=float))
        seg = self.segment_ids
        if seg is None:
            seg = np.zeros(iv.size, dtype=int)
        object.__setattr__(self, "segment_ids", np.asarray(seg, dtype=int))
        if not (self.onset_times.size == iv.size == self.segment_ids.size):
            raise DataError("intervals, onsets and segment ids must align")

    def __len__(self) -> int:
        return int(self.intervals.size)

    def pair_mask(self) -> np.ndarray:
        """Boolean mask of adjacent interval pairs lying within one segment."""
        if len(self) < 2:
            return np.zeros(0, dtype=bool)
        return self.segment_ids[1:] == self.segment_ids[:-1]

    def pair_diffs(self) -> np.ndarray:
        """Within-segment successive differences (ms)."""
        mask = self.pair_mask()
        return (self.intervals[1:] - self.intervals[:-1])[mask]

    def consecutive_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Within-segment (interval_i, interval_{i+1}) point cloud."""
        mask = self.pair_mask()
        return self.intervals[:-1][mask], self.intervals[1:][mask]

    def segments(self) -> list[np.ndarray]:
        """Interval runs split at segment boundaries, in series order."""
        if not len(self):
            return []
        cuts = np.flatnonzero(np.diff(self.segment_ids)) + 1
        return np.split(self.intervals, cuts)


def _moving_average(x: np.ndarray, width: int) -> np.ndarray:
    kernel = np.ones(width) / width
    return np.convolve(x, kernel, mode="same")


def _local_maxima(x: np.ndarray) -> np.ndarray:
    inner = np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])) + 1
    return inner


def detect_r_peaks(record: EcgRecord) -> RPeakSeries:
    """Detect R peaks on a band-pass filtered ECG.

    Pipeline: derivative, rectification, 80 ms moving-average envelope,
    adaptive threshold tracking running peak and noise levels, 200 ms
    refractory, and a half-threshold search-back whenever more than 1.5x
    the running RR passes without a beat. Detections are refined to the
    local maximum of the input signal within +-40 ms.

    Every quantity is derived from the envelope itself, so detections are
    invariant under positive amplitude scaling of the input.
    """
    fs = record.fs
    x = record.samples
    if record.duration < 3.0:
        raise DataError("R-peak detection needs at least 3 s of signal")
    if np.ptp(x) == 0.0:
        raise DataError("no beats found: zero-variance signal")

    envelope = _moving_average(np.abs(np.diff(x, prepend=x[0])), max(int(ENVELOPE_WINDOW_S * fs), 1))
    cand = _local_maxima(envelope)
    if cand.size == 0:
        raise DataError("no beats found")

    refractory = int(REFRACTORY_S * fs)
    peak_est = float(np.quantile(envelope, 0.98))
    noise_est = float(np.quantile(envelope, 0.50))
    accepted: list[int] = []
    rr_history: list[float] = []
    last_checked = 0

    def threshold() -> float:
        return noise_est + THRESHOLD_COEF * (peak_est - noise_est)

    def mean_rr() -> float:
        return float(np.mean(rr_history[-8:])) if rr_history else 1.0 * fs

    def accept(idx: int) -> None:
        nonlocal peak_est
        if accepted:
            rr_history.append(idx - accepted[-1])
        accepted.append(idx)
        peak_est = 0.875 * peak_est + 0.125 * envelope[idx]

    for pos, idx in enumerate(cand):
        if accepted and idx - accepted[-1] < refractory:
            continue
        if envelope[idx] > threshold():
            accept(idx)
            last_checked = pos
        else:
            noise_est = 0.875 * noise_est + 0.125 * envelope[idx]
            # Search-back: a beat was probably missed if the gap since the
            # last acceptance exceeds 1.5x the running RR estimate.
            if accepted and idx - accepted[-1] > SEARCHBACK_FACTOR * mean_rr():
                window = [
                    j
                    for j in cand[last_checked + 1 : pos + 1]
                    if j - accepted[-1] >= refractory and envelope[j] > 0.5 * threshold()
                ]
                if window:
                    best = max(window, key=lambda j: envelope[j])
                    accept(int(best))
                    last_checked = pos

    if not accepted:
        raise DataError("no beats found")

    refine = int(REFINE_WINDOW_S * fs)
    refined = []
    for idx in accepted:
        lo, hi = max(idx - refine, 0), min(idx + refine + 1, x.size)
        refined.append(lo + int(np.argmax(x[lo:hi])))
    refined = sorted(set(refined))

    # Refinement can pull two detections together; keep the larger one.
    final: list[int] = []
    for idx in refined:
        if final and idx - final[-1] < refractory:
            if x[idx] > x[final[-1]]:
                final[-1] = idx
        else:
            final.append(idx)
    return RPeakSeries(indices=np.asarray(final, dtype=int), fs=fs)


def compute_rri(peaks: RPeakSeries) -> BeatToBeatSeries:
    """Inter-beat intervals in ms from consecutive R-peak times."""
    if len(peaks) < 2:
        raise DataError("need at least two peaks to compute intervals")
    times = peaks.times
    intervals = np.diff(times) * 1000.0
    return BeatToBeatSeries(intervals=intervals, onset_times=times[:-1])


def ectopic_filter(bb: BeatToBeatSeries, max_jump_ratio: float = 1.3) -> BeatToBeatSeries:
    """Drop intervals deviating from the running median by more than the ratio.

    A segment boundary is inserted at each removal point so that difference
    statistics never span the gap.
    """
    if not len(bb):
        raise DataError("cannot filter an empty series")
    kept_iv, kept_on, kept_seg = [], [], []
    history: list[float] = []
    seg_offset = 0
    for iv, onset, seg in zip(bb.intervals, bb.onset_times, bb.segment_ids):
        med = float(np.median(history[-5:])) if history else iv
        if med > 0 and max(iv / med, med / iv) > max_jump_ratio:
            seg_offset += 1  # boundary at the removal point
            continue
        history.append(iv)
        kept_iv.append(iv)
        kept_on.append(onset)
        kept_seg.append(seg * 1_000_000 + seg_offset)
    # Renumber ids densely while preserving boundaries.
    ids = np.asarray(kept_seg, dtype=int)
    if ids.size:
        _, dense = np.unique(ids, return_inverse=True)
    else:
        dense = ids
    return BeatToBeatSeries(
        intervals=np.asarray(kept_iv),
        onset_times=np.asarray(kept_on),
        segment_ids=dense,
    )
