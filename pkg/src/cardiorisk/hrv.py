"""Sampled long-term HRV: strip sampling and the eight HRV statistics.

All statistics that difference adjacent intervals only use pairs lying
within one segment, so joins between nonconsecutive strips never leak into
RMSSD, PNN50, Poincare or sample-entropy values.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError
from .rpeak import BeatToBeatSeries

__all__ = [
    "SamplingStrategy",
    "HrvFeatures",
    "HrvStep",
    "HrvSeries",
    "PoincareStats",
    "sample_strips",
    "concat_segments",
    "sdnn",
    "rmssd",
    "pnn50",
    "sample_entropy",
    "poincare",
    "poincare_stats",
    "percentile_hr",
    "hrv_single_vector",
    "hrv_time_series",
]

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class SamplingStrategy:
    """How ultra-short strips are drawn from a long recording."""

    strip_length_min: float = 5.0
    strips_per_day: int = 24
    seed: int = 0
    placement: str = "one-per-hour-random"

    def __post_init__(self):
        if not 1.0 <= self.strip_length_min <= 60.0:
            raise ConfigurationError("strip length must be 1..60 minutes")
        if not 1 <= self.strips_per_day <= 24:
            raise ConfigurationError("strips per day must be 1..24")
        if self.placement not in ("one-per-hour-random", "uniform-random"):
            raise ConfigurationError(f"unknown placement {self.placement!r}")


@dataclass(frozen=True)
class HrvFeatures:
    """The eight long-term HRV statistics as a single vector."""

    active_hr: float
    rest_hr: float
    sdnn: float
    rmssd: float
    pnn50: float
    sample_entropy: float
    sd1_sd2: float
    ellipse_area: float

    def __post_init__(self):
        for name in ("active_hr", "rest_hr", "sdnn", "rmssd", "pnn50", "sd1_sd2", "ellipse_area"):
            v = getattr(self, name)
            if not math.isnan(v) and v < 0:
                raise DataError(f"{name} must be non-negative, got {v}")
        if not math.isnan(self.pnn50) and self.pnn50 > 1.0:
            raise DataError("pnn50 is a ratio in [0, 1]")
        if self.rest_hr > self.active_hr:
            raise DataError("rest HR cannot exceed active HR")

    def as_dict(self) -> dict[str, float]:
        return {
            "hr_at_rest": self.rest_hr,
            "active_hr": self.active_hr,
            "hrv_sdnn": self.sdnn,
            "hrv_rmssd": self.rmssd,
            "hrv_pnn50": self.pnn50,
            "hrv_sd1_sd2": self.sd1_sd2,
            "hrv_ellipse_area": self.ellipse_area,
            "hrv_sample_entropy": self.sample_entropy,
        }


@dataclass(frozen=True)
class HrvStep:
    """Per-strip HRV statistics; active/rest HR stay with the merged series."""

    hour_index: int
    mean_hr: float
    sdnn: float
    rmssd: float
    pnn50: float
    sample_entropy: float
    sd1_sd2: float
    ellipse_area: float


@dataclass(frozen=True)
class HrvSeries:
    """Ordered per-strip HRV statistics, at most one step per hour."""

    steps: tuple[HrvStep, ...]

    def __post_init__(self):
        if len(self.steps) > 24:
            raise DataError("an HRV series has at most 24 steps")
        hours = [s.hour_index for s in self.steps]
        if hours != sorted(hours):
            raise DataError("steps must be ordered by hour")


@dataclass(frozen=True)
class PoincareStats:
    sd1: float
    sd2: float
    ratio: float
    area: float
    degenerate: bool


def sample_strips(
    day: BeatToBeatSeries,
    strategy: SamplingStrategy,
) -> list[BeatToBeatSeries | None]:
    """Draw ultra-short strips from a recording of up to 24 hours.

    Returns one entry per requested strip; hours without data yield ``None``
    markers (with a warning). Strips carry distinct segment ids and are
    deterministic under the strategy seed.
    """
    rng = np.random.default_rng(strategy.seed)
    length_s = strategy.strip_length_min * 60.0
    onsets = day.onset_times
    if not len(day):
        raise DataError("cannot sample strips from an empty series")

    if strategy.placement == "one-per-hour-random":
        hours = np.floor(np.linspace(0, 24, strategy.strips_per_day, endpoint=False)).astype(int)
        starts = []
        for h in hours:
            slack = max(SECONDS_PER_HOUR - length_s, 0.0)
            starts.append(h * SECONDS_PER_HOUR + rng.uniform(0.0, slack))
    else:
        end = float(onsets[-1])
        starts = sorted(rng.uniform(0.0, max(end - length_s, 0.0), size=strategy.strips_per_day))
        hours = [int(s // SECONDS_PER_HOUR) for s in starts]

    strips: list[BeatToBeatSeries | None] = []
    for slot, (h, start) in enumerate(zip(hours, starts)):
        lo = int(np.searchsorted(onsets, start, side="left"))
        hi = int(np.searchsorted(onsets, start + length_s, side="left"))
        if hi <= lo:
            warnings.warn(f"hour {h}: no beat-to-beat data, strip skipped", stacklevel=2)
            strips.append(None)
            continue
        strips.append(
            BeatToBeatSeries(
                intervals=day.intervals[lo:hi].copy(),
                onset_times=onsets[lo:hi].copy(),
                segment_ids=np.full(hi - lo, slot, dtype=int),
            )
        )
    return strips


def concat_segments(strips: list[BeatToBeatSeries | None]) -> BeatToBeatSeries:
    """Concatenate strips into one series, keeping nonconsecutive joins marked.

    Strips that continue exactly where the previous one ended (the join falls
    between truly consecutive beats) are merged into one segment, so an
    exhaustive hour-by-hour partition reconstructs the full recording.
    """
    kept = [s for s in strips if s is not None and len(s)]
    if not kept:
        raise DataError("no non-empty strips to concatenate")
    intervals = np.concatenate([s.intervals for s in kept])
    onsets = np.concatenate([s.onset_times for s in kept])
    ids = np.empty(intervals.size, dtype=int)
    pos = 0
    current = 0
    prev_end = None
    for s in kept:
        if prev_end is not None and abs(s.onset_times[0] - prev_end) > 1e-9:
            current += 1
        # Per-strip internal boundaries are preserved by offsetting local ids.
        local = s.segment_ids - s.segment_ids[0]
        local_dense = np.cumsum(np.concatenate([[0], np.diff(local) != 0]))
        ids[pos : pos + len(s)] = current + local_dense
        current = ids[pos + len(s) - 1]
        prev_end = s.onset_times[-1] + s.intervals[-1] / 1000.0
        pos += len(s)
    return BeatToBeatSeries(intervals=intervals, onset_times=onsets, segment_ids=ids)


def sdnn(bb: BeatToBeatSeries) -> float:
    """Population standard deviation of the intervals, ms."""
    if not len(bb):
        raise DataError("empty series")
    return float(np.std(bb.intervals))


def rmssd(bb: BeatToBeatSeries) -> float:
    """Root mean square of within-segment successive differences, ms."""
    d = bb.pair_diffs()
    if d.size == 0:
        raise DataError("no valid consecutive-pair differences")
    return float(np.sqrt(np.mean(d**2)))


def pnn50(bb: BeatToBeatSeries) -> float:
    """Fraction of within-segment successive differences strictly above 50 ms."""
    d = bb.pair_diffs()
    if d.size == 0:
        raise DataError("no valid consecutive-pair differences")
    return float(np.mean(np.abs(d) > 50.0))


def _segment_windows(bb: BeatToBeatSeries, m: int) -> np.ndarray:
    """Stack of (m+1)-length windows that lie fully inside one segment.

    Window starts are limited to the first L - m positions of each segment,
    so the same start set serves both the m and m+1 template counts.
    """
    rows = []
    for seg in bb.segments():
        if seg.size >= m + 1:
            rows.append(np.lib.stride_tricks.sliding_window_view(seg, m + 1)[: seg.size - m])
    if not rows:
        return np.empty((0, m + 1))
    return np.concatenate(rows, axis=0)


def _count_pairs_brute(E: np.ndarray, r: float, strict: bool) -> int:
    """O(n^2) Chebyshev pair count, chunked to bound memory."""
    n = E.shape[0]
    total = 0
    step = max(1, 2_000_000 // max(n, 1))
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        d = np.max(np.abs(E[lo:hi, None, :] - E[None, :, :]), axis=2)
        match = d < r if strict else d <= r
        total += int(np.count_nonzero(match))
    return (total - n) // 2


def _count_pairs_hist(W: np.ndarray, u: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> int:
    """Exact pair count for windows over a small value alphabet.

    ``W`` holds windows as level indices into the sorted unique values ``u``;
    ``lo``/``hi`` give, per level, the index range of matching levels. Counts
    come from an inclusion-exclusion over the corners of the per-cell match
    box in a dense prefix-summed histogram.
    """
    n, mm = W.shape
    K = u.size
    shape = (K,) * mm
    flat = np.ravel_multi_index(tuple(W[:, d] for d in range(mm)), shape)
    hist = np.bincount(flat, minlength=K**mm).reshape(shape).astype(np.int64)
    pref = hist
    for d in range(mm):
        pref = np.cumsum(pref, axis=d)
    padded = np.zeros(tuple(K + 1 for _ in range(mm)), dtype=np.int64)
    padded[(slice(1, None),) * mm] = pref
    occ = np.nonzero(hist)
    counts = hist[occ]
    box = np.zeros(counts.size, dtype=np.int64)
    for corners in itertools.product((0, 1), repeat=mm):
        idx = tuple((hi[occ[d]] if corners[d] else lo[occ[d]]) for d in range(mm))
        sign = (-1) ** (mm - sum(corners))
        box += sign * padded[idx]
    raw = int(np.sum(counts * box))
    return (raw - n) // 2


def _count_pairs_tree(E: np.ndarray, r: float, strict: bool) -> int:
    from scipy.spatial import cKDTree

    r_eff = np.nextafter(r, -np.inf) if strict else r
    tree = cKDTree(E)
    raw = int(tree.count_neighbors(tree, max(r_eff, 0.0), p=np.inf))
    return (raw - E.shape[0]) // 2


try:  # compiled sweep kernel; pure-numpy paths cover every case without it
    from numba import njit as _njit

    @_njit(cache=True)
    def _sweep_kernel(W, r, strict):  # pragma: no cover - compiled
        n = W.shape[0]
        count_b = 0
        count_a = 0
        lo = 0
        for j in range(n):
            a = W[j, 0]
            if strict:
                while a - W[lo, 0] >= r:
                    lo += 1
            else:
                while a - W[lo, 0] > r:
                    lo += 1
            for i in range(lo, j):
                d1 = W[i, 1] - W[j, 1]
                if d1 < 0.0:
                    d1 = -d1
                if (d1 < r) if strict else (d1 <= r):
                    count_b += 1
                    d2 = W[i, 2] - W[j, 2]
                    if d2 < 0.0:
                        d2 = -d2
                    if (d2 < r) if strict else (d2 <= r):
                        count_a += 1
        return count_b, count_a

    def _count_pairs_sweep(W: np.ndarray, r: float, strict: bool) -> tuple[int, int]:
        """Counts for m=2 (first two coords) and m=3 (all three) in one pass."""
        order = np.argsort(W[:, 0], kind="stable")
        b, a = _sweep_kernel(np.ascontiguousarray(W[order]), float(r), bool(strict))
        return int(b), int(a)

except ImportError:  # pragma: no cover
    _count_pairs_sweep = None


_BRUTE_LIMIT = 1500
_HIST_LEVEL_LIMIT = 256


def sample_entropy(bb: BeatToBeatSeries, m: int = 2, r: float | None = None) -> float:
    """Sample entropy of the interval series: -ln(A/B).

    ``B`` counts template pairs of length ``m`` closer than ``r`` in
    Chebyshev distance (strict), ``A`` the same for length ``m + 1``;
    self-matches are excluded and both counts share the same window starts.
    The tolerance defaults to the SDNN of this series and is never reused
    across series. Returns NaN when either count is zero. A zero tolerance
    degenerates to exact equality so a constant series yields 0.0.
    """
    if len(bb) < m + 2:
        raise DataError(f"sample entropy needs at least {m + 2} intervals")
    if r is None:
        r = sdnn(bb)
    if r < 0:
        raise ConfigurationError("tolerance must be non-negative")
    strict = r > 0
    W = _segment_windows(bb, m)
    if W.shape[0] < 2:
        raise DataError("not enough within-segment windows for sample entropy")

    values = W.ravel()
    u = np.unique(values)
    if W.shape[0] <= _BRUTE_LIMIT:
        B = _count_pairs_brute(W[:, :m], r, strict)
        A = _count_pairs_brute(W, r, strict)
    elif m == 2 and u.size <= _HIST_LEVEL_LIMIT:
        side_lo = "right" if strict else "left"
        side_hi = "left" if strict else "right"
        lo = np.searchsorted(u, u - r, side=side_lo)
        hi = np.searchsorted(u, u + r, side=side_hi)
        idx = np.searchsorted(u, W.ravel()).reshape(W.shape)
        B = _count_pairs_hist(idx[:, :m], u, lo, hi)
        A = _count_pairs_hist(idx, u, lo, hi)
    elif m == 2 and _count_pairs_sweep is not None:
        B, A = _count_pairs_sweep(W, r, strict)
    else:
        B = _count_pairs_tree(W[:, :m], r, strict)
        A = _count_pairs_tree(W, r, strict)
    if A == 0 or B == 0:
        return math.nan
    return float(-np.log(A / B))


def poincare_stats(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float, bool]:
    """SD1/SD2 decomposition of the (RRI[i], RRI[i+1]) cloud.

    Rotating by 45 degrees maps the anti-identity axis onto the first
    coordinate (SD1, short-term) and the identity axis onto the second
    (SD2, long-term). Standard deviations are population-normalized.
    """
    u = (y - x) / math.sqrt(2.0)
    v = (x + y) / math.sqrt(2.0)
    sd1 = float(np.std(u))
    sd2 = float(np.std(v))
    degenerate = sd2 == 0.0
    ratio = 0.0 if degenerate else sd1 / sd2
    area = math.pi * sd1 * sd2
    return sd1, sd2, ratio, area, degenerate


def poincare(bb: BeatToBeatSeries) -> PoincareStats:
    """Poincare analysis over within-segment consecutive interval pairs."""
    x, y = bb.consecutive_pairs()
    if x.size < 3:
        raise DataError("Poincare analysis needs at least three consecutive pairs")
    sd1, sd2, ratio, area, degenerate = poincare_stats(x, y)
    return PoincareStats(sd1=sd1, sd2=sd2, ratio=ratio, area=area, degenerate=degenerate)


def percentile_hr(strips: list[BeatToBeatSeries | None], q: float) -> float:
    """Linear-interpolation percentile of the per-strip mean heart rates."""
    hrs = [60000.0 / float(np.mean(s.intervals)) for s in strips if s is not None and len(s)]
    if not hrs:
        raise DataError("no strips with data for the HR percentile")
    return float(np.percentile(hrs, q))


def hrv_single_vector(strips: list[BeatToBeatSeries | None]) -> HrvFeatures:
    """The single-vector procedure: merge all strips, then compute statistics.

    Difference-based statistics skip the joins between nonconsecutive strips;
    active and rest HR are percentiles of the per-strip mean HR.
    """
    merged = concat_segments(strips)
    stats = poincare(merged)
    return HrvFeatures(
        active_hr=percentile_hr(strips, 85.0),
        rest_hr=percentile_hr(strips, 15.0),
        sdnn=sdnn(merged),
        rmssd=rmssd(merged),
        pnn50=pnn50(merged),
        sample_entropy=sample_entropy(merged),
        sd1_sd2=stats.ratio,
        ellipse_area=stats.area,
    )


def hrv_time_series(strips: list[BeatToBeatSeries | None]) -> HrvSeries:
    """The time-series procedure: one statistics step per strip.

    Strips too short for a statistic contribute NaN for that entry; skipped
    hours contribute no step at all.
    """
    steps = []
    for s in strips:
        if s is None or not len(s):
            continue
        hour = int(s.onset_times[0] // SECONDS_PER_HOUR)

        def _maybe(fn, *args):
            try:
                return fn(*args)
            except DataError:
                return math.nan

        stats = None
        try:
            stats = poincare(s)
        except DataError:
            pass
        steps.append(
            HrvStep(
                hour_index=hour,
                mean_hr=60000.0 / float(np.mean(s.intervals)),
                sdnn=_maybe(sdnn, s),
                rmssd=_maybe(rmssd, s),
                pnn50=_maybe(pnn50, s),
                sample_entropy=_maybe(sample_entropy, s),
                sd1_sd2=stats.ratio if stats else math.nan,
                ellipse_area=stats.area if stats else math.nan,
            )
        )
    if not steps:
        raise DataError("no valid strips for an HRV time series")
    return HrvSeries(steps=tuple(steps))
