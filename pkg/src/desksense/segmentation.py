"""Automatic gesture segmentation from a filtered amplitude series.

The detector works on two derived traces: nor1, a sliding-window variance
of the input, and nor2, the variance of nor1's moving sum scaled by a fixed
gain.  Both sit near zero while the channel is stationary; when a gesture
starts, nor2 outruns nor1 sharply.  Start points come from sweeping an
accumulator threshold over the nor2-nor1 difference (50 threshold values,
keeping the first crossing each), then requiring six consecutive crossing
candidates to agree within a few samples.  The end point is where nor2
falls back to its value at the start point.  Segments whose amplitude span
is too small are discarded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import AmplitudeSeries

# Amplitude-span floor: 25% of the median gesture span observed on the
# calibration corpus generated with the channel defaults (median ~= 3.2).
DEFAULT_MIN_AMPLITUDE_SPAN = 0.8

# Samples the end condition must persist; nor2 of band-limited input dips to
# ~0 wherever nor1 is locally flat, and those lulls are shorter than this.
DEFAULT_END_HOLD = 200


@dataclass(frozen=True)
class SegmenterParams:
    window: float = 1.0 / 20.0        # seconds
    step: int = 1                     # samples
    smoothing_gain: float = 100.0
    se_start: float = 0.1
    se_stop: float = 5.0
    se_step: float = 0.1
    stability_count: int = 6
    stability_spread: int = 10        # samples ("10/fs s")
    min_amplitude_span: float = DEFAULT_MIN_AMPLITUDE_SPAN
    end_hold: int = DEFAULT_END_HOLD

    def __post_init__(self):
        if self.window <= 0 or self.step < 1:
            raise ValueError("window must be positive and step >= 1 sample")
        if self.smoothing_gain <= 0:
            raise ValueError("smoothing gain must be positive")
        if self.stability_count < 2 or self.stability_spread <= 0:
            raise ValueError("stability parameters must be positive")
        if self.min_amplitude_span <= 0:
            raise ValueError("min_amplitude_span must be positive")
        if self.end_hold < 1:
            raise ValueError("end_hold must be >= 1 sample")
        if len(self.se_values) != 50:
            raise ValueError("the se sweep must yield exactly 50 candidates")

    @property
    def se_values(self) -> np.ndarray:
        n = int(round((self.se_stop - self.se_start) / self.se_step)) + 1
        return self.se_start + self.se_step * np.arange(n)

    def window_samples(self, fs: float) -> int:
        w = int(round(self.window * fs))
        if w < 2:
            raise ValueError("window shorter than 2 samples at this rate")
        return w


@dataclass
class GestureSegment:
    """One detected gesture: index span plus the amplitude slice it covers."""

    start_idx: int
    end_idx: int
    waveform: np.ndarray
    fs: float
    truncated: bool = False

    def __post_init__(self):
        self.waveform = np.asarray(self.waveform, dtype=float)
        if not (0 <= self.start_idx < self.end_idx):
            raise ValueError("segment indices out of order")
        if len(self.waveform) != self.end_idx - self.start_idx + 1:
            raise ValueError("waveform length must match the index span")

    @property
    def duration(self) -> float:
        return len(self.waveform) / self.fs

    @property
    def amplitude_span(self) -> float:
        return float(self.waveform.max() - self.waveform.min())


def sliding_variance(values: np.ndarray, window_samples: int, step: int = 1) -> np.ndarray:
    """Population variance over each window of `window_samples`, advancing by step."""
    x = np.asarray(values, dtype=float)
    w = int(window_samples)
    if w < 2:
        raise ValueError("window must cover at least 2 samples")
    if len(x) < w:
        raise ValueError("series shorter than one window")
    x = x - x.mean()  # improves conditioning; variance is shift-invariant
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    c2 = np.concatenate([[0.0], np.cumsum(x * x)])
    s1 = c1[w:] - c1[:-w]
    s2 = c2[w:] - c2[:-w]
    var = s2 / w - (s1 / w) ** 2
    return np.maximum(var[::step], 0.0)


def moving_sum(values: np.ndarray, window_samples: int, step: int = 1) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    w = int(window_samples)
    if len(x) < w:
        raise ValueError("series shorter than one window")
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[w:] - c[:-w])[::step]


def smooth_variance(
    nor1: np.ndarray, window_samples: int, step: int = 1, gain: float = 100.0
) -> np.ndarray:
    """nor2: variance of nor1's moving sum, amplified by `gain`.

    Suppresses the micro-fluctuations nor1 shows in stationary spans while
    reacting strongly where the variance level itself changes.
    """
    summed = moving_sum(nor1, window_samples, step)
    return gain * sliding_variance(summed, window_samples, step)


def compute_variance_traces(
    series: AmplitudeSeries, params: SegmenterParams | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """nor1 and nor2 for a filtered series, truncated to a common length.

    Both are indexed at the window's left edge relative to the input series.
    """
    params = params or SegmenterParams()
    w = params.window_samples(series.fs)
    nor1 = sliding_variance(series.values, w, params.step)
    nor2 = smooth_variance(nor1, w, params.step, params.smoothing_gain)
    return nor1[: len(nor2)], nor2


def _first_stable_start(candidates: np.ndarray, params: SegmenterParams) -> int | None:
    k = params.stability_count
    for j in range(len(candidates) - k + 1):
        if candidates[j + k - 1] - candidates[j] < params.stability_spread:
            return int(candidates[j])
    return None


def _sweep_candidates(
    nor1: np.ndarray, nor2: np.ndarray, cursor: int, params: SegmenterParams
) -> np.ndarray:
    """First index past the cursor where each se value's accumulator drops below 0.

    se decreases by nor2 - nor1 at each sample, so the crossing index is
    where the running maximum of the cumulative difference first exceeds se.
    """
    diff = np.cumsum(nor2[cursor:] - nor1[cursor:])
    running_max = np.maximum.accumulate(diff)
    idx = np.searchsorted(running_max, params.se_values, side="right")
    idx = idx[idx < len(diff)] + cursor
    return np.sort(idx)


def mark_end_point(
    nor2: np.ndarray, start_idx: int, params: SegmenterParams | None = None
) -> tuple[int, bool]:
    """First index after start_idx where nor2 returns to its start value.

    The sub-threshold condition must persist for params.end_hold samples;
    nor2 of a band-limited series collapses briefly wherever nor1 has a
    flat moment mid-gesture, and those lulls must not terminate the segment.
    Returns (end_idx, truncated); truncated means the trace ended first.
    """
    params = params or SegmenterParams()
    threshold = nor2[start_idx]
    below = nor2[start_idx + 1:] <= threshold
    if below.any():
        hold = min(params.end_hold, len(below))
        counts = np.cumsum(below.astype(np.int64))
        runs = counts[hold - 1:] - np.concatenate([[0], counts[:-hold]])
        sustained = np.nonzero(runs == hold)[0]
        if len(sustained):
            return start_idx + 1 + int(sustained[0]), False
    return len(nor2) - 1, True


def _scan(nor1: np.ndarray, nor2: np.ndarray, params: SegmenterParams):
    """Alternate start-point sweeps and end-point marking over the whole trace."""
    n = min(len(nor1), len(nor2))
    nor1 = np.asarray(nor1, dtype=float)[:n]
    nor2 = np.asarray(nor2, dtype=float)[:n]
    cursor = 0
    while cursor < n - 1:
        candidates = _sweep_candidates(nor1, nor2, cursor, params)
        if len(candidates) == 0:
            break
        start = _first_stable_start(candidates, params)
        if start is None:
            # Dispersed candidates mean stationary drift consumed the sweep;
            # resume past them so the next sweep starts with a fresh budget.
            advance = int(candidates[-1])
            cursor = advance if advance > cursor else cursor + 1
            continue
        end, truncated = mark_end_point(nor2, start, params)
        if end <= start:
            break
        yield start, end, truncated
        if truncated or end <= cursor:
            break
        cursor = end


def mark_start_points(
    nor1: np.ndarray, nor2: np.ndarray, params: SegmenterParams | None = None
) -> list[int]:
    params = params or SegmenterParams()
    return [start for start, _end, _tr in _scan(nor1, nor2, params)]


def segment(
    series: AmplitudeSeries, params: SegmenterParams | None = None
) -> list[GestureSegment]:
    """Cut a filtered amplitude series into validated gesture segments.

    Runs the nor1/nor2 construction, start/end marking, and drops candidate
    segments whose amplitude span is below params.min_amplitude_span.
    Returned segments are disjoint and ordered.
    """
    params = params or SegmenterParams()
    nor1, nor2 = compute_variance_traces(series, params)
    segments = []
    for start, end, truncated in _scan(nor1, nor2, params):
        end_in_series = min(end, len(series.values) - 1)
        waveform = series.values[start:end_in_series + 1]
        seg = GestureSegment(
            start_idx=start,
            end_idx=end_in_series,
            waveform=waveform,
            fs=series.fs,
            truncated=truncated,
        )
        if seg.amplitude_span >= params.min_amplitude_span:
            segments.append(seg)
    return segments
