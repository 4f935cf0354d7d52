"""Synthetic corpora with ground truth for evaluating the pipeline.

Scripts place gestures the way the hardware is meant to be deployed: the
hand sits 0.55-0.70 m below the antenna line, keystrokes land inside a
single ~4 cm zone, and mouse drags happen off the link's midpoint where
horizontal motion actually changes the path length.  Gestures carry a
small seeded micro-motion so synthetic strokes are not unnaturally smooth.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelModel,
    CsiTrace,
    GestureKind,
    GestureModel,
    simulate_trace,
    subcarrier_wavelengths,
)
from .classify import GestureLabel, LabeledExample, extract_features
from .config import PipelineConfig
from .preprocess import butterworth_lowpass, select_subcarrier
from .segmentation import GestureSegment, segment

LABEL_BY_KIND = {
    GestureKind.KEYSTROKE.value: GestureLabel.TYPING,
    GestureKind.MOUSE_MOVE.value: GestureLabel.MOUSE,
}


def keystroke(rest_pos, travel=0.02, duration=0.7, jitter_std=0.0) -> GestureModel:
    return GestureModel(
        kind=GestureKind.KEYSTROKE,
        rest_pos=rest_pos,
        travel=travel,
        duration=duration,
        jitter_std=jitter_std,
    )


def mouse_move(rest_pos, travel=0.03, duration=0.6, jitter_std=0.0) -> GestureModel:
    return GestureModel(
        kind=GestureKind.MOUSE_MOVE,
        rest_pos=rest_pos,
        travel=travel,
        duration=duration,
        jitter_std=jitter_std,
    )


def keystroke_burst_script(
    config: PipelineConfig,
    count: int = 17,
    gap: float = 1.3,
    lead_in: float = 1.0,
) -> tuple[list, float]:
    """`count` consecutive keystrokes at the deployed rest position."""
    sim = config.simulation
    rest = np.array([config.geometry.antenna_distance / 2, 0.0, -config.geometry.rest_depth])
    script = []
    t = lead_in
    for _ in range(count):
        g = keystroke(rest, jitter_std=sim.gesture_jitter_std)
        script.append((t, g))
        t += g.duration + gap
    return script, t + 1.0


def random_gesture_script(
    config: PipelineConfig,
    rng: np.random.Generator,
    n_gestures: int,
    kinds=(GestureKind.KEYSTROKE, GestureKind.MOUSE_MOVE),
    min_gap: float = 1.5,
    max_gap: float = 2.5,
) -> tuple[list, float]:
    """Randomized gesture sequence within the deployable parameter envelope."""
    sim = config.simulation
    d = config.geometry.antenna_distance
    script = []
    t = 1.0 + rng.uniform(0.0, 0.8)
    side = 1.0 if rng.random() < 0.5 else -1.0
    x = d / 2 + side * rng.uniform(0.15, 0.30) * d
    for _ in range(n_gestures):
        kind = kinds[int(rng.integers(0, len(kinds)))]
        if kind is GestureKind.KEYSTROKE:
            depth = rng.uniform(0.57, 0.66)
            model = keystroke(
                np.array([np.clip(x, 0.12 * d, 0.88 * d), 0.0, -depth]),
                travel=0.02,
                duration=rng.uniform(0.6, 0.8),
                jitter_std=sim.gesture_jitter_std,
            )
        else:
            depth = rng.uniform(0.57, 0.66)
            model = mouse_move(
                np.array([np.clip(x, 0.12 * d, 0.85 * d), 0.0, -depth]),
                travel=rng.uniform(0.03, 0.05),
                duration=rng.uniform(0.4, 1.0),
                jitter_std=sim.gesture_jitter_std,
            )
        script.append((t, model))
        t += model.duration + rng.uniform(min_gap, max_gap)
    return script, t + 0.7


def simulate_script(config: PipelineConfig, script, duration: float, seed: int) -> CsiTrace:
    geometry = config.geometry.build()
    sim = config.simulation
    model = ChannelModel(
        geometry=geometry,
        static_component=sim.static_amplitude + 0j,
        noise_std=sim.noise_std,
        rng_seed=seed,
    )
    return simulate_trace(
        model,
        script,
        duration=duration,
        fs=sim.fs,
        subcarrier_wavelengths_m=subcarrier_wavelengths(
            geometry.wavelength, sim.subcarriers
        ),
        reflection_amplitude=sim.reflection_amplitude,
    )


def generate_segmentation_corpus(
    config: PipelineConfig, n_traces: int = 100, seed: int | None = None
) -> list[CsiTrace]:
    """Annotated traces with 1-5 gestures each and >= 1.5 s inter-gesture gaps."""
    seed = config.seeds.simulation if seed is None else seed
    rng = np.random.default_rng(seed)
    traces = []
    for _ in range(n_traces):
        n_gestures = int(rng.integers(1, 6))
        script, duration = random_gesture_script(config, rng, n_gestures)
        traces.append(simulate_script(config, script, duration, int(rng.integers(0, 2**31))))
    return traces


def segment_trace(config: PipelineConfig, trace: CsiTrace) -> list[GestureSegment]:
    series = butterworth_lowpass(select_subcarrier(trace), config.filter)
    return segment(series, config.segmenter)


@dataclass
class SegmentationMetrics:
    recall: float
    precision: float
    mean_boundary_error_s: float
    matched: int
    false_negatives: int
    false_positives: int
    start_errors_s: list[float] = field(default_factory=list)
    end_errors_s: list[float] = field(default_factory=list)


def match_segments(detections: list[GestureSegment], annotations, fs: float):
    """Greedy best-overlap matching of detections to ground-truth spans."""
    pairs = []
    used = set()
    for ann in annotations:
        best = None
        for i, det in enumerate(detections):
            if i in used:
                continue
            overlap = min(det.end_idx, ann.end_idx) - max(det.start_idx, ann.start_idx)
            if overlap > 0 and (best is None or overlap > best[0]):
                best = (overlap, i)
        if best is not None:
            used.add(best[1])
            pairs.append((ann, detections[best[1]]))
    return pairs, used


def evaluate_segmentation(
    config: PipelineConfig, traces: list[CsiTrace]
) -> SegmentationMetrics:
    tp = fn = fp = 0
    start_errors = []
    end_errors = []
    for trace in traces:
        detections = segment_trace(config, trace)
        pairs, used = match_segments(detections, trace.meta, trace.fs)
        tp += len(pairs)
        fn += len(trace.meta) - len(pairs)
        fp += len(detections) - len(used)
        for ann, det in pairs:
            start_errors.append((det.start_idx - ann.start_idx) / trace.fs)
            end_errors.append((det.end_idx - ann.end_idx) / trace.fs)
    boundary = (
        float(np.mean(np.abs(start_errors)) + np.mean(np.abs(end_errors))) / 2.0
        if start_errors
        else float("nan")
    )
    return SegmentationMetrics(
        recall=tp / (tp + fn) if tp + fn else 0.0,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        mean_boundary_error_s=boundary,
        matched=tp,
        false_negatives=fn,
        false_positives=fp,
        start_errors_s=start_errors,
        end_errors_s=end_errors,
    )


def segments_from_annotations(
    config: PipelineConfig, trace: CsiTrace
) -> list[tuple[GestureSegment, GestureLabel]]:
    """Ground-truth-sliced segments of the filtered series, with labels."""
    series = butterworth_lowpass(select_subcarrier(trace), config.filter)
    out = []
    for ann in trace.meta:
        seg = GestureSegment(
            start_idx=ann.start_idx,
            end_idx=ann.end_idx,
            waveform=series.values[ann.start_idx:ann.end_idx + 1],
            fs=series.fs,
        )
        out.append((seg, LABEL_BY_KIND[ann.label]))
    return out


def _dataset_script(config, rng, n_gestures, kind, jitter_std):
    """Gesture placement for the feature corpus.

    Both gesture kinds happen at the same desk spots; the mouse's
    along-axis direction is geometrically far less path-length-sensitive
    than the keystroke's vertical travel, which is exactly the contrast the
    features are supposed to pick up.  Detectability by the segmenter is
    not required here (segments come from the annotations).
    """
    d = config.geometry.antenna_distance
    script = []
    t = 1.0 + rng.uniform(0.0, 0.5)
    side = 1.0 if rng.random() < 0.5 else -1.0
    for _ in range(n_gestures):
        depth = rng.uniform(0.57, 0.66)
        if kind is GestureKind.KEYSTROKE:
            x = d / 2 + side * rng.uniform(0.15, 0.30) * d
            model = keystroke(
                np.array([x, 0.0, -depth]),
                travel=0.02,
                duration=rng.uniform(0.65, 0.75),
                jitter_std=jitter_std,
            )
        else:
            x = d / 2 + side * rng.uniform(0.04, 0.15) * d
            model = mouse_move(
                np.array([x, 0.0, -depth]),
                travel=rng.uniform(0.015, 0.04),
                duration=rng.uniform(0.35, 1.0),
                jitter_std=jitter_std,
            )
        script.append((t, model))
        t += model.duration + rng.uniform(1.5, 2.0)
    return script, t + 0.7


def generate_gesture_dataset(
    config: PipelineConfig,
    n_segments: int = 400,
    seed: int | None = None,
    jitter_std: float = 5e-4,
) -> list[LabeledExample]:
    """Labeled feature vectors from annotation-sliced synthetic gestures."""
    seed = config.seeds.simulation if seed is None else seed
    rng = np.random.default_rng(seed + 1)
    examples: list[LabeledExample] = []
    while len(examples) < n_segments:
        want = GestureKind.KEYSTROKE if len(examples) % 2 == 0 else GestureKind.MOUSE_MOVE
        script, duration = _dataset_script(
            config, rng, int(rng.integers(2, 5)), want, jitter_std
        )
        trace = simulate_script(config, script, duration, int(rng.integers(0, 2**31)))
        for seg, label in segments_from_annotations(config, trace):
            if len(examples) >= n_segments:
                break
            examples.append(LabeledExample(features=extract_features(seg), label=label))
    return examples
