"""Command-line interface tying the pipeline stages together.

Subcommands: simulate, segment, featurize, train-gesture, train-behavior,
evaluate, sweep-plate, plotdata, pipeline.  Exit codes: 0 success, 1
runtime failure, 2 bad configuration or arguments.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .behavior import Behavior, PROFILES, build_emission, fit_behavior_models, sample_behavior_sequence
from .channel import GestureKind, GestureModel, simulate_plate_sweep
from .classify import cross_validate, fit
from .config import PipelineConfig, load_config
from .corpus import keystroke_burst_script, simulate_script
from .preprocess import analytic_gain, butterworth_lowpass, measured_gain, select_subcarrier
from .pipeline import StageError, evaluate_system, run_pipeline
from .segmentation import compute_variance_traces, segment


class ScriptError(ValueError):
    pass


def parse_script(path, config: PipelineConfig):
    """Gesture script: lines of `start_s,kind,travel_m,duration_s[,x,y,z]`."""
    script = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) not in (4, 7):
                raise ScriptError(
                    f"{path}:{lineno}: expected 4 or 7 fields, got {len(parts)}"
                )
            def parse_field(i, name, cast=float):
                try:
                    return cast(parts[i])
                except ValueError:
                    raise ScriptError(
                        f"{path}:{lineno}: field {name!r} is not valid: {parts[i]!r}"
                    ) from None
            start = parse_field(0, "start_s")
            try:
                kind = GestureKind(parts[1])
            except ValueError:
                raise ScriptError(
                    f"{path}:{lineno}: field 'kind' must be one of "
                    f"{[k.value for k in GestureKind]}, got {parts[1]!r}"
                ) from None
            travel = parse_field(2, "travel_m")
            duration = parse_field(3, "duration_s")
            if len(parts) == 7:
                rest = np.array([parse_field(4 + i, "xyz"[i]) for i in range(3)])
            else:
                rest = np.array(
                    [config.geometry.antenna_distance / 2, 0.0, -config.geometry.rest_depth]
                )
            try:
                model = GestureModel(
                    kind=kind,
                    rest_pos=rest,
                    travel=travel,
                    duration=duration,
                    jitter_std=config.simulation.gesture_jitter_std,
                )
            except ValueError as exc:
                raise ScriptError(f"{path}:{lineno}: {exc}") from None
            script.append((start, model))
    return script


def _load_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        config = replace(config, seeds=replace(config.seeds, simulation=args.seed))
    config.validate()
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    if args.script:
        script = parse_script(args.script, config)
        duration = args.duration or (
            max(t + g.duration for t, g in script) + 1.0 if script else 5.0
        )
    else:
        script, duration = keystroke_burst_script(config, count=args.keystrokes)
    trace = simulate_script(config, script, duration, config.seeds.simulation)
    io.write_trace(out / "trace.csv", trace)
    io.write_annotations(out / "trace.ann", trace.meta)
    print(f"wrote {out / 'trace.csv'} ({trace.subcarriers} subcarriers, "
          f"{trace.n_samples} samples) and {out / 'trace.ann'}")
    return 0


def _filtered_series(config, trace):
    return butterworth_lowpass(select_subcarrier(trace), config.filter)


def cmd_segment(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    trace = io.read_trace(args.trace)
    series = _filtered_series(config, trace)
    nor1, nor2 = compute_variance_traces(series, config.segmenter)
    segments = segment(series, config.segmenter)
    io.write_series(out / "filtered.csv", series)
    io.write_table(
        out / "nor.csv",
        ["index", "nor1", "nor2"],
        [(i, float(nor1[i]), float(nor2[i])) for i in range(len(nor2))],
    )
    io.write_table(
        out / "segments.csv",
        ["start_idx", "end_idx", "truncated"],
        [(s.start_idx, s.end_idx, int(s.truncated)) for s in segments],
    )
    print(f"found {len(segments)} segments; artifacts in {out}")
    return 0


def cmd_featurize(args) -> int:
    from .classify import LabeledExample, extract_features
    from .corpus import LABEL_BY_KIND, match_segments
    from .segmentation import GestureSegment

    config = _load_config(args)
    out = _out_dir(args)
    trace = io.read_trace(args.trace)
    annotations = io.read_annotations(args.annotations) if args.annotations else []
    series = _filtered_series(config, trace)
    examples = []
    if args.use_annotations:
        if not annotations:
            print("featurize: --use-annotations requires --annotations", file=sys.stderr)
            return 2
        for ann in annotations:
            seg = GestureSegment(
                start_idx=ann.start_idx,
                end_idx=ann.end_idx,
                waveform=series.values[ann.start_idx:ann.end_idx + 1],
                fs=series.fs,
            )
            examples.append((extract_features(seg), LABEL_BY_KIND[ann.label]))
    else:
        segments = segment(series, config.segmenter)
        if annotations:
            pairs, _ = match_segments(segments, annotations, trace.fs)
            for ann, det in pairs:
                examples.append((extract_features(det), LABEL_BY_KIND[ann.label]))
    dataset = [LabeledExample(features=f, label=l) for f, l in examples]
    io.write_dataset(out / "dataset.csv", dataset)
    print(f"wrote {len(dataset)} labeled examples to {out / 'dataset.csv'}")
    return 0


def cmd_train_gesture(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    dataset = io.read_dataset(args.dataset)
    result = cross_validate(
        config.classifier.kind,
        dataset,
        folds=config.classifier.folds,
        seed=config.seeds.cross_validation,
        k=config.classifier.k,
    )
    model = fit(config.classifier.kind, dataset, k=config.classifier.k)
    io.write_classifier(out / "gesture_model.json", model)
    io.write_table(
        out / "cv_confusion.csv",
        ["true", "predicted_typing", "predicted_mouse"],
        [("typing", int(result.confusion[0, 0]), int(result.confusion[0, 1])),
         ("mouse", int(result.confusion[1, 0]), int(result.confusion[1, 1]))],
    )
    print(result.summary())
    print(f"model saved to {out / 'gesture_model.json'}")
    return 0


def cmd_train_behavior(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    confusion = np.loadtxt(args.confusion, delimiter=",", skiprows=1, usecols=(1, 2), ndmin=2)
    B = build_emission(confusion)
    rng_base = config.seeds.behavior
    training = {
        b: [
            sample_behavior_sequence(PROFILES[b], B, args.length, seed=rng_base + 1000 * i_b + i)
            for i in range(args.sequences)
        ]
        for i_b, b in enumerate(Behavior.classified())
    }
    models = fit_behavior_models(training, B=B, max_iter=config.hmm.max_iter, tol=config.hmm.tol)
    io.write_behavior_models(out / "behavior_models.json", models)
    print(f"trained {len(models)} behavior models -> {out / 'behavior_models.json'}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    report = evaluate_system(
        config,
        n_traces=args.traces,
        n_gesture_segments=args.segments,
        n_behavior_test=args.behavior_sequences,
    )
    io.atomic_write_text(out / "report.json", report.to_json() + "\n")
    print(report.metrics["behavior"]["table"])
    seg = report.metrics["segmentation"]
    print(f"segmentation: recall {seg['recall']:.3f} precision {seg['precision']:.3f} "
          f"boundary {seg['mean_boundary_error_s'] * 1000:.0f} ms")
    for kind, res in report.metrics["gesture_cv"].items():
        print(f"gesture cv [{kind}]: mean accuracy {res['mean_accuracy']:.3f}")
    print(f"behavior macro accuracy: {report.metrics['behavior']['macro_accuracy']:.3f}")
    print(f"report: {out / 'report.json'}")
    return 0


def cmd_sweep_plate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    geometry = config.geometry.build()
    sides = [s / 100.0 for s in range(args.min_cm, args.max_cm + 1)]
    repeats = max(1, args.repeats)
    acc = np.zeros(len(sides))
    for r in range(repeats):
        rows = simulate_plate_sweep(
            geometry,
            sides,
            noise_std=args.noise_std,
            rng_seed=config.seeds.simulation + r,
        )
        acc += np.array([pp for _s, pp in rows])
    acc /= repeats
    io.write_table(
        out / "plate_sweep.csv",
        ["side_m", "peak_to_peak"],
        [(float(s), float(v)) for s, v in zip(sides, acc)],
    )
    print(f"wrote {out / 'plate_sweep.csv'} ({len(sides)} sizes, {repeats} repeats)")
    return 0


def cmd_plotdata(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    if args.kind == "filter-response":
        freqs = np.logspace(np.log10(0.1), np.log10(100.0), 200)
        spec = config.filter
        rows = [
            (float(f), measured_gain(f, config.simulation.fs, spec),
             float(analytic_gain(f, spec)))
            for f in freqs
        ]
        io.write_table(out / "filter_response.csv", ["freq_hz", "gain_measured", "gain_analytic"], rows)
        print(f"wrote {out / 'filter_response.csv'}")
        return 0
    if args.kind == "subcarrier-variance":
        trace = io.read_trace(args.artifact)
        variances = trace.amplitude().var(axis=1)
        io.write_table(
            out / "subcarrier_variance.csv",
            ["subcarrier", "variance"],
            [(i, float(v)) for i, v in enumerate(variances)],
        )
        print(f"wrote {out / 'subcarrier_variance.csv'}")
        return 0
    if args.kind == "segments":
        trace = io.read_trace(args.artifact)
        series = _filtered_series(config, trace)
        nor1, nor2 = compute_variance_traces(series, config.segmenter)
        segments = segment(series, config.segmenter)
        io.write_table(
            out / "nor.csv",
            ["index", "nor1", "nor2"],
            [(i, float(nor1[i]), float(nor2[i])) for i in range(len(nor2))],
        )
        io.write_table(
            out / "segments.csv",
            ["start_idx", "end_idx", "truncated"],
            [(s.start_idx, s.end_idx, int(s.truncated)) for s in segments],
        )
        print(f"wrote {out / 'nor.csv'} and {out / 'segments.csv'}")
        return 0
    print(f"plotdata: unknown artifact kind {args.kind!r}", file=sys.stderr)
    return 2


def _persist_pipeline_artifacts(out, report, artifacts) -> None:
    io.atomic_write_text(out / "report.json", report.to_json() + "\n")
    if "series" in artifacts:
        io.write_series(out / "filtered.csv", artifacts["series"])
    if "segments" in artifacts:
        io.write_table(
            out / "segments.csv",
            ["start_idx", "end_idx", "truncated"],
            [(s.start_idx, s.end_idx, int(s.truncated)) for s in artifacts["segments"]],
        )


def cmd_pipeline(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    trace = io.read_trace(args.trace)
    if args.annotations:
        trace.meta = io.read_annotations(args.annotations)
    gesture_model = io.read_classifier(args.gesture_model) if args.gesture_model else None
    behavior_models = (
        io.read_behavior_models(args.behavior_models) if args.behavior_models else None
    )
    try:
        report, artifacts = run_pipeline(config, trace, gesture_model, behavior_models)
    except StageError as exc:
        _persist_pipeline_artifacts(out, exc.report, exc.artifacts)
        print(f"pipeline failed at stage {exc.stage!r}: {exc.cause}", file=sys.stderr)
        return 1
    _persist_pipeline_artifacts(out, report, artifacts)
    print(f"pipeline report: {out / 'report.json'} "
          f"({report.metrics['segments_found']} segments)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desksense",
        description="WiFi-CSI micro-gesture and behavior analysis pipeline",
    )
    parser.add_argument("--config", help="JSON config file (defaults used if omitted)")
    parser.add_argument("--seed", type=int, help="override the simulation seed")
    parser.add_argument("--out", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a CSI trace from a gesture script")
    p.add_argument("--script", help="gesture script file")
    p.add_argument("--keystrokes", type=int, default=17,
                   help="keystroke count for the built-in script (ignored with --script)")
    p.add_argument("--duration", type=float, help="trace duration override (s)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("segment", help="segment a trace file")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("featurize", help="extract per-segment features")
    p.add_argument("--trace", required=True)
    p.add_argument("--annotations")
    p.add_argument("--use-annotations", action="store_true",
                   help="slice segments from the annotations instead of detecting")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train-gesture", help="cross-validate and fit the gesture classifier")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_train_gesture)

    p = sub.add_parser("train-behavior", help="fit per-behavior HMMs")
    p.add_argument("--confusion", required=True,
                   help="cv_confusion.csv from train-gesture")
    p.add_argument("--sequences", type=int, default=50)
    p.add_argument("--length", type=int, default=100)
    p.set_defaults(func=cmd_train_behavior)

    p = sub.add_parser("evaluate", help="run the synthetic evaluation studies")
    p.add_argument("--traces", type=int, default=100)
    p.add_argument("--segments", type=int, default=400)
    p.add_argument("--behavior-sequences", type=int, default=100)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-plate", help="plate-size channel response sweep")
    p.add_argument("--min-cm", type=int, default=2)
    p.add_argument("--max-cm", type=int, default=12)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.set_defaults(func=cmd_sweep_plate)

    p = sub.add_parser("plotdata", help="emit plot-ready tables")
    p.add_argument("--kind", required=True,
                   choices=["filter-response", "subcarrier-variance", "segments"])
    p.add_argument("--artifact", help="input artifact (trace file where applicable)")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("pipeline", help="full pipeline over one trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--annotations")
    p.add_argument("--gesture-model")
    p.add_argument("--behavior-models")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScriptError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
