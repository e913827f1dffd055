"""Voting over per-window decisions, accuracy sweeps, and latency benchmarks."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UnsupportedLengthError, WindowingError
from .features import apply_normalizer, wavelet_feature_vector
from .pipeline import PipelineConfig
from .rnn import MODE_SEQUENTIAL, STACK_SIZE, StackModel, stack_inputs, stack_predict
from .signal import Recording, segment_windows, window_count

__all__ = [
    "Decision",
    "SweepRow",
    "SweepReport",
    "LatencySummary",
    "LatencyReport",
    "majority_vote",
    "classify_signal",
    "sweep",
    "per_class_accuracy",
    "bench_latency",
]


@dataclass
class Decision:
    """One stack evaluation: class distribution plus its argmax."""

    window_index: int
    probabilities: np.ndarray
    predicted: int

    @classmethod
    def from_probabilities(cls, window_index: int, probabilities: np.ndarray) -> "Decision":
        probabilities = np.asarray(probabilities, dtype=np.float64)
        # np.argmax takes the first maximum, i.e. ties go to the lowest class.
        return cls(
            window_index=window_index,
            probabilities=probabilities,
            predicted=int(np.argmax(probabilities)),
        )


def majority_vote(decisions: list[Decision]) -> int:
    """Most frequent predicted class; ties break to the lowest class index."""
    if not decisions:
        raise ConfigError("majority_vote needs at least one decision")
    votes = np.array([d.predicted for d in decisions])
    return int(np.argmax(np.bincount(votes)))


def _samples_for_ms(recording: Recording, ms: float) -> int:
    return int(round(ms / 1000.0 * recording.sample_rate))


def classify_signal(
    recording: Recording, model: StackModel, signal_length_ms: float
) -> tuple[int, list[Decision]]:
    """Vote a class from the first ``signal_length_ms`` of a recording.

    Same-input models decide once per window; sequential models once per
    5-window group at one-window stride (and need at least five windows,
    i.e. 300 ms at the default 100/50 ms windowing).
    """
    cfg = PipelineConfig.from_metadata(model.metadata)
    n_samples = _samples_for_ms(recording, signal_length_ms)
    if n_samples > recording.length:
        raise WindowingError(
            f"recording holds {recording.duration_ms():.0f} ms, "
            f"cannot classify the first {signal_length_ms:.0f} ms"
        )
    prefix = recording.prefix(n_samples)
    if prefix.length < cfg.window_len:
        raise UnsupportedLengthError(
            f"{signal_length_ms:.0f} ms is {prefix.length} samples, "
            f"shorter than one {cfg.window_len}-sample window"
        )
    windows = segment_windows(prefix, cfg.window_len, cfg.step)
    fvs = [
        apply_normalizer(model.normalizer, wavelet_feature_vector(w, cfg.levels, cfg.feature_params))
        for w in windows
    ]
    if model.input_mode == MODE_SEQUENTIAL and len(fvs) < STACK_SIZE:
        raise UnsupportedLengthError(
            f"sequential mode needs {STACK_SIZE} windows, "
            f"{signal_length_ms:.0f} ms yields only {len(fvs)}"
        )
    n_groups = len(fvs) if model.input_mode != MODE_SEQUENTIAL else len(fvs) - STACK_SIZE + 1
    decisions = [
        Decision.from_probabilities(i, stack_predict(stack_inputs(fvs, model.input_mode, i), model))
        for i in range(n_groups)
    ]
    return majority_vote(decisions), decisions


@dataclass
class SweepRow:
    name: str
    arch: str
    input_mode: str
    accuracy: dict[int, float | None]  # length ms -> percent, None where unavailable


@dataclass
class SweepReport:
    lengths: list[int]
    rows: list[SweepRow]
    per_class: dict[str, dict[int, float]] = field(default_factory=dict)
    confusion: dict[str, np.ndarray] = field(default_factory=dict)
    per_class_length: int | None = None


def _decidable(model: StackModel, recording_rate: float, length_ms: int) -> bool:
    cfg = PipelineConfig.from_metadata(model.metadata)
    n = int(round(length_ms / 1000.0 * recording_rate))
    wins = window_count(n, cfg.window_len, cfg.step)
    need = STACK_SIZE if model.input_mode == MODE_SEQUENTIAL else 1
    return wins >= need


def _predictions(
    model: StackModel, test_set: list[Recording], length_ms: int, threads: int
) -> list[int]:
    """Voted label per recording, in input order (thread count cannot change it)."""

    def one(rec: Recording) -> int:
        return classify_signal(rec, model, length_ms)[0]

    if threads <= 1:
        return [one(rec) for rec in test_set]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, test_set))


def _accuracy(
    model: StackModel, test_set: list[Recording], length_ms: int, threads: int = 1
) -> float:
    predicted = _predictions(model, test_set, length_ms, threads)
    hits = sum(1 for rec, p in zip(test_set, predicted) if p == rec.label)
    return 100.0 * hits / len(test_set)


def sweep(
    models: dict[str, StackModel],
    test_set: list[Recording],
    lengths: list[int],
    per_class_length: int | None = None,
    threads: int = 1,
) -> SweepReport:
    """Voted accuracy per model and signal length, plus per-class breakdowns.

    Lengths a model cannot decide at (sequential mode below five windows)
    are reported as unavailable rather than evaluated.
    """
    if not test_set:
        raise ConfigError("sweep needs a non-empty test set")
    if not models:
        raise ConfigError("sweep needs at least one model")
    rows = []
    for name, model in models.items():
        accuracy: dict[int, float | None] = {}
        for length in lengths:
            if not _decidable(model, test_set[0].sample_rate, length):
                accuracy[length] = None
            else:
                accuracy[length] = _accuracy(model, test_set, length, threads)
        rows.append(
            SweepRow(name=name, arch=model.arch, input_mode=model.input_mode, accuracy=accuracy)
        )
    report = SweepReport(lengths=list(lengths), rows=rows)
    if per_class_length is not None:
        report.per_class_length = per_class_length
        for name, model in models.items():
            if not _decidable(model, test_set[0].sample_rate, per_class_length):
                continue
            per_class, confusion = per_class_accuracy(model, test_set, per_class_length)
            report.per_class[name] = per_class
            report.confusion[name] = confusion
    return report


def per_class_accuracy(
    model: StackModel, test_set: list[Recording], length_ms: int
) -> tuple[dict[int, float], np.ndarray]:
    """Accuracy percent per true class plus the C x C confusion counts."""
    if not test_set:
        raise ConfigError("per_class_accuracy needs a non-empty test set")
    c = model.num_classes
    confusion = np.zeros((c, c), dtype=np.int64)
    for rec in test_set:
        predicted, _ = classify_signal(rec, model, length_ms)
        confusion[rec.label, predicted] += 1
    per_class = {}
    for label in range(c):
        total = int(confusion[label].sum())
        per_class[label] = 100.0 * confusion[label, label] / total if total else float("nan")
    return per_class, confusion


@dataclass
class LatencySummary:
    mean_ms: float
    p50_ms: float
    p95_ms: float

    @classmethod
    def from_samples(cls, samples_ms: list[float]) -> "LatencySummary":
        arr = np.asarray(samples_ms)
        return cls(
            mean_ms=float(arr.mean()),
            p50_ms=float(np.percentile(arr, 50)),
            p95_ms=float(np.percentile(arr, 95)),
        )


@dataclass
class LatencyReport:
    feature_extraction: LatencySummary
    classification: LatencySummary
    iterations: int
    windows_per_iteration: int
    decisions_per_iteration: int


def bench_latency(
    model: StackModel,
    recording: Recording,
    iterations: int = 200,
    signal_length_ms: float = 600.0,
) -> LatencyReport:
    """Wall-clock cost of (a) one window's feature vector and (b) one decision.

    A decision is one stack forward plus its share of the final vote. Runs on
    the calling thread; repetitions cover every window of the chosen prefix.
    """
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    cfg = PipelineConfig.from_metadata(model.metadata)
    prefix = recording.prefix(_samples_for_ms(recording, signal_length_ms))
    windows = segment_windows(prefix, cfg.window_len, cfg.step)
    n_groups = (
        len(windows) - STACK_SIZE + 1 if model.input_mode == MODE_SEQUENTIAL else len(windows)
    )
    if n_groups < 1:
        raise UnsupportedLengthError("benchmark signal too short for one decision")

    feature_samples: list[float] = []
    classify_samples: list[float] = []
    for _ in range(iterations):
        fvs = []
        for w in windows:
            t0 = time.perf_counter_ns()
            fv = wavelet_feature_vector(w, cfg.levels, cfg.feature_params)
            feature_samples.append((time.perf_counter_ns() - t0) / 1e6)
            fvs.append(apply_normalizer(model.normalizer, fv))
        decisions = []
        stack_times = []
        for i in range(n_groups):
            t0 = time.perf_counter_ns()
            probs = stack_predict(stack_inputs(fvs, model.input_mode, i), model)
            stack_times.append((time.perf_counter_ns() - t0) / 1e6)
            decisions.append(Decision.from_probabilities(i, probs))
        t0 = time.perf_counter_ns()
        majority_vote(decisions)
        vote_share = (time.perf_counter_ns() - t0) / 1e6 / n_groups
        classify_samples.extend(t + vote_share for t in stack_times)

    return LatencyReport(
        feature_extraction=LatencySummary.from_samples(feature_samples),
        classification=LatencySummary.from_samples(classify_samples),
        iterations=iterations,
        windows_per_iteration=len(windows),
        decisions_per_iteration=n_groups,
    )
