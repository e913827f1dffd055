"""End-to-end glue: windowing config, per-recording features, training sets.

The pipeline configuration travels inside trained models (metadata), so a
model file is self-contained: inference re-derives the exact windowing,
decomposition depth, thresholds and normalization used at training time.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataio import DatasetManifest, load_recordings
from .errors import ConfigError
from .features import (
    FeatureParams,
    FeatureVector,
    apply_normalizer,
    fit_normalizer,
    wavelet_feature_vector,
)
from .rnn import (
    MODE_SAME,
    STACK_SIZE,
    StackModel,
    TrainConfig,
    TrainExample,
    stack_inputs,
    train,
)
from .signal import Recording, segment_windows

__all__ = [
    "PipelineConfig",
    "recording_features",
    "dataset_features",
    "build_examples",
    "train_from_recordings",
    "train_from_manifest",
]


@dataclass(frozen=True)
class PipelineConfig:
    """Windowing and feature-extraction settings shared by train and inference."""

    window_len: int = 400
    step: int = 200
    levels: int = 2
    feature_params: FeatureParams = FeatureParams()

    def __post_init__(self):
        if self.window_len < 1 or not 0 < self.step <= self.window_len:
            raise ConfigError("need window_len >= 1 and 0 < step <= window_len")
        if not 1 <= self.levels <= 4:
            raise ConfigError(f"levels must be in 1..4, got {self.levels}")
        if self.window_len % (2**self.levels) != 0:
            raise ConfigError(
                f"window_len {self.window_len} is not divisible by 2^levels = {2 ** self.levels}"
            )

    def to_metadata(self) -> dict:
        return {
            "window_len": self.window_len,
            "step": self.step,
            "levels": self.levels,
            "myop_threshold": self.feature_params.myop_threshold,
            "wamp_threshold": self.feature_params.wamp_threshold,
            "ialv_offset": self.feature_params.ialv_offset,
        }

    @classmethod
    def from_metadata(cls, meta: dict) -> "PipelineConfig":
        try:
            return cls(
                window_len=int(meta["window_len"]),
                step=int(meta["step"]),
                levels=int(meta["levels"]),
                feature_params=FeatureParams(
                    myop_threshold=float(meta["myop_threshold"]),
                    wamp_threshold=float(meta["wamp_threshold"]),
                    ialv_offset=float(meta["ialv_offset"]),
                ),
            )
        except KeyError as exc:
            raise ConfigError(f"model metadata is missing pipeline key {exc}") from exc


def recording_features(
    recording: Recording, cfg: PipelineConfig, normalizer=None
) -> list[FeatureVector]:
    """Window one recording and extract (optionally normalized) features."""
    windows = segment_windows(recording, cfg.window_len, cfg.step)
    fvs = [wavelet_feature_vector(w, cfg.levels, cfg.feature_params) for w in windows]
    if normalizer is not None:
        fvs = [apply_normalizer(normalizer, fv) for fv in fvs]
    return fvs


def dataset_features(recordings: list[Recording], cfg: PipelineConfig) -> list[list[FeatureVector]]:
    return [recording_features(rec, cfg) for rec in recordings]


def build_examples(per_recording: list[list[FeatureVector]], input_mode: str) -> list[TrainExample]:
    """Turn per-recording feature sequences into stack training examples.

    Same mode yields one example per window; sequential mode one example per
    5-window group at one-window stride. Recordings too short for a group
    contribute nothing in sequential mode.
    """
    examples = []
    for fvs in per_recording:
        if input_mode == MODE_SAME:
            examples.extend(
                TrainExample(inputs=stack_inputs(fvs, MODE_SAME, i), label=fvs[i].label)
                for i in range(len(fvs))
            )
        else:
            examples.extend(
                TrainExample(inputs=stack_inputs(fvs, input_mode, i), label=fvs[i].label)
                for i in range(len(fvs) - STACK_SIZE + 1)
            )
    return examples


def train_from_recordings(
    train_recordings: list[Recording],
    pipeline: PipelineConfig,
    config: TrainConfig,
    arch: str,
    input_mode: str,
    num_classes: int,
) -> StackModel:
    """Fit the normalizer on the training windows, then train a stack.

    The returned model embeds the normalizer and the pipeline settings.
    """
    if not train_recordings:
        raise ConfigError("no training recordings")
    raw = dataset_features(train_recordings, pipeline)
    normalizer = fit_normalizer([fv for fvs in raw for fv in fvs])
    normalized = [[apply_normalizer(normalizer, fv) for fv in fvs] for fvs in raw]
    examples = build_examples(normalized, input_mode)
    if not examples:
        raise ConfigError(
            "training recordings yield no stack examples "
            f"(sequential mode needs >= {STACK_SIZE} windows per recording)"
        )
    metadata = pipeline.to_metadata()
    metadata["num_classes"] = num_classes
    metadata["sample_rate"] = float(train_recordings[0].sample_rate)
    return train(
        examples,
        config,
        arch=arch,
        input_mode=input_mode,
        normalizer=normalizer,
        num_classes=num_classes,
        metadata=metadata,
    )


def train_from_manifest(
    manifest: DatasetManifest,
    pipeline: PipelineConfig,
    config: TrainConfig,
    arch: str,
    input_mode: str,
) -> StackModel:
    return train_from_recordings(
        load_recordings(manifest, split="train"),
        pipeline,
        config,
        arch,
        input_mode,
        num_classes=manifest.num_classes,
    )
