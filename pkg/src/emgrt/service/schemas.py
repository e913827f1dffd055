"""Request/response models for the HTTP endpoints.

Paths refer to the filesystem the service runs on; the CLI runs the service
in-process by default, so they are ordinary local paths there.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class WindowingOptions(BaseModel):
    window_len: int = Field(default=400, ge=1)
    step: int = Field(default=200, ge=1)


class FeatureOptions(BaseModel):
    levels: int = Field(default=2, ge=1, le=4)
    myop_threshold: float = Field(default=0.02, gt=0)
    wamp_threshold: float = Field(default=0.02, gt=0)
    ialv_offset: float = Field(default=1e-6, gt=0)


class TrainingOptions(BaseModel):
    learning_rate: float = Field(default=1e-2, gt=0)
    epochs: int = Field(default=200, ge=1)
    batch_size: int = Field(default=32, ge=1)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    seed: int = 0
    hidden1: int = Field(default=32, ge=1)
    hidden2: int = Field(default=32, ge=1)
    init_scale: Optional[float] = Field(default=None, gt=0)


class HealthResponse(BaseModel):
    status: str
    version: str


class SynthRequest(BaseModel):
    out_dir: str
    num_classes: int = Field(default=4, ge=1)
    channels: int = Field(default=2, ge=1)
    trials_per_class: int = Field(default=14, ge=1)
    train_trials: int = Field(default=10, ge=0)
    duration_s: float = Field(default=1.0, gt=0)
    sample_rate: float = Field(default=4000.0, gt=0)
    seed: int = 0


class SynthResponse(BaseModel):
    manifest_path: str
    recordings: int
    train_recordings: int
    test_recordings: int


class ExtractRequest(BaseModel):
    manifest_path: str
    out_dir: str
    windowing: WindowingOptions = WindowingOptions()
    features: FeatureOptions = FeatureOptions()
    split: Optional[Literal["train", "test"]] = None
    threads: int = Field(default=1, ge=1)


class ExtractResponse(BaseModel):
    files: list[str]
    windows: int
    features_per_window: int


class TrainRequest(BaseModel):
    manifest_path: str
    model_path: str
    arch: Literal["rnn", "brnn"] = "brnn"
    input_mode: Literal["same", "sequential"] = "same"
    windowing: WindowingOptions = WindowingOptions()
    features: FeatureOptions = FeatureOptions()
    training: TrainingOptions = TrainingOptions()
    loss_curve_path: Optional[str] = None


class TrainResponse(BaseModel):
    model_path: str
    arch: str
    input_mode: str
    examples: int
    feature_dim: int
    num_classes: int
    final_loss: float
    loss_curve_path: Optional[str] = None


class ModelInfoRequest(BaseModel):
    model_path: str


class ModelInfoResponse(BaseModel):
    arch: str
    input_mode: str
    feature_dim: int
    num_classes: int
    metadata: dict


class SweepRequest(BaseModel):
    manifest_path: str
    model_paths: list[str] = Field(min_length=1)
    lengths_ms: list[int] = Field(
        default=[100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600], min_length=1
    )
    per_class_length_ms: Optional[int] = None  # default: max of lengths_ms
    out_prefix: Optional[str] = None
    threads: int = Field(default=1, ge=1)


class SweepRowModel(BaseModel):
    name: str
    arch: str
    input_mode: str
    accuracy_pct: dict[int, Optional[float]]


class SweepResponse(BaseModel):
    lengths_ms: list[int]
    rows: list[SweepRowModel]
    per_class_length_ms: Optional[int]
    per_class_pct: dict[str, dict[int, float]]
    confusion: dict[str, list[list[int]]]
    files: list[str]
    table: str


class BenchRequest(BaseModel):
    model_path: str
    manifest_path: str
    recording_index: int = Field(default=0, ge=0)  # index into the test split
    iterations: int = Field(default=200, ge=1)
    signal_length_ms: float = Field(default=600.0, gt=0)
    out_prefix: Optional[str] = None


class LatencySummaryModel(BaseModel):
    mean_ms: float
    p50_ms: float
    p95_ms: float


class BenchResponse(BaseModel):
    feature_extraction_ms: LatencySummaryModel
    classification_ms: LatencySummaryModel
    iterations: int
    windows_per_iteration: int
    decisions_per_iteration: int
    files: list[str]


class PredictRequest(BaseModel):
    model_path: str
    samples: list[list[float]] = Field(min_length=1)
    sample_rate: Optional[float] = Field(default=None, gt=0)


class DecisionModel(BaseModel):
    window_index: int
    predicted: int
    probabilities: list[float]


class PredictResponse(BaseModel):
    label: int
    decisions: list[DecisionModel]


class ErrorDetail(BaseModel):
    category: Literal["config", "runtime"]
    message: str
