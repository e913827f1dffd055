"""FastAPI application: every pipeline stage behind one endpoint.

Handlers orchestrate the core package and write artifacts to the service's
filesystem; responses carry the written paths plus the headline numbers.
Core exceptions surface as HTTP 400 with a ``config``/``runtime`` category
so clients (the CLI in particular) can map them to distinct exit codes.
"""

from __future__ import annotations

import csv
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..dataio import load_manifest, load_recordings, write_dataset
from ..errors import ConfigError, EmgrtError, ModelFormatError
from ..features import FeatureParams, vector_labels
from ..model_io import load_model, save_model
from ..pipeline import PipelineConfig, recording_features, train_from_manifest
from ..postprocess import bench_latency, classify_signal, sweep
from ..reports import (
    latency_to_dict,
    sweep_table,
    write_confusion_csv,
    write_latency_csv,
    write_latency_json,
    write_per_class_csv,
    write_sweep_csv,
    write_sweep_json,
)
from ..rnn import StackModel, TrainConfig
from ..signal import Recording, synth_dataset
from . import schemas

_model_cache: dict[str, tuple[tuple, StackModel]] = {}
_cache_lock = threading.Lock()


def _cached_model(path: str) -> StackModel:
    resolved = Path(path).resolve()
    if not resolved.is_file():
        raise ModelFormatError(f"model file not found: {path}")
    stat = resolved.stat()
    stamp = (stat.st_mtime_ns, stat.st_size)
    with _cache_lock:
        hit = _model_cache.get(str(resolved))
        if hit is not None and hit[0] == stamp:
            return hit[1]
    model = load_model(resolved)
    with _cache_lock:
        _model_cache[str(resolved)] = (stamp, model)
    return model


def _pipeline_config(
    windowing: schemas.WindowingOptions, features: schemas.FeatureOptions
) -> PipelineConfig:
    return PipelineConfig(
        window_len=windowing.window_len,
        step=windowing.step,
        levels=features.levels,
        feature_params=FeatureParams(
            myop_threshold=features.myop_threshold,
            wamp_threshold=features.wamp_threshold,
            ialv_offset=features.ialv_offset,
        ),
    )


def _train_config(opts: schemas.TrainingOptions) -> TrainConfig:
    return TrainConfig(
        learning_rate=opts.learning_rate,
        epochs=opts.epochs,
        batch_size=opts.batch_size,
        momentum=opts.momentum,
        seed=opts.seed,
        hidden1=opts.hidden1,
        hidden2=opts.hidden2,
        init_scale=opts.init_scale,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="emgrt", version=__version__)

    @app.exception_handler(EmgrtError)
    async def emgrt_error_handler(request: Request, exc: EmgrtError) -> JSONResponse:
        category = "config" if isinstance(exc, (ConfigError, ModelFormatError)) else "runtime"
        return JSONResponse(
            status_code=400, content={"detail": {"category": category, "message": str(exc)}}
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
        recordings = synth_dataset(
            num_classes=req.num_classes,
            channels=req.channels,
            trials_per_class=req.trials_per_class,
            duration=req.duration_s,
            sample_rate=req.sample_rate,
            seed=req.seed,
        )
        manifest_path = write_dataset(
            req.out_dir, recordings, num_classes=req.num_classes, train_trials=req.train_trials
        )
        manifest = load_manifest(manifest_path)
        return schemas.SynthResponse(
            manifest_path=str(manifest_path),
            recordings=len(recordings),
            train_recordings=len(manifest.split("train")),
            test_recordings=len(manifest.split("test")),
        )

    @app.post("/extract", response_model=schemas.ExtractResponse)
    def extract(req: schemas.ExtractRequest) -> schemas.ExtractResponse:
        manifest = load_manifest(req.manifest_path)
        cfg = _pipeline_config(req.windowing, req.features)
        out_dir = Path(req.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        header = ["label", "start_index"] + vector_labels(manifest.channels, cfg.levels)
        entries = manifest.entries if req.split is None else manifest.split(req.split)
        recordings = load_recordings(manifest, split=req.split)
        if req.threads > 1:
            with ThreadPoolExecutor(max_workers=req.threads) as pool:
                all_fvs = list(pool.map(lambda rec: recording_features(rec, cfg), recordings))
        else:
            all_fvs = [recording_features(rec, cfg) for rec in recordings]
        files: list[str] = []
        total_windows = 0
        for entry, fvs in zip(entries, all_fvs):
            total_windows += len(fvs)
            out_path = out_dir / (Path(entry.path).stem + "_features.csv")
            with open(out_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for fv in fvs:
                    writer.writerow(
                        [fv.label, fv.start_index] + [repr(float(v)) for v in fv.values]
                    )
            files.append(str(out_path))
        return schemas.ExtractResponse(
            files=files, windows=total_windows, features_per_window=len(header) - 2
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_endpoint(req: schemas.TrainRequest) -> schemas.TrainResponse:
        manifest = load_manifest(req.manifest_path)
        model = train_from_manifest(
            manifest,
            _pipeline_config(req.windowing, req.features),
            _train_config(req.training),
            arch=req.arch,
            input_mode=req.input_mode,
        )
        save_model(req.model_path, model)
        curve = model.metadata["loss_curve"]
        if req.loss_curve_path is not None:
            with open(req.loss_curve_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["epoch", "loss"])
                for epoch, value in enumerate(curve, start=1):
                    writer.writerow([epoch, repr(float(value))])
        return schemas.TrainResponse(
            model_path=req.model_path,
            arch=model.arch,
            input_mode=model.input_mode,
            examples=model.metadata["n_examples"],
            feature_dim=model.dims.d_in,
            num_classes=model.num_classes,
            final_loss=curve[-1],
            loss_curve_path=req.loss_curve_path,
        )

    @app.post("/model/info", response_model=schemas.ModelInfoResponse)
    def model_info(req: schemas.ModelInfoRequest) -> schemas.ModelInfoResponse:
        model = _cached_model(req.model_path)
        return schemas.ModelInfoResponse(
            arch=model.arch,
            input_mode=model.input_mode,
            feature_dim=model.dims.d_in,
            num_classes=model.num_classes,
            metadata=model.metadata,
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep_endpoint(req: schemas.SweepRequest) -> schemas.SweepResponse:
        manifest = load_manifest(req.manifest_path)
        test_set = load_recordings(manifest, split="test")
        models = {}
        for path in req.model_paths:
            name = Path(path).stem
            while name in models:
                name += "+"
            models[name] = _cached_model(path)
        per_class_length = (
            req.per_class_length_ms if req.per_class_length_ms is not None else max(req.lengths_ms)
        )
        report = sweep(
            models,
            test_set,
            req.lengths_ms,
            per_class_length=per_class_length,
            threads=req.threads,
        )
        files: list[str] = []
        if req.out_prefix is not None:
            prefix = Path(req.out_prefix)
            prefix.parent.mkdir(parents=True, exist_ok=True)
            csv_path, json_path = f"{prefix}.csv", f"{prefix}.json"
            write_sweep_csv(csv_path, report)
            write_sweep_json(json_path, report)
            files += [csv_path, json_path]
            for name in report.per_class:
                per_class_path = f"{prefix}_perclass_{name}.csv"
                confusion_path = f"{prefix}_confusion_{name}.csv"
                write_per_class_csv(per_class_path, report.per_class[name])
                write_confusion_csv(confusion_path, report.confusion[name])
                files += [per_class_path, confusion_path]
        return schemas.SweepResponse(
            lengths_ms=report.lengths,
            rows=[
                schemas.SweepRowModel(
                    name=row.name,
                    arch=row.arch,
                    input_mode=row.input_mode,
                    accuracy_pct=row.accuracy,
                )
                for row in report.rows
            ],
            per_class_length_ms=report.per_class_length,
            per_class_pct=report.per_class,
            confusion={name: mat.tolist() for name, mat in report.confusion.items()},
            files=files,
            table=sweep_table(report),
        )

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest) -> schemas.BenchResponse:
        model = _cached_model(req.model_path)
        manifest = load_manifest(req.manifest_path)
        test_entries = manifest.split("test") or manifest.entries
        if req.recording_index >= len(test_entries):
            raise ConfigError(
                f"recording_index {req.recording_index} out of range "
                f"({len(test_entries)} test recordings)"
            )
        recordings = load_recordings(manifest, split="test" if manifest.split("test") else None)
        report = bench_latency(
            model,
            recordings[req.recording_index],
            iterations=req.iterations,
            signal_length_ms=req.signal_length_ms,
        )
        files: list[str] = []
        if req.out_prefix is not None:
            prefix = Path(req.out_prefix)
            prefix.parent.mkdir(parents=True, exist_ok=True)
            json_path, csv_path = f"{prefix}.json", f"{prefix}.csv"
            write_latency_json(json_path, report)
            write_latency_csv(csv_path, report)
            files += [json_path, csv_path]
        d = latency_to_dict(report)
        return schemas.BenchResponse(
            feature_extraction_ms=schemas.LatencySummaryModel(**d["feature_extraction_ms"]),
            classification_ms=schemas.LatencySummaryModel(**d["classification_ms"]),
            iterations=report.iterations,
            windows_per_iteration=report.windows_per_iteration,
            decisions_per_iteration=report.decisions_per_iteration,
            files=files,
        )

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
        model = _cached_model(req.model_path)
        samples = np.asarray(req.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ConfigError("samples must be a list of equally sized rows")
        levels = int(model.metadata.get("levels", 2))
        expected_channels = model.dims.d_in // (19 * (levels + 1))
        if samples.shape[1] != expected_channels:
            raise ConfigError(
                f"model expects {expected_channels} channels, rows have {samples.shape[1]}"
            )
        sample_rate = req.sample_rate or float(model.metadata.get("sample_rate", 0))
        if sample_rate <= 0:
            raise ConfigError(
                "sample_rate not given and the model metadata does not carry one"
            )
        recording = Recording(samples=samples.T, sample_rate=sample_rate, label=0)
        length_ms = 1000.0 * recording.length / sample_rate
        label, decisions = classify_signal(recording, model, length_ms)
        return schemas.PredictResponse(
            label=label,
            decisions=[
                schemas.DecisionModel(
                    window_index=d.window_index,
                    predicted=d.predicted,
                    probabilities=[float(p) for p in d.probabilities],
                )
                for d in decisions
            ],
        )

    return app


app = create_app()
