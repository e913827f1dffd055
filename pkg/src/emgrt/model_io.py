"""Versioned JSON model files.

Layout (format "emgrt-stack-model", version 1): arch, input_mode, dims,
normalizer (mean/std), free-form metadata, and the five units' matrices as
row-major nested lists. Floats are written with Python's shortest
round-trip representation, so save/load is float64-exact and a fixed seed
produces byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import fields
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .features import Normalizer
from .rnn import BuParams, StackDims, StackModel

__all__ = ["save_model", "load_model", "model_to_dict", "model_from_dict"]

FORMAT_NAME = "emgrt-stack-model"
FORMAT_VERSION = 1


def model_to_dict(model: StackModel) -> dict:
    units = []
    for unit in model.units:
        entry = {}
        for f in fields(unit):
            arr = getattr(unit, f.name)
            if arr is not None:
                entry[f.name] = arr.tolist()
        units.append(entry)
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "arch": model.arch,
        "input_mode": model.input_mode,
        "dims": {
            "d_in": model.dims.d_in,
            "hidden1": model.dims.hidden1,
            "hidden2": model.dims.hidden2,
            "num_classes": model.dims.num_classes,
        },
        "normalizer": {
            "mean": model.normalizer.mean.tolist(),
            "std": model.normalizer.std.tolist(),
        },
        "metadata": model.metadata,
        "units": units,
    }


def model_from_dict(data: dict) -> StackModel:
    try:
        if data.get("format") != FORMAT_NAME:
            raise ModelFormatError(f"not a {FORMAT_NAME} file (format={data.get('format')!r})")
        if data.get("version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model version {data.get('version')!r}")
        dims = StackDims(**data["dims"])
        units = [
            BuParams(**{k: np.asarray(v, dtype=np.float64) for k, v in entry.items()})
            for entry in data["units"]
        ]
        normalizer = Normalizer(
            mean=np.asarray(data["normalizer"]["mean"], dtype=np.float64),
            std=np.asarray(data["normalizer"]["std"], dtype=np.float64),
        )
        return StackModel(
            units=units,
            arch=data["arch"],
            input_mode=data["input_mode"],
            dims=dims,
            normalizer=normalizer,
            metadata=data.get("metadata", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def save_model(path: str | os.PathLike, model: StackModel) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str | os.PathLike) -> StackModel:
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"model file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
    return model_from_dict(data)
