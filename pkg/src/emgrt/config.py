"""Line-oriented key-value config files for the CLI.

Grammar: one ``key value`` pair per line, '#' comments and blank lines
ignored. Keys are the CLI flag names with underscores; flags given on the
command line win over config values, which win over built-in defaults.
"""

from __future__ import annotations

import os
from pathlib import Path

from .errors import ConfigError

__all__ = ["load_config_file", "CONFIG_KEYS"]


def _lengths(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ConfigError(f"lengths must be comma-separated integers, got {text!r}") from exc


# key -> converter; everything the subcommands accept as flags.
CONFIG_KEYS = {
    "server": str,
    "manifest": str,
    "model": str,
    "out": str,
    "loss_curve": str,
    "input": str,
    "window_len": int,
    "step": int,
    "levels": int,
    "myop_threshold": float,
    "wamp_threshold": float,
    "ialv_offset": float,
    "arch": str,
    "input_mode": str,
    "learning_rate": float,
    "epochs": int,
    "batch_size": int,
    "momentum": float,
    "seed": int,
    "hidden1": int,
    "hidden2": int,
    "init_scale": float,
    "lengths": _lengths,
    "per_class_length": int,
    "signal_length": float,
    "iterations": int,
    "recording_index": int,
    "classes": int,
    "channels": int,
    "trials": int,
    "train_trials": int,
    "duration": float,
    "rate": float,
    "threads": int,
    "host": str,
    "port": int,
}


def load_config_file(path: str | os.PathLike) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition(" ")
            raw = raw.strip()
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            if not raw:
                raise ConfigError(f"{path}:{lineno}: key {key!r} has no value")
            try:
                values[key] = CONFIG_KEYS[key](raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return values
