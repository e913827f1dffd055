"""Dataset manifests and recording-file I/O.

Recording files are UTF-8 text: one row per sample instant, one column per
channel, whitespace- or comma-separated, no header. Values are written with
``repr`` so a write/read round trip is float64-exact.

Manifest grammar (line-oriented, '#' comments and blank lines ignored)::

    num_classes 4
    channels 2
    sample_rate 4000.0
    entry <path> <label> <subject_id> <trial_id> <split>

``path`` is relative to the manifest's directory and may not contain
whitespace; ``split`` is ``train`` or ``test``. Splits are always explicit
and trial-based — nothing in this package ever splits randomly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError
from .signal import Recording

__all__ = [
    "ManifestEntry",
    "DatasetManifest",
    "read_recording_samples",
    "write_recording",
    "load_manifest",
    "write_manifest",
    "load_recordings",
    "write_dataset",
]


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    subject_id: str
    trial_id: str
    split: str  # "train" | "test"


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    num_classes: int
    channels: int
    sample_rate: float
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        if self.num_classes < 1 or self.channels < 1 or self.sample_rate <= 0:
            raise ConfigError("manifest needs num_classes >= 1, channels >= 1, sample_rate > 0")
        for e in self.entries:
            if not 0 <= e.label < self.num_classes:
                raise ConfigError(
                    f"manifest entry {e.path!r} has label {e.label}, "
                    f"outside [0, {self.num_classes})"
                )
            if e.split not in ("train", "test"):
                raise ConfigError(f"manifest entry {e.path!r} has split {e.split!r}")

    def split(self, which: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == which]

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.base_dir / entry.path


def read_recording_samples(path: str | os.PathLike, channels: int | None = None) -> np.ndarray:
    """Parse a recording file into a (channels, n_samples) array.

    Errors name the file and 1-based line number.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"recording file not found: {path}")
    rows: list[list[float]] = []
    ncols = channels
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.replace(",", " ").split()
            if not tokens:
                continue
            if ncols is None:
                ncols = len(tokens)
            elif len(tokens) != ncols:
                raise DataFormatError(
                    f"{path}:{lineno}: expected {ncols} columns, found {len(tokens)}"
                )
            try:
                rows.append([float(tok) for tok in tokens])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: non-numeric token in {line.strip()!r}") from exc
    if not rows:
        raise DataFormatError(f"{path}: file contains no samples")
    return np.asarray(rows, dtype=np.float64).T


def write_recording(path: str | os.PathLike, recording: Recording) -> None:
    """Write channel-per-column text with exact float64 round trip."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in recording.samples.T:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"manifest file not found: {path}")
    num_classes = channels = None
    sample_rate = None
    entries: list[ManifestEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, rest = line.partition(" ")
            rest = rest.strip()
            try:
                if key == "num_classes":
                    num_classes = int(rest)
                elif key == "channels":
                    channels = int(rest)
                elif key == "sample_rate":
                    sample_rate = float(rest)
                elif key == "entry":
                    fields = rest.split()
                    if len(fields) != 5:
                        raise ConfigError(
                            f"{path}:{lineno}: entry needs 5 fields "
                            "(path label subject_id trial_id split)"
                        )
                    entries.append(
                        ManifestEntry(
                            path=fields[0],
                            label=int(fields[1]),
                            subject_id=fields[2],
                            trial_id=fields[3],
                            split=fields[4],
                        )
                    )
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown manifest key {key!r}")
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value in {line!r}") from exc
    if num_classes is None or channels is None or sample_rate is None:
        raise ConfigError(f"{path}: manifest must declare num_classes, channels, sample_rate")
    return DatasetManifest(
        entries=entries,
        num_classes=num_classes,
        channels=channels,
        sample_rate=sample_rate,
        base_dir=path.parent,
    )


def write_manifest(path: str | os.PathLike, manifest: DatasetManifest) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"num_classes {manifest.num_classes}",
        f"channels {manifest.channels}",
        f"sample_rate {manifest.sample_rate!r}",
    ]
    lines += [
        f"entry {e.path} {e.label} {e.subject_id} {e.trial_id} {e.split}"
        for e in manifest.entries
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_recordings(
    manifest: DatasetManifest, split: str | None = None
) -> list[Recording]:
    """One Recording per manifest entry (optionally restricted to one split)."""
    entries = manifest.entries if split is None else manifest.split(split)
    recordings = []
    for entry in entries:
        samples = read_recording_samples(manifest.resolve(entry), channels=manifest.channels)
        recordings.append(
            Recording(
                samples=samples,
                sample_rate=manifest.sample_rate,
                label=entry.label,
                subject_id=entry.subject_id,
                trial_id=entry.trial_id,
            )
        )
    return recordings


def write_dataset(
    out_dir: str | os.PathLike,
    recordings: list[Recording],
    num_classes: int,
    train_trials: int,
    manifest_name: str = "manifest.txt",
) -> Path:
    """Write recording files plus a manifest; trials <= train_trials go to train.

    Returns the manifest path. File names encode class and trial so the
    directory is self-describing.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not recordings:
        raise ConfigError("cannot write an empty dataset")
    channels = recordings[0].channels
    sample_rate = recordings[0].sample_rate
    entries = []
    for rec in recordings:
        if rec.channels != channels or rec.sample_rate != sample_rate:
            raise ConfigError("all recordings in a dataset must share channels and sample_rate")
        name = f"class{rec.label}_trial{rec.trial_id}.txt"
        write_recording(out_dir / name, rec)
        try:
            trial_num = int(rec.trial_id)
        except ValueError as exc:
            raise ConfigError(
                f"trial id {rec.trial_id!r} is not numeric; cannot apply trial-based split"
            ) from exc
        entries.append(
            ManifestEntry(
                path=name,
                label=rec.label,
                subject_id=rec.subject_id,
                trial_id=rec.trial_id,
                split="train" if trial_num <= train_trials else "test",
            )
        )
    manifest = DatasetManifest(
        entries=entries,
        num_classes=num_classes,
        channels=channels,
        sample_rate=sample_rate,
        base_dir=out_dir,
    )
    manifest_path = out_dir / manifest_name
    write_manifest(manifest_path, manifest)
    return manifest_path
