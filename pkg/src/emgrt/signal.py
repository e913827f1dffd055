"""Recordings, overlapped windowing, and the synthetic desk-scale dataset.

A recording holds a multi-channel signal as a (channels, n_samples) float64
array. Windowing slides a fixed-length slab across it; the defaults elsewhere
in the pipeline are 400-sample windows advanced by 200 samples (100/50 ms at
4 kHz).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, WindowingError

__all__ = ["Recording", "Window", "segment_windows", "window_count", "synth_dataset"]


@dataclass
class Recording:
    """Multi-channel sampled signal with its rate and class label."""

    samples: np.ndarray  # (channels, n_samples)
    sample_rate: float
    label: int
    subject_id: str = "unknown"
    trial_id: str = "0"

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        self.sample_rate = float(self.sample_rate)
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ConfigError("recording samples must form a (channels, n_samples) array")
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.label < 0:
            raise ConfigError(f"label must be >= 0, got {self.label}")

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]

    def duration_ms(self) -> float:
        return 1000.0 * self.length / self.sample_rate

    def prefix(self, n_samples: int) -> "Recording":
        """The first ``n_samples`` of the recording, metadata preserved."""
        if n_samples > self.length:
            raise WindowingError(
                f"recording has {self.length} samples, cannot take a {n_samples}-sample prefix"
            )
        return Recording(
            samples=self.samples[:, :n_samples],
            sample_rate=self.sample_rate,
            label=self.label,
            subject_id=self.subject_id,
            trial_id=self.trial_id,
        )


@dataclass
class Window:
    """Fixed-length per-channel slab cut out of a recording."""

    samples: np.ndarray  # (channels, window_len)
    start_index: int
    label: int

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]


def window_count(length: int, window_len: int, step: int) -> int:
    """Number of windows a signal of ``length`` samples yields."""
    if length < window_len:
        return 0
    return (length - window_len) // step + 1


def segment_windows(recording: Recording, window_len: int = 400, step: int = 200) -> list[Window]:
    """Cut overlapped windows starting at offsets 0, step, 2*step, ...

    Each window inherits the recording's label. A recording shorter than one
    window is an error rather than an empty result.
    """
    if window_len < 1:
        raise ConfigError(f"window_len must be >= 1, got {window_len}")
    if not 0 < step <= window_len:
        raise ConfigError(f"step must satisfy 0 < step <= window_len, got {step}")
    if recording.length < window_len:
        raise WindowingError(
            f"recording has {recording.length} samples, shorter than one "
            f"{window_len}-sample window; no windows can be produced"
        )
    return [
        Window(
            samples=recording.samples[:, start : start + window_len],
            start_index=start,
            label=recording.label,
        )
        for start in range(0, recording.length - window_len + 1, step)
    ]


# Amplitude envelopes cycled across classes; each returns values in (0, 1].
def _envelopes():
    return [
        lambda t: np.full_like(t, 0.9),
        lambda t: 0.25 + 0.75 * t,
        lambda t: 1.0 - 0.75 * t,
        lambda t: 0.2 + 0.8 * np.sin(np.pi * t) ** 2,
        lambda t: 0.2 + 0.8 * np.sin(2.0 * np.pi * t) ** 2,
    ]


def _bandlimit(noise: np.ndarray, lo_frac: float, hi_frac: float) -> np.ndarray:
    """Keep only FFT bins whose normalized frequency lies in [lo, hi] of the rate."""
    spec = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(noise.size)  # cycles per sample, 0..0.5
    spec[(freqs < lo_frac) | (freqs > hi_frac)] = 0.0
    out = np.fft.irfft(spec, n=noise.size)
    rms = np.sqrt(np.mean(out * out))
    return out / max(rms, 1e-12)


def synth_dataset(
    num_classes: int,
    channels: int,
    trials_per_class: int,
    duration: float = 1.0,
    sample_rate: float = 4000.0,
    seed: int = 0,
) -> list[Recording]:
    """Deterministic synthetic recordings with feature-separable classes.

    Each class pairs a dominant frequency band with an amplitude envelope, so
    the wavelet layers carry class-distinct energy profiles while amplitude
    features see class-distinct dynamics. A small broadband floor keeps every
    feature non-degenerate.
    """
    if min(num_classes, channels, trials_per_class) < 1:
        raise ConfigError("num_classes, channels and trials_per_class must all be >= 1")
    if duration <= 0 or sample_rate <= 0:
        raise ConfigError("duration and sample_rate must be > 0")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ConfigError(f"duration {duration}s at {sample_rate} Hz gives only {n} samples")

    rng = np.random.default_rng(seed)
    edges = np.linspace(0.04, 0.46, num_classes + 1)
    envelopes = _envelopes()
    t = np.linspace(0.0, 1.0, n)

    # Fixed per-(class, channel) gain pattern adds a spatial signature.
    gains = 0.7 + 0.6 * rng.random((num_classes, channels))

    recordings = []
    for label in range(num_classes):
        lo, hi = edges[label], edges[label + 1]
        envelope = envelopes[label % len(envelopes)](t)
        for trial in range(1, trials_per_class + 1):
            amp = rng.uniform(0.9, 1.1)
            chans = np.empty((channels, n))
            for ch in range(channels):
                tone = _bandlimit(rng.standard_normal(n), lo, hi)
                floor = 0.05 * rng.standard_normal(n)
                chans[ch] = gains[label, ch] * amp * envelope * tone + floor
            recordings.append(
                Recording(
                    samples=chans,
                    sample_rate=sample_rate,
                    label=label,
                    subject_id="synth",
                    trial_id=str(trial),
                )
            )
    return recordings
