"""The 19-function statistical feature bank and the per-window feature vector.

Each function maps one coefficient layer (a 1-D sequence) to one real value.
A 2-level decomposition yields 3 layers (cD1, cD2, cA2), so each channel
contributes 19 x 3 = 57 features; channels are concatenated in channel order.

Registry order is fixed (IEMG first, IE last) because trained models are
layout-dependent; see FEATURE_NAMES.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dwt import decompose
from .errors import FeatureError
from .signal import Window

__all__ = [
    "FEATURE_NAMES",
    "FeatureParams",
    "FeatureVector",
    "Normalizer",
    "compute_feature",
    "feature_vector_length",
    "layer_names",
    "vector_labels",
    "wavelet_feature_vector",
    "fit_normalizer",
    "apply_normalizer",
]

# Exponent arguments above this are clamped so one outlier cannot poison
# training with an Inf.
EXP_CLAMP = 50.0


@dataclass(frozen=True)
class FeatureParams:
    """Thresholds for the thresholded features (all in post-wavelet amplitude units)."""

    myop_threshold: float = 0.02
    wamp_threshold: float = 0.02
    ialv_offset: float = 1e-6

    def __post_init__(self):
        for name in ("myop_threshold", "wamp_threshold", "ialv_offset"):
            if getattr(self, name) <= 0:
                raise FeatureError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass
class FeatureVector:
    """Per-window feature values plus the window metadata they came from."""

    values: np.ndarray
    label: int
    start_index: int


def _iemg(x, p):
    return float(np.sum(np.abs(x)))


def _mav(x, p):
    return float(np.mean(np.abs(x)))


def _ssi(x, p):
    return float(np.sum(x * x))


def _rms(x, p):
    return float(np.sqrt(np.mean(x * x)))


def _var(x, p):
    # Table-style variance: sum of squares over N-1, no mean removal.
    return float(np.sum(x * x) / (x.size - 1))


def _myop(x, p):
    return float(np.count_nonzero(np.abs(x) > p.myop_threshold) / x.size)


def _wl(x, p):
    return float(np.sum(np.abs(np.diff(x))))


def _damv(x, p):
    return float(np.sum(np.abs(np.diff(x))) / (x.size - 1))


def _m2(x, p):
    d = np.diff(x)
    return float(np.sum(d * d))


def _dvarv(x, p):
    d = np.diff(x)
    return float(np.sum(d * d) / (x.size - 2))


def _dasdv(x, p):
    d = np.diff(x)
    return float(np.sqrt(np.sum(d * d) / (x.size - 1)))


def _max(x, p):
    return float(np.max(x))


def _min(x, p):
    return float(np.min(x))


def _wamp(x, p):
    return float(np.count_nonzero(np.abs(np.diff(x)) > p.wamp_threshold))


def _iasd(x, p):
    return float(np.sum(np.abs(np.diff(x, n=2))))


def _iatd(x, p):
    return float(np.sum(np.abs(np.diff(x, n=3))))


def _ieav(x, p):
    return float(np.sum(np.exp(np.minimum(np.abs(x), EXP_CLAMP))))


def _ialv(x, p):
    # |log(x + T)| is ill-defined for x <= -T; computed on |x| + T instead
    # so the value stays finite and real for any coefficient sign.
    return float(np.sum(np.abs(np.log(np.abs(x) + p.ialv_offset))))


def _ie(x, p):
    return float(np.sum(np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP))))


# (name, function, minimum sequence length) in the fixed registry order.
_REGISTRY = [
    ("IEMG", _iemg, 1),
    ("MAV", _mav, 1),
    ("SSI", _ssi, 1),
    ("RMS", _rms, 1),
    ("VAR", _var, 2),
    ("MYOP", _myop, 1),
    ("WL", _wl, 2),
    ("DAMV", _damv, 2),
    ("M2", _m2, 2),
    ("DVARV", _dvarv, 3),
    ("DASDV", _dasdv, 2),
    ("MAX", _max, 1),
    ("MIN", _min, 1),
    ("WAMP", _wamp, 2),
    ("IASD", _iasd, 3),
    ("IATD", _iatd, 4),
    ("IEAV", _ieav, 1),
    ("IALV", _ialv, 1),
    ("IE", _ie, 1),
]

FEATURE_NAMES = tuple(name for name, _, _ in _REGISTRY)
_BY_NAME = {name: (fn, min_len) for name, fn, min_len in _REGISTRY}


def compute_feature(kind: str, x, params: FeatureParams | None = None) -> float:
    """Evaluate one named feature on a coefficient sequence."""
    if kind not in _BY_NAME:
        raise FeatureError(f"unknown feature {kind!r}; known: {', '.join(FEATURE_NAMES)}")
    params = params or FeatureParams()
    x = np.asarray(x, dtype=np.float64)
    fn, min_len = _BY_NAME[kind]
    if x.ndim != 1 or x.size < min_len:
        raise FeatureError(
            f"{kind} needs a 1-D sequence of at least {min_len} samples, got length {x.size}"
        )
    value = fn(x, params)
    if not np.isfinite(value):
        raise FeatureError(f"{kind} produced a non-finite value on the given sequence")
    return value


def layer_names(levels: int) -> list[str]:
    """Coefficient layer order used throughout: cD1..cDL then cA_L."""
    return [f"cD{k}" for k in range(1, levels + 1)] + [f"cA{levels}"]


def feature_vector_length(channels: int, levels: int) -> int:
    return len(FEATURE_NAMES) * (levels + 1) * channels


def vector_labels(channels: int, levels: int) -> list[str]:
    """Column names matching the feature vector layout, e.g. ch0_cD1_IEMG."""
    return [
        f"ch{c}_{layer}_{name}"
        for c in range(channels)
        for layer in layer_names(levels)
        for name in FEATURE_NAMES
    ]


def wavelet_feature_vector(
    window: Window, levels: int = 2, params: FeatureParams | None = None
) -> FeatureVector:
    """Decompose each channel and apply the full bank to every layer.

    Layout: channel-major, then layer (cD1..cDL, cA_L), then registry order.
    """
    params = params or FeatureParams()
    values = np.empty(feature_vector_length(window.channels, levels))
    i = 0
    for ch in range(window.channels):
        layers = decompose(window.samples[ch], levels).layers()
        for layer in layers:
            for name, fn, min_len in _REGISTRY:
                if layer.size < min_len:
                    raise FeatureError(
                        f"{name} needs at least {min_len} coefficients, layer has {layer.size}"
                    )
                values[i] = fn(layer, params)
                i += 1
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values))[0]
        raise FeatureError(
            f"non-finite feature value at position {bad} "
            f"({vector_labels(window.channels, levels)[bad]})"
        )
    return FeatureVector(values=values, label=window.label, start_index=window.start_index)


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension z-score parameters fitted on training features."""

    mean: np.ndarray
    std: np.ndarray

    STD_FLOOR = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise FeatureError("normalizer mean/std must be 1-D arrays of equal length")
        if np.any(self.std < self.STD_FLOOR):
            raise FeatureError(f"normalizer std entries must be >= {self.STD_FLOOR}")

    @classmethod
    def identity(cls, dim: int) -> "Normalizer":
        return cls(mean=np.zeros(dim), std=np.ones(dim))


def fit_normalizer(train_features: list[FeatureVector]) -> Normalizer:
    """Per-dimension mean/std over the training set, std clamped to a floor."""
    if not train_features:
        raise FeatureError("cannot fit a normalizer on an empty training set")
    mat = np.stack([fv.values for fv in train_features])
    if mat.ndim != 2:
        raise FeatureError("training feature vectors must share one length")
    mean = mat.mean(axis=0)
    # An exactly constant dimension must z-score to exactly 0, so pin its
    # mean to the constant instead of the accumulated np.mean.
    constant = mat.max(axis=0) == mat.min(axis=0)
    mean[constant] = mat[0, constant]
    std = mat.std(axis=0)
    return Normalizer(mean=mean, std=np.maximum(std, Normalizer.STD_FLOOR))


def apply_normalizer(n: Normalizer, fv: FeatureVector) -> FeatureVector:
    """Return a z-scored copy of ``fv``; dimensions must match the fit."""
    if fv.values.shape != n.mean.shape:
        raise FeatureError(
            f"feature vector has {fv.values.size} dimensions, normalizer expects {n.mean.size}"
        )
    return FeatureVector(
        values=(fv.values - n.mean) / n.std, label=fv.label, start_index=fv.start_index
    )
