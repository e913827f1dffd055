"""Multilevel discrete wavelet decomposition via quadrature-mirror filter pairs.

Analysis convention: output index k reads input offset 2k (correlate, then
keep every second sample), so a db1 transform of an even-length signal needs
no boundary extension and is bit-reproducible. Coefficients are stored
finest-to-coarsest: details cD1..cDL followed by the final approximation cA_L.

Only the db1 (Haar) pair ships; ``FilterPair`` accepts any orthonormal QMF
pair should longer Daubechies filters be needed later.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DwtError

__all__ = ["FilterPair", "Decomposition", "db1_filters", "dwt_level", "decompose", "reconstruct"]


@dataclass(frozen=True)
class FilterPair:
    """Low-pass / high-pass analysis pair related by the QMF condition."""

    lowpass: np.ndarray
    highpass: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lowpass, dtype=np.float64)
        hi = np.asarray(self.highpass, dtype=np.float64)
        object.__setattr__(self, "lowpass", lo)
        object.__setattr__(self, "highpass", hi)
        if lo.ndim != 1 or hi.ndim != 1 or lo.size != hi.size:
            raise DwtError("filter pair must be two 1-D sequences of equal length")
        if lo.size == 0 or lo.size % 2 != 0:
            raise DwtError(f"filter length must be even and positive, got {lo.size}")
        # highpass[k] = (-1)^k * lowpass[L-1-k]
        signs = (-1.0) ** np.arange(lo.size)
        if not np.allclose(hi, signs * lo[::-1], rtol=0.0, atol=1e-12):
            raise DwtError("highpass is not the quadrature mirror of lowpass")

    def __len__(self) -> int:
        return int(self.lowpass.size)


@dataclass(frozen=True)
class Decomposition:
    """Detail coefficient layers cD1..cDL (finest first) plus the final cA_L."""

    details: list[np.ndarray]
    approx: np.ndarray
    levels: int

    def layers(self) -> list[np.ndarray]:
        """All coefficient layers in the fixed feature order (cD1, .., cDL, cA_L)."""
        return [*self.details, self.approx]

    def energy(self) -> float:
        return float(sum(np.dot(c, c) for c in self.layers()))


def db1_filters() -> FilterPair:
    """The Haar pair: lowpass [1/sqrt2, 1/sqrt2], highpass [1/sqrt2, -1/sqrt2]."""
    s = 1.0 / np.sqrt(2.0)
    return FilterPair(lowpass=np.array([s, s]), highpass=np.array([s, -s]))


def dwt_level(x, filters: FilterPair | None = None) -> tuple[np.ndarray, np.ndarray]:
    """One analysis level: correlate with each filter and downsample by 2.

    approx[k] = sum_j lowpass[j] * x[2k+j], detail[k] likewise with highpass.
    """
    if filters is None:
        filters = db1_filters()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DwtError("input must be a 1-D sample sequence")
    if x.size < len(filters) or x.size % 2 != 0:
        raise DwtError(f"input length must be even and >= {len(filters)}, got {x.size}")
    approx = np.correlate(x, filters.lowpass, mode="valid")[::2]
    detail = np.correlate(x, filters.highpass, mode="valid")[::2]
    return approx, detail


def decompose(x, levels: int, filters: FilterPair | None = None) -> Decomposition:
    """Iterate ``dwt_level`` on the approximation branch ``levels`` times."""
    if filters is None:
        filters = db1_filters()
    x = np.asarray(x, dtype=np.float64)
    if levels < 1:
        raise DwtError(f"levels must be >= 1, got {levels}")
    divisor = 2**levels
    if x.ndim != 1 or x.size == 0 or x.size % divisor != 0:
        raise DwtError(
            f"input length {x.size} is not divisible by 2^levels = {divisor}"
        )
    details: list[np.ndarray] = []
    approx = x
    for _ in range(levels):
        approx, detail = dwt_level(approx, filters)
        details.append(detail)
    return Decomposition(details=details, approx=approx, levels=levels)


def _upsample(c: np.ndarray) -> np.ndarray:
    up = np.zeros(2 * c.size)
    up[::2] = c
    return up


def reconstruct(d: Decomposition, filters: FilterPair | None = None) -> np.ndarray:
    """Inverse transform: upsample by 2, filter with the synthesis pair, sum.

    For an orthonormal analysis pair the synthesis filters are the analysis
    filters themselves under this correlation convention. Serves as the
    perfect-reconstruction oracle; not on the classification hot path.
    """
    if filters is None:
        filters = db1_filters()
    approx = np.asarray(d.approx, dtype=np.float64)
    for detail in reversed(d.details):
        detail = np.asarray(detail, dtype=np.float64)
        if detail.size != approx.size:
            raise DwtError(
                f"level-length mismatch: detail has {detail.size} coefficients, "
                f"approximation branch has {approx.size}"
            )
        n = 2 * approx.size
        approx = (
            np.convolve(_upsample(approx), filters.lowpass)
            + np.convolve(_upsample(detail), filters.highpass)
        )[:n]
    return approx
