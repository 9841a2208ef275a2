"""Segment periodograms at the global Fourier frequencies.

Frequencies are always ``2*pi*j/n`` with ``n`` the full series length, so a
single table of cumulative sums ``P_j(t) = sum_{k<=t} X_k exp(-i k lambda_j)``
gives the DFT of any contiguous segment as a difference of two entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DataError, DegenerateSegmentError, DomainError


@dataclass(frozen=True)
class FrequencyGrid:
    n: int
    m: int

    def __post_init__(self):
        if not 1 <= self.m < self.n / 2:
            raise DomainError(f"bandwidth m={self.m} must satisfy 1 <= m < n/2 with n={self.n}")

    @property
    def lambdas(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(1, self.m + 1) / self.n


@dataclass(frozen=True)
class SegmentWindow:
    """The index set {a+1, ..., b} (1-based), i.e. ``x[a:b]`` in Python."""

    a: int
    b: int

    def __post_init__(self):
        if not 0 <= self.a < self.b:
            raise DomainError(f"window ({self.a}, {self.b}] is empty or negative")

    def __len__(self):
        return self.b - self.a

    def check(self, n):
        if self.b > n:
            raise DomainError(f"window ({self.a}, {self.b}] exceeds series length {n}")
        return self


@dataclass(frozen=True, eq=False)
class SpectralPrefix:
    """Cumulative complex sums; ``cumsums[j-1, t]`` is P_j(t) for t = 0..n."""

    grid: FrequencyGrid
    cumsums: np.ndarray

    @property
    def n(self):
        return self.grid.n

    @property
    def m(self):
        return self.grid.m

    def segment_dft(self, w: SegmentWindow) -> np.ndarray:
        w.check(self.n)
        return self.cumsums[:, w.b] - self.cumsums[:, w.a]

    def periodogram(self, w: SegmentWindow) -> np.ndarray:
        """I_T(lambda_j) for j = 1..m."""
        z = self.segment_dft(w)
        return (z.real ** 2 + z.imag ** 2) / (2.0 * np.pi * len(w))


def as_series(x) -> np.ndarray:
    values = getattr(x, "values", x)
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DataError("series must be one-dimensional")
    if arr.size == 0:
        raise DataError("empty series")
    if not np.all(np.isfinite(arr)):
        raise DataError("series contains non-finite values")
    return arr


def build_prefix(x, m: int) -> SpectralPrefix:
    """Tabulate P_j(t) for j = 1..m and t = 0..n in O(n m)."""
    x = as_series(x)
    n = len(x)
    grid = FrequencyGrid(n, int(m))
    t = np.arange(1, n + 1, dtype=np.int64)
    j = np.arange(1, grid.m + 1, dtype=np.int64)
    # Reduce j*t modulo n before scaling so the phase stays exact for large t.
    phase = (np.outer(j, t) % n) * (2.0 * np.pi / n)
    terms = np.exp(-1j * phase)
    terms *= x
    cums = np.zeros((grid.m, n + 1), dtype=complex)
    np.cumsum(terms, axis=1, out=cums[:, 1:])
    cums.setflags(write=False)
    return SpectralPrefix(grid, cums)


def periodogram_segment(prefix: SpectralPrefix, w: SegmentWindow, j: int) -> float:
    """I_T(lambda_j) = |P_j(b) - P_j(a)|^2 / (2 pi |T|)."""
    if not 1 <= j <= prefix.m:
        raise DomainError(f"frequency index j={j} outside 1..{prefix.m}")
    w.check(prefix.n)
    z = prefix.cumsums[j - 1, w.b] - prefix.cumsums[j - 1, w.a]
    return float((z.real ** 2 + z.imag ** 2) / (2.0 * np.pi * len(w)))


@lru_cache(maxsize=64)
def log_frequency_ratios(m: int) -> np.ndarray:
    """log(j/m) for j = 1..m (read-only)."""
    out = np.log(np.arange(1, m + 1) / m)
    out.setflags(write=False)
    return out


def log_mean_ell(m: int) -> float:
    """(1/m) sum_{k=1}^m log(k/m), which lies in [-1, 0]."""
    if m < 1:
        raise DomainError("m must be >= 1")
    return float(np.mean(log_frequency_ratios(m)))


def weighted_mean(I: np.ndarray, d: float) -> float:
    m = len(I)
    weights = np.exp(2.0 * d * log_frequency_ratios(m))
    return float(weights @ I / m)


def s_n(prefix: SpectralPrefix, w: SegmentWindow, d: float) -> float:
    """S_n(T, d, m) = (1/m) sum_j (j/m)^{2d} I_T(lambda_j)."""
    s = weighted_mean(prefix.periodogram(w), d)
    if not s > 0.0:
        raise DegenerateSegmentError(f"all periodogram ordinates vanish on ({w.a}, {w.b}]")
    return s


def w_n(prefix: SpectralPrefix, w: SegmentWindow, d: float) -> float:
    """Local Whittle objective W_n(T, d, m) = log S_n - 2 d ell(m)."""
    return math.log(s_n(prefix, w, d)) - 2.0 * d * log_mean_ell(prefix.m)
