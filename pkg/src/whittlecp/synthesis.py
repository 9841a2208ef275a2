"""Piecewise long-memory linear processes driven by one innovation stream.

Each regime is a causal linear filter ``X_t = sum_j a_j eps_{t-j}`` whose
weights depend on the regime; all regimes share the same innovations, so
neighbouring regimes stay dependent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
from scipy import signal

from . import defaults
from .errors import DomainError

FAMILIES = ("farima00", "farima11", "classL")
INNOVATIONS = ("normal", "uniform")


@dataclass(frozen=True)
class CoefficientSequence:
    """Truncated MA(inf) weights a_0..a_M of one regime."""

    d: float
    weights: np.ndarray
    family: str = "farima00"

    @property
    def truncation(self) -> int:
        return len(self.weights) - 1


def _check_d(d):
    if not (0.0 <= d < 0.5) or not math.isfinite(d):
        raise DomainError(f"memory parameter d={d!r} outside [0, 0.5)")


def _check_m(M):
    if M < 0:
        raise DomainError(f"truncation M={M!r} must be >= 0")


def farima00_coeffs(d: float, M: int) -> CoefficientSequence:
    """Weights of (1 - B)^{-d}: a_0 = 1, a_j = a_{j-1} (j - 1 + d) / j."""
    _check_d(d)
    _check_m(M)
    j = np.arange(1, M + 1, dtype=float)
    w = np.empty(M + 1)
    w[0] = 1.0
    w[1:] = np.cumprod((j - 1.0 + d) / j)
    return CoefficientSequence(d, w, "farima00")


def farima11_coeffs(d: float, psi: float, theta: float, M: int) -> CoefficientSequence:
    """Weights of (1 + theta B) / (1 - psi B) (1 - B)^{-d}.

    The ARMA(1,1) impulse response is h_0 = 1, h_j = psi^{j-1} (psi + theta);
    the result is the FARIMA(0,d,0) weights filtered by it.
    """
    if not abs(psi) < 1.0:
        raise DomainError(f"AR coefficient psi={psi!r} must satisfy |psi| < 1")
    base = farima00_coeffs(d, M).weights
    w = signal.lfilter([1.0, theta], [1.0, -psi], base)
    return CoefficientSequence(d, w, "farima11")


def classL_coeffs(d: float, M: int) -> CoefficientSequence:
    """a_k = (k+1)^{d-1} + (k+1)^{d-2}, a member of L(d, 1, 1)."""
    _check_d(d)
    _check_m(M)
    k1 = np.arange(1, M + 2, dtype=float)
    return CoefficientSequence(d, k1 ** (d - 1.0) + k1 ** (d - 2.0), "classL")


@dataclass(frozen=True)
class Regime:
    family: str
    d: float
    psi: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        _check_d(self.d)
        if self.family == "farima11" and not abs(self.psi) < 1.0:
            raise DomainError(f"AR coefficient psi={self.psi!r} must satisfy |psi| < 1")

    def coeffs(self, M: int) -> CoefficientSequence:
        return _cached_coeffs(self.family, float(self.d), float(self.psi), float(self.theta), int(M))


@lru_cache(maxsize=32)
def _cached_coeffs(family, d, psi, theta, M):
    if family == "farima00":
        cs = farima00_coeffs(d, M)
    elif family == "farima11":
        cs = farima11_coeffs(d, psi, theta, M)
    else:
        cs = classL_coeffs(d, M)
    cs.weights.setflags(write=False)
    return cs


@dataclass(frozen=True)
class ProcessSpec:
    """Regimes, relative change times and innovation law of a trajectory.

    ``truncation`` defaults to ``10 * n`` weights per filter.
    """

    regimes: tuple
    taus: tuple
    n: int
    innovation: str = "normal"
    truncation: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "regimes", tuple(self.regimes))
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        if self.n < 1:
            raise DomainError(f"series length n={self.n!r} must be >= 1")
        if len(self.regimes) != len(self.taus) + 1:
            raise DomainError("need exactly one more regime than change times")
        prev = 0.0
        for t in self.taus:
            if not prev < t < 1.0:
                raise DomainError(f"change times must satisfy 0 < tau_1 < ... < 1, got {self.taus}")
            prev = t
        if self.innovation not in INNOVATIONS:
            raise DomainError(f"unknown innovation law {self.innovation!r}")
        if self.truncation is not None and self.truncation < 0:
            raise DomainError("truncation must be >= 0")

    @classmethod
    def single(cls, family, ds, taus=(), n=1000, psi=0.0, theta=0.0, **kw):
        """Spec where every regime uses ``family`` and differs only in d."""
        return cls(tuple(Regime(family, d, psi, theta) for d in ds), tuple(taus), n, **kw)

    @property
    def n_changes(self) -> int:
        return len(self.taus)

    @property
    def change_indices(self) -> tuple:
        """t_i = floor(n tau_i); regime i covers samples t_{i-1}+1 .. t_i."""
        return tuple(int(math.floor(self.n * t)) for t in self.taus)

    @property
    def ds(self) -> tuple:
        return tuple(r.d for r in self.regimes)

    @property
    def M(self) -> int:
        return defaults.truncation(self.n) if self.truncation is None else self.truncation

    def to_dict(self) -> dict:
        return {
            "regimes": [asdict(r) for r in self.regimes],
            "taus": list(self.taus),
            "n": self.n,
            "innovation": self.innovation,
            "truncation": self.truncation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessSpec":
        return cls(
            tuple(Regime(**r) for r in data["regimes"]),
            tuple(data.get("taus", ())),
            int(data["n"]),
            data.get("innovation", "normal"),
            data.get("truncation"),
        )


@dataclass
class Trajectory:
    values: np.ndarray
    spec: ProcessSpec | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)


def draw_innovations(rng: np.random.Generator, size: int, law: str = "normal") -> np.ndarray:
    """Zero-mean, unit-variance iid draws."""
    if law == "normal":
        return rng.standard_normal(size)
    if law == "uniform":
        s = math.sqrt(3.0)
        return rng.uniform(-s, s, size)
    raise DomainError(f"unknown innovation law {law!r}")


def filter_innovations(eps: np.ndarray, weights: np.ndarray, n: int, method: str = "fft") -> np.ndarray:
    """Return X_1..X_n with X_t = sum_{j<=M} a_j eps_{t-j}.

    ``eps`` holds eps_{1-M}..eps_n, i.e. ``len(eps) == n + M``.
    """
    M = len(weights) - 1
    if len(eps) != n + M:
        raise ValueError("innovation buffer must have length n + M")
    if method == "fft":
        return signal.fftconvolve(eps, weights, mode="valid")
    if method == "direct":
        return np.convolve(eps, weights, mode="valid")
    raise ValueError(f"unknown convolution method {method!r}")


def synthesize(spec: ProcessSpec, seed: int, method: str = "fft") -> Trajectory:
    """Draw one trajectory of ``spec`` deterministically from ``seed``."""
    n, M = spec.n, spec.M
    rng = np.random.default_rng(seed)
    eps = draw_innovations(rng, n + M, spec.innovation)
    x = np.empty(n)
    bounds = (0,) + spec.change_indices + (n,)
    filtered = {}
    for i, regime in enumerate(spec.regimes):
        lo, hi = bounds[i], bounds[i + 1]
        if hi <= lo:
            continue
        # Full-length filtering per distinct regime keeps results independent of the split.
        if regime not in filtered:
            filtered[regime] = filter_innovations(eps, regime.coeffs(M).weights, n, method)
        x[lo:hi] = filtered[regime][lo:hi]
    return Trajectory(x, spec, seed)


def theoretical_acf(coeffs: CoefficientSequence, maxlag: int) -> np.ndarray:
    """Autocovariances r(k) = sum_j a_j a_{j+k} of the truncated filter, k = 0..maxlag."""
    a = np.asarray(coeffs.weights, dtype=float)
    M = len(a) - 1
    if maxlag < 0 or 2 * maxlag > M:
        raise DomainError(f"maxlag={maxlag} must lie in [0, M/2] with M={M}")
    if M < 256:
        return np.array([a[: M + 1 - k] @ a[k:] for k in range(maxlag + 1)])
    size = 1 << int(math.ceil(math.log2(2 * (M + 1))))
    fa = np.fft.rfft(a, size)
    full = np.fft.irfft(fa * np.conj(fa), size)
    return full[: maxlag + 1]
