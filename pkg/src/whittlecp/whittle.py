"""Local Whittle estimation of the memory parameter on one segment."""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import defaults
from ._kernels import fit_rows
from .errors import DegenerateSegmentError
from .spectral import SegmentWindow, SpectralPrefix, build_prefix, as_series


@dataclass(frozen=True)
class WhittleFit:
    d_hat: float
    w_min: float
    at_boundary: bool

    def to_dict(self):
        return {"d_hat": self.d_hat, "w_min": self.w_min, "at_boundary": self.at_boundary}


def estimate_d(prefix: SpectralPrefix, w: SegmentWindow | None = None, backend=None) -> WhittleFit:
    """Minimize W_n(T, d, m) over d in [0, D_MAX].

    The objective is convex in d, so the minimizer is an endpoint when the
    derivative has the same sign at both ends and otherwise the unique root
    of the derivative, found by bisection-safeguarded Newton steps to 1e-10.

    Parameters
    ----------
    prefix : SpectralPrefix
        Prefix sums of the full series.
    w : SegmentWindow, optional
        Segment to fit; the whole series when omitted.
    backend : {"numba", "numpy"}, optional
        Kernel implementation; defaults to the environment setting.

    Raises
    ------
    DegenerateSegmentError
        If every periodogram ordinate of the segment is zero.
    """
    if w is None:
        w = SegmentWindow(0, prefix.n)
    I = prefix.periodogram(w)
    d_hat, w_min = fit_rows(I, backend=backend)
    d, val = float(d_hat[0]), float(w_min[0])
    if not math.isfinite(val):
        raise DegenerateSegmentError(f"all periodogram ordinates vanish on ({w.a}, {w.b}]")
    edge = d < defaults.BOUNDARY_TOL or defaults.D_MAX - d < defaults.BOUNDARY_TOL
    return WhittleFit(d, val, edge)


def local_whittle(x, m: int | None = None, backend=None) -> WhittleFit:
    """Convenience wrapper: local Whittle fit of a whole series."""
    x = as_series(x)
    if m is None:
        m = defaults.bandwidth(len(x))
    return estimate_d(build_prefix(x, m), backend=backend)
