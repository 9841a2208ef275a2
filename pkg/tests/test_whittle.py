import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from whittlecp import defaults
from whittlecp._kernels import fit_rows
from whittlecp.errors import DegenerateSegmentError
from whittlecp.spectral import SegmentWindow, build_prefix, w_n
from whittlecp.synthesis import ProcessSpec, synthesize
from whittlecp.whittle import estimate_d, local_whittle

BACKENDS = ["numba", "numpy"]


def dense_grid_min(I, points=20001):
    """Brute-force minimum of W over an equispaced d grid."""
    m = len(I)
    x = 2 * np.log(np.arange(1, m + 1) / m)
    ds = np.linspace(0, defaults.D_MAX, points)
    vals = np.log(np.exp(np.outer(ds, x)) @ I / m) - ds * x.mean()
    k = int(np.argmin(vals))
    return ds[k], vals[k]


@pytest.mark.parametrize("backend", BACKENDS)
def test_matches_dense_grid(backend):
    rng = np.random.default_rng(0)
    for _ in range(40):
        m = int(rng.integers(3, 120))
        slope = rng.uniform(-1.5, 0.5)
        I = rng.exponential(size=m) * (np.arange(1, m + 1) / m) ** slope
        d, w = fit_rows(I, backend=backend)
        gd, gw = dense_grid_min(I)
        assert w[0] <= gw + 1e-12
        assert abs(d[0] - gd) <= defaults.D_MAX / 20000 + 1e-6


@pytest.mark.parametrize("backend", BACKENDS)
def test_boundary_solutions(backend):
    m = 30
    x = np.arange(1, m + 1) / m
    d, _ = fit_rows(x ** 2, backend=backend)       # rising spectrum: W' > 0 at 0
    assert d[0] == 0.0
    d, _ = fit_rows(x ** -3.0, backend=backend)    # steep pole: W' < 0 at D_MAX
    assert d[0] == defaults.D_MAX


@pytest.mark.parametrize("backend", BACKENDS)
def test_degenerate_row(backend):
    d, w = fit_rows(np.zeros((2, 7)), backend=backend)
    assert np.all(np.isnan(d)) and np.all(np.isinf(w))


def test_minimum_value_is_objective_at_estimate():
    x = synthesize(ProcessSpec.single("farima00", (0.3,), (), n=1000), 3).values
    pre = build_prefix(x, defaults.bandwidth(1000))
    w = SegmentWindow(100, 900)
    fit = estimate_d(pre, w)
    assert fit.w_min == pytest.approx(w_n(pre, w, fit.d_hat), rel=1e-12)
    for d in (fit.d_hat - 1e-3, fit.d_hat + 1e-3):
        assert w_n(pre, w, d) >= fit.w_min


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.01, 1.0, 7.0, 100.0]))
def test_scale_invariance(seed, c):
    x = np.random.default_rng(seed).standard_normal(400).cumsum() * 0.1 + np.random.default_rng(seed).standard_normal(400)
    a = local_whittle(x).d_hat
    b = local_whittle(c * x).d_hat
    assert b == pytest.approx(a, abs=1e-9)


def test_degenerate_segment_raises():
    pre = build_prefix(np.r_[np.zeros(100), np.ones(100)], 10)
    with pytest.raises(DegenerateSegmentError):
        estimate_d(pre, SegmentWindow(0, 100))


def test_boundary_flag():
    x = np.random.default_rng(0).standard_normal(2000)
    over = np.diff(x, prepend=0.0)  # spectrum vanishing at 0: estimate pinned at d = 0
    assert local_whittle(over).at_boundary
    assert local_whittle(over).d_hat == 0.0
    inner = synthesize(ProcessSpec.single("farima00", (0.25,), (), n=2000), 0).values
    assert not local_whittle(inner).at_boundary


def test_white_noise_estimates_near_zero():
    est = [local_whittle(np.random.default_rng(s).standard_normal(2000)).d_hat for s in range(30)]
    assert abs(np.mean(est)) < 0.05


def test_farima_estimates_within_three_se():
    # sqrt(m) (d_hat - d) is asymptotically N(0, 1/4)
    n, d = 5000, 0.4
    m = defaults.bandwidth(n)
    spec = ProcessSpec.single("farima00", (d,), (), n=n)
    hits = sum(abs(local_whittle(synthesize(spec, s).values).d_hat - d) <= 3 / (2 * math.sqrt(m))
               for s in range(100))
    assert hits >= 99
