"""Hot loops: minimize d -> W_n(T, d, m) for many periodogram rows.

With ``x_j = 2 log(j/m)`` the objective is

    W(d) = log((1/m) sum_j exp(d x_j) I_j) - d mean(x),

a log-sum-exp of affine functions minus a linear term, hence convex. Its
derivative ``W'(d) = <x>_d - mean(x)`` is increasing, so the minimizer over
[0, D_MAX] is 0 when ``W'(0) >= 0``, D_MAX when ``W'(D_MAX) <= 0`` and the
root of ``W'`` otherwise. The root is found by Newton steps (``W''`` is the
weighted variance of x) safeguarded by bisection.

Two interchangeable implementations share this contract:

* numba ``@njit`` kernels that walk one segment at a time (GIL released);
* a pure-numpy path that iterates on all rows at once.

The environment flag ``WHITTLECP_DISABLE_NUMBA`` selects numpy by default;
every entry point also takes an explicit ``backend``.
"""
from __future__ import annotations

import math

import numpy as np

from . import defaults
from ._backend import HAVE_NUMBA, resolve_backend
from .spectral import log_frequency_ratios

NEWTON_TOL = 1e-10
MAX_ITER = 100
_CHUNK = 4096


class FitTables:
    """Per-bandwidth constants reused for every segment."""

    def __init__(self, m, d_max=defaults.D_MAX):
        self.m = m
        self.x = np.ascontiguousarray(2.0 * log_frequency_ratios(m))
        self.xbar = float(np.mean(self.x))
        self.d_max = float(d_max)


_TABLES = {}


def fit_tables(m):
    tab = _TABLES.get(m)
    if tab is None:
        tab = _TABLES[m] = FitTables(m)
    return tab


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------

def _moments_np(I, d, x):
    E = np.exp(d[:, None] * x[None, :]) * I
    s0 = E.sum(axis=1)
    s1 = E @ x
    s2 = E @ (x * x)
    return s0, s1, s2


def fit_rows_numpy(I, tab):
    I = np.atleast_2d(np.asarray(I, dtype=float))
    p, m = I.shape
    x, xbar, d_max = tab.x, tab.xbar, tab.d_max
    d_hat = np.full(p, np.nan)
    w_min = np.full(p, np.inf)
    s0 = I.sum(axis=1)
    ok = s0 > 0.0
    if not ok.any():
        return d_hat, w_min
    lower = np.zeros(p, dtype=bool)
    lower[ok] = (I[ok] @ x) / s0[ok] - xbar >= 0.0
    d_hat[lower] = 0.0
    w_min[lower] = np.log(s0[lower] / m)

    rest = np.flatnonzero(ok & ~lower)
    if rest.size:
        Ir = I[rest]
        dm = np.full(rest.size, d_max)
        t0, t1, _ = _moments_np(Ir, dm, x)
        upper = t1 / t0 - xbar <= 0.0
        d_hat[rest[upper]] = d_max
        w_min[rest[upper]] = np.log(t0[upper] / m) - d_max * xbar
        inner = rest[~upper]
        if inner.size:
            d_hat[inner], w_min[inner] = _newton_np(I[inner], tab)
    return d_hat, w_min


def _newton_np(I, tab):
    x, xbar = tab.x, tab.xbar
    m = I.shape[1]
    lo = np.zeros(len(I))
    hi = np.full(len(I), tab.d_max)
    d = 0.5 * (lo + hi)
    active = np.arange(len(I))
    for _ in range(MAX_ITER):
        if active.size == 0:
            break
        da = d[active]
        s0, s1, s2 = _moments_np(I[active], da, x)
        mean = s1 / s0
        g = mean - xbar
        h = s2 / s0 - mean * mean
        pos = g > 0.0
        hi[active] = np.where(pos, da, hi[active])
        lo[active] = np.where(pos, lo[active], da)
        with np.errstate(divide="ignore", invalid="ignore"):
            dn = da - g / h
        bad = ~((dn > lo[active]) & (dn < hi[active])) | ~(h > 0.0)
        dn = np.where(bad, 0.5 * (lo[active] + hi[active]), dn)
        done = (np.abs(dn - da) < NEWTON_TOL) | (g == 0.0)
        d[active] = np.where(g == 0.0, da, dn)
        active = active[~done]
    s0, _, _ = _moments_np(I, d, x)
    return d, np.log(s0 / m) - d * xbar


def fit_pairs_numpy(P_nodes, nodes, ia, ib, tab):
    """Fit every segment (nodes[ia[k]], nodes[ib[k]]] from node-sampled prefix sums."""
    npairs = len(ia)
    d_hat = np.empty(npairs)
    w_min = np.empty(npairs)
    for s in range(0, npairs, _CHUNK):
        i, k = ia[s:s + _CHUNK], ib[s:s + _CHUNK]
        z = P_nodes[k] - P_nodes[i]
        lengths = (nodes[k] - nodes[i]).astype(float)
        I = (z.real ** 2 + z.imag ** 2) / (2.0 * np.pi * lengths[:, None])
        d_hat[s:s + _CHUNK], w_min[s:s + _CHUNK] = fit_rows_numpy(I, tab)
    return d_hat, w_min


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _moments_nb(I, d, x):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for j in range(I.shape[0]):
            e = math.exp(d * x[j]) * I[j]
            s0 += e
            s1 += e * x[j]
            s2 += e * x[j] * x[j]
        return s0, s1, s2

    @njit(cache=True, nogil=True)
    def _fit_row_nb(I, x, xbar, d_max, d0):
        m = I.shape[0]
        s0 = 0.0
        s1 = 0.0
        for j in range(m):
            s0 += I[j]
            s1 += I[j] * x[j]
        if not s0 > 0.0:
            return np.nan, np.inf
        if s1 / s0 - xbar >= 0.0:
            return 0.0, math.log(s0 / m)
        lo = 0.0
        hi = d_max
        # W'(d_max) is only evaluated if an iterate tries to leave the interval.
        hi_known = False
        d = d0 if lo < d0 < hi else 0.5 * (lo + hi)
        for _ in range(MAX_ITER):
            s0, s1, s2 = _moments_nb(I, d, x)
            mean = s1 / s0
            g = mean - xbar
            if g == 0.0:
                break
            h = s2 / s0 - mean * mean
            if g > 0.0:
                hi = d
                hi_known = True
            else:
                lo = d
            dn = d - g / h if h > 0.0 else hi
            if not (lo < dn < hi):
                if dn >= hi and not hi_known:
                    t0, t1, _ = _moments_nb(I, d_max, x)
                    if t1 / t0 - xbar <= 0.0:
                        return d_max, math.log(t0 / m) - d_max * xbar
                    hi_known = True
                dn = 0.5 * (lo + hi)
            if abs(dn - d) < NEWTON_TOL:
                break
            d = dn
        return d, math.log(s0 / m) - d * xbar

    @njit(cache=True, nogil=True)
    def _fit_rows_nb(I, x, xbar, d_max, d_out, w_out):
        for p in range(I.shape[0]):
            d_out[p], w_out[p] = _fit_row_nb(I[p], x, xbar, d_max, -1.0)

    @njit(cache=True, nogil=True)
    def _fit_pairs_nb(Pre, Pim, nodes, ia, ib, x, xbar, d_max, d_out, w_out):
        m = Pre.shape[1]
        I = np.empty(m)
        two_pi = 2.0 * np.pi
        # Consecutive pairs share a left end and differ by one grid step: warm start.
        d_prev = -1.0
        for p in range(ia.shape[0]):
            i = ia[p]
            k = ib[p]
            denom = two_pi * (nodes[k] - nodes[i])
            for j in range(m):
                dr = Pre[k, j] - Pre[i, j]
                di = Pim[k, j] - Pim[i, j]
                I[j] = (dr * dr + di * di) / denom
            d_out[p], w_out[p] = _fit_row_nb(I, x, xbar, d_max, d_prev)
            d_prev = d_out[p]


def fit_rows_numba(I, tab):
    I = np.ascontiguousarray(np.atleast_2d(np.asarray(I, dtype=float)))
    d_hat = np.empty(I.shape[0])
    w_min = np.empty(I.shape[0])
    _fit_rows_nb(I, tab.x, tab.xbar, tab.d_max, d_hat, w_min)
    return d_hat, w_min


def fit_pairs_numba(P_nodes, nodes, ia, ib, tab):
    d_hat = np.empty(len(ia))
    w_min = np.empty(len(ia))
    _fit_pairs_nb(
        np.ascontiguousarray(P_nodes.real), np.ascontiguousarray(P_nodes.imag),
        nodes, ia, ib, tab.x, tab.xbar, tab.d_max, d_hat, w_min,
    )
    return d_hat, w_min


def fit_rows(I, m=None, backend=None):
    """Minimize W_n over [0, D_MAX] for each row of periodogram ordinates.

    Returns ``(d_hat, w_min)``; rows whose ordinates all vanish come back as
    ``(nan, inf)``.
    """
    I = np.atleast_2d(np.asarray(I, dtype=float))
    tab = fit_tables(I.shape[1] if m is None else m)
    if resolve_backend(backend) == "numba":
        return fit_rows_numba(I, tab)
    return fit_rows_numpy(I, tab)


def fit_pairs(P_nodes, nodes, ia, ib, backend=None):
    """Minimize W_n on every segment between node pairs ``(ia[k], ib[k])``.

    ``P_nodes`` is the prefix table sampled at ``nodes``, shape ``(N, m)``.
    """
    tab = fit_tables(P_nodes.shape[1])
    nodes = np.asarray(nodes, dtype=np.int64)
    ia = np.asarray(ia, dtype=np.int64)
    ib = np.asarray(ib, dtype=np.int64)
    if resolve_backend(backend) == "numba":
        return fit_pairs_numba(P_nodes, nodes, ia, ib, tab)
    return fit_pairs_numpy(P_nodes, nodes, ia, ib, tab)
