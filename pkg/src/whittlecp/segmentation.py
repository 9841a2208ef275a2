"""Optimal segmentation by dynamic programming over a candidate grid.

The contrast of a segmentation with breaks t_1 < ... < t_K is

    C = (1/n) sum_k n_k * min_d W_n(T_k, d, m),

and a number of breaks is chosen by adding ``K * z_n`` (fixed penalty, BIC)
or by calibrating ``z_n`` from the slope of C(K) at large K.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import defaults
from ._backend import default_threads
from ._kernels import fit_pairs
from .errors import DomainError, InfeasibleSegmentationError
from .spectral import SpectralPrefix, as_series, build_prefix


class EmptyGridError(InfeasibleSegmentationError):
    kind = "empty-grid"


@dataclass(frozen=True)
class CandidateGrid:
    n: int
    step: int
    min_seg: int
    candidates: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        """Candidates with the endpoints 0 and n attached."""
        return np.concatenate(([0], self.candidates, [self.n])).astype(np.int64)

    def admissible(self) -> np.ndarray:
        """Boolean (N, N) matrix of node pairs spanning at least ``min_seg`` samples."""
        nodes = self.nodes
        return (nodes[None, :] - nodes[:, None]) >= self.min_seg

    def max_breaks(self) -> int:
        """Largest K for which some admissible K-break segmentation exists."""
        adm = self.admissible()
        reach = adm[:, -1].copy()
        k = 0
        while True:
            nxt = (adm & reach[None, :]).any(axis=1)
            if not nxt[0]:
                return k
            reach = nxt
            k += 1


def build_candidate_grid(n: int, step: int | None = None, min_seg: int | None = None) -> CandidateGrid:
    """Multiples of ``step`` lying in [min_seg, n - min_seg]."""
    step = defaults.step(n) if step is None else int(step)
    min_seg = defaults.min_segment(n) if min_seg is None else int(min_seg)
    if step < 1 or min_seg < 1:
        raise DomainError("step and min_seg must be >= 1")
    if n < 2 * min_seg:
        raise EmptyGridError(f"series of length {n} cannot hold two segments of length {min_seg}")
    first = -(-min_seg // step) * step
    cands = np.arange(first, n - min_seg + 1, step, dtype=np.int64)
    return CandidateGrid(int(n), step, min_seg, cands)


@dataclass(frozen=True, eq=False)
class CostTable:
    """Segment costs between grid nodes.

    ``cost[i, k]`` is ``(b - a) * min_d W_n`` for the segment
    ``(nodes[i], nodes[k]]``; inadmissible or degenerate pairs hold +inf.
    """

    grid: CandidateGrid
    m: int
    cost: np.ndarray
    dmin: np.ndarray
    n_degenerate: int = 0

    @property
    def nodes(self):
        return self.grid.nodes

    @property
    def n(self):
        return self.grid.n

    def lookup(self, a, b):
        nodes = self.nodes
        i, k = np.searchsorted(nodes, [a, b])
        if nodes[i] != a or nodes[k] != b:
            raise KeyError((a, b))
        return self.cost[i, k], self.dmin[i, k]


def build_cost_table(prefix: SpectralPrefix, grid: CandidateGrid, threads: int | None = None,
                     backend=None) -> CostTable:
    """Fit the local Whittle estimator on every admissible node pair."""
    if grid.n != prefix.n:
        raise DomainError("candidate grid and series length disagree")
    nodes = grid.nodes
    N = len(nodes)
    ia, ib = np.nonzero(grid.admissible())
    P_nodes = np.ascontiguousarray(prefix.cumsums[:, nodes].T)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(ia) < 4 * threads:
        d_hat, w_min = fit_pairs(P_nodes, nodes, ia, ib, backend)
    else:
        parts = np.array_split(np.arange(len(ia)), threads)
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(lambda s: fit_pairs(P_nodes, nodes, ia[s], ib[s], backend), parts))
        d_hat = np.concatenate([o[0] for o in out])
        w_min = np.concatenate([o[1] for o in out])
    cost = np.full((N, N), np.inf)
    dmin = np.full((N, N), np.nan)
    cost[ia, ib] = (nodes[ib] - nodes[ia]) * w_min
    dmin[ia, ib] = d_hat
    n_deg = int(np.count_nonzero(~np.isfinite(w_min)))
    cost.setflags(write=False)
    dmin.setflags(write=False)
    return CostTable(grid, prefix.m, cost, dmin, n_deg)


@dataclass(frozen=True)
class SegmentationRow:
    k: int
    breakpoints: tuple | None
    dhats: tuple | None
    contrast: float

    def taus(self, n):
        return None if self.breakpoints is None else tuple(t / n for t in self.breakpoints)


@dataclass(frozen=True)
class Selection:
    rule: str
    k_hat: int
    z_n: float | None = None
    s_hat: float | None = None
    at_boundary: bool = False


@dataclass(frozen=True)
class SegmentationResult:
    n: int
    m: int
    rows: tuple
    selection: Selection | None = None
    meta: dict = field(default_factory=dict)

    @property
    def k_max(self) -> int:
        return self.rows[-1].k

    @property
    def contrasts(self) -> np.ndarray:
        return np.array([r.contrast for r in self.rows])

    def row(self, k: int) -> SegmentationRow:
        return self.rows[k]

    @property
    def selected(self) -> SegmentationRow | None:
        return None if self.selection is None else self.rows[self.selection.k_hat]

    def to_dict(self) -> dict:
        out = {"n": self.n, "m": self.m, "k_max": self.k_max, **self.meta}
        out["contrasts"] = [_json_float(c) for c in self.contrasts]
        out["rows"] = [
            {"K": r.k, "breakpoints": _maybe_list(r.breakpoints), "taus": _maybe_list(r.taus(self.n)),
             "dhats": _maybe_list(r.dhats), "contrast": _json_float(r.contrast)}
            for r in self.rows
        ]
        if self.selection is not None:
            sel, row = self.selection, self.selected
            out.update(
                rule=sel.rule, k_hat=sel.k_hat, z_n=sel.z_n, s_hat=sel.s_hat,
                at_boundary=sel.at_boundary, breakpoints=_maybe_list(row.breakpoints),
                taus=_maybe_list(row.taus(self.n)), dhats=_maybe_list(row.dhats),
            )
        return out


def _maybe_list(t):
    return None if t is None else list(t)


def _json_float(x):
    return float(x) if math.isfinite(x) else None


def dp_segment(costs: CostTable, k_max: int) -> SegmentationResult:
    """Exact minimum of the summed segment costs for every K = 0..k_max.

    The recursion runs right to left (``G_k[i]`` = best cost of covering
    ``(nodes[i], n]`` with k breaks) so that the forward reconstruction can
    take the smallest next breakpoint at each step; exact ties therefore
    resolve to the lexicographically smallest breakpoint vector.
    """
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    feasible = costs.grid.max_breaks()
    if k_max > feasible:
        raise InfeasibleSegmentationError(
            f"candidate grid hosts at most {feasible} breaks, {k_max} requested")
    C = costs.cost
    nodes = costs.nodes
    N = len(nodes)
    G = [C[:, N - 1].copy()]
    arg = [None]
    for _ in range(k_max):
        tot = C + G[-1][None, :]
        j = np.argmin(tot, axis=1)
        G.append(tot[np.arange(N), j])
        arg.append(j)
    rows = []
    for k in range(k_max + 1):
        total = G[k][0]
        if not math.isfinite(total):
            rows.append(SegmentationRow(k, None, None, math.inf))
            continue
        idx = [0]
        for kk in range(k, 0, -1):
            idx.append(int(arg[kk][idx[-1]]))
        idx.append(N - 1)
        bps = tuple(int(nodes[i]) for i in idx[1:-1])
        dh = tuple(float(costs.dmin[idx[s], idx[s + 1]]) for s in range(len(idx) - 1))
        rows.append(SegmentationRow(k, bps, dh, float(total) / costs.n))
    return SegmentationResult(costs.n, costs.m, tuple(rows))


def select_fixed_penalty(result: SegmentationResult, z_n: float) -> int:
    """argmin_K C(K) + K z_n, ties to the smallest K."""
    if z_n < 0 or math.isnan(z_n):
        raise DomainError("penalty z_n must be >= 0")
    C = result.contrasts
    K = np.arange(len(C))
    with np.errstate(invalid="ignore"):
        crit = C + K * z_n if math.isfinite(z_n) else np.where(K == 0, C, np.inf)
    if not np.isfinite(crit).any():
        return 0
    return int(np.argmin(crit))


def select_bic(result: SegmentationResult, n: int | None = None) -> int:
    n = result.n if n is None else n
    return select_fixed_penalty(result, defaults.bic_penalty(n))


class SlopeFit(NamedTuple):
    s_hat: float
    k_hat: int
    at_boundary: bool


def slope_heuristic_select(result: SegmentationResult, fit_range=None) -> SlopeFit:
    """Calibrate the penalty from the linear decay of C(K) at large K.

    ``s_hat`` is minus the least-squares slope of C(K) on ``fit_range``
    (default ``ceil(K_max/2)..K_max``), floored at zero; the selected K
    minimizes ``C(K) + 2 s_hat K``.
    """
    kmax = result.k_max
    ks = np.array(list(defaults.slope_fit_range(kmax) if fit_range is None else fit_range))
    if ks.size and (ks.min() < 0 or ks.max() > kmax):
        raise DomainError(f"fit range {ks.min()}..{ks.max()} outside 0..{kmax}")
    C = result.contrasts
    ks = ks[np.isfinite(C[ks])] if ks.size else ks
    if ks.size < 3:
        raise DomainError("slope heuristic needs at least 3 finite contrasts in the fit range")
    y = C[ks]
    if np.ptp(y) == 0.0:
        warnings.warn("contrast is flat over the fit range; slope heuristic returns K=0",
                      RuntimeWarning, stacklevel=2)
        return SlopeFit(0.0, 0, True)
    slope = np.polyfit(ks.astype(float), y, 1)[0]
    s_hat = max(-float(slope), 0.0)
    k_hat = select_fixed_penalty(result, 2.0 * s_hat)
    return SlopeFit(s_hat, k_hat, k_hat in (0, kmax))


def select(result: SegmentationResult, rule: str = "slope", z_n: float | None = None,
           fit_range=None) -> SegmentationResult:
    """Attach a :class:`Selection` for ``rule`` in {fixed, bic, slope}."""
    if rule == "fixed":
        z = defaults.penalty(result.n) if z_n is None else float(z_n)
        k = select_fixed_penalty(result, z)
        sel = Selection("fixed", k, z_n=z, at_boundary=k in (0, result.k_max))
    elif rule == "bic":
        z = defaults.bic_penalty(result.n)
        k = select_fixed_penalty(result, z)
        sel = Selection("bic", k, z_n=z, at_boundary=k in (0, result.k_max))
    elif rule == "slope":
        fit = slope_heuristic_select(result, fit_range)
        sel = Selection("slope", fit.k_hat, z_n=2.0 * fit.s_hat, s_hat=fit.s_hat,
                        at_boundary=fit.at_boundary)
    else:
        raise DomainError(f"unknown selection rule {rule!r}")
    return SegmentationResult(result.n, result.m, result.rows, sel, dict(result.meta))


def segment(x, m=None, k_max=None, step=None, min_seg=None, threads=None, backend=None,
            prefix=None) -> SegmentationResult:
    """Build prefix sums, cost table and the DP solution for K = 0..k_max.

    Missing knobs take their defaults from :mod:`whittlecp.defaults`.
    """
    if prefix is None:
        x = as_series(x)
        n = len(x)
        m = defaults.bandwidth(n) if m is None else int(m)
        prefix = build_prefix(x, m)
    n = prefix.n
    grid = build_candidate_grid(n, step, min_seg)
    # An explicit k_max must be feasible; the default is clipped to what the grid allows.
    k_max = min(defaults.k_max(n), grid.max_breaks()) if k_max is None else int(k_max)
    table = build_cost_table(prefix, grid, threads=threads, backend=backend)
    res = dp_segment(table, k_max)
    meta = {"step": grid.step, "min_seg": grid.min_seg, "n_degenerate": table.n_degenerate}
    return SegmentationResult(res.n, res.m, res.rows, None, meta)


def detect(x, rule="slope", z_n=None, known_k=None, fit_range=None, **knobs) -> SegmentationResult:
    """Segment ``x`` and select the number of breaks.

    With ``known_k`` the DP stops at that K and the selection is forced to it.
    """
    if known_k is not None:
        knobs.pop("k_max", None)
        res = segment(x, k_max=known_k, **knobs)
        sel = Selection("known", int(known_k))
        return SegmentationResult(res.n, res.m, res.rows, sel, dict(res.meta))
    return select(segment(x, **knobs), rule, z_n=z_n, fit_range=fit_range)
