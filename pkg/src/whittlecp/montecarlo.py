"""Replicated experiments: RMSE with K known, recognition rates with K unknown.

Replication ``r`` draws its trajectory from seed ``seed0 + r`` and nothing
else, so tables do not depend on scheduling or thread count.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import defaults
from ._backend import default_threads
from .errors import DomainError, ExclusionLimitError, NumericError
from .segmentation import (
    segment, select_bic, select_fixed_penalty, slope_heuristic_select,
)
from .spectral import SegmentWindow, build_prefix
from .synthesis import ProcessSpec, Regime, synthesize
from .whittle import estimate_d

MODES = ("known-K", "unknown-K")
RULES = ("fixed", "bic", "slope")
MAX_EXCLUDED = 0.01


def rmse(estimates, truth) -> float:
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise DomainError("rmse of an empty sample")
    return float(np.sqrt(np.mean((est - truth) ** 2)))


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of the Monte-Carlo grid.

    ``known_breaks=True`` skips segmentation in known-K mode and fits each
    true regime directly (the oracle-segmentation estimator).
    """

    family: str = "farima00"
    ds: tuple = (0.4,)
    taus: tuple = ()
    n: int = 5000
    reps: int = 500
    seed0: int = 0
    mode: str = "known-K"
    psi: float = -0.7
    theta: float = 0.3
    innovation: str = "normal"
    truncation: int | None = None
    m: int | None = None
    k_max: int | None = None
    step: int | None = None
    min_seg: int | None = None
    z_n: float | None = None
    known_breaks: bool = False
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "ds", tuple(float(d) for d in self.ds))
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        self.spec  # validates regimes and change times

    @property
    def spec(self) -> ProcessSpec:
        regimes = tuple(Regime(self.family, d, self.psi, self.theta) for d in self.ds)
        return ProcessSpec(regimes, self.taus, self.n, self.innovation, self.truncation)

    @property
    def k_true(self) -> int:
        return len(self.taus)

    @property
    def name(self) -> str:
        return self.label or f"{self.family} n={self.n} K*={self.k_true}"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known - {"d"}
        if extra:
            raise DomainError(f"unknown experiment keys: {sorted(extra)}")
        data = dict(data)
        if "d" in data:
            d = data.pop("d")
            data["ds"] = tuple(d) if isinstance(d, (list, tuple)) else (d,)
        return cls(**data)

    def seeds(self):
        return [self.seed0 + r for r in range(self.reps)]


def _knobs(cfg):
    return dict(m=cfg.m, step=cfg.step, min_seg=cfg.min_seg)


def replicate_known_k(cfg: ExperimentConfig, rep: int, backend=None) -> dict:
    """One known-K replication: break times and memory parameters for row K*."""
    seed = cfg.seed0 + rep
    x = synthesize(cfg.spec, seed).values
    m = defaults.bandwidth(cfg.n) if cfg.m is None else cfg.m
    rec = {"rep": rep, "seed": seed}
    try:
        # With K* = 0 the segmentation is trivially the whole series.
        if cfg.known_breaks or cfg.k_true == 0:
            prefix = build_prefix(x, m)
            bounds = (0,) + cfg.spec.change_indices + (cfg.n,)
            t_hat = cfg.spec.change_indices
            d_hat = tuple(estimate_d(prefix, SegmentWindow(bounds[i], bounds[i + 1]), backend).d_hat
                          for i in range(len(bounds) - 1))
        else:
            res = segment(x, k_max=cfg.k_true, backend=backend, threads=1, **_knobs(cfg))
            row = res.row(cfg.k_true)
            if row.breakpoints is None:
                raise NumericError("no finite segmentation")
            t_hat, d_hat = row.breakpoints, row.dhats
    except NumericError as exc:
        rec["excluded"] = str(exc)
        return rec
    for i, t in enumerate(t_hat):
        rec[f"tau{i + 1}"] = t / cfg.n
    for i, d in enumerate(d_hat):
        rec[f"d{i + 1}"] = d
    return rec


def replicate_unknown_k(cfg: ExperimentConfig, rep: int, backend=None) -> dict:
    """One unknown-K replication: K-hat under each of the three rules."""
    seed = cfg.seed0 + rep
    x = synthesize(cfg.spec, seed).values
    rec = {"rep": rep, "seed": seed}
    try:
        res = segment(x, k_max=cfg.k_max, backend=backend, threads=1, **_knobs(cfg))
        z = defaults.penalty(cfg.n) if cfg.z_n is None else cfg.z_n
        rec["fixed"] = select_fixed_penalty(res, z)
        rec["bic"] = select_bic(res)
        fit = slope_heuristic_select(res)
        rec["slope"] = fit.k_hat
        rec["s_hat"] = fit.s_hat
    except (NumericError, DomainError) as exc:
        rec["excluded"] = str(exc)
    return rec


def _run(cfg, fn, threads, backend):
    threads = default_threads() if threads is None else max(1, int(threads))
    reps = range(cfg.reps)
    if threads == 1:
        records = [fn(cfg, r, backend) for r in reps]
    else:
        with ThreadPoolExecutor(threads) as pool:
            records = list(pool.map(lambda r: fn(cfg, r, backend), reps))
    records.sort(key=lambda rec: rec["rep"])
    n_excl = sum("excluded" in rec for rec in records)
    if n_excl > MAX_EXCLUDED * cfg.reps:
        raise ExclusionLimitError(f"{n_excl} of {cfg.reps} replications excluded")
    return records, n_excl


@dataclass
class RmseTable:
    config: ExperimentConfig
    rmse: dict
    n_excluded: int = 0
    records: list = field(default_factory=list)

    def truth(self) -> dict:
        t = {f"tau{i + 1}": tau for i, tau in enumerate(self.config.taus)}
        t.update({f"d{i + 1}": d for i, d in enumerate(self.config.ds)})
        return t


@dataclass
class FrequencyTable:
    config: ExperimentConfig
    freq: dict
    n_excluded: int = 0
    records: list = field(default_factory=list)


def run_known_k(config: ExperimentConfig, threads=None, backend=None) -> RmseTable:
    """RMSE of each change time (as a fraction of n) and memory parameter."""
    if config.mode != "known-K":
        config = replace(config, mode="known-K")
    records, n_excl = _run(config, replicate_known_k, threads, backend)
    kept = [r for r in records if "excluded" not in r]
    table = RmseTable(config, {}, n_excl, records)
    for key, truth in table.truth().items():
        table.rmse[key] = rmse([r[key] for r in kept], truth) if kept else math.nan
    return table


def run_unknown_k(config: ExperimentConfig, threads=None, backend=None) -> FrequencyTable:
    """Frequency of K-hat == K* for the fixed, BIC and slope rules."""
    if config.mode != "unknown-K":
        config = replace(config, mode="unknown-K")
    records, n_excl = _run(config, replicate_unknown_k, threads, backend)
    kept = [r for r in records if "excluded" not in r]
    freq = {rule: (float(np.mean([r[rule] == config.k_true for r in kept])) if kept else math.nan)
            for rule in RULES}
    return FrequencyTable(config, freq, n_excl, records)


def run(config: ExperimentConfig, threads=None, backend=None):
    if config.mode == "known-K":
        return run_known_k(config, threads, backend)
    return run_unknown_k(config, threads, backend)


# --------------------------------------------------------------------------
# reporting
# --------------------------------------------------------------------------

def tables_to_markdown(tables) -> str:
    """Known-K tables become parameter rows; unknown-K tables become rule rows.

    Each experiment is one column, in the order given.
    """
    known = [t for t in tables if isinstance(t, RmseTable)]
    unknown = [t for t in tables if isinstance(t, FrequencyTable)]
    parts = []
    if known:
        parts.append("RMSE of the estimators (number of changes known)\n")
        parts.append(_markdown_block(
            known, lambda t: [(f"K*={t.config.k_true}", k) for k in t.rmse],
            lambda t, key: t.rmse.get(key[1]), ("K*", "parameter"), fmt="{:.3f}"))
    if unknown:
        parts.append("Frequency of recognition of the true number of changes\n")
        parts.append(_markdown_block(
            unknown, lambda t: [(f"K*={t.config.k_true}", r) for r in RULES],
            lambda t, key: t.freq.get(key[1]), ("K*", "rule"), fmt="{:.2f}"))
    return "\n".join(parts)


def _markdown_block(tables, keys_of, value_of, head, fmt):
    row_keys = []
    for t in tables:
        for key in keys_of(t):
            if key not in row_keys:
                row_keys.append(key)
    header = list(head) + [t.config.name for t in tables] + ["excluded"]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for key in row_keys:
        cells = []
        for t in tables:
            v = value_of(t, key) if key[0] == f"K*={t.config.k_true}" else None
            cells.append("" if v is None or (isinstance(v, float) and math.isnan(v)) else fmt.format(v))
        excl = ",".join(str(t.n_excluded) for t in tables)
        lines.append("| " + " | ".join(list(key) + cells + [excl]) + " |")
    return "\n".join(lines) + "\n"


def tables_to_csv(tables) -> str:
    """Long format: experiment, family, n, K*, reps, kind, key, value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "family", "n", "k_true", "reps", "excluded", "kind", "key", "value"])
    for t in tables:
        c = t.config
        kind, values = ("rmse", t.rmse) if isinstance(t, RmseTable) else ("frequency", t.freq)
        for key, val in values.items():
            w.writerow([c.name, c.family, c.n, c.k_true, c.reps, t.n_excluded, kind, key, repr(float(val))])
    return buf.getvalue()


def records_to_csv(table) -> str:
    """Per-replication raw estimates for audit."""
    keys = []
    for rec in table.records:
        for k in rec:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for rec in table.records:
        w.writerow(rec)
    return buf.getvalue()
