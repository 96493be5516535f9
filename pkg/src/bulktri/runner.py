"""Trial runner and benchmark sweeps around :class:`~bulktri.engine.Engine`."""
from __future__ import annotations

import logging
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator

import numpy as np

from bulktri.aggregate import AggregateConfig, aggregate_estimate, default_groups, required_estimators
from bulktri.edgeio import Prefetcher, batches_of, parse_edge_list, read_edge_list
from bulktri.engine import Engine
from bulktri.oracle import OrderedGraph

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 16384
DEFAULT_ESTIMATORS = 100_000


@dataclass
class RunConfig:
    """Everything a run needs; ``workers=None`` means all CPUs."""

    input_path: str | None = None
    estimators: int = DEFAULT_ESTIMATORS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = 0
    trials: int = 1
    workers: int | None = None
    epsilon: float | None = None
    delta: float = 0.1
    tau_lower_bound: float | None = None
    groups: int | None = None
    exact_check: bool = False
    known_tau: int | None = None
    max_edges: int | None = None
    output_format: str = "text"

    def __post_init__(self):
        if self.estimators < 1:
            raise ValueError("estimators must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.groups is not None and self.groups < 1:
            raise ValueError("groups must be >= 1")
        if self.output_format not in ("text", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.epsilon is not None and self.tau_lower_bound is None:
            raise ValueError("sizing r from epsilon needs tau_lower_bound")

    @property
    def worker_count(self) -> int:
        return self.workers or os.cpu_count() or 1


@dataclass
class TrialResult:
    index: int
    seed: int
    estimate: float | None = None
    m_seen: int = 0
    processing_time: float = 0.0
    io_time: float = 0.0
    wall_time: float = 0.0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class EstimateReport:
    final_estimate: float | None
    per_trial_estimates: list[float | None]
    mean_deviation_percent: float | None
    exact_triangles: int | None
    m_seen: int
    estimators: int
    groups: int
    processing_time: float
    io_time: float
    throughput_edges_per_sec: float | None
    config: dict
    trials: list[TrialResult] = field(default_factory=list)

    @property
    def failed_trials(self) -> list[int]:
        return [t.index for t in self.trials if t.failed]

    @property
    def ok(self) -> bool:
        return not self.failed_trials

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        d["failed_trials"] = self.failed_trials
        if not timings:
            for k in ("processing_time", "io_time", "throughput_edges_per_sec"):
                d.pop(k)
            for t in d["trials"]:
                for k in ("processing_time", "io_time", "wall_time"):
                    t.pop(k)
        return d

    def to_text(self) -> str:
        fmt = lambda x: "n/a" if x is None else f"{x:.6g}"
        lines = [
            f"estimate            {fmt(self.final_estimate)}",
            f"edges seen          {self.m_seen}",
            f"estimators          {self.estimators} ({self.groups} groups)",
            f"trials              {len(self.trials)} ({len(self.failed_trials)} failed)",
        ]
        if self.exact_triangles is not None:
            lines.append(f"exact triangles     {self.exact_triangles}")
            lines.append(f"mean deviation      {fmt(self.mean_deviation_percent)}%")
        lines += [
            f"processing time     {self.processing_time:.3f}s",
            f"io wait             {self.io_time:.3f}s",
            f"throughput          {fmt(self.throughput_edges_per_sec)} edges/s",
        ]
        for t in self.trials:
            status = f"error: {t.error}" if t.failed else fmt(t.estimate)
            lines.append(f"  trial {t.index:<4d} seed={t.seed:<20d} {status}")
        return "\n".join(lines)


def trial_seed(seed: int, trial: int) -> int:
    """Independent 64-bit engine seed for trial ``trial`` of a run."""
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1, np.uint64)[0])


def _source(cfg: RunConfig, edges=None):
    if edges is not None:
        return lambda: batches_of(edges, cfg.batch_size, cfg.max_edges)
    if cfg.input_path is None:
        raise ValueError("no input: set input_path or pass edges")
    return lambda: parse_edge_list(cfg.input_path, cfg.batch_size, cfg.max_edges)


def _load_all(cfg: RunConfig, edges=None) -> np.ndarray:
    if edges is not None:
        edges = np.asarray(edges, dtype=np.uint64)
        return edges if cfg.max_edges is None else edges[:cfg.max_edges]
    return read_edge_list(cfg.input_path, cfg.max_edges)


def _size_estimators(cfg: RunConfig, edges=None) -> int:
    if cfg.epsilon is None:
        return cfg.estimators
    all_edges = _load_all(cfg, edges)
    if len(all_edges) == 0:
        return 1
    _, deg = np.unique(all_edges.ravel(), return_counts=True)
    return required_estimators(cfg.epsilon, cfg.delta, len(all_edges), int(deg.max()), cfg.tau_lower_bound)


def run_trial(cfg: RunConfig, index: int, r: int, groups: int, batches: Iterator[np.ndarray]) -> TrialResult:
    res = TrialResult(index=index, seed=trial_seed(cfg.seed, index))
    engine = Engine(r, seed=res.seed, workers=cfg.worker_count)
    start = time.perf_counter()
    feed = Prefetcher(batches, depth=2)
    try:
        for w in feed:
            t0 = time.perf_counter()
            engine.ingest_batch(w)
            res.processing_time += time.perf_counter() - t0
        t0 = time.perf_counter()
        res.estimate = aggregate_estimate(engine, AggregateConfig(groups))
        res.processing_time += time.perf_counter() - t0
    except Exception as exc:
        log.warning("trial %d failed: %s", index, exc)
        res.error = f"{type(exc).__name__}: {exc}"
    finally:
        feed.close()
    res.io_time = feed.wait_time
    res.m_seen = engine.m
    res.wall_time = time.perf_counter() - start
    return res


def run_count(cfg: RunConfig, edges=None) -> EstimateReport:
    """Run ``cfg.trials`` independent trials and assemble the report.

    ``edges`` optionally supplies the stream in memory instead of
    ``cfg.input_path``. Failed trials are recorded in the report rather
    than raised.
    """
    r = _size_estimators(cfg, edges)
    groups = min(r, cfg.groups) if cfg.groups is not None else default_groups(r, cfg.delta)
    source = _source(cfg, edges)
    trials = [run_trial(cfg, t, r, groups, source()) for t in range(cfg.trials)]

    tau = cfg.known_tau
    if tau is None and cfg.exact_check:
        tau = OrderedGraph(_load_all(cfg, edges).tolist()).triangle_count()
    ok = [t for t in trials if not t.failed]
    estimates = [t.estimate for t in trials]
    final = float(np.mean([t.estimate for t in ok])) if ok else None
    md = None
    if tau and ok:
        md = float(np.mean([abs(t.estimate - tau) / tau for t in ok]) * 100)
    proc = sum(t.processing_time for t in trials)
    io = sum(t.io_time for t in trials)
    seen = sum(t.m_seen for t in ok)
    return EstimateReport(
        final_estimate=final,
        per_trial_estimates=estimates,
        mean_deviation_percent=md,
        exact_triangles=tau,
        m_seen=trials[0].m_seen if trials else 0,
        estimators=r,
        groups=groups,
        processing_time=proc,
        io_time=io,
        throughput_edges_per_sec=seen / proc if proc > 0 and ok else None,
        config=asdict(cfg),
        trials=trials,
    )


@dataclass
class BenchRow:
    value: int
    m_seen: int
    processing_time: float
    throughput: float
    speedup: float
    estimate: float | None


def run_benchmark(cfg: RunConfig, sweep: str, values, edges=None) -> list[BenchRow]:
    """One trial per sweep point on the same stream and seed.

    ``sweep`` is ``"batch"`` (vary ``batch_size``) or ``"workers"``. The
    stream is loaded into memory once so that parsing never enters the
    timings. Speedup is relative to the 1-worker row when the sweep has
    one, otherwise to the first row.
    """
    if sweep not in ("batch", "workers"):
        raise ValueError(f"unknown sweep {sweep!r}")
    values = [int(v) for v in values]
    if not values:
        raise ValueError("empty sweep")
    data = _load_all(cfg, edges)
    r = _size_estimators(cfg, data)
    groups = min(r, cfg.groups) if cfg.groups is not None else default_groups(r, cfg.delta)
    rows = []
    for v in values:
        point = replace(cfg, trials=1, max_edges=None,
                        **({"batch_size": v} if sweep == "batch" else {"workers": v}))
        res = run_trial(point, 0, r, groups, batches_of(data, point.batch_size))
        if res.failed:
            raise RuntimeError(f"benchmark run at {sweep}={v} failed: {res.error}")
        log.info("%s=%d: %.3fs", sweep, v, res.processing_time)
        rows.append(BenchRow(value=v, m_seen=res.m_seen, processing_time=res.processing_time,
                             throughput=res.m_seen / res.processing_time, speedup=1.0,
                             estimate=res.estimate))
    base = next((row for row in rows if sweep == "workers" and row.value == 1), rows[0])
    for row in rows:
        row.speedup = base.processing_time / row.processing_time
    return rows
