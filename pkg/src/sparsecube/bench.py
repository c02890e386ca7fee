"""Constant estimation and memory-sweep experiments over loaded stores.

Estimation samples stored cells with replacement and retrieves each sample
element twice: once against a cold cache (cleared before every query, so the
per-query miss counts reflect untouched disk and average wall time estimates
D) and once warm, after a priming pass left every touched block resident
(estimating M).

The sweep replays sampled queries at a ladder of memory budgets.  Per query
it charges a synthetic time of M when the cache absorbed every block touch
and D otherwise; miss counts are deterministic, so the emitted CSV is too.
The model curve is evaluated at the memory actually used mid-pass (for the
multidimensional representation the preloaded size counts toward the
budget), which is what the measured averages are compared against.
"""

from __future__ import annotations

import csv
import io
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .blockio import SimCache
from .cachemodel import CacheModelParams, RepConstants, t_m, t_t
from .mdstore import MultidimStore
from .tablestore import TableStore

UNBOUNDED = 1 << 60

SWEEP_COLUMNS = ("rep", "budget_octets", "pass", "used_octets", "misses", "avg_sim_ms", "model_ms")


@dataclass
class EstimateResult:
    params: CacheModelParams
    md_cold_misses: list[int]
    tbl_cold_misses: list[int]
    md_warm_misses: list[int]
    tbl_warm_misses: list[int]


def sample_coords(
    store: MultidimStore, size: int, seed: int
) -> list[tuple[int, ...]]:
    """Uniform sample, with replacement, of stored cell coordinates."""
    if size < 1:
        raise ValueError("sample size must be >= 1")
    pool = store.stored_coords()
    rng = random.Random(seed)
    return rng.choices(pool, k=size)


def cold_miss_counts(query, coords: Sequence, cache: SimCache) -> list[int]:
    """Per-query miss counts, each query issued against an emptied cache."""
    out = []
    for c in coords:
        cache.clear()
        before = cache.misses
        query(c)
        out.append(cache.misses - before)
    return out


def _timed_pass(query, coords: Sequence) -> float:
    t0 = time.perf_counter()
    for c in coords:
        query(c)
    return (time.perf_counter() - t0) * 1000.0 / len(coords)


def estimate_constants(
    md_store: MultidimStore,
    md_cache: SimCache,
    tbl_store: TableStore,
    tbl_cache: SimCache,
    sample_size: int = 1000,
    seed: int = 0,
) -> EstimateResult:
    coords = sample_coords(md_store, sample_size, seed)

    results = {}
    misses = {}
    for rep, query, cache in (
        ("md", md_store.point_query, md_cache),
        ("tbl", tbl_store.point_query, tbl_cache),
    ):
        cache.set_capacity(UNBOUNDED)
        cache.clear()
        cache.reset_counters()

        cold_misses = []
        t0 = time.perf_counter()
        for c in coords:
            cache.clear()
            before = cache.misses
            query(c)
            cold_misses.append(cache.misses - before)
        cold_ms = (time.perf_counter() - t0) * 1000.0 / len(coords)

        cache.clear()
        for c in coords:  # priming pass: leave every touched block resident
            query(c)
        warm_misses = []
        t0 = time.perf_counter()
        for c in coords:
            before = cache.misses
            query(c)
            warm_misses.append(cache.misses - before)
        warm_ms = (time.perf_counter() - t0) * 1000.0 / len(coords)

        results[rep] = (warm_ms, cold_ms)
        misses[rep] = (cold_misses, warm_misses)

    md_report = md_store.size_report()
    params = CacheModelParams(
        md=RepConstants(*results["md"]),
        tbl=RepConstants(*results["tbl"]),
        preload_bytes=md_report.preload_bytes,
        cell_bytes=md_report.cell_bytes,
        table_bytes=tbl_store.total_size(),
    )
    return EstimateResult(
        params,
        md_cold_misses=misses["md"][0],
        tbl_cold_misses=misses["tbl"][0],
        md_warm_misses=misses["md"][1],
        tbl_warm_misses=misses["tbl"][1],
    )


@dataclass
class SweepRow:
    rep: str
    budget: int
    pass_no: int
    used: int
    misses: int
    avg_sim_ms: float
    model_ms: float


@dataclass
class SweepSummary:
    rep: str
    budget: int
    measured_ms: float
    model_ms: float

    @property
    def rel_deviation(self) -> float:
        return abs(self.measured_ms - self.model_ms) / self.model_ms


@dataclass
class SweepResult:
    rows: list[SweepRow]
    summaries: list[SweepSummary]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.rep, r.budget, r.pass_no, r.used, r.misses,
                 f"{r.avg_sim_ms:.6f}", f"{r.model_ms:.6f}"]
            )
        return buf.getvalue()


def default_budgets(params: CacheModelParams, points: int = 20) -> tuple[list[int], list[int]]:
    """Evenly spaced budgets covering each representation's full range."""
    if points < 2:
        raise ValueError("a sweep needs at least 2 budget points")
    h, c, s = params.preload_bytes, params.cell_bytes, params.table_bytes
    md = [h + round(i * c / (points - 1)) for i in range(points)]
    tbl = [round(i * s / (points - 1)) for i in range(points)]
    return md, tbl


def memory_sweep(
    md_store: MultidimStore,
    md_cache: SimCache,
    tbl_store: TableStore,
    tbl_cache: SimCache,
    params: CacheModelParams,
    md_budgets: Sequence[int],
    tbl_budgets: Sequence[int],
    samples: int = 300,
    passes: int = 100,
    seed: int = 0,
) -> SweepResult:
    pool = md_store.stored_coords()
    rows: list[SweepRow] = []
    summaries: list[SweepSummary] = []
    h = params.preload_bytes

    jobs = (
        ("md", md_store.point_query, md_cache, md_budgets, params.md, True),
        ("tbl", tbl_store.point_query, tbl_cache, tbl_budgets, params.tbl, False),
    )
    for rep, query, cache, budgets, consts, is_md in jobs:
        model_fn = t_m if is_md else t_t
        delta = consts.D - consts.M
        for budget in budgets:
            capacity = budget - h if is_md else budget
            if capacity < 0:
                raise ValueError(
                    f"budget {budget} below the preloaded size {h}"
                )
            cache.set_capacity(capacity)
            cache.clear()
            # String seeds hash stably across processes, unlike tuples.
            rng = random.Random(f"{seed}:{rep}:{budget}")
            total_time = 0.0
            total_model = 0.0
            for pass_no in range(1, passes + 1):
                coords = rng.choices(pool, k=samples)
                used_before = cache.used_bytes
                pass_time = 0.0
                pass_misses = 0
                for c in coords:
                    before = cache.misses
                    query(c)
                    miss = cache.misses - before
                    pass_misses += miss
                    pass_time += consts.M + (delta if miss > 0 else 0.0)
                used_after = cache.used_bytes
                used_mid = (used_before + used_after) // 2 + (h if is_md else 0)
                model_ms = model_fn(used_mid, params)
                avg_ms = pass_time / samples
                rows.append(
                    SweepRow(rep, budget, pass_no, used_mid, pass_misses, avg_ms, model_ms)
                )
                total_time += pass_time
                total_model += model_ms
            summaries.append(
                SweepSummary(
                    rep,
                    budget,
                    measured_ms=total_time / (passes * samples),
                    model_ms=total_model / passes,
                )
            )
    return SweepResult(rows, summaries)


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    Path(path).write_text(result.to_csv())
