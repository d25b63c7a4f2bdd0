"""Timing harness for the Fréchet mean kernel.

Data is freshly generated per cell (identity-centered SPD normal with
identity dispersion) and materialized to connectomes before the clock
starts, so each row times only the mean computation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import parallel
from .metrics import MetricDescriptor, get_metric, tri_dim
from .sample import FrechetConfig, rspdnorm

BENCH_HEADER = ["n", "p", "threads", "batch_size", "repeat", "seconds"]


@dataclass
class BenchRow:
    n: int
    p: int
    threads: int
    batch_size: int
    repeat: int
    seconds: float


def bench_sample(n: int, p: int, metric: MetricDescriptor, seed: int):
    """Identity-centered sample with connectomes materialized."""
    s = rspdnorm(n, np.eye(p), np.eye(tri_dim(p)), metric, seed=seed)
    s.compute_unvec()
    s.compute_conns()
    return s


def time_frechet_mean(sample, config: FrechetConfig, threads: int) -> float:
    old = parallel.get_num_threads()
    parallel.set_num_threads(threads)
    try:
        start = time.perf_counter()
        sample.compute_frechet_mean(config)
        return time.perf_counter() - start
    finally:
        parallel.set_num_threads(old)


def run_bench(n_list: Sequence[int], p_list: Sequence[int],
              threads_list: Sequence[int], batch_list: Sequence[Optional[int]],
              repeats: int = 1, metric="airm", seed: int = 0,
              config: Optional[FrechetConfig] = None) -> List[BenchRow]:
    """One row per (n, p, threads, batch, repeat), fresh data per repeat."""
    m = get_metric(metric) if isinstance(metric, str) else metric
    base = config if config is not None else FrechetConfig()
    rows = []
    for p in p_list:
        for n in n_list:
            for rep in range(repeats):
                sample = bench_sample(n, p, m, seed=seed + rep)
                for threads in threads_list:
                    for batch in batch_list:
                        bs = n if batch is None else int(batch)
                        cfg = FrechetConfig(
                            learning_rate=base.learning_rate,
                            tolerance=base.tolerance,
                            max_iterations=base.max_iterations,
                            batch_size=bs,
                            seed=base.seed,
                        )
                        seconds = time_frechet_mean(sample, cfg, int(threads))
                        rows.append(
                            BenchRow(n, p, int(threads), bs, rep, seconds)
                        )
    return rows


def summarize(rows: List[BenchRow]) -> List[dict]:
    """Per-cell min/median/max over repeats."""
    cells = {}
    for r in rows:
        cells.setdefault((r.n, r.p, r.threads, r.batch_size), []).append(r.seconds)
    out = []
    for (n, p, threads, bs), secs in sorted(cells.items()):
        out.append(
            {
                "n": n,
                "p": p,
                "threads": threads,
                "batch_size": bs,
                "min": float(np.min(secs)),
                "median": float(np.median(secs)),
                "max": float(np.max(secs)),
            }
        )
    return out


def write_csv(path, rows: List[BenchRow]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(BENCH_HEADER) + "\n")
        for r in rows:
            fh.write(
                f"{r.n},{r.p},{r.threads},{r.batch_size},{r.repeat},{r.seconds:.6f}\n"
            )
