"""Worker pool and RNG stream helpers.

Determinism contract: parallel sections only chunk elementwise maps over
matrix stacks (per-matrix LAPACK results do not depend on chunk boundaries)
or over independently seeded iteration indices. Every reduction stays a
serial numpy operation in fixed order, so results are bit-identical for any
thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ValidationError

THREADS_ENV = "SPDSTATS_THREADS"

_num_threads = None


def _env_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        k = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if k < 1:
        raise ValidationError(f"{THREADS_ENV} must be >= 1, got {k}")
    return k


def get_num_threads() -> int:
    """Current worker count (defaults to SPDSTATS_THREADS, else 1)."""
    if _num_threads is not None:
        return _num_threads
    return _env_threads()


def set_num_threads(k) -> None:
    """Set the worker count; ``None`` restores the environment default."""
    global _num_threads
    if k is None:
        _num_threads = None
        return
    k = int(k)
    if k < 1:
        raise ValidationError(f"thread count must be >= 1, got {k}")
    _num_threads = k


def map_stack(fn, stack, threads=None):
    """Apply ``fn`` to a matrix stack, chunked over the worker pool.

    ``fn`` must act independently on each matrix along axis 0; results are
    concatenated in chunk order, which makes the output identical to
    ``fn(stack)`` for any thread count.
    """
    k = get_num_threads() if threads is None else int(threads)
    n = stack.shape[0]
    if k <= 1 or n < 2 * k:
        return fn(stack)
    chunks = np.array_split(stack, k)
    with ThreadPoolExecutor(max_workers=k) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0)


def map_indices(fn, n, threads=None) -> list:
    """Evaluate ``fn(i)`` for i in range(n), chunked over the worker pool.

    Results come back in index order. ``fn`` must derive any randomness from
    its index argument so scheduling cannot change the outcome.
    """
    k = get_num_threads() if threads is None else int(threads)
    if k <= 1 or n < 2 * k:
        return [fn(i) for i in range(n)]
    ranges = np.array_split(np.arange(n), k)

    def run(span):
        return [fn(int(i)) for i in span]

    with ThreadPoolExecutor(max_workers=k) as pool:
        parts = list(pool.map(run, ranges))
    return [x for part in parts for x in part]


def rng_for(seed, index=None) -> np.random.Generator:
    """Counter-based generator for (seed, optional iteration index).

    Stream rule: ``SeedSequence(entropy=seed, spawn_key=(index,))`` feeding a
    Philox bit generator, so iteration i always sees the same stream no
    matter which worker runs it.
    """
    key = () if index is None else (int(index),)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
