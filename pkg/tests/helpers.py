"""Shared test fixtures: reproducible SPD matrices with controlled conditioning."""

import numpy as np


def random_spd(rng, p, cond_max=1e4):
    """Random SPD matrix with eigenvalues log-spaced inside [1/sqrt(c), sqrt(c)]."""
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    half = np.sqrt(cond_max)
    if p == 1:
        w = np.array([np.exp(rng.uniform(-np.log(half), np.log(half)))])
    else:
        exps = np.sort(rng.uniform(-np.log(half), np.log(half), size=p))
        w = np.exp(exps)
    return (q * w) @ q.T


def random_sym(rng, p, scale=1.0):
    a = rng.standard_normal((p, p))
    return scale * (a + a.T) / 2.0


def random_spd_stack(rng, n, p, cond_max=1e4):
    return np.stack([random_spd(rng, p, cond_max) for _ in range(n)])
