"""Multi-group tests on SPD samples.

Two families:

* Fréchet ANOVA: compares group Fréchet variations against the pooled
  variation. F_n = V_p - sum_j lambda_j V_j measures added variation when
  groups are pooled; U_n compares variations pairwise, weighted by the
  fourth-moment variances sigma_j^2 = mean(d^4) - V_j^2. They aggregate into
  T_n = N U_n + N F_n^2 / sum_j lambda_j^2 sigma_j^2. Inference is by label
  permutation; the chi-square tail is not implemented, so p_asymptotic stays
  None and the permutation p-value is authoritative.

* Riemannian ANOVA: classical MANOVA statistics (log Wilks' Lambda, Pillai's
  trace) on the grand-mean vectorizations, with label-permutation inference.
  The vectorization is computed once at the grand mean and reused across
  permutations; only group means and scatters are recomputed, and W = T - B
  since T is label-invariant for raw scatters.

Permutation p-values use the add-one rule (1 + #{at least as extreme}) /
(1 + iterations), and iteration i draws its labels from the (seed, i) RNG
stream, so results do not depend on scheduling or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import parallel
from .errors import DegenerateGroupError, ShapeError, SingularScatterError
from .metrics import distance
from .sample import FrechetConfig, frechet_mean_stack
from .supersample import SuperSample

# Group means inside the tests are computed with full-batch unit steps and a
# tight stopping rule; a loose mean would leak into the variations.
DEFAULT_TEST_CONFIG = FrechetConfig(
    learning_rate=1.0, tolerance=1e-6, max_iterations=100, seed=0
)


@dataclass
class FrechetAnovaResult:
    group_variations: List[float]
    pooled_variation: float
    f_n: float
    u_n: float
    t_n: float
    p_permutation: float
    n_permutations: int
    p_asymptotic: Optional[float] = None


@dataclass
class RiemAnovaResult:
    stat: str
    statistic: float
    p_value: float
    n_iterations: int


def _group_moments(points, index_sets, metric, config):
    """Per-group variation and fourth-moment variance at the group Fréchet mean."""
    variations = []
    sigma_sq = []
    for idx in index_sets:
        block = points[idx]
        mean, _, _, _ = frechet_mean_stack(block, metric, config)
        dsq = distance(metric, mean, block) ** 2
        v = float(dsq.mean())
        s = float((dsq**2).mean() - v * v)
        variations.append(v)
        sigma_sq.append(s)
    return variations, sigma_sq


def _frechet_statistic(points, index_sets, pooled_variation, metric, config):
    n_total = points.shape[0]
    lam = np.array([len(idx) / n_total for idx in index_sets])
    variations, sigma_sq = _group_moments(points, index_sets, metric, config)
    if min(sigma_sq) <= 0:
        j = int(np.argmin(sigma_sq))
        raise DegenerateGroupError(
            f"group {j} has zero fourth-moment variance; "
            "the Fréchet ANOVA statistic is undefined"
        )
    v = np.array(variations)
    s = np.array(sigma_sq)
    f_n = pooled_variation - float(lam @ v)
    u_n = 0.0
    k = len(index_sets)
    for j in range(k):
        for l in range(j + 1, k):
            u_n += lam[j] * lam[l] / (s[j] * s[l]) * (v[j] - v[l]) ** 2
    t_n = n_total * u_n + n_total * f_n**2 / float(lam**2 @ s)
    return variations, f_n, float(u_n), float(t_n)


def frechet_anova(ss: SuperSample, n_permutations: int = 99, seed: int = 0,
                  config: Optional[FrechetConfig] = None,
                  threads=None) -> FrechetAnovaResult:
    """Fréchet ANOVA with permutation inference.

    Group Fréchet means and variations are recomputed for every permuted
    labeling; the pooled mean and variation are label-invariant and computed
    once.
    """
    if ss.k < 2:
        raise ShapeError("frechet_anova needs at least 2 groups")
    sizes = ss.sizes
    if min(sizes) < 2:
        raise ShapeError("every group needs n >= 2")
    cfg = config if config is not None else DEFAULT_TEST_CONFIG
    if ss.pooled is None:
        ss.gather()
    points = ss.pooled.conns
    pooled_mean, _, _, _ = frechet_mean_stack(points, ss.metric, cfg)
    pooled_variation = float((distance(ss.metric, pooled_mean, points) ** 2).mean())

    bounds = np.cumsum([0] + sizes)
    identity_order = np.arange(ss.N)

    def split(order):
        return [order[bounds[j] : bounds[j + 1]] for j in range(len(sizes))]

    variations, f_n, u_n, t_n = _frechet_statistic(
        points, split(identity_order), pooled_variation, ss.metric, cfg
    )

    def one_perm(i):
        order = parallel.rng_for(seed, i).permutation(ss.N)
        _, _, _, t_perm = _frechet_statistic(
            points, split(order), pooled_variation, ss.metric, cfg
        )
        return t_perm >= t_n

    hits = parallel.map_indices(one_perm, int(n_permutations), threads)
    p_perm = (1 + sum(hits)) / (1 + int(n_permutations))
    return FrechetAnovaResult(
        group_variations=variations,
        pooled_variation=pooled_variation,
        f_n=f_n,
        u_n=u_n,
        t_n=t_n,
        p_permutation=float(p_perm),
        n_permutations=int(n_permutations),
        p_asymptotic=None,
    )


# ---------------------------------------------------------------------------
# MANOVA statistics


def _logdet_psd(m, label, hint):
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0 or not np.isfinite(logdet):
        raise SingularScatterError(hint.format(label=label))
    return logdet


_SINGULAR_HINT = (
    "{label} scatter is singular (N={n}, k={k}, d={d}); "
    "reduce dimension, e.g. with pca_dim/--pca-dim"
)


def _scatter_stats(vecs, index_sets, total_scatter, stat):
    grand = vecs.mean(axis=0)
    d = vecs.shape[1]
    b = np.zeros((d, d))
    for idx in index_sets:
        diff = vecs[idx].mean(axis=0) - grand
        b += len(idx) * np.outer(diff, diff)
    n, k = vecs.shape[0], len(index_sets)
    hint = _SINGULAR_HINT.replace("{n}", str(n)).replace("{k}", str(k)).replace("{d}", str(d))
    if stat == "log-wilks":
        w = total_scatter - b
        return _logdet_psd(w, "within", hint) - _logdet_psd(
            total_scatter, "total", hint
        )
    try:
        return float(np.trace(np.linalg.solve(total_scatter, b)))
    except np.linalg.LinAlgError:
        raise SingularScatterError(hint.format(label="total")) from None


def log_wilks_lambda(ss: SuperSample) -> float:
    """log det(W) - log det(T) on the grand-mean vectorization."""
    if ss.total_scatter is None:
        ss.compute_scatters()
    n, k, d = ss.N, ss.k, ss.d
    hint = _SINGULAR_HINT.replace("{n}", str(n)).replace("{k}", str(k)).replace("{d}", str(d))
    return float(
        _logdet_psd(ss.within_scatter, "within", hint)
        - _logdet_psd(ss.total_scatter, "total", hint)
    )


def pillais_trace(ss: SuperSample) -> float:
    """trace(B T^{-1}) on the grand-mean vectorization."""
    if ss.total_scatter is None:
        ss.compute_scatters()
    try:
        return float(np.trace(np.linalg.solve(ss.total_scatter, ss.between_scatter)))
    except np.linalg.LinAlgError:
        n, k, d = ss.N, ss.k, ss.d
        raise SingularScatterError(
            f"total scatter is singular (N={n}, k={k}, d={d}); "
            "reduce dimension, e.g. with pca_dim/--pca-dim"
        ) from None


_STAT_NAMES = {"log-wilks": "log-wilks", "log_wilks": "log-wilks",
               "pillai": "pillai"}


def riem_anova(ss: SuperSample, stat: str = "log-wilks",
               n_iterations: int = 100, seed: int = 0,
               pca_dim: Optional[int] = None, threads=None) -> RiemAnovaResult:
    """Permutation MANOVA on grand-mean vectorizations.

    Smaller log Wilks is more extreme; larger Pillai is more extreme. With
    ``pca_dim`` the vectors are first projected onto the top principal
    directions of the total scatter (a label-invariant preprocessing).
    """
    stat = _STAT_NAMES.get(str(stat).lower().replace("_", "-").replace(" ", ""))
    if stat is None:
        raise ShapeError(f"stat must be one of {sorted(set(_STAT_NAMES.values()))}")
    if ss.k < 2:
        raise ShapeError("riem_anova needs at least 2 groups")
    if n_iterations < 1:
        raise ShapeError("n_iterations must be >= 1")
    if ss.grand_mean is None:
        ss.compute_grand_mean(DEFAULT_TEST_CONFIG)
    vecs = ss.pooled_vectors()
    if pca_dim is not None:
        centered = vecs - vecs.mean(axis=0)
        total = centered.T @ centered
        eigvals, eigvecs = np.linalg.eigh(total)
        r = int(pca_dim)
        if not 1 <= r <= vecs.shape[1]:
            raise ShapeError(f"pca_dim must be in [1, {vecs.shape[1]}]")
        vecs = centered @ eigvecs[:, ::-1][:, :r]

    sizes = ss.sizes
    bounds = np.cumsum([0] + sizes)

    def split(order):
        return [order[bounds[j] : bounds[j + 1]] for j in range(len(sizes))]

    grand = vecs.mean(axis=0)
    dev = vecs - grand
    total_scatter = dev.T @ dev
    total_scatter = (total_scatter + total_scatter.T) / 2.0

    observed = _scatter_stats(vecs, split(np.arange(ss.N)), total_scatter, stat)

    def one_perm(i):
        order = parallel.rng_for(seed, i).permutation(ss.N)
        value = _scatter_stats(vecs, split(order), total_scatter, stat)
        if stat == "log-wilks":
            return value <= observed
        return value >= observed

    hits = parallel.map_indices(one_perm, int(n_iterations), threads)
    p = (1 + sum(hits)) / (1 + int(n_iterations))
    return RiemAnovaResult(
        stat=stat,
        statistic=float(observed),
        p_value=float(p),
        n_iterations=int(n_iterations),
    )
