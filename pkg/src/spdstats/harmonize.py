"""Multi-site harmonization on tangent vectorizations.

ComBat fits a per-feature location-scale model at the grand Fréchet mean:
standardize by the pooled residual variance, estimate per-site location
(gamma) and scale (delta^2) effects, shrink them with parametric empirical
Bayes (normal prior on gamma, inverse-gamma prior on delta^2, moment-matched
hyperparameters, fixed-point iteration), adjust, and map back to the
manifold. Variances are population variances (1/n) throughout, which makes
identical sites an exact fixed point of the adjustment.

Rigid harmonization aligns sites geometrically: site clouds are carried from
their own Fréchet means to the grand mean by parallel transport, so it needs
a transport-capable metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import parallel
from .errors import ShapeError, UnsupportedMetric
from .sample import ConnectomeSample, FrechetConfig, frechet_mean_stack
from .stats import DEFAULT_TEST_CONFIG
from .supersample import SuperSample

EB_TOL = 1e-6
EB_MAX_ITER = 100


@dataclass
class CombatModel:
    """Fitted ComBat parameters, one row per site in group order."""

    alpha: np.ndarray            # (d,) grand location
    pooled_var: np.ndarray       # (d,) pooled residual variance
    gamma_hat: np.ndarray        # (k, d) raw site locations (standardized)
    delta_hat: np.ndarray        # (k, d) raw site scales (standardized)
    gamma_star: np.ndarray       # (k, d) shrunk locations
    delta_star: np.ndarray       # (k, d) shrunk scales
    gamma_bar: np.ndarray        # (k,) location prior means
    tau_sq: np.ndarray           # (k,) location prior variances
    a_prior: np.ndarray          # (k,) scale prior shape (nan when degenerate)
    b_prior: np.ndarray          # (k,) scale prior rate (nan when degenerate)
    n_iterations: np.ndarray     # (k,) EB fixed-point iterations used
    passthrough: np.ndarray      # indices of constant features left unadjusted


def _sizes_to_slices(sizes):
    bounds = np.cumsum([0] + list(sizes))
    return [slice(bounds[j], bounds[j + 1]) for j in range(len(sizes))]


def fit_combat(vectors: np.ndarray, sizes: List[int]) -> CombatModel:
    """Fit the ComBat model on an (N, d) feature matrix with site blocks."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"vectors must be (N, d), got {x.shape}")
    if sum(sizes) != x.shape[0]:
        raise ShapeError("site sizes do not sum to the number of rows")
    if len(sizes) < 2:
        raise ShapeError("combat needs at least 2 sites")
    if min(sizes) < 2:
        raise ShapeError("every site needs n >= 2")
    slices = _sizes_to_slices(sizes)
    k, d = len(sizes), x.shape[1]

    site_means = np.stack([x[s].mean(axis=0) for s in slices])
    alpha = x.mean(axis=0)
    resid = x - np.concatenate(
        [np.broadcast_to(site_means[j], (sizes[j], d)) for j in range(k)]
    )
    pooled_var = (resid**2).mean(axis=0)

    scale = np.mean(x**2)
    passthrough = np.flatnonzero(pooled_var <= 1e-24 * max(1.0, scale))
    keep = np.setdiff1d(np.arange(d), passthrough)
    z = np.zeros_like(x)
    z[:, keep] = (x[:, keep] - alpha[keep]) / np.sqrt(pooled_var[keep])

    gamma_hat = np.stack([z[s].mean(axis=0) for s in slices])
    delta_hat = np.stack([z[s].var(axis=0) for s in slices])  # population variance
    gamma_bar = gamma_hat[:, keep].mean(axis=1) if keep.size else np.zeros(k)
    tau_sq = (
        gamma_hat[:, keep].var(axis=1, ddof=1) if keep.size > 1 else np.zeros(k)
    )

    gamma_star = gamma_hat.copy()
    delta_star = np.where(delta_hat > 0, delta_hat, 1.0)
    a_prior = np.full(k, np.nan)
    b_prior = np.full(k, np.nan)
    iters = np.zeros(k, dtype=int)

    for j in range(k):
        if keep.size == 0:
            continue
        n_j = sizes[j]
        g_hat = gamma_hat[j, keep]
        d_hat = np.where(delta_hat[j, keep] > 0, delta_hat[j, keep], 1.0)
        lam = d_hat.mean()
        s2 = d_hat.var(ddof=1) if keep.size > 1 else 0.0
        if s2 <= 1e-12 * max(1.0, lam * lam):
            # degenerate scale prior: no information to shrink against
            d_star = d_hat
            g_star = (tau_sq[j] * n_j * g_hat + d_star * gamma_bar[j]) / (
                tau_sq[j] * n_j + d_star
            )
        else:
            a_prior[j] = (2 * s2 + lam**2) / s2
            b_prior[j] = (lam * s2 + lam**3) / s2
            zb = z[slices[j]][:, keep]
            g_star = g_hat.copy()
            d_star = d_hat.copy()
            for it in range(EB_MAX_ITER):
                g_new = (tau_sq[j] * n_j * g_hat + d_star * gamma_bar[j]) / (
                    tau_sq[j] * n_j + d_star
                )
                sum2 = ((zb - g_new) ** 2).sum(axis=0)
                d_new = (0.5 * sum2 + b_prior[j]) / (n_j / 2.0 + a_prior[j] - 1.0)
                change = max(
                    np.max(np.abs(g_new - g_star) / np.maximum(np.abs(g_star), 1e-30)),
                    np.max(np.abs(d_new - d_star) / np.maximum(np.abs(d_star), 1e-30)),
                )
                g_star, d_star = g_new, d_new
                iters[j] = it + 1
                if change < EB_TOL:
                    break
        gamma_star[j, keep] = g_star
        delta_star[j, keep] = d_star

    return CombatModel(
        alpha=alpha,
        pooled_var=pooled_var,
        gamma_hat=gamma_hat,
        delta_hat=delta_hat,
        gamma_star=gamma_star,
        delta_star=delta_star,
        gamma_bar=gamma_bar,
        tau_sq=tau_sq,
        a_prior=a_prior,
        b_prior=b_prior,
        n_iterations=iters,
        passthrough=passthrough,
    )


def apply_combat(vectors: np.ndarray, sizes: List[int],
                 model: CombatModel) -> np.ndarray:
    """Remove fitted site effects; passthrough features are copied unchanged."""
    x = np.asarray(vectors, dtype=np.float64)
    out = x.copy()
    keep = np.setdiff1d(np.arange(x.shape[1]), model.passthrough)
    if keep.size == 0:
        return out
    sd = np.sqrt(model.pooled_var[keep])
    for j, s in enumerate(_sizes_to_slices(sizes)):
        z = (x[s][:, keep] - model.alpha[keep]) / sd
        z = (z - model.gamma_star[j, keep]) / np.sqrt(model.delta_star[j, keep])
        out[np.ix_(range(s.start, s.stop), keep)] = z * sd + model.alpha[keep]
    return out


def _rebuild(ss: SuperSample, conns_stack: np.ndarray) -> SuperSample:
    groups = []
    lo = 0
    for n_j in ss.sizes:
        groups.append(
            ConnectomeSample.from_connectomes(conns_stack[lo : lo + n_j], ss.metric)
        )
        lo += n_j
    return SuperSample(groups, ss.metric)


def combat_harmonization(ss: SuperSample,
                         config: Optional[FrechetConfig] = None) -> SuperSample:
    """ComBat at the grand Fréchet mean; returns a new SuperSample."""
    if ss.k < 2:
        raise ShapeError("combat needs at least 2 sites")
    if min(ss.sizes) < 2:
        raise ShapeError("every site needs n >= 2")
    cfg = config if config is not None else DEFAULT_TEST_CONFIG
    if ss.grand_mean is None:
        ss.compute_grand_mean(cfg)
    vecs = ss.pooled_vectors()
    model = fit_combat(vecs, ss.sizes)
    adjusted = apply_combat(vecs, ss.sizes, model)
    ref = ss.grand_mean
    metric = ss.metric
    tangents = parallel.map_stack(lambda v: metric.unvec(ref, v), adjusted)
    conns = parallel.map_stack(lambda t: metric.exp(ref, t), tangents)
    return _rebuild(ss, conns)


def rigid_harmonization(ss: SuperSample,
                        config: Optional[FrechetConfig] = None) -> SuperSample:
    """Transport each site cloud from its own Fréchet mean to the grand mean."""
    metric = ss.metric
    if not metric.supports_transport:
        raise UnsupportedMetric(
            f"rigid harmonization needs parallel transport; "
            f"metric {metric.name!r} has none"
        )
    cfg = config if config is not None else DEFAULT_TEST_CONFIG
    if ss.grand_mean is None:
        ss.compute_grand_mean(cfg)
    grand = ss.grand_mean
    out = []
    for g in ss.groups:
        if g.conns is None:
            if g.tangents is None:
                g.compute_unvec()
            g.compute_conns()
        site_mean, _, _, _ = frechet_mean_stack(g.conns, metric, cfg)
        tangents = parallel.map_stack(lambda c: metric.log(site_mean, c), g.conns)
        moved = metric.transport(site_mean, grand, tangents)
        out.append(parallel.map_stack(lambda t: metric.exp(grand, t), moved))
    return _rebuild(ss, np.concatenate(out, axis=0))
