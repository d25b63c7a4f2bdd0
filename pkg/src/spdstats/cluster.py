"""Cluster separation indices over Euclidean distances in vector space.

Used to quantify residual site effects after harmonization. Degenerate
conventions: a silhouette of a singleton-cluster point is 0; an all-points
-identical configuration scores 0 for all three indices.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def _check_labels(x, labels, min_n_extra=0):
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2:
        raise ShapeError(f"vectors must be (n, d), got {x.shape}")
    if labels.shape != (x.shape[0],):
        raise ShapeError("labels must be one per row")
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ShapeError("need at least 2 distinct labels")
    if x.shape[0] < uniq.size + min_n_extra:
        raise ShapeError("too few points for this index")
    return x, labels, uniq


def silhouette_score(x, labels) -> float:
    """Mean of (b - a) / max(a, b) over points."""
    x, labels, uniq = _check_labels(x, labels, min_n_extra=1)
    n = x.shape[0]
    dist = np.sqrt(np.maximum(((x[:, None] - x[None]) ** 2).sum(-1), 0.0))
    scores = np.zeros(n)
    masks = {c: labels == c for c in uniq}
    for i in range(n):
        own = masks[labels[i]]
        n_own = own.sum()
        if n_own == 1:
            continue  # singleton convention: 0
        a = dist[i, own].sum() / (n_own - 1)
        b = min(dist[i, masks[c]].mean() for c in uniq if c != labels[i])
        top = max(a, b)
        scores[i] = 0.0 if top == 0 else (b - a) / top
    return float(scores.mean())


def calinski_harabasz(x, labels) -> float:
    """[tr(B)/(k-1)] / [tr(W)/(n-k)] with centroid-based scatters."""
    x, labels, uniq = _check_labels(x, labels)
    n, k = x.shape[0], uniq.size
    grand = x.mean(axis=0)
    tr_b = 0.0
    tr_w = 0.0
    for c in uniq:
        block = x[labels == c]
        centroid = block.mean(axis=0)
        tr_b += block.shape[0] * float(((centroid - grand) ** 2).sum())
        tr_w += float(((block - centroid) ** 2).sum())
    if tr_b == 0.0:
        return 0.0
    if tr_w == 0.0:
        return float("inf")
    return float((tr_b / (k - 1)) / (tr_w / (n - k)))


def davies_bouldin(x, labels) -> float:
    """Mean over clusters of the worst (s_i + s_j) / dist(c_i, c_j) ratio."""
    x, labels, uniq = _check_labels(x, labels)
    k = uniq.size
    centroids = np.stack([x[labels == c].mean(axis=0) for c in uniq])
    spreads = np.array(
        [
            float(np.sqrt(((x[labels == c] - centroids[j]) ** 2).sum(-1)).mean())
            for j, c in enumerate(uniq)
        ]
    )
    worst = np.zeros(k)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            s = spreads[i] + spreads[j]
            m = float(np.linalg.norm(centroids[i] - centroids[j]))
            if s == 0.0:
                r = 0.0
            elif m == 0.0:
                r = float("inf")
            else:
                r = s / m
            worst[i] = max(worst[i], r)
    return float(worst.mean())
