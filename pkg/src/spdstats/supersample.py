"""Collections of groups sharing a metric: pooling, grand mean, scatters.

Scatter matrices are raw sums of squares over the grand-mean vectorization,
not divided by degrees of freedom, so T = W + B holds exactly and the ratio
and trace statistics built on them are unaffected by the common scaling.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from . import parallel
from .errors import ShapeError, StateError
from .metrics import MetricDescriptor
from .sample import ConnectomeSample, FrechetConfig


class SuperSample:
    """Ordered groups of ConnectomeSamples under one metric."""

    def __init__(self, groups: List[ConnectomeSample], metric: Optional[MetricDescriptor] = None):
        if len(groups) == 0:
            raise ShapeError("need at least one group")
        self.metric = metric if metric is not None else groups[0].metric
        names = {g.metric.name for g in groups} | {self.metric.name}
        if len(names) != 1:
            raise ShapeError(f"groups mix metrics: {sorted(names)}")
        dims = {g.p for g in groups}
        if len(dims) != 1:
            raise ShapeError(f"groups mix matrix dimensions: {sorted(dims)}")
        self.groups = list(groups)
        self.pooled = None
        self.grand_mean = None
        self.total_variation = None
        self.within_scatter = None
        self.between_scatter = None
        self.total_scatter = None
        self._pooled_vectors = None

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return self.groups[0].p

    @property
    def d(self) -> int:
        return self.groups[0].d

    @property
    def sizes(self) -> List[int]:
        return [g.n for g in self.groups]

    @property
    def N(self) -> int:
        return sum(self.sizes)

    def invalidate(self) -> None:
        """Drop pooled data and aggregates (call after mutating a group)."""
        self.pooled = None
        self.grand_mean = None
        self.total_variation = None
        self.within_scatter = None
        self.between_scatter = None
        self.total_scatter = None
        self._pooled_vectors = None

    def gather(self) -> ConnectomeSample:
        """Pool all groups' connectomes, in group order; always rebuilds."""
        stacks = []
        for g in self.groups:
            if g.conns is None:
                if g.tangents is None:
                    g.compute_unvec()
                g.compute_conns()
            stacks.append(g.conns)
        self.pooled = ConnectomeSample.from_connectomes(
            np.concatenate(stacks, axis=0), self.metric
        )
        return self.pooled

    def compute_grand_mean(self, config: Optional[FrechetConfig] = None):
        """Fréchet mean of the pooled sample."""
        if self.pooled is None:
            self.gather()
        self.grand_mean = self.pooled.compute_frechet_mean(config)
        return self.grand_mean

    def compute_total_variation(self) -> float:
        if self.grand_mean is None:
            raise StateError("compute_grand_mean first")
        self.total_variation = self.pooled.compute_variation()
        return self.total_variation

    def pooled_vectors(self) -> np.ndarray:
        """All observations vectorized at the grand mean, (N, d), group order."""
        if self.grand_mean is None:
            raise StateError("compute_grand_mean first")
        if self._pooled_vectors is None:
            ref = self.grand_mean
            metric = self.metric
            logs = parallel.map_stack(
                lambda c: metric.log(ref, c), self.pooled.conns
            )
            self._pooled_vectors = parallel.map_stack(
                lambda t: metric.vec(ref, t), logs
            )
        return self._pooled_vectors

    def compute_scatters(self):
        """Within, between and total scatter at the grand mean; returns (W, B, T)."""
        vecs = self.pooled_vectors()
        sizes = self.sizes
        grand = vecs.mean(axis=0)
        d = vecs.shape[1]
        w = np.zeros((d, d))
        b = np.zeros((d, d))
        lo = 0
        for n_j in sizes:
            block = vecs[lo : lo + n_j]
            lo += n_j
            mean_j = block.mean(axis=0)
            dev = block - mean_j
            w += dev.T @ dev
            diff = mean_j - grand
            b += n_j * np.outer(diff, diff)
        dev_all = vecs - grand
        t = dev_all.T @ dev_all
        self.within_scatter = (w + w.T) / 2.0
        self.between_scatter = (b + b.T) / 2.0
        self.total_scatter = (t + t.T) / 2.0
        return self.within_scatter, self.between_scatter, self.total_scatter
