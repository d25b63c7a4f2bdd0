"""One group of SPD matrices with synchronized representations.

A :class:`ConnectomeSample` keeps up to three views of the same data: points
on the manifold (``conns``), tangent vectors at a reference point
(``tangents``), and their isometric vectorizations (``vectors``). Mutating
operations keep whichever views exist consistent and drop statistics that
the mutation staled.

The Fréchet mean is the mini-batch gradient descent: per epoch, shuffle,
step the reference along the mean tangent of each batch, and measure the
relative Frobenius change of the reference across the epoch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import parallel
from .core import (
    as_matrix,
    assert_spd_stack,
    cholesky_lower,
    frobenius_norm,
    identity,
    validate_spd,
)
from .errors import DomainError, NumericalError, ShapeError, StateError
from .metrics import MetricDescriptor, distance, tri_dim

# Centering is approximate: the post-centering mean vectorization must have
# norm at most this coefficient times sqrt(d).
CENTERING_TOL_COEF = 1e-3


@dataclass
class FrechetConfig:
    """Tuning knobs of the mini-batch Fréchet mean.

    batch_size None means the full sample (one batch per epoch).
    """

    learning_rate: float = 0.2
    tolerance: float = 0.05
    max_iterations: int = 20
    batch_size: Optional[int] = None
    seed: int = 0

    def check(self, n: int) -> int:
        if self.learning_rate <= 0:
            raise ShapeError("learning_rate must be positive")
        if self.max_iterations < 1:
            raise ShapeError("max_iterations must be >= 1")
        bs = n if self.batch_size is None else int(self.batch_size)
        if not 1 <= bs <= n:
            raise ShapeError(f"batch_size must be in [1, {n}], got {bs}")
        return bs


def frechet_mean_stack(points, metric, config=None, start=None):
    """Mini-batch Fréchet mean of a stack of SPD matrices.

    Returns (mean, epochs, final_delta, converged). ``points`` are treated
    as ground truth: each batch's tangent vectors are recomputed at the
    current reference, which reads the same values as relocating the whole
    tangent list after every step.
    """
    cfg = config if config is not None else FrechetConfig()
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    bs = cfg.check(n)
    ref = identity(pts.shape[-1]) if start is None else as_matrix(start)
    rng = parallel.rng_for(cfg.seed)
    delta = np.inf
    converged = False
    epochs = 0
    for _ in range(cfg.max_iterations):
        start_ref = ref
        order = rng.permutation(n)
        for lo in range(0, n, bs):
            batch = pts[order[lo : lo + bs]]
            tangents = parallel.map_stack(lambda c: metric.log(ref, c), batch)
            grad = tangents.mean(axis=0)
            ref = metric.exp(ref, cfg.learning_rate * grad)
        delta = frobenius_norm(ref - start_ref) / frobenius_norm(start_ref)
        epochs += 1
        if delta < cfg.tolerance:
            converged = True
            break
    return ref, epochs, float(delta), converged


class ConnectomeSample:
    """One group of SPD matrices under a fixed metric.

    Construct through :meth:`from_connectomes` or :meth:`from_vectors`.
    """

    def __init__(self, metric: MetricDescriptor, *, conns=None, tangents=None,
                 vectors=None, reference=None, p=None):
        self.metric = metric
        self._conns = conns
        self._tangents = tangents
        self._vectors = vectors
        self._reference = reference
        self._p = p
        self.frechet_mean = None
        self.frechet_epochs = None
        self.frechet_delta = None
        self.frechet_converged = None
        self.variation = None
        self.sample_cov = None
        self.is_centered = False

    # construction ---------------------------------------------------------

    @classmethod
    def from_connectomes(cls, conns, metric: MetricDescriptor) -> "ConnectomeSample":
        mats = [as_matrix(c) for c in conns]
        if len(mats) == 0:
            raise ShapeError("need at least one connectome")
        shapes = {m.shape for m in mats}
        if len(shapes) != 1 or mats[0].ndim != 2:
            raise ShapeError(f"connectomes must share one square shape, got {shapes}")
        stack = np.stack(mats)
        assert_spd_stack(stack, "connectome")
        return cls(metric, conns=stack, p=stack.shape[-1])

    @classmethod
    def from_vectors(cls, vectors, reference, metric: MetricDescriptor) -> "ConnectomeSample":
        ref = validate_spd(reference).full()
        v = np.asarray(vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"vectors must be (n, d), got shape {v.shape}")
        d = tri_dim(ref.shape[0])
        if v.shape[1] != d:
            raise ShapeError(f"vector length {v.shape[1]} != p(p+1)/2 = {d}")
        return cls(metric, vectors=v, reference=ref, p=ref.shape[0])

    # views -----------------------------------------------------------------

    @property
    def n(self) -> int:
        for rep in (self._conns, self._tangents, self._vectors):
            if rep is not None:
                return rep.shape[0]
        raise StateError("sample has no representation")

    @property
    def p(self) -> int:
        return self._p

    @property
    def d(self) -> int:
        return tri_dim(self._p)

    @property
    def conns(self):
        return self._conns

    @property
    def tangents(self):
        return self._tangents

    @property
    def vectors(self):
        return self._vectors

    @property
    def reference(self):
        return self._reference

    # representation moves --------------------------------------------------

    def compute_tangents(self, reference=None) -> None:
        """Tangent images of the connectomes at ``reference`` (default identity)."""
        if self._conns is None:
            raise StateError("no connectome representation; compute_conns first")
        ref = identity(self._p) if reference is None else validate_spd(reference).full()
        self._tangents = parallel.map_stack(
            lambda c: self.metric.log(ref, c), self._conns
        )
        self._reference = ref
        self._vectors = None
        self.sample_cov = None
        self.is_centered = False

    def compute_vecs(self) -> None:
        if self._tangents is None:
            raise StateError("no tangent representation; compute_tangents first")
        ref = self._reference
        self._vectors = parallel.map_stack(
            lambda t: self.metric.vec(ref, t), self._tangents
        )

    def compute_unvec(self) -> None:
        if self._vectors is None:
            raise StateError("no vector representation")
        ref = self._reference
        self._tangents = parallel.map_stack(
            lambda x: self.metric.unvec(ref, x), self._vectors
        )

    def compute_conns(self) -> None:
        if self._tangents is None:
            raise StateError("no tangent representation; compute_unvec first")
        ref = self._reference
        self._conns = parallel.map_stack(
            lambda t: self.metric.exp(ref, t), self._tangents
        )

    def relocate(self, new_reference) -> None:
        """Re-express all tangents at a new reference; manifold points stay put."""
        if self._tangents is None:
            raise StateError("no tangent representation to relocate")
        new_ref = validate_spd(new_reference).full()
        points = self._conns
        if points is None:
            old = self._reference
            points = parallel.map_stack(
                lambda t: self.metric.exp(old, t), self._tangents
            )
        self._tangents = parallel.map_stack(
            lambda c: self.metric.log(new_ref, c), points
        )
        self._reference = new_ref
        self._vectors = None
        self.sample_cov = None
        self.is_centered = False

    # statistics --------------------------------------------------------------

    def _points(self):
        if self._conns is not None:
            return self._conns
        if self._tangents is None:
            raise StateError("sample has neither connectomes nor tangents")
        ref = self._reference
        return parallel.map_stack(lambda t: self.metric.exp(ref, t), self._tangents)

    def compute_frechet_mean(self, config=None):
        """Run the mini-batch descent and store the mean; returns it."""
        start = self._reference if self._tangents is not None else None
        mean, epochs, delta, converged = frechet_mean_stack(
            self._points(), self.metric, config, start=start
        )
        self.frechet_mean = mean
        self.frechet_epochs = epochs
        self.frechet_delta = delta
        self.frechet_converged = converged
        self.variation = None
        return mean

    def center(self, config=None) -> None:
        """Relocate to the Fréchet mean and polish until the mean vec is near zero.

        The descent stops on a coarse reference-movement criterion, so after
        relocating, damped full-batch steps continue until the mean tangent
        norm drops under CENTERING_TOL_COEF * sqrt(d). Unit steps can
        oscillate on widely spread samples, so the polish reuses the
        configured learning rate.
        """
        if self.frechet_mean is None:
            self.compute_frechet_mean(config)
        if self._tangents is None:
            self.compute_tangents(self.frechet_mean)
        else:
            self.relocate(self.frechet_mean)
        lr = (config or FrechetConfig()).learning_rate
        tol = CENTERING_TOL_COEF * np.sqrt(self.d)
        for _ in range(200):
            grad = self._tangents.mean(axis=0)
            norm = np.linalg.norm(self.metric.vec(self._reference, grad))
            if norm <= tol:
                break
            self.relocate(self.metric.exp(self._reference, lr * grad))
        else:
            raise NumericalError("centering did not reach tolerance in 200 steps")
        self.frechet_mean = self._reference
        self.variation = None
        self.is_centered = True

    def compute_variation(self) -> float:
        """Average squared distance to the Fréchet mean."""
        if self.frechet_mean is None:
            raise StateError("compute_frechet_mean first")
        mean = self.frechet_mean
        points = self._points()
        dists = parallel.map_stack(
            lambda c: np.atleast_1d(distance(self.metric, mean, c)), points
        )
        self.variation = float(np.mean(dists**2))
        return self.variation

    def compute_sample_cov(self) -> np.ndarray:
        """Unbiased covariance of the vector images, (n-1) denominator."""
        if self._vectors is None:
            raise StateError("no vector representation; compute_vecs first")
        if self.n < 2:
            raise StateError("sample covariance needs n >= 2")
        centered = self._vectors - self._vectors.mean(axis=0)
        cov = centered.T @ centered / (self.n - 1)
        self.sample_cov = (cov + cov.T) / 2.0
        return self.sample_cov


def rspdnorm(n: int, reference, dispersion, metric: MetricDescriptor,
             seed=0) -> ConnectomeSample:
    """Random SPD-normal sample: zero-mean Gaussian in vec coordinates.

    Draws ``n`` tangent vectorizations from N(0, dispersion) at ``reference``
    and stores them as the vector representation; the other representations
    stay absent until requested.

    ``dispersion`` must be SPD of size d = p(p+1)/2.
    """
    if n < 1:
        raise ShapeError("n must be >= 1")
    ref = validate_spd(reference).full()
    d = tri_dim(ref.shape[0])
    disp = as_matrix(dispersion)
    if disp.shape != (d, d):
        raise ShapeError(
            f"dispersion must be {d} x {d} (p(p+1)/2 for p={ref.shape[0]}), "
            f"got {disp.shape}"
        )
    try:
        chol = cholesky_lower(disp)
    except DomainError as exc:
        raise DomainError(f"dispersion must be SPD: {exc}") from exc
    rng = parallel.rng_for(seed)
    vectors = rng.standard_normal((n, d)) @ chol.T
    return ConnectomeSample.from_vectors(vectors, ref, metric)
