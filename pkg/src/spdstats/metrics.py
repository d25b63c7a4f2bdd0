"""Riemannian metrics on the SPD manifold.

A metric is a bundle of four maps (log, exp, vec, unvec) plus optional
parallel transport, packaged as a :class:`MetricDescriptor`. All maps take
the reference point first and are stack aware in the point/tangent argument:
``log(ref, points)`` with ``points`` shaped ``(n, p, p)`` returns ``(n, p, p)``.

``vec`` is a linear isometry onto R^d, d = p(p+1)/2: the Euclidean norm of
the coordinates equals the metric norm of the tangent vector. Five metrics
are registered: euclidean, airm, log-euclidean, log-cholesky and
bures-wasserstein. The registry is open, user metrics plug in through
:func:`register_metric`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    _check_positive,
    _check_square,
    _eigh,
    _recon,
    _recon_full,
    as_matrix,
    assert_spd_stack,
    cholesky_lower,
    matrix_exp_sym,
    matrix_log_spd,
    matrix_sqrt_spd,
    solve_lyapunov,
)
from .errors import ShapeError, UnsupportedMetric, ValidationError

_SQRT2 = np.sqrt(2.0)


def tri_dim(p: int) -> int:
    """Dimension of the symmetric tangent space, p(p+1)/2."""
    return p * (p + 1) // 2


def dim_from_tri(d: int) -> int:
    """Matrix dimension p with p(p+1)/2 = d."""
    p = int((np.sqrt(8 * d + 1) - 1) // 2)
    if tri_dim(p) != d:
        raise ShapeError(f"{d} is not a triangular dimension p(p+1)/2")
    return p


def sym_to_tri(v) -> np.ndarray:
    """Upper-triangle coordinates, row major, off-diagonals scaled by sqrt(2).

    This makes the map a linear isometry between (Sym_p, Frobenius) and R^d.
    """
    a = np.asarray(v, dtype=np.float64)
    _check_square(a)
    p = a.shape[-1]
    iu = np.triu_indices(p)
    coords = a[..., iu[0], iu[1]].copy()
    coords[..., iu[0] != iu[1]] *= _SQRT2
    return coords


def tri_to_sym(coords) -> np.ndarray:
    """Inverse of :func:`sym_to_tri`."""
    x = np.asarray(coords, dtype=np.float64)
    p = dim_from_tri(x.shape[-1])
    iu = np.triu_indices(p)
    vals = x.copy()
    vals[..., iu[0] != iu[1]] /= _SQRT2
    out = np.zeros(x.shape[:-1] + (p, p))
    out[..., iu[0], iu[1]] = vals
    out[..., iu[1], iu[0]] = vals
    return out


@dataclass(frozen=True)
class MetricDescriptor:
    """A Riemannian metric as its four maps plus optional transport.

    Fields
    ------
    name : str
        Registry key, also the CLI spelling.
    log, exp : callables
        ``log(ref, point) -> tangent`` and ``exp(ref, tangent) -> point``.
    vec, unvec : callables
        ``vec(ref, tangent) -> coords`` and its linear inverse.
    transport : callable or None
        ``transport(frm, to, tangent)``; None when the metric has no
        implemented parallel transport.
    """

    name: str
    log: Callable
    exp: Callable
    vec: Callable
    unvec: Callable
    transport: Optional[Callable] = None

    @property
    def supports_transport(self) -> bool:
        return self.transport is not None


@dataclass(frozen=True)
class TangentImage:
    """A symmetric tangent vector paired with its SPD reference point."""

    vector: np.ndarray
    reference: np.ndarray

    def __post_init__(self):
        v = as_matrix(self.vector)
        r = as_matrix(self.reference)
        if v.shape != r.shape:
            raise ShapeError(
                f"tangent shape {v.shape} does not match reference {r.shape}"
            )


# ---------------------------------------------------------------------------
# euclidean


def _euclid_log(ref, point):
    return as_matrix(point) - as_matrix(ref)


def _euclid_exp(ref, tangent):
    out = as_matrix(ref) + as_matrix(tangent)
    assert_spd_stack(out, "euclidean exponential output")
    return out


def _euclid_vec(ref, tangent):
    return sym_to_tri(tangent)


def _euclid_unvec(ref, coords):
    return tri_to_sym(coords)


def _euclid_transport(frm, to, tangent):
    return np.asarray(tangent, dtype=np.float64).copy()


# ---------------------------------------------------------------------------
# airm


def _airm_factors(ref):
    a = as_matrix(ref)
    if a.ndim != 2:
        raise ShapeError("reference must be a single matrix")
    w, q = _eigh(a)
    _check_positive(w, "reference")
    sq = _recon(q, np.sqrt(w))
    isq = _recon(q, 1.0 / np.sqrt(w))
    return sq, isq


def _airm_log(ref, point):
    sq, isq = _airm_factors(ref)
    m = isq @ as_matrix(point) @ isq
    return sq @ matrix_log_spd(m) @ sq


def _airm_exp(ref, tangent):
    sq, isq = _airm_factors(ref)
    m = isq @ as_matrix(tangent) @ isq
    return sq @ matrix_exp_sym(m) @ sq


def _airm_vec(ref, tangent):
    _, isq = _airm_factors(ref)
    return sym_to_tri(isq @ as_matrix(tangent) @ isq)


def _airm_unvec(ref, coords):
    sq, _ = _airm_factors(ref)
    return sq @ tri_to_sym(coords) @ sq


def _airm_transport(frm, to, tangent):
    # E = (to frm^{-1})^{1/2}, computed as sqrt(frm) sqrtm(isq to isq) isq(frm)
    sq, isq = _airm_factors(frm)
    e = sq @ matrix_sqrt_spd(isq @ as_matrix(to) @ isq) @ isq
    return e @ as_matrix(tangent) @ e.T


# ---------------------------------------------------------------------------
# log-euclidean
#
# log(ref, P) pushes logm(P) - logm(ref) to T_ref through the differential of
# expm at logm(ref); exp goes the other way through the differential of logm
# at ref. Both differentials are Daleckii-Krein divided differences in the
# eigenbasis of ref, evaluated in cancellation-free forms.


def _sinhc(x):
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def _atanhc(x):
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.arctanh(x[nz]) / x[nz]
    return out


def _dd_exp(w):
    """First divided differences of exp on eigenvalue pairs of w."""
    a = w[..., :, None]
    b = w[..., None, :]
    return np.exp((a + b) / 2.0) * _sinhc((a - b) / 2.0)


def _dd_log(w):
    """First divided differences of log on eigenvalue pairs of w (w > 0)."""
    a = w[..., :, None]
    b = w[..., None, :]
    s = a + b
    return (2.0 / s) * _atanhc((a - b) / s)


def _frame_apply(q, mult, h):
    """q (q^T h q * mult) q^T, the divided-difference differential."""
    qt = np.swapaxes(q, -1, -2)
    return _recon_full(q, (qt @ h @ q) * mult)


def _le_frame(ref):
    a = as_matrix(ref)
    if a.ndim != 2:
        raise ShapeError("reference must be a single matrix")
    w, q = _eigh(a)
    _check_positive(w, "reference")
    return w, np.log(w), q


def _le_log(ref, point):
    w, lw, q = _le_frame(ref)
    diff = matrix_log_spd(point) - _recon(q, lw)
    return _frame_apply(q, _dd_exp(lw), diff)


def _le_exp(ref, tangent):
    w, lw, q = _le_frame(ref)
    z = _frame_apply(q, _dd_log(w), as_matrix(tangent))
    return matrix_exp_sym(_recon(q, lw) + z)


def _le_vec(ref, tangent):
    w, _, q = _le_frame(ref)
    return sym_to_tri(_frame_apply(q, _dd_log(w), as_matrix(tangent)))


def _le_unvec(ref, coords):
    _, lw, q = _le_frame(ref)
    return _frame_apply(q, _dd_exp(lw), tri_to_sym(coords))


def _le_transport(frm, to, tangent):
    # identity in log coordinates
    wf, _, qf = _le_frame(frm)
    _, lwt, qt = _le_frame(to)
    z = _frame_apply(qf, _dd_log(wf), as_matrix(tangent))
    return _frame_apply(qt, _dd_exp(lwt), z)


# ---------------------------------------------------------------------------
# log-cholesky
#
# Coordinates phi(P) = strict_lower(L) + log diag(L) with P = L L^T. The
# metric is flat in phi coordinates; log and exp are pullbacks of vector
# space subtraction and addition through the differential of phi.


def _diag_embed(vals):
    p = vals.shape[-1]
    out = np.zeros(vals.shape[:-1] + (p, p))
    idx = np.arange(p)
    out[..., idx, idx] = vals
    return out


def _diag_of(a):
    return np.diagonal(a, axis1=-2, axis2=-1)


def _lc_phi_of_l(l):
    return np.tril(l, -1) + _diag_embed(np.log(_diag_of(l)))


def _lc_chol_ref(ref):
    a = as_matrix(ref)
    if a.ndim != 2:
        raise ShapeError("reference must be a single matrix")
    return cholesky_lower(a)


def _lc_dphi(l, tangent):
    """dphi at P = L L^T applied to a symmetric tangent (stack aware)."""
    t = as_matrix(tangent)
    # G = L^{-1} tangent L^{-T}
    half = np.linalg.solve(l, t)
    g = np.swapaxes(np.linalg.solve(l, np.swapaxes(half, -1, -2)), -1, -2)
    dl = l @ (np.tril(g, -1) + _diag_embed(_diag_of(g) / 2.0))
    return np.tril(dl, -1) + _diag_embed(_diag_of(dl) / _diag_of(l))


def _lc_dphi_inv(l, w):
    """Inverse of :func:`_lc_dphi`: lower-triangular displacement to tangent."""
    dl = np.tril(w, -1) + _diag_embed(_diag_of(w) * _diag_of(l))
    lt = np.swapaxes(l, -1, -2) if l.ndim > 2 else l.T
    return dl @ lt + l @ np.swapaxes(dl, -1, -2)


def _lc_log(ref, point):
    l = _lc_chol_ref(ref)
    w = _lc_phi_of_l(cholesky_lower(point)) - _lc_phi_of_l(l)
    return _lc_dphi_inv(l, w)


def _lc_exp(ref, tangent):
    l = _lc_chol_ref(ref)
    z = _lc_phi_of_l(l) + _lc_dphi(l, tangent)
    lz = np.tril(z, -1) + _diag_embed(np.exp(_diag_of(z)))
    return lz @ np.swapaxes(lz, -1, -2)


def _lc_tril_indices(p):
    return np.tril_indices(p)


def _lc_vec(ref, tangent):
    l = _lc_chol_ref(ref)
    w = _lc_dphi(l, tangent)
    il = _lc_tril_indices(l.shape[-1])
    return w[..., il[0], il[1]]


def _lc_unvec(ref, coords):
    l = _lc_chol_ref(ref)
    x = np.asarray(coords, dtype=np.float64)
    p = dim_from_tri(x.shape[-1])
    il = _lc_tril_indices(p)
    w = np.zeros(x.shape[:-1] + (p, p))
    w[..., il[0], il[1]] = x
    return _lc_dphi_inv(l, w)


# ---------------------------------------------------------------------------
# bures-wasserstein
#
# exp(S, V) = S + V + L S L with L the Lyapunov solution of L S + S L = V.
# log(S, P) = S^{1/2} (S^{1/2} P S^{1/2})^{1/2} S^{-1/2} + transpose - 2 S.
# vec uses the closed-form orthonormal frame in the eigenbasis of the
# reference: the metric g_S(V, V) = tr(L_V V) / 2 diagonalizes in triangle
# coordinates of Q^T V Q with weights 1/(4 lambda_i) on the diagonal and
# 1/(lambda_i + lambda_j) off it.


def _bw_frame(ref):
    a = as_matrix(ref)
    if a.ndim != 2:
        raise ShapeError("reference must be a single matrix")
    w, q = _eigh(a)
    _check_positive(w, "reference")
    return a, w, q


def _bw_log(ref, point):
    a, w, q = _bw_frame(ref)
    sq = _recon(q, np.sqrt(w))
    isq = _recon(q, 1.0 / np.sqrt(w))
    cross = matrix_sqrt_spd(sq @ as_matrix(point) @ sq)
    t = sq @ cross @ isq
    return t + np.swapaxes(t, -1, -2) - 2.0 * a


def _bw_exp(ref, tangent):
    a, _, _ = _bw_frame(ref)
    t = as_matrix(tangent)
    l = solve_lyapunov(a, t)
    out = a + t + l @ a @ l
    out = (out + np.swapaxes(out, -1, -2)) / 2.0
    assert_spd_stack(out, "bures-wasserstein exponential output")
    return out


def _bw_weights(w):
    p = w.shape[-1]
    f = 1.0 / np.sqrt(w[:, None] + w[None, :])
    idx = np.arange(p)
    f[idx, idx] = 1.0 / (2.0 * np.sqrt(w))
    return f


def _bw_vec(ref, tangent):
    _, w, q = _bw_frame(ref)
    vt = np.swapaxes(q, -1, -2) @ as_matrix(tangent) @ q
    f = _bw_weights(w)
    iu = np.triu_indices(w.shape[-1])
    return (vt * f)[..., iu[0], iu[1]]


def _bw_unvec(ref, coords):
    _, w, q = _bw_frame(ref)
    x = np.asarray(coords, dtype=np.float64)
    p = dim_from_tri(x.shape[-1])
    iu = np.triu_indices(p)
    vt = np.zeros(x.shape[:-1] + (p, p))
    vt[..., iu[0], iu[1]] = x
    vt[..., iu[1], iu[0]] = x
    return _recon_full(q, vt / _bw_weights(w))


# ---------------------------------------------------------------------------
# registry and derived operations


EUCLIDEAN = MetricDescriptor(
    "euclidean",
    log=_euclid_log,
    exp=_euclid_exp,
    vec=_euclid_vec,
    unvec=_euclid_unvec,
    transport=_euclid_transport,
)

AIRM = MetricDescriptor(
    "airm",
    log=_airm_log,
    exp=_airm_exp,
    vec=_airm_vec,
    unvec=_airm_unvec,
    transport=_airm_transport,
)

LOG_EUCLIDEAN = MetricDescriptor(
    "log-euclidean",
    log=_le_log,
    exp=_le_exp,
    vec=_le_vec,
    unvec=_le_unvec,
    transport=_le_transport,
)

LOG_CHOLESKY = MetricDescriptor(
    "log-cholesky",
    log=_lc_log,
    exp=_lc_exp,
    vec=_lc_vec,
    unvec=_lc_unvec,
)

BURES_WASSERSTEIN = MetricDescriptor(
    "bures-wasserstein",
    log=_bw_log,
    exp=_bw_exp,
    vec=_bw_vec,
    unvec=_bw_unvec,
)

_REGISTRY = {
    m.name: m
    for m in (EUCLIDEAN, AIRM, LOG_EUCLIDEAN, LOG_CHOLESKY, BURES_WASSERSTEIN)
}


def metric_names() -> list:
    return sorted(_REGISTRY)


def get_metric(name: str) -> MetricDescriptor:
    """Look up a metric by name (underscores accepted for hyphens)."""
    key = str(name).strip().lower().replace("_", "-")
    try:
        return _REGISTRY[key]
    except KeyError:
        raise ValidationError(
            f"unknown metric {name!r}; available: {', '.join(metric_names())}"
        ) from None


def register_metric(metric: MetricDescriptor) -> None:
    """Add a user-defined metric to the registry. Names are claimed once."""
    key = metric.name.replace("_", "-")
    if key in _REGISTRY:
        raise ValidationError(f"metric {key!r} is already registered")
    _REGISTRY[key] = metric


def distance(metric: MetricDescriptor, a, b):
    """Geodesic distance, the vec-coordinate norm of log(a, b) (stack aware in b)."""
    coords = metric.vec(a, metric.log(a, b))
    out = np.linalg.norm(coords, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def parallel_transport(metric: MetricDescriptor, frm, to, tangent):
    """Transport a tangent vector (or stack) from T_frm to T_to."""
    if metric.transport is None:
        raise UnsupportedMetric(
            f"metric {metric.name!r} has no implemented parallel transport"
        )
    return metric.transport(frm, to, tangent)
