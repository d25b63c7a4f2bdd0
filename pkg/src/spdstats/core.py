"""Dense linear algebra on symmetric and SPD matrices.

Every operation here accepts either a single ``(p, p)`` array or a stack of
matrices shaped ``(..., p, p)`` and applies itself matrix by matrix. Inputs
are assumed symmetric; only one triangle is ever read by the eigensolver, so
small asymmetries from upstream arithmetic are harmless.

Matrix functions (exp, log, sqrt) go through a full symmetric
eigendecomposition rather than scaling-and-squaring: it is exact for
symmetric input and the eigen data is reused by the metric differentials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, ShapeError

# Positive definiteness threshold: relative to the largest eigenvalue
# magnitude, with an absolute floor so the zero matrix is rejected too.
EPS_REL = 1e-10
EPS_FLOOR = 1e-12

# exp(710) overflows float64
_EXP_OVERFLOW = 709.0


def as_matrix(x) -> np.ndarray:
    """Return ``x`` as a float64 ndarray, unwrapping SymMatrix/SpdMatrix."""
    if hasattr(x, "full"):
        return x.full()
    return np.asarray(x, dtype=np.float64)


def identity(p: int) -> np.ndarray:
    """The p x p identity matrix."""
    return np.eye(p)


def _check_square(a, name="matrix"):
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")


def _eigh(a):
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc


def _recon(q, fw):
    """Assemble Q diag(fw) Q^T for stacked inputs, symmetrized."""
    out = (q * fw[..., None, :]) @ np.swapaxes(q, -1, -2)
    return (out + np.swapaxes(out, -1, -2)) / 2.0


def spd_eps(w) -> np.ndarray:
    """Positivity threshold for eigenvalue vectors ``w`` shaped (..., p)."""
    return np.maximum(EPS_REL * np.max(np.abs(w), axis=-1), EPS_FLOOR)


def _check_positive(w, what="matrix"):
    """Raise DomainError if any matrix in the stack has lambda_min <= eps."""
    lam_min = w[..., 0]
    bad = lam_min <= spd_eps(w)
    if np.any(bad):
        if np.ndim(bad) == 0:
            raise DomainError(
                f"{what} is not positive definite "
                f"(min eigenvalue {float(lam_min):.6e})",
                lambda_min=float(lam_min),
            )
        idx = tuple(np.argwhere(bad)[0])
        val = float(lam_min[idx])
        pos = idx[0] if len(idx) == 1 else idx
        raise DomainError(
            f"{what} at index {pos} is not positive definite "
            f"(min eigenvalue {val:.6e})",
            lambda_min=val,
            index=pos,
        )


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric matrix in packed storage.

    Parameters
    ----------
    dim : int
        Matrix dimension p.
    packed : ndarray
        Upper triangle, row major, length p(p+1)/2.
    """

    dim: int
    packed: np.ndarray

    @classmethod
    def from_full(cls, a) -> "SymMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ShapeError(f"expected a single 2-d matrix, got shape {a.shape}")
        _check_square(a, "symmetric matrix")
        if not np.all(np.isfinite(a)):
            raise DomainError("matrix entries must be finite")
        sym = (a + a.T) / 2.0
        iu = np.triu_indices(a.shape[0])
        return cls(a.shape[0], sym[iu])

    def full(self) -> np.ndarray:
        p = self.dim
        out = np.zeros((p, p))
        out[np.triu_indices(p)] = self.packed
        return out + np.triu(out, 1).T


@dataclass(frozen=True)
class SpdMatrix:
    """Certified SPD matrix; construct through :func:`validate_spd`."""

    sym: SymMatrix
    min_eigenvalue: float

    @property
    def dim(self) -> int:
        return self.sym.dim

    @property
    def certified(self) -> bool:
        return True

    def full(self) -> np.ndarray:
        return self.sym.full()


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order, eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eig(s) -> EigenDecomposition:
    """Eigendecomposition of a single symmetric matrix.

    Returns
    -------
    EigenDecomposition
        ``eigenvalues`` descending, ``eigenvectors`` orthogonal with columns
        matching the eigenvalue order.
    """
    a = as_matrix(s)
    if a.ndim != 2:
        raise ShapeError(f"sym_eig expects a single matrix, got shape {a.shape}")
    _check_square(a)
    w, q = _eigh(a)
    return EigenDecomposition(w[::-1].copy(), q[:, ::-1].copy())


def matrix_exp_sym(s) -> np.ndarray:
    """Matrix exponential of a symmetric matrix (stack aware).

    The result is SPD whenever the input is symmetric.
    """
    a = as_matrix(s)
    _check_square(a)
    w, q = _eigh(a)
    if np.max(w) > _EXP_OVERFLOW:
        raise NumericalError(
            f"matrix exponential overflows (max eigenvalue {np.max(w):.3e})"
        )
    return _recon(q, np.exp(w))


def matrix_log_spd(p_) -> np.ndarray:
    """Matrix logarithm of an SPD matrix (stack aware)."""
    a = as_matrix(p_)
    _check_square(a)
    w, q = _eigh(a)
    _check_positive(w, "matrix passed to log")
    return _recon(q, np.log(w))


def matrix_sqrt_spd(p_) -> np.ndarray:
    """Principal square root of an SPD matrix (stack aware)."""
    a = as_matrix(p_)
    _check_square(a)
    w, q = _eigh(a)
    _check_positive(w, "matrix passed to sqrt")
    return _recon(q, np.sqrt(w))


def matrix_invsqrt_spd(p_) -> np.ndarray:
    """Inverse principal square root of an SPD matrix (stack aware)."""
    a = as_matrix(p_)
    _check_square(a)
    w, q = _eigh(a)
    _check_positive(w, "matrix passed to invsqrt")
    return _recon(q, 1.0 / np.sqrt(w))


def cholesky_lower(p_) -> np.ndarray:
    """Lower Cholesky factor L with L L^T = P (stack aware)."""
    a = as_matrix(p_)
    _check_square(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise DomainError(f"matrix is not positive definite: {exc}") from exc


def solve_lyapunov(p_, v) -> np.ndarray:
    """Symmetric solution X of X P + P X = V for SPD P (stack aware).

    Solved in the eigenbasis of P, where the equation diagonalizes to
    X_ij = V_ij / (lambda_i + lambda_j).
    """
    a = as_matrix(p_)
    b = as_matrix(v)
    _check_square(a)
    if a.shape[-2:] != b.shape[-2:]:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    w, q = _eigh(a)
    _check_positive(w, "matrix passed to solve_lyapunov")
    qt = np.swapaxes(q, -1, -2)
    vt = qt @ b @ q
    den = w[..., :, None] + w[..., None, :]
    return _recon_full(q, vt / den)


def _recon_full(q, m):
    """Assemble Q M Q^T, symmetrized."""
    out = q @ m @ np.swapaxes(q, -1, -2)
    return (out + np.swapaxes(out, -1, -2)) / 2.0


def frobenius_inner(a, b):
    """Frobenius inner product, full-matrix semantics (stack aware)."""
    x = as_matrix(a)
    y = as_matrix(b)
    if x.shape[-2:] != y.shape[-2:]:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    out = np.sum(x * y, axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def frobenius_norm(a):
    """Frobenius norm (stack aware)."""
    x = as_matrix(a)
    out = np.sqrt(np.sum(x * x, axis=(-2, -1)))
    return float(out) if np.ndim(out) == 0 else out


def validate_spd(s, eps=None) -> SpdMatrix:
    """Certify a symmetric matrix as SPD.

    Parameters
    ----------
    s : array_like or SymMatrix
        Single symmetric matrix.
    eps : float, optional
        Positivity threshold. Defaults to ``max(1e-10 * |lambda|_max, 1e-12)``.

    Raises
    ------
    DomainError
        If the smallest eigenvalue is not strictly above the threshold.
    """
    sym = SymMatrix.from_full(as_matrix(s))
    a = sym.full()
    w = np.linalg.eigvalsh(a)
    lam_min = float(w[0])
    thresh = float(spd_eps(w)) if eps is None else float(eps)
    if lam_min <= thresh:
        raise DomainError(
            f"matrix is not SPD: min eigenvalue {lam_min:.6e} <= eps {thresh:.6e}",
            lambda_min=lam_min,
        )
    return SpdMatrix(sym, lam_min)


def assert_spd_stack(stack, what="matrix") -> None:
    """Check every matrix in a stack is SPD; DomainError names the first offender."""
    a = as_matrix(stack)
    _check_square(a)
    w = np.linalg.eigvalsh(a)
    _check_positive(w, what)


def is_spd(s, eps=None) -> bool:
    """True when :func:`validate_spd` would succeed."""
    try:
        validate_spd(s, eps)
    except (DomainError, ShapeError):
        return False
    return True
