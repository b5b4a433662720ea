"""Small dense complex linear algebra used throughout the package.

Vectors are stored as rows: a list of ``k`` vectors in ``C^N`` is an array of
shape ``(k, N)``.  Every rank decision goes through :class:`Tolerance`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class Inconsistent(ValueError):
    """A linear system has no solution within tolerance."""


@dataclass(frozen=True)
class Tolerance:
    """Singular values ``s`` count as nonzero when ``s > rel * s_max + abs``."""

    rel: float = 1e-8
    abs: float = 1e-12

    def __post_init__(self):
        if not self.rel > 0:
            raise ValueError(f"rel must be positive, got {self.rel}")
        if self.abs < 0:
            raise ValueError(f"abs must be nonnegative, got {self.abs}")

    def threshold(self, smax: float) -> float:
        return self.rel * smax + self.abs


DEFAULT_TOL = Tolerance()


def as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def singular_values(M) -> np.ndarray:
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def rank(M, tol: Tolerance = DEFAULT_TOL, scale: float | None = None) -> int:
    """Numerical rank; 0 for the zero (or empty) matrix.

    The cutoff is relative to the largest singular value unless ``scale`` is
    given, in which case it is relative to ``scale`` (use this when the rows
    are parts of unit vectors and may all be negligible).
    """
    s = singular_values(M)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol.threshold(s[0] if scale is None else scale)))


def orthonormal_basis(
    vectors, ambient_dim: int | None = None, tol: Tolerance = DEFAULT_TOL, scale: float | None = None
) -> np.ndarray:
    """Orthonormal rows spanning the row span of ``vectors`` (see :func:`rank` for ``scale``)."""
    V = _rows(vectors, ambient_dim)
    if V.shape[0] == 0:
        return V
    U, s, Vh = np.linalg.svd(V, full_matrices=False)
    if s[0] == 0:
        return np.zeros((0, V.shape[1]), dtype=complex)
    r = int(np.sum(s > tol.threshold(s[0] if scale is None else scale)))
    return Vh[:r]


def orthocomplement(vectors, ambient_dim: int, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of span(vectors)."""
    V = _rows(vectors, ambient_dim)
    if V.shape[0] == 0:
        return np.eye(ambient_dim, dtype=complex)
    # v is orthogonal to every row s  <=>  conj(S) @ v = 0
    _, s, Vh = np.linalg.svd(V.conj(), full_matrices=True)
    r = 0 if s[0] == 0 else int(np.sum(s > tol.threshold(s[0])))
    return Vh[r:].conj().copy()


def null_space(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal rows spanning ``{x : M x = 0}``."""
    M = as_matrix(M)
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    r = 0 if s[0] == 0 else int(np.sum(s > tol.threshold(s[0])))
    return Vh[r:].conj().copy()


def least_squares(A, b, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Minimum-norm solution of ``A x = b``; raises :class:`Inconsistent` if the residual is too large."""
    A = as_matrix(A)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A is {A.shape}, b has length {b.shape[0]}")
    if A.shape[0] == 0:
        return np.zeros(A.shape[1], dtype=complex)
    x, *_ = np.linalg.lstsq(A, b, rcond=tol.rel)
    resid = np.linalg.norm(A @ x - b)
    if resid > tol.rel * np.linalg.norm(b) + tol.abs:
        raise Inconsistent(f"least-squares residual {resid:.3e} exceeds tolerance")
    return x


def subspace_distance(U, V, ambient_dim: int | None = None) -> float:
    """Spectral norm of the difference of the orthogonal projectors onto two row spans.

    Both inputs must already have orthonormal rows.
    """
    U = _rows(U, ambient_dim)
    V = _rows(V, U.shape[1])
    P = U.T @ U.conj()
    Q = V.T @ V.conj()
    if P.size == 0:
        return 0.0
    return float(np.linalg.norm(P - Q, 2))


def _rows(vectors, ambient_dim):
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        V = vectors.astype(complex, copy=False)
    else:
        vectors = list(vectors)
        if not vectors:
            if ambient_dim is None:
                raise ValueError("ambient_dim is required for an empty vector list")
            return np.zeros((0, ambient_dim), dtype=complex)
        V = np.array([np.asarray(v, dtype=complex).reshape(-1) for v in vectors])
    if ambient_dim is not None and V.shape[1] != ambient_dim:
        raise ValueError(f"vectors have length {V.shape[1]}, expected {ambient_dim}")
    return V


# --- matrix pencils -------------------------------------------------------

@dataclass
class PencilSpectrum:
    """Roots of ``det(M0 + t M1)``.

    ``finite`` holds the finite roots, ``infinite`` flags a root at infinity
    (``M1`` singular) and ``singular`` marks a pencil whose determinant
    vanishes identically; in that case the root lists are empty.
    ``homogeneous`` gives every root as a unit pair ``(s, t)`` with
    ``det(s M0 + t M1) = 0``.
    """

    finite: list = field(default_factory=list)
    infinite: bool = False
    singular: bool = False
    homogeneous: list = field(default_factory=list)


def sample_points(count: int, seed: int = 0) -> list[complex]:
    """Deterministic probe points ``1, -1, 2, -2, ...`` followed by one seeded random complex point."""
    pts = []
    k = 1
    while len(pts) < count:
        pts.append(complex(k))
        if len(pts) < count:
            pts.append(complex(-k))
        k += 1
    rng = np.random.default_rng(seed)
    pts.append(complex(rng.normal(), rng.normal()))
    return pts


def is_singular_pencil(M0, M1, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> bool:
    M0, M1 = as_matrix(M0), as_matrix(M1)
    d = M0.shape[0]
    for t in sample_points(max(8, 2 * d), seed):
        if rank(M0 + t * M1, tol) == d:
            return False
    return True


def pencil_eigenvalues(M0, M1, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> PencilSpectrum:
    """Generalized eigenvalues ``t`` with ``det(M0 + t M1) = 0`` of a square pencil."""
    M0, M1 = as_matrix(M0), as_matrix(M1)
    if M0.shape != M1.shape or M0.shape[0] != M0.shape[1]:
        raise ValueError(f"pencil must be square with matching shapes, got {M0.shape} and {M1.shape}")
    d = M0.shape[0]
    if d == 0 or is_singular_pencil(M0, M1, tol, seed):
        return PencilSpectrum(singular=True)
    # M0 v = lam * (-M1) v  with lam = a / b  <=>  (b M0 + a M1) v = 0
    w = scipy.linalg.eigvals(M0, -M1, homogeneous_eigvals=True)
    out = PencilSpectrum(infinite=rank(M1, tol) < d)
    for a, b in zip(w[0], w[1]):
        pair = np.array([b, a], dtype=complex)
        pair /= np.linalg.norm(pair)
        out.homogeneous.append(pair)
        if abs(b) > tol.rel * abs(a):
            out.finite.append(complex(a / b))
    return out
