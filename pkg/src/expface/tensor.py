"""Matrices, tensors, product vectors and subspaces of C^n (x) C^m.

A ``m x n`` matrix ``Z = [z_ij]`` is identified with the tensor
``sum_i (sum_j z_ij e_j) (x) e_i`` in ``C^n (x) C^m``.  We store that tensor as
the row-major flattening of ``Z``: component ``(j, i)`` sits at flat index
``i * n + j``.  Consequently the product vector ``eta (x) xi`` is
``np.kron(xi, eta)`` and corresponds to the matrix ``xi eta^T``; the rank one
matrix ``xi eta^*`` corresponds to ``conj(eta) (x) xi``.

Operators on ``C^n (x) C^m`` are then ``m x m`` arrays of ``n x n`` blocks, the
block index being the ``C^m`` index, and the partial transpose transposes the
block index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    orthocomplement,
    orthonormal_basis,
    rank,
    subspace_distance,
)

_PHASE_EPS = 1e-9


def mat_to_tensor(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {Z.shape}")
    return Z.reshape(-1).copy()


def tensor_to_mat(v, n: int, m: int = 2) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != n * m:
        raise ValueError(f"tensor has length {v.shape[0]}, expected {n * m}")
    return v.reshape(m, n).copy()


def rank_one_matrix(xi, eta) -> np.ndarray:
    """The matrix ``xi eta^*``."""
    return np.outer(np.asarray(xi, dtype=complex), np.asarray(eta, dtype=complex).conj())


def canonical_phase(v) -> np.ndarray:
    """Normalize ``v`` to unit length with its first nonzero entry real positive."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("zero vector has no canonical phase")
    v = v / nrm
    idx = int(np.argmax(np.abs(v) > _PHASE_EPS))
    return v * (abs(v[idx]) / v[idx])


def orthogonal_unit(xi) -> np.ndarray:
    """Canonical unit vector orthogonal to a nonzero ``xi`` in C^2."""
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (2,):
        raise ValueError("orthogonal_unit is defined on C^2 only")
    return canonical_phase(np.array([-xi[1].conj(), xi[0].conj()]))


@dataclass(frozen=True, eq=False)
class ProductVector:
    """The product vector ``eta (x) xi`` in canonical form.

    Construct through :meth:`make` to get the canonical representative of the
    projective ray; the raw constructor does not normalize.
    """

    eta: np.ndarray
    xi: np.ndarray

    @classmethod
    def make(cls, eta, xi) -> "ProductVector":
        eta = np.asarray(eta, dtype=complex).reshape(-1)
        xi = np.asarray(xi, dtype=complex).reshape(-1)
        if not (np.linalg.norm(eta) > 0 and np.linalg.norm(xi) > 0):
            raise ValueError("product vector factors must be nonzero")
        return cls(canonical_phase(eta), canonical_phase(xi))

    @property
    def n(self) -> int:
        return self.eta.shape[0]

    @property
    def m(self) -> int:
        return self.xi.shape[0]

    def embed(self) -> np.ndarray:
        return embed(self)

    def matrix(self) -> np.ndarray:
        """The ``m x n`` matrix of the tensor ``eta (x) xi``, i.e. ``xi eta^T``."""
        return np.outer(self.xi, self.eta)

    def conjugate(self) -> "ProductVector":
        return partial_conjugate(self)

    def __repr__(self):
        return f"ProductVector(eta={np.round(self.eta, 6)}, xi={np.round(self.xi, 6)})"


def embed(pv: ProductVector) -> np.ndarray:
    # same as np.kron(xi, eta)
    return np.outer(pv.xi, pv.eta).reshape(-1)


def partial_conjugate(pv: ProductVector) -> ProductVector:
    return ProductVector.make(pv.eta, pv.xi.conj())


def product_factors(v, n: int, m: int = 2, tol: Tolerance = DEFAULT_TOL) -> ProductVector | None:
    """Return ``v`` as a product vector if its matrix has rank one, else ``None``."""
    Z = tensor_to_mat(v, n, m)
    U, s, Vh = np.linalg.svd(Z)
    if s[0] == 0:
        return None
    if len(s) > 1 and s[1] > tol.threshold(s[0]):
        return None
    return ProductVector.make(s[0] * Vh[0], U[:, 0])


def projective_distance(u, v) -> float:
    """``1 - |<u, v>|`` for the normalized vectors; zero iff they span the same ray."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    return float(1.0 - abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))


def same_ray(p: ProductVector, q: ProductVector, eps: float = 1e-7) -> bool:
    return projective_distance(embed(p), embed(q)) < eps


def dedupe(pvs, eps: float = 1e-7) -> list[ProductVector]:
    """Keep the first member of every projective ray, in order."""
    pvs = list(pvs)
    if not pvs:
        return []
    Z = np.array([embed(pv) for pv in pvs])
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    close = 1.0 - np.abs(Z.conj() @ Z.T) < eps
    keep: list[int] = []
    for i in range(len(pvs)):
        if not any(close[i, j] for j in keep):
            keep.append(i)
    return [pvs[i] for i in keep]


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of C^n (x) C^m held as orthonormal basis rows."""

    n: int
    m: int
    basis: np.ndarray

    def __post_init__(self):
        if self.basis.shape[1:] != (self.n * self.m,):
            raise ValueError(f"basis shape {self.basis.shape} does not fit C^{self.n} (x) C^{self.m}")

    @classmethod
    def from_vectors(cls, vectors, n: int, m: int = 2, tol: Tolerance = DEFAULT_TOL, scale=None) -> "Subspace":
        return cls(n, m, orthonormal_basis(vectors, n * m, tol, scale))

    @classmethod
    def from_matrices(cls, mats, n: int | None = None, m: int | None = None, tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        mats = [np.asarray(Z, dtype=complex) for Z in mats]
        if mats:
            m, n = mats[0].shape
        if n is None or m is None:
            raise ValueError("n and m are required for an empty matrix list")
        for Z in mats:
            if Z.shape != (m, n):
                raise ValueError(f"matrix of shape {Z.shape}, expected {(m, n)}")
        return cls.from_vectors([mat_to_tensor(Z) for Z in mats], n, m, tol)

    @classmethod
    def zero(cls, n: int, m: int = 2) -> "Subspace":
        return cls(n, m, np.zeros((0, n * m), dtype=complex))

    @classmethod
    def full(cls, n: int, m: int = 2) -> "Subspace":
        return cls(n, m, np.eye(n * m, dtype=complex))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.n * self.m

    def __len__(self):
        return self.dim

    def __iter__(self):
        return iter(self.basis)

    def __repr__(self):
        return f"<Subspace of dim {self.dim} in C^{self.n} (x) C^{self.m}>"

    def matrices(self) -> list[np.ndarray]:
        return [tensor_to_mat(v, self.n, self.m) for v in self.basis]

    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis.conj()

    def project(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        return self.basis.T @ (self.basis.conj() @ v)

    def contains(self, v, tol: Tolerance = DEFAULT_TOL) -> bool:
        v = np.asarray(v, dtype=complex).reshape(-1)
        self._check_vec(v)
        return bool(np.linalg.norm(v - self.project(v)) <= tol.threshold(np.linalg.norm(v)))

    def contains_subspace(self, other: "Subspace", tol: Tolerance = DEFAULT_TOL) -> bool:
        self._check_same(other)
        return all(self.contains(v, tol) for v in other.basis)

    def complement(self, tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        return Subspace(self.n, self.m, orthocomplement(self.basis, self.ambient_dim, tol))

    def difference(self, other: "Subspace", tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        """Orthogonal complement of ``other`` inside ``self``."""
        self._check_same(other)
        if other.dim == 0:
            return self
        residue = self.basis - (self.basis @ other.basis.conj().T) @ other.basis
        return Subspace(self.n, self.m, orthonormal_basis(residue, self.ambient_dim, tol, scale=1.0))

    def span_with(self, other: "Subspace", tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        self._check_same(other)
        return Subspace.from_vectors(np.vstack([self.basis, other.basis]), self.n, self.m, tol)

    def compress(self, p, tol: Tolerance = DEFAULT_TOL) -> "Subspace":
        """Image under ``(1 - p) (x) I`` for a projection ``p`` on C^n."""
        p = np.asarray(p, dtype=complex)
        if p.shape != (self.n, self.n):
            raise ValueError(f"projection must be {self.n}x{self.n}")
        q = np.eye(self.n) - p
        imgs = [(tensor_to_mat(v, self.n, self.m) @ q.T).reshape(-1) for v in self.basis]
        # images of unit vectors: negligible ones are dropped against scale 1
        return Subspace.from_vectors(imgs, self.n, self.m, tol, scale=1.0) if imgs else self

    def distance(self, other: "Subspace") -> float:
        self._check_same(other)
        return subspace_distance(self.basis, other.basis, self.ambient_dim)

    def equals(self, other: "Subspace", eps: float = 1e-8) -> bool:
        return self.dim == other.dim and self.distance(other) < eps

    def _check_same(self, other):
        if (self.n, self.m) != (other.n, other.m):
            raise ValueError(f"dimension mismatch: C^{self.n}(x)C^{self.m} vs C^{other.n}(x)C^{other.m}")

    def _check_vec(self, v):
        if v.shape != (self.ambient_dim,):
            raise ValueError(f"vector of length {v.shape[0]} in a space of dimension {self.ambient_dim}")


def partial_transpose_matrix(A, n: int, m: int = 2) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return A.reshape(m, n, m, n).transpose(2, 1, 0, 3).reshape(m * n, m * n)


@dataclass(frozen=True, eq=False)
class BlockState:
    """A Hermitian operator on C^n (x) C^m."""

    n: int
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        N = self.n * self.m
        A = self.matrix
        if A.shape != (N, N):
            raise ValueError(f"matrix shape {A.shape}, expected {(N, N)}")
        if not np.all(np.isfinite(A)):
            raise ValueError("matrix has non-finite entries")
        scale = max(1.0, float(np.linalg.norm(A)))
        if np.linalg.norm(A - A.conj().T) > 1e-10 * scale:
            raise ValueError("matrix is not Hermitian")

    @classmethod
    def from_vectors(cls, vectors, n: int, m: int = 2, weights=None) -> "BlockState":
        """``sum_s w_s z_s z_s^*``."""
        vectors = [np.asarray(z, dtype=complex).reshape(-1) for z in vectors]
        if weights is None:
            weights = [1.0] * len(vectors)
        A = np.zeros((n * m, n * m), dtype=complex)
        for w, z in zip(weights, vectors):
            A += w * np.outer(z, z.conj())
        return cls(n, m, A)

    def partial_transpose(self) -> "BlockState":
        return BlockState(self.n, self.m, partial_transpose_matrix(self.matrix, self.n, self.m))

    @property
    def T(self) -> "BlockState":
        return self.partial_transpose()

    def eigh(self):
        return np.linalg.eigh((self.matrix + self.matrix.conj().T) / 2)

    def min_eigenvalue(self) -> float:
        return float(self.eigh()[0][0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def is_psd(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.min_eigenvalue() >= -tol.threshold(self.norm())

    def is_ppt(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.is_psd(tol) and self.partial_transpose().is_psd(tol)

    def rank(self, tol: Tolerance = DEFAULT_TOL) -> int:
        return rank(self.matrix, tol)

    def range(self, tol: Tolerance = DEFAULT_TOL, scale: float | None = None) -> Subspace:
        """Eigenvectors with eigenvalues above the cutoff relative to ``scale`` (default: the top eigenvalue)."""
        w, V = self.eigh()
        top = np.max(np.abs(w)) if w.size else 0.0
        if scale is not None:
            top = scale
        keep = np.abs(w) > tol.threshold(top) if top > 0 else np.zeros_like(w, dtype=bool)
        return Subspace(self.n, self.m, V[:, keep].T.copy())

    def kernel(self, tol: Tolerance = DEFAULT_TOL) -> Subspace:
        return self.range(tol).complement(tol)

    def __add__(self, other: "BlockState") -> "BlockState":
        return BlockState(self.n, self.m, self.matrix + other.matrix)

    def __sub__(self, other: "BlockState") -> "BlockState":
        return BlockState(self.n, self.m, self.matrix - other.matrix)
