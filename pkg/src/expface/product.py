"""Product vectors in subspaces of C^n (x) C^2.

A product vector ``eta (x) xi`` lies in ``D`` iff it is orthogonal to ``D^perp``.
Writing ``xi = (s, t)`` and splitting each basis vector ``G`` of ``D^perp`` as
``g1 (x) e1 + g2 (x) e2`` this reads ``(s M0 + t M1) eta = 0`` where the rows
of ``M0`` and ``M1`` are ``conj(g1)`` and ``conj(g2)``.  Product vectors are
therefore kernel vectors of a rectangular matrix pencil at the points where
its rank drops.

Let ``r`` be the normal (generic) rank of the pencil.  If ``r < n`` every
``xi`` carries a kernel and ``D`` holds an infinite family.  Isolated product
vectors sit where the rank falls below ``r``; those points are the roots of a
random ``r x r`` compression ``P M(xi) Q`` and every candidate is re-verified
on the full pencil.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    orthonormal_basis,
    pencil_eigenvalues,
    sample_points,
)
from .tensor import (
    ProductVector,
    Subspace,
    dedupe,
    product_factors,
    projective_distance,
)

log = logging.getLogger(__name__)

FINITE = "finite"
INFINITE = "infinite"

_RAY_EPS = 1e-7
_COMPRESSION_TRIES = 3


class EnumerationError(RuntimeError):
    pass


class CompressionFailure(EnumerationError):
    """Random compressions of the pencil kept disagreeing; try a looser tolerance."""


@dataclass
class KernelSlice:
    """All ``eta`` with ``eta (x) xi`` in the subspace, for one direction ``xi``."""

    xi: np.ndarray
    kernel: np.ndarray  # orthonormal rows in C^n
    jump: bool  # rank of the pencil drops below its normal rank here

    @property
    def dim(self) -> int:
        return self.kernel.shape[0]


@dataclass
class PencilEnumeration:
    kind: str
    rays: list = field(default_factory=list)
    family_samples: list = field(default_factory=list)
    pencil: tuple = ()
    normal_rank: int = 0
    slices: list = field(default_factory=list)

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE

    def vectors(self) -> list[ProductVector]:
        return self.rays + self.family_samples

    def __len__(self):
        return len(self.rays)


def build_pencil(D: Subspace, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    if D.m != 2:
        raise ValueError("pencils are built for C^n (x) C^2 only")
    if D.dim == 0:
        raise ValueError("the zero subspace has no product vectors to enumerate")
    perp = D.complement(tol)
    n = D.n
    if perp.dim == 0:
        empty = np.zeros((0, n), dtype=complex)
        return empty, empty.copy()
    G = perp.basis.reshape(perp.dim, 2, n)
    return G[:, 0, :].conj().copy(), G[:, 1, :].conj().copy()


class _Pencil:
    def __init__(self, M0, M1, tol: Tolerance, seed: int):
        self.M0, self.M1 = M0, M1
        self.tol = tol
        self.rows, self.n = M0.shape
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        stacked = np.hstack([M0, M1]) if self.rows else np.zeros((0, 2 * self.n))
        self.scale = float(np.linalg.norm(stacked, 2)) if self.rows else 0.0
        self.normal_rank = self._normal_rank()

    def at(self, xi) -> np.ndarray:
        return xi[0] * self.M0 + xi[1] * self.M1

    def sigma(self, xi) -> np.ndarray:
        if self.rows == 0:
            return np.zeros(0)
        return np.linalg.svd(self.at(xi), compute_uv=False)

    def rank_at(self, xi) -> int:
        s = self.sigma(xi)
        return int(np.sum(s > self.tol.threshold(self.scale)))

    def kernel_at(self, xi) -> np.ndarray:
        N = self.at(xi)
        if self.rows == 0:
            return np.eye(self.n, dtype=complex)
        _, s, Vh = np.linalg.svd(N, full_matrices=True)
        r = int(np.sum(s > self.tol.threshold(self.scale)))
        return Vh[r:].conj().copy()

    def _normal_rank(self) -> int:
        if self.rows == 0 or self.scale == 0:
            return 0
        pts = sample_points(max(8, 2 * self.n), self.seed)
        return max(self.rank_at(_unit(1.0, t)) for t in pts)

    def drop_ratio(self, xi) -> float:
        """``sigma_r(M(xi)) / scale``; small exactly where the rank falls below ``r``."""
        s = self.sigma(xi)
        return float(s[self.normal_rank - 1] / self.scale)

    def refine(self, xi, steps: int = 2):
        best, best_ratio = xi, self.drop_ratio(xi)
        cur = xi
        for _ in range(steps):
            _, _, Vh = np.linalg.svd(self.at(cur))
            eta = Vh[self.normal_rank - 1].conj()
            X = np.column_stack([self.M0 @ eta, self.M1 @ eta])
            _, _, Wh = np.linalg.svd(X)
            cur = Wh[-1].conj()
            cur = cur / np.linalg.norm(cur)
            ratio = self.drop_ratio(cur)
            if ratio < best_ratio:
                best, best_ratio = cur, ratio
        return best, best_ratio

    def jump_points(self) -> list[np.ndarray]:
        r = self.normal_rank
        if r == 0:
            return []
        attempts = []
        for _ in range(_COMPRESSION_TRIES):
            found = self._jump_points_once()
            if found is None:
                continue
            if self.rows == r == self.n:
                return found
            # candidate sets from independent compressions must agree
            if any(_same_directions(prev, found) for prev in attempts):
                return found
            attempts.append(found)
        if len(attempts) == 1:
            return attempts[0]
        raise CompressionFailure(
            f"{_COMPRESSION_TRIES} compressions of a {self.rows}x{self.n} pencil of normal rank {r} disagree"
        )

    def _jump_points_once(self):
        r = self.normal_rank
        if self.rows == r == self.n:
            C0, C1 = self.M0, self.M1
        else:
            P = _crandn(self.rng, r, self.rows)
            Q = _crandn(self.rng, self.n, r)
            C0, C1 = P @ self.M0 @ Q, P @ self.M1 @ Q
        eig = pencil_eigenvalues(C0, C1, self.tol, self.seed)
        if eig.singular:
            log.debug("compressed pencil is singular; redrawing")
            return None
        # the point at infinity is an explicit case below
        ts = [xi[1] / xi[0] for xi in eig.homogeneous if abs(xi[0]) >= self.tol.rel]
        found = []
        for cluster in _cluster(ts):
            # multiple roots split into clusters of size ~eps^(1/k); their mean is accurate
            xi = _unit(1.0, np.mean(cluster))
            if len(cluster) == 1:
                xi, ratio = self.refine(xi)
            else:
                ratio = self.drop_ratio(xi)
            if ratio * self.scale <= self.tol.threshold(self.scale):
                found.append(xi)
        e2 = np.array([0.0, 1.0], dtype=complex)
        if self.rank_at(e2) < r:
            found.append(e2)
        return _dedupe_directions(found)


def enumerate_product_vectors(
    D: Subspace,
    tol: Tolerance = DEFAULT_TOL,
    seed: int = 0,
    n_samples: int | None = None,
) -> PencilEnumeration:
    """Enumerate the product vectors of ``D``.

    Finite results list every projective ray.  Infinite families are
    described by ``family_samples``: kernels at ``n_samples`` seeded complex
    points (default ``4 (n + 1)``) plus every point where the kernel jumps.
    """
    M0, M1 = build_pencil(D, tol)
    n = D.n
    pen = _Pencil(M0, M1, tol, seed)
    r = pen.normal_rank
    generic_kernel = n - r
    jumps = [KernelSlice(xi, pen.kernel_at(xi), True) for xi in pen.jump_points()]
    jumps = [s for s in jumps if s.dim > generic_kernel]

    infinite = generic_kernel > 0 or any(s.dim >= 2 for s in jumps)
    out = PencilEnumeration(kind=INFINITE if infinite else FINITE, pencil=(M0, M1), normal_rank=r)
    if not infinite:
        out.rays = dedupe([ProductVector.make(s.kernel[0], s.xi) for s in jumps], _RAY_EPS)
        out.slices = jumps
        return out

    count = 4 * (n + 1) if n_samples is None else n_samples
    rng = np.random.default_rng([seed, 1])
    samples = []
    slices = []
    for s in jumps:
        if s.dim == 1 and generic_kernel == 0:
            out.rays.append(ProductVector.make(s.kernel[0], s.xi))
            continue
        slices.append(s)
        samples += [ProductVector.make(eta, s.xi) for eta in s.kernel]
        if generic_kernel == 0:
            # isolated projective family: random members of the jump kernel
            coeffs = _crandn(rng, count, s.dim)
            samples += [ProductVector.make(c @ s.kernel, s.xi) for c in coeffs]
    if generic_kernel > 0:
        for t in _crandn(rng, count):
            xi = _unit(1.0, t)
            s = KernelSlice(xi, pen.kernel_at(xi), False)
            slices.append(s)
            samples += [ProductVector.make(eta, xi) for eta in s.kernel]
    out.rays = dedupe(out.rays, _RAY_EPS)
    out.family_samples = dedupe(samples, _RAY_EPS)
    out.slices = slices
    return out


def product_span(D: Subspace, tol: Tolerance = DEFAULT_TOL, seed: int = 0, max_doublings: int = 3):
    """Orthonormal basis of the span of all product vectors in ``D``, with the enumeration used.

    For infinite families the sample budget doubles until the span dimension
    stops growing.
    """
    if D.dim == 0:
        return Subspace.zero(D.n, D.m), None
    count = 4 * (D.n + 1)
    enum = enumerate_product_vectors(D, tol, seed, count)
    span = _span_of(enum.vectors(), D)
    if enum.is_finite:
        return span, enum
    for _ in range(max_doublings):
        count *= 2
        bigger = enumerate_product_vectors(D, tol, seed, count)
        wider = _span_of(bigger.vectors(), D)
        stable = wider.dim == span.dim
        span, enum = wider, bigger
        if stable:
            break
    return span, enum


def _span_of(pvs, D: Subspace) -> Subspace:
    if not pvs:
        return Subspace.zero(D.n, D.m)
    return Subspace.from_vectors([pv.embed() for pv in pvs], D.n, D.m)


def is_completely_entangled(D: Subspace, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> bool:
    if D.dim == 0:
        return True
    enum = enumerate_product_vectors(D, tol, seed)
    return enum.is_finite and not enum.rays


# --- completely separable subspaces ---------------------------------------

@dataclass
class BTensorAlpha:
    """``{b (x) alpha : b in B}``."""

    B: np.ndarray  # orthonormal rows in C^n
    alpha: np.ndarray

    @property
    def k(self) -> int:
        return self.B.shape[0]

    def projection(self) -> np.ndarray:
        return self.B.T @ self.B.conj()


@dataclass
class BetaTensorC2:
    """``{beta (x) a : a in C^2}``."""

    beta: np.ndarray

    @property
    def k(self) -> int:
        return 2

    def projection(self) -> np.ndarray:
        return np.outer(self.beta, self.beta.conj())


def is_completely_separable(S: Subspace, tol: Tolerance = DEFAULT_TOL, seed: int = 0):
    """Return the structure ``B (x) alpha`` or ``beta (x) C^2`` of ``S``, or ``None`` if it has a rank-two element."""
    if S.dim == 0:
        raise ValueError("the zero subspace has no separable form")
    if S.m != 2:
        raise ValueError("only C^n (x) C^2 is supported")
    pvs = [product_factors(v, S.n, S.m, tol) for v in S.basis]
    if any(pv is None for pv in pvs):
        return None
    rng = np.random.default_rng(seed)
    for c in _crandn(rng, max(8, 2 * S.dim), S.dim):
        if product_factors(c @ S.basis, S.n, S.m, tol) is None:
            return None
    xi0, eta0 = pvs[0].xi, pvs[0].eta
    if all(projective_distance(pv.xi, xi0) < _RAY_EPS for pv in pvs):
        B = orthonormal_basis([pv.eta for pv in pvs], S.n, tol)
        if B.shape[0] == S.dim:
            return BTensorAlpha(B, xi0)
    elif all(projective_distance(pv.eta, eta0) < _RAY_EPS for pv in pvs) and S.dim == 2:
        return BetaTensorC2(eta0)
    return None


def separable_subspace(form, n: int) -> Subspace:
    if isinstance(form, BTensorAlpha):
        return Subspace.from_vectors([np.kron(form.alpha, b) for b in form.B], n)
    return Subspace.from_vectors([np.kron(e, form.beta) for e in np.eye(2)], n)


@dataclass
class ProductPart:
    D1: Subspace
    is_subspace: bool
    form: object = None
    enumeration: PencilEnumeration | None = None

    def __iter__(self):
        return iter((self.D1, self.is_subspace))


def product_part(D: Subspace, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> ProductPart:
    """Span of the product vectors of ``D`` and whether they form a subspace."""
    D1, enum = product_span(D, tol, seed)
    if D1.dim == 0:
        return ProductPart(D1, True, None, enum)
    form = is_completely_separable(D1, tol, seed)
    return ProductPart(D1, form is not None, form, enum)


def canonical_ray_matrix(pv: ProductVector) -> np.ndarray:
    """The 2 x n matrix of ``pv`` scaled so its first nonzero entry is 1."""
    Z = pv.matrix()
    flat = Z.reshape(-1)
    idx = int(np.argmax(np.abs(flat) > 1e-9))
    return Z / flat[idx]


# --- helpers --------------------------------------------------------------

def _unit(s, t) -> np.ndarray:
    v = np.array([s, t], dtype=complex)
    return v / np.linalg.norm(v)


def _crandn(rng, *shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _cluster(ts, radius: float = 1e-5) -> list[list[complex]]:
    groups: list[list[complex]] = []
    for t in ts:
        for g in groups:
            if abs(t - g[0]) < radius * (1 + abs(t)):
                g.append(t)
                break
        else:
            groups.append([t])
    return groups


def _dedupe_directions(xis) -> list[np.ndarray]:
    out = []
    for xi in xis:
        if not any(projective_distance(xi, y) < _RAY_EPS for y in out):
            out.append(xi)
    return out


def _same_directions(a, b) -> bool:
    if len(a) != len(b):
        return False
    return all(any(projective_distance(x, y) < 1e-6 for y in b) for x in a)
