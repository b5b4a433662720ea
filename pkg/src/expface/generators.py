"""Seeded test instances: random subspaces of 2 x n matrices, named examples and PPT states.

Generators return lists of 2 x n matrices (not orthonormalized) so files
written from them keep the exact entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import orthocomplement
from .tensor import BlockState, ProductVector, canonical_phase, orthogonal_unit


def _crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def unit_matrix(i: int, j: int, n: int) -> np.ndarray:
    """``e_ij`` in M_{2 x n}; indices start at 1."""
    Z = np.zeros((2, n), dtype=complex)
    Z[i - 1, j - 1] = 1.0
    return Z


def generic(n: int, dim: int, seed: int = 0) -> list[np.ndarray]:
    if not 1 <= dim <= 2 * n:
        raise ValueError(f"dim must be in [1, {2 * n}], got {dim}")
    rng = np.random.default_rng(seed)
    return list(_crandn(rng, dim, 2, n))


def completely_entangled(n: int, dim: int, seed: int = 0) -> list[np.ndarray]:
    """Random ``dim``-dimensional subspace of a completely entangled space of dimension ``n - 1``.

    The base space is spanned by ``Z_k`` with rows ``f_{k+1}`` and ``-f_k``; a
    combination has rows ``(0, c)`` and ``-(c, 0)``, which are never parallel.
    It is moved by a random local invertible map ``Z -> T Z S^t``.
    """
    if not 1 <= dim <= n - 1:
        raise ValueError(f"dim must be in [1, {n - 1}], got {dim}")
    rng = np.random.default_rng(seed)
    f = np.eye(n)
    base = [np.array([f[k + 1], -f[k]], dtype=complex) for k in range(n - 1)]
    T = _crandn(rng, 2, 2)
    S = _crandn(rng, n, n)
    moved = [T @ Z @ S.T for Z in base]
    coeffs = _crandn(rng, dim, n - 1)
    return [np.tensordot(c, moved, axes=1) for c in coeffs]


@dataclass
class SeparablePlusEntangled:
    """``D = (B (x) alpha) (+) span{gamma_i (x) alpha + (beta_i + delta_i) (x) alpha_perp}``."""

    matrices: list
    B: np.ndarray
    alpha: np.ndarray
    k: int
    ell: int
    dependent: bool


def b_tensor_alpha_plus_entangled(
    n: int, k: int | None = None, ell: int | None = None, seed: int = 0, dependent: bool | None = None
) -> SeparablePlusEntangled:
    """Random instance of the separable-plus-remainder form.

    With ``dependent`` the ``delta_i`` are forced to be linearly dependent.
    Random choices are made for any argument left as ``None``.  The product
    part of the result is ``B (x) alpha`` only generically; callers should
    filter.
    """
    rng = np.random.default_rng(seed)
    if k is None:
        k = int(rng.integers(1, n))
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    if ell is None:
        ell = int(rng.integers(0, n - k + 1))
    if not 0 <= ell <= 2 * n - k:
        raise ValueError(f"ell out of range: {ell}")
    if dependent is None:
        dependent = bool(rng.integers(0, 2)) and ell >= 1
    q, _ = np.linalg.qr(_crandn(rng, n, n))
    B, Bp = q[:, :k].T, q[:, k:].T
    alpha = canonical_phase(_crandn(rng, 2))
    alpha_perp = orthogonal_unit(alpha)
    mats = [np.outer(alpha, b) for b in B]
    gamma = _crandn(rng, ell, n - k) @ Bp
    beta = _crandn(rng, ell, k) @ B
    delta = _crandn(rng, ell, n - k) @ Bp
    if dependent and ell >= 1:
        if ell == 1:
            delta[0] = 0.0
        else:
            delta[-1] = _crandn(rng, ell - 1) @ delta[:-1]
    for g, b, d in zip(gamma, beta, delta):
        mats.append(np.outer(alpha, g) + np.outer(alpha_perp, b + d))
    return SeparablePlusEntangled(mats, B, alpha, k, ell, dependent)


def fixture(name: str) -> list[np.ndarray]:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}")
    return FIXTURES[name]()


def _ex_2x3_not_spanned():
    return [unit_matrix(1, 1, 3), unit_matrix(1, 2, 3) + unit_matrix(2, 1, 3)]


def _ex_2x3_spanned():
    return [unit_matrix(1, 1, 3), unit_matrix(1, 3, 3) + unit_matrix(2, 2, 3)]


def _ex_2x2_unexposed():
    return [unit_matrix(1, 1, 2), unit_matrix(1, 2, 2) + unit_matrix(2, 1, 2)]


def _ex_2x2_nonface():
    return [unit_matrix(1, 1, 2), unit_matrix(1, 2, 2) + unit_matrix(2, 1, 2) + unit_matrix(2, 2, 2)]


FIXTURES = {
    "ex_2x3_not_spanned": _ex_2x3_not_spanned,
    "ex_2x3_spanned": _ex_2x3_spanned,
    "ex_2x2_unexposed": _ex_2x2_unexposed,
    "ex_2x2_nonface": _ex_2x2_nonface,
    "generic_3dim_n3": lambda: generic(3, 3, seed=1),
    "4dim_n3": lambda: generic(3, 4, seed=1),
}

KINDS = ("generic", "completely-entangled", "b-tensor-alpha-plus-entangled")


def generate(kind: str, n: int, dim: int, seed: int = 0) -> list[np.ndarray]:
    if kind == "generic":
        return generic(n, dim, seed)
    if kind == "completely-entangled":
        return completely_entangled(n, dim, seed)
    if kind == "b-tensor-alpha-plus-entangled":
        # dim = k + ell with k >= 1 chosen at random
        rng = np.random.default_rng([seed, 2])
        if not (n >= 2 and 1 <= dim <= n):
            raise ValueError(f"need n >= 2 and 1 <= dim <= n, got n={n}, dim={dim}")
        k = int(rng.integers(1, min(n - 1, dim) + 1))
        return b_tensor_alpha_plus_entangled(n, k, dim - k, seed, dependent=False).matrices
    if kind in FIXTURES:
        return fixture(kind)
    raise ValueError(f"unknown kind {kind!r}")


# --- PPT states -------------------------------------------------------------

@dataclass
class PlantedState:
    state: BlockState
    kernel_pv: ProductVector
    terms: list  # embedded product vectors


def planted_kernel_state(n: int, seed: int = 0, terms: int | None = None) -> PlantedState:
    """Separable state of rank ``2n - 1`` with ``eta (x) xi`` in its kernel but ``eta (x) xi_perp`` not.

    Half of the terms are ``h (x) xi_perp`` with random ``h``; the others are
    ``h (x) zeta`` with ``h`` orthogonal to ``eta``.
    """
    terms = 2 * n - 1 if terms is None else terms
    rng = np.random.default_rng(seed)
    eta = canonical_phase(_crandn(rng, n))
    xi = canonical_phase(_crandn(rng, 2))
    xi_perp = orthogonal_unit(xi)
    eta_perp = orthocomplement([eta], n)
    zs = []
    for s in range(terms):
        if s < n:
            zs.append(np.kron(xi_perp, _crandn(rng, n)))
        else:
            h = _crandn(rng, n - 1) @ eta_perp
            zs.append(np.kron(_crandn(rng, 2), h))
    return PlantedState(BlockState.from_vectors(zs, n), ProductVector.make(eta, xi), zs)


def separable_sum(n: int, terms: int, seed: int = 0) -> tuple[BlockState, list]:
    """``sum_s z_s z_s^*`` over ``terms`` random product vectors, with the vectors."""
    rng = np.random.default_rng(seed)
    zs = [np.kron(_crandn(rng, 2), _crandn(rng, n)) for _ in range(terms)]
    return BlockState.from_vectors(zs, n), zs
