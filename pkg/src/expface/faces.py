"""Facial analysis of ``Phi_D`` for a subspace ``D`` of 2 x n matrices.

``D`` splits as ``D1 (+) D2`` with ``D1`` the span of its product vectors.
When ``D1 = B (x) alpha`` every ``a`` orthogonal to ``D1`` is uniquely
``gamma (x) alpha + (beta + delta) (x) alpha_perp`` with ``beta`` in ``B`` and
``gamma, delta`` in ``B^perp``.  Three conditions are then computed by three
separate procedures:

* ``cond_i``   ``D^perp`` is spanned by product vectors;
* ``cond_ii``  the ``delta`` parts of a basis of ``D2`` are independent;
* ``cond_iii`` ``D2`` compressed by ``1 - p`` (``p`` the projection onto ``B``)
  is completely entangled.

``Phi_D`` is an exposed face of the decomposable cone exactly when the product
vectors of ``D`` form a subspace and ``D^perp`` is spanned by product vectors.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOL, Tolerance, orthocomplement, rank
from .product import (
    BetaTensorC2,
    ProductPart,
    is_completely_entangled,
    product_part,
    product_span,
)
from .tensor import Subspace, orthogonal_unit, tensor_to_mat

log = logging.getLogger(__name__)


class NotAFace(ValueError):
    """The product vectors of ``D`` do not form a subspace."""


class EmptyProductPart(ValueError):
    """``D`` is completely entangled, so there is nothing to decompose."""


class Verdict(str, enum.Enum):
    EXPOSED = "Exposed"
    NOT_EXPOSED = "NotExposed"
    FACE_CONDITION_FAILED = "FaceConditionFailed"


@dataclass
class Coefficients:
    gamma: np.ndarray
    beta: np.ndarray
    delta: np.ndarray


@dataclass
class Decomposition:
    D: Subspace
    D1: Subspace
    D2: Subspace
    form: object
    p: np.ndarray
    alpha: np.ndarray | None = None
    alpha_perp: np.ndarray | None = None
    coeffs: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.D1.dim

    @property
    def ell(self) -> int:
        return self.D2.dim

    @property
    def n(self) -> int:
        return self.D.n

    def delta_matrix(self) -> np.ndarray:
        return np.array([c.delta for c in self.coeffs]).reshape(len(self.coeffs), self.n)

    def compressed_D2(self, tol: Tolerance = DEFAULT_TOL) -> Subspace:
        return self.D2.compress(self.p, tol)

    def reconstruct(self) -> np.ndarray:
        """Rebuild the ``D2`` basis from its coefficients."""
        return np.array(
            [np.kron(self.alpha, c.gamma) + np.kron(self.alpha_perp, c.beta + c.delta) for c in self.coeffs]
        ).reshape(len(self.coeffs), 2 * self.n)


def expansion_coefficients(a, B: np.ndarray, alpha, alpha_perp, n: int) -> Coefficients:
    """Split ``a`` (orthogonal to ``B (x) alpha``) into ``gamma, beta, delta``."""
    Z = tensor_to_mat(a, n)
    along = alpha.conj() @ Z
    across = alpha_perp.conj() @ Z
    p = B.T @ B.conj() if B.shape[0] else np.zeros((n, n), dtype=complex)
    beta = p @ across
    return Coefficients(gamma=along, beta=beta, delta=across - beta)


def decompose(D: Subspace, tol: Tolerance = DEFAULT_TOL, seed: int = 0, part: ProductPart | None = None) -> Decomposition:
    if part is None:
        part = product_part(D, tol, seed)
    if not part.is_subspace:
        raise NotAFace("the product vectors of D do not form a subspace")
    if part.D1.dim == 0:
        raise EmptyProductPart("D is completely entangled")
    D1 = part.D1
    D2 = D.difference(D1, tol)
    form = part.form
    if isinstance(form, BetaTensorC2):
        return Decomposition(D, D1, D2, form, form.projection())
    alpha = form.alpha
    alpha_perp = orthogonal_unit(alpha)
    coeffs = [expansion_coefficients(a, form.B, alpha, alpha_perp, D.n) for a in D2.basis]
    dec = Decomposition(D, D1, D2, form, form.projection(), alpha, alpha_perp, coeffs)
    err = np.linalg.norm(dec.reconstruct() - D2.basis) if coeffs else 0.0
    if err > 1e-9:
        raise ArithmeticError(f"coefficient reconstruction error {err:.2e}")
    return dec


def perp_spanned(D: Subspace, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> tuple[bool, int]:
    """Whether ``D^perp`` is spanned by product vectors, and the dimension they do span."""
    perp = D.complement(tol)
    if perp.dim == 0:
        return True, 0
    span, _ = product_span(perp, tol, seed)
    return span.dim == perp.dim, span.dim


def check_conditions(dec: Decomposition, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> tuple[bool, bool, bool]:
    if isinstance(dec.form, BetaTensorC2):
        # automatically satisfied for beta (x) C^2
        return True, True, True
    cond_i, _ = perp_spanned(dec.D, tol, seed)
    cond_ii = _deltas_independent(dec, tol)
    cond_iii = dec.ell == 0 or is_completely_entangled(dec.compressed_D2(tol), tol, seed)
    return cond_i, cond_ii, bool(cond_iii)


def _deltas_independent(dec: Decomposition, tol: Tolerance) -> bool:
    if dec.ell == 0:
        return True
    return rank(dec.delta_matrix(), tol, scale=1.0) == dec.ell


@dataclass
class FaceReport:
    D: Subspace
    face_condition: bool
    verdict: Verdict
    D1: Subspace
    form: object = None
    decomposition: Decomposition | None = None
    cond_i: bool | None = None
    cond_ii: bool | None = None
    cond_iii: bool | None = None
    perp_product_span: int = 0
    dim_bound_n: bool = True
    dim_bound_n_minus_1: bool = True

    @property
    def n(self) -> int:
        return self.D.n

    @property
    def consistent(self) -> bool:
        """The three conditions agree whenever they are all computed."""
        conds = (self.cond_i, self.cond_ii, self.cond_iii)
        if None in conds:
            return True
        return len(set(conds)) == 1


def classify(D: Subspace, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> FaceReport:
    if D.dim == 0:
        raise ValueError("classify needs a nonzero subspace")
    if D.m != 2:
        raise ValueError("face analysis is for 2 x n matrices")
    n = D.n
    part = product_part(D, tol, seed)
    cond_i, span_dim = perp_spanned(D, tol, seed)
    rep = FaceReport(
        D=D,
        face_condition=part.is_subspace,
        verdict=Verdict.FACE_CONDITION_FAILED,
        D1=part.D1,
        form=part.form,
        cond_i=cond_i,
        perp_product_span=span_dim,
        dim_bound_n=D.dim <= n,
        dim_bound_n_minus_1=D.dim <= n - 1,
    )
    if not part.is_subspace:
        return rep

    if part.D1.dim == 0:
        # B = {0}: any alpha works, the deltas are the alpha_perp parts
        alpha = np.array([1.0, 0.0], dtype=complex)
        B = np.zeros((0, n), dtype=complex)
        deltas = [expansion_coefficients(a, B, alpha, orthogonal_unit(alpha), n).delta for a in D.basis]
        rep.cond_ii = rank(np.array(deltas), tol, scale=1.0) == D.dim
        rep.cond_iii = is_completely_entangled(D, tol, seed)
    else:
        dec = decompose(D, tol, seed, part)
        rep.decomposition = dec
        if isinstance(dec.form, BetaTensorC2):
            rep.cond_ii = rep.cond_iii = True
        else:
            rep.cond_ii = _deltas_independent(dec, tol)
            rep.cond_iii = dec.ell == 0 or is_completely_entangled(dec.compressed_D2(tol), tol, seed)
    if not rep.consistent:
        log.warning("conditions disagree (i=%s, ii=%s, iii=%s); check the tolerance", rep.cond_i, rep.cond_ii, rep.cond_iii)
    rep.verdict = Verdict.EXPOSED if rep.cond_iii else Verdict.NOT_EXPOSED
    return rep


def complement_in(B: np.ndarray, n: int, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal rows spanning ``B^perp`` in C^n."""
    return orthocomplement(B, n, tol)


def compressed_product_span(dec: Decomposition, tol: Tolerance = DEFAULT_TOL, seed: int = 0):
    """Product vectors of ``D2(1-p)``: their span and the enumeration."""
    Dc = dec.compressed_D2(tol)
    return product_span(Dc, tol, seed)
