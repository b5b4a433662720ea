"""Rank-reducing subtraction of product projectors from PPT states on C^n (x) C^2.

If ``A`` and ``A^tau`` are positive and ``eta (x) xi`` lies in ``ker A`` while
``eta (x) xi_perp`` does not, then ``w = A (eta (x) xi_perp)`` is a product
vector ``x (x) xi_perp`` and

    A~ = A - w w^* / <w, A^+ w>

is again PPT, loses one rank on both sides and is supported on a smaller
local space.  Iterating gives explicit separable decompositions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOL, Tolerance, orthonormal_basis, rank
from .product import EnumerationError, enumerate_product_vectors
from .tensor import (
    BlockState,
    ProductVector,
    Subspace,
    embed,
    orthogonal_unit,
    product_factors,
    tensor_to_mat,
)

log = logging.getLogger(__name__)

_SPLIT_EPS = 1e-9
_KERNEL_EPS = 1e-8


class NoKernelPV(ValueError):
    """No product vector ``eta (x) xi`` in the kernel with ``eta (x) xi_perp`` outside it."""


class SearchFailed(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class SupportInfo:
    B_space: Subspace  # rows in C^n, stored with m = 1
    C_space: np.ndarray  # orthonormal rows in C^2

    @property
    def N(self) -> int:
        return self.B_space.dim

    @property
    def M(self) -> int:
        return self.C_space.shape[0]


def support(A: BlockState, tol: Tolerance = DEFAULT_TOL, scale: float | None = None) -> SupportInfo:
    """Smallest ``B (x) C`` containing ``R(A)``: row and column spaces of the range matrices."""
    n = A.n
    R = A.range(tol, scale)
    rows, cols = [], []
    for Z in R.matrices():
        rows.extend(Z)
        cols.extend(Z.T)
    B = orthonormal_basis(rows, n, tol) if rows else np.zeros((0, n), dtype=complex)
    C = orthonormal_basis(cols, A.m, tol) if cols else np.zeros((0, A.m), dtype=complex)
    info = SupportInfo(Subspace(n, 1, B), C)
    P = np.kron(C, B)
    for v in R.basis:
        if np.linalg.norm(v - P.T @ (P.conj() @ v)) > 1e-8:
            raise ArithmeticError("range is not contained in its computed support")
    return info


def _restrict(A: BlockState, U: np.ndarray) -> BlockState:
    """``A`` in the coordinates of ``span(U) (x) C^2`` (the range must lie there)."""
    P = np.kron(np.eye(2), U)
    return BlockState(U.shape[0], 2, P.conj() @ A.matrix @ P.T)


def _lift_vector(v, U: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(2), U).T @ v


@dataclass
class KernelCandidate:
    pv: ProductVector
    strength: float  # |A (eta (x) xi_perp)|^2 relative to |A|
    source: str


def _kernel_candidates(A: BlockState, tol: Tolerance, seed: int) -> list[KernelCandidate]:
    K = A.kernel(tol)
    if K.dim == 0:
        return []
    try:
        enum = enumerate_product_vectors(K, tol, seed)
    except EnumerationError as exc:
        log.warning("kernel enumeration failed: %s", exc)
        return []
    scale = A.norm()
    out = []

    def consider(eta, xi, source):
        u = np.kron(orthogonal_unit(xi), eta)
        s = float(np.real(np.vdot(u, A.matrix @ u))) / scale
        if s > tol.rel:
            out.append(KernelCandidate(ProductVector.make(eta, xi), s, source))

    for pv in enum.rays:
        consider(pv.eta, pv.xi, "ray")
    for sl in sorted(enum.slices, key=lambda s: not s.jump):
        # best eta in the slice: top eigenvector of A compressed to kron(xi_perp, kernel)
        Uq = np.array([np.kron(orthogonal_unit(sl.xi), e) for e in sl.kernel])
        H = Uq.conj() @ A.matrix @ Uq.T
        w, V = np.linalg.eigh((H + H.conj().T) / 2)
        consider(V[:, -1] @ sl.kernel, sl.xi, "jump" if sl.jump else "sample")
    return out


def kernel_product_vector(A: BlockState, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> ProductVector | None:
    """First product vector ``eta (x) xi`` of ``ker A`` with ``eta (x) xi_perp`` outside the kernel."""
    cands = _kernel_candidates(A, tol, seed)
    return cands[0].pv if cands else None


@dataclass
class PeelResult:
    c: float
    q: ProductVector
    A_tilde: BlockState
    kernel_pv: ProductVector
    checks: dict = field(default_factory=dict)


def _pinv_weight(A: np.ndarray, w: np.ndarray, tol: Tolerance) -> float:
    return 1.0 / float(np.real(np.vdot(w, np.linalg.pinv(A, rcond=tol.rel, hermitian=True) @ w)))


def _try_peel(A: BlockState, U: np.ndarray, cand: KernelCandidate, tol: Tolerance):
    """Peel along the candidate in support coordinates ``U``; returns the result and its checks."""
    Ar = _restrict(A, U)
    eta, xi = cand.pv.eta, cand.pv.xi
    xi_perp = orthogonal_unit(xi)
    u = np.kron(xi_perp, eta)
    w = Ar.matrix @ u
    c1 = _pinv_weight(Ar.matrix, w, tol)
    # w should be x (x) xi_perp; its partial conjugate is x (x) conj(xi_perp)
    x = xi_perp.conj() @ tensor_to_mat(w, Ar.n)
    product_residual = np.linalg.norm(w - np.kron(xi_perp, x)) / np.linalg.norm(w)
    c2 = _pinv_weight(Ar.partial_transpose().matrix, np.kron(xi_perp.conj(), x), tol)
    Atr = Ar.matrix - c1 * np.outer(w, w.conj())
    Atr = (Atr + Atr.conj().T) / 2
    w_full = _lift_vector(w, U)
    A_tilde = BlockState(A.n, 2, np.kron(np.eye(2), U).T @ Atr @ np.kron(np.eye(2), U).conj())
    kernel_pv = ProductVector.make(eta @ U, xi)
    nw2 = float(np.vdot(w_full, w_full).real)
    checks = {"c1": c1, "c2": c2, "weight_gap": abs(c1 - c2) / max(c1, c2), "product_residual": product_residual}
    checks["weights_ok"] = checks["weight_gap"] < 1e-6
    checks["product_ok"] = product_residual < 1e-8
    if not checks["product_ok"]:
        return None, checks
    q = ProductVector.make(x @ U, xi_perp)
    res = PeelResult(c1 * nw2, q, A_tilde, kernel_pv, checks)
    checks.update(peel_checks(A, res, tol))
    return res, checks


def peel_checks(A: BlockState, res: PeelResult, tol: Tolerance = DEFAULT_TOL) -> dict:
    scale = max(A.norm(), 1e-300)
    q = embed(res.q)
    q = q / np.linalg.norm(q)
    split = np.linalg.norm(A.matrix - res.c * np.outer(q, q.conj()) - res.A_tilde.matrix, 2)
    At = res.A_tilde
    k1 = embed(res.kernel_pv)
    k2 = embed(ProductVector.make(res.kernel_pv.eta, orthogonal_unit(res.kernel_pv.xi)))
    kern = max(np.linalg.norm(At.matrix @ k1), np.linalg.norm(At.matrix @ k2)) / scale
    before, after = support(A, tol), support(At, tol, scale)
    out = {
        "split_error": split / scale,
        "min_eig": At.min_eigenvalue() / scale,
        "min_eig_pt": At.partial_transpose().min_eigenvalue() / scale,
        "rank_before": (A.rank(tol), A.partial_transpose().rank(tol)),
        "rank_after": (rank(At.matrix, tol, scale), rank(At.partial_transpose().matrix, tol, scale)),
        "support_before": before.N,
        "support_after": after.N,
        "kernel_error": kern,
    }
    out["split_ok"] = out["split_error"] < _SPLIT_EPS
    out["psd_ok"] = out["min_eig"] >= -1e-9 and out["min_eig_pt"] >= -1e-9
    rb, ra = out["rank_before"], out["rank_after"]
    out["rank_ok"] = ra == (rb[0] - 1, rb[1] - 1)
    out["support_ok"] = out["support_after"] <= out["support_before"] - 1
    out["kernel_ok"] = kern < _KERNEL_EPS
    return out


def peel(A: BlockState, tol: Tolerance = DEFAULT_TOL, budget: int | None = None, seed: int = 0) -> PeelResult:
    """Subtract one product projector so that ``A`` and ``A^tau`` both lose one rank."""
    if A.m != 2:
        raise ValueError("peeling is for C^n (x) C^2")
    if not A.is_ppt(tol):
        raise NoKernelPV("A is not PPT")
    sup = support(A, tol)
    if sup.N < 2 and A.rank(tol) > 1:
        raise NoKernelPV(f"A is supported on C^{sup.N} (x) C^2; peeling needs N >= 2")
    U = sup.B_space.basis
    Ar = _restrict(A, U)
    if Ar.rank(tol) == 1:
        # a single product projector (rank one and PPT forces a product vector)
        w, V = A.eigh()
        z = V[:, -1]
        q = product_factors(z, A.n, 2, tol)
        if q is None:
            raise NoKernelPV("rank-one state on an entangled vector")
        zero = BlockState(A.n, 2, np.zeros_like(A.matrix))
        kpv = ProductVector.make(q.eta, orthogonal_unit(q.xi))
        return PeelResult(float(w[-1]), q, zero, kpv, {"split_ok": True})
    cands = _kernel_candidates(Ar, tol, seed)
    if not cands:
        raise NoKernelPV("no qualifying product vector in ker A")
    budget = len(cands) if budget is None else min(budget, len(cands))
    tried = []
    for cand in cands[:budget]:
        res, checks = _try_peel(A, U, cand, tol)
        tried.append({"source": cand.source, "strength": cand.strength, **{k: v for k, v in checks.items() if k.endswith("_ok") or k == "weight_gap"}})
        if res is not None and all(v for k, v in checks.items() if k.endswith("_ok")):
            return res
    raise SearchFailed(f"none of {len(tried)} kernel candidates gave a valid peel", {"candidates": tried})


@dataclass
class Reduction:
    terms: list  # (c, ProductVector) with unit-norm embedded ProductVector
    residual: BlockState
    status: str  # "Separable" or "Inconclusive"
    log: list = field(default_factory=list)

    def reconstruct(self) -> np.ndarray:
        N = self.residual.matrix.shape[0]
        out = np.zeros((N, N), dtype=complex)
        for c, pv in self.terms:
            z = embed(pv)
            z = z / np.linalg.norm(z)
            out += c * np.outer(z, z.conj())
        return out + self.residual.matrix


def reduce(A: BlockState, tol: Tolerance = DEFAULT_TOL, budget: int | None = None, seed: int = 0) -> Reduction:
    """Peel repeatedly; a zero residual certifies ``A`` separable with an explicit decomposition."""
    terms, steps = [], []
    R = A
    scale = max(A.norm(), 1e-300)
    while True:
        if R.norm() <= tol.threshold(scale):
            return Reduction(terms, R, "Separable", steps)
        if not R.is_ppt(tol):
            steps.append({"event": "not PPT", "min_eig_pt": R.partial_transpose().min_eigenvalue()})
            return Reduction(terms, R, "Inconclusive", steps)
        sup = support(R, tol, scale)
        if sup.N <= 1 or sup.M <= 1:
            w, V = R.eigh()
            keep = w > tol.threshold(max(abs(w)))
            last = []
            for lam, z in zip(w[keep], V[:, keep].T):
                pv = product_factors(z, R.n, 2, tol)
                if pv is None:
                    break
                last.append((float(lam), pv))
            else:
                terms += last
                steps.append({"event": "eigendecomposition", "terms": len(last), "support": (sup.N, sup.M)})
                return Reduction(terms, BlockState(R.n, 2, np.zeros_like(R.matrix)), "Separable", steps)
            steps.append({"event": "entangled eigenvector", "support": (sup.N, sup.M)})
            return Reduction(terms, R, "Inconclusive", steps)
        try:
            res = peel(R, tol, budget, seed)
        except (NoKernelPV, SearchFailed) as exc:
            steps.append({"event": type(exc).__name__, "message": str(exc)})
            return Reduction(terms, R, "Inconclusive", steps)
        terms.append((res.c, res.q))
        steps.append({"event": "peel", "c": res.c, "rank": rank(res.A_tilde.matrix, tol, scale), "support": sup.N})
        R = res.A_tilde
