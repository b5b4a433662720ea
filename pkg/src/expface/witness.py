"""Range-criterion certificates and separable exposing states.

A pair ``(D^perp, E^perp)`` satisfies the range criterion when product
vectors ``z_s`` span ``D^perp`` while their partial conjugates span
``E^perp``.  The state ``A = sum_s z_s z_s^*`` is then separable, its partial
transpose is ``sum_s z~_s z~_s^*`` and ``R(A) = D^perp``, ``R(A^tau) = E^perp``.
Such an ``A`` pairs to zero exactly with the face ``conv{Phi_D, Phi^E}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .faces import FaceReport, Verdict, classify
from .linalg import DEFAULT_TOL, Tolerance, least_squares, orthocomplement, rank
from .product import (
    BetaTensorC2,
    BTensorAlpha,
    build_pencil,
    enumerate_product_vectors,
    is_completely_entangled,
    is_completely_separable,
    product_part,
)
from .faces import perp_spanned
from .tensor import (
    BlockState,
    ProductVector,
    Subspace,
    embed,
    mat_to_tensor,
    partial_conjugate,
    product_factors,
    tensor_to_mat,
)

log = logging.getLogger(__name__)

# a sample joins the certificate only if it adds at least this much new direction
_MIN_GAIN = 1e-3
_SPAN_EPS = 1e-8
# polishing stops once A on D^perp and A^tau have this smallest relative eigenvalue
_COND_TARGET = 1e-6


class WitnessError(RuntimeError):
    pass


class BudgetExhausted(WitnessError):
    pass


class NotExposed(WitnessError):
    pass


class NotSeparable(ValueError):
    pass


class VerificationFailed(WitnessError):
    def __init__(self, message, generator=None):
        super().__init__(message)
        self.generator = generator


# --- maps and the pairing -------------------------------------------------

@dataclass
class MapSpec:
    """``X -> sum_V V^* X V + sum_W W^* X^t W`` for 2 x n matrices ``V, W``."""

    cp_kraus: list = field(default_factory=list)
    ccp_kraus: list = field(default_factory=list)

    def shape(self):
        mats = self.cp_kraus + self.ccp_kraus
        if not mats:
            return None
        shapes = {np.shape(V) for V in mats}
        if len(shapes) != 1:
            raise ValueError(f"Kraus operators of mixed shapes {shapes}")
        return shapes.pop()

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        m, n = self.shape()
        out = np.zeros((n, n), dtype=complex)
        for V in self.cp_kraus:
            V = np.asarray(V, dtype=complex)
            out += V.conj().T @ X @ V
        for W in self.ccp_kraus:
            W = np.asarray(W, dtype=complex)
            out += W.conj().T @ X.T @ W
        return out


def pairing(A: BlockState, phi: MapSpec) -> float:
    """``<A, phi>`` from ``<y (x) x, phi> = Tr(phi(x) y^t)``, expanded over matrix units.

    ``A[i*n+k, j*n+l]`` is the coefficient of ``e_kl (x) e_ij`` and
    ``Tr(phi(e_ij) e_kl^t) = phi(e_ij)[k, l]``.
    """
    shape = phi.shape()
    if shape is None:
        return 0.0
    m, n = shape
    if (A.m, A.n) != (m, n):
        raise ValueError(f"state on C^{A.n} (x) C^{A.m} paired with maps on {m} x {n} matrices")
    blocks = A.matrix.reshape(m, n, m, n)
    total = 0j
    for i in range(m):
        for j in range(m):
            unit = np.zeros((m, m))
            unit[i, j] = 1.0
            total += np.sum(blocks[i, :, j, :] * phi(unit))
    scale = max(1.0, abs(total))
    if abs(total.imag) > 1e-9 * scale:
        raise ArithmeticError(f"pairing has imaginary part {total.imag:.3e}")
    return float(total.real)


def pairing_cp(A: BlockState, V) -> float:
    """Closed form ``v^* A v`` of ``<A, phi_V>``; validated against :func:`pairing` in the tests."""
    v = mat_to_tensor(V)
    return float(np.real(np.vdot(v, A.matrix @ v)))


def pairing_ccp(A: BlockState, W) -> float:
    """Closed form ``w^* A^tau w`` of ``<A, phi^W>``."""
    return pairing_cp(A.partial_transpose(), W)


# --- certificates ---------------------------------------------------------

@dataclass
class RangeCertificate:
    pvs: list
    target_D_perp: Subspace
    target_E_perp: Subspace

    @property
    def n(self) -> int:
        return self.target_D_perp.n

    def span(self) -> Subspace:
        return Subspace.from_vectors([embed(p) for p in self.pvs], self.n) if self.pvs else Subspace.zero(self.n)

    def conjugate_span(self) -> Subspace:
        if not self.pvs:
            return Subspace.zero(self.n)
        return Subspace.from_vectors([embed(partial_conjugate(p)) for p in self.pvs], self.n)

    def errors(self) -> tuple[float, float]:
        s, c = self.span(), self.conjugate_span()
        e1 = s.distance(self.target_D_perp) if s.dim == self.target_D_perp.dim else np.inf
        e2 = c.distance(self.target_E_perp) if c.dim == self.target_E_perp.dim else np.inf
        return e1, e2

    def is_valid(self, eps: float = _SPAN_EPS) -> bool:
        e1, e2 = self.errors()
        return e1 < eps and e2 < eps

    def state(self) -> BlockState:
        zs = [embed(p) for p in self.pvs]
        return BlockState.from_vectors([z / np.linalg.norm(z) for z in zs], self.n)


def build_E(D1: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Partial conjugate ``{eta (x) xi : eta (x) conj(xi) in D1}`` of a completely separable ``D1``."""
    if D1.dim == 0:
        return D1
    if is_completely_separable(D1, tol) is None:
        raise NotSeparable("D1 contains a rank two element")
    pvs = [product_factors(v, D1.n, D1.m, tol) for v in D1.basis]
    return Subspace.from_vectors([embed(partial_conjugate(pv)) for pv in pvs], D1.n)


def default_budget(n: int) -> int:
    return 8 * n * (n + 1)


class _Greedy:
    """Incremental orthonormal bases of the two spans a certificate must fill.

    Candidates are pooled and taken largest residual first, so clustered
    samples do not crowd out the few that reach a thin direction.
    """

    def __init__(self, N: int, dim1: int, dim2: int):
        self.Q1 = np.zeros((0, N), dtype=complex)
        self.Q2 = np.zeros((0, N), dtype=complex)
        self.dims = (dim1, dim2)
        self.pvs: list[ProductVector] = []
        self.pool: list[tuple[ProductVector, np.ndarray, np.ndarray]] = []

    @property
    def full(self) -> bool:
        return self.Q1.shape[0] >= self.dims[0] and self.Q2.shape[0] >= self.dims[1]

    @staticmethod
    def _residuals(Q, Z):
        return Z - (Z @ Q.conj().T) @ Q

    def absorb(self, pvs) -> None:
        for pv in pvs:
            z, zc = embed(pv), embed(partial_conjugate(pv))
            s = np.linalg.norm(z)
            self.pool.append((pv, z / s, zc / s))
        while self.pool and not self.full:
            R1 = self._residuals(self.Q1, np.array([p[1] for p in self.pool]))
            R2 = self._residuals(self.Q2, np.array([p[2] for p in self.pool]))
            g1 = np.linalg.norm(R1, axis=1) * (self.Q1.shape[0] < self.dims[0])
            g2 = np.linalg.norm(R2, axis=1) * (self.Q2.shape[0] < self.dims[1])
            best = int(np.argmax(np.maximum(g1, g2)))
            if max(g1[best], g2[best]) < _MIN_GAIN:
                break
            if g1[best] >= _MIN_GAIN:
                self.Q1 = np.vstack([self.Q1, R1[best] / g1[best]])
            if g2[best] >= _MIN_GAIN:
                self.Q2 = np.vstack([self.Q2, R2[best] / g2[best]])
            self.pvs.append(self.pool.pop(best)[0])


def entangled_complement_witness(
    D: Subspace,
    tol: Tolerance = DEFAULT_TOL,
    budget: int | None = None,
    seed: int = 0,
    check: bool = True,
) -> RangeCertificate:
    """Product vectors spanning ``D^perp`` whose partial conjugates span the whole space.

    ``D`` must be completely entangled.
    """
    n = D.n
    full = Subspace.full(n)
    if D.dim == 0:
        pvs = [ProductVector.make(e, x) for x in np.eye(2) for e in np.eye(n)]
        return RangeCertificate(pvs, full, full)
    if check and not is_completely_entangled(D, tol, seed):
        raise ValueError("D is not completely entangled")
    budget = default_budget(n) if budget is None else budget
    perp = D.complement(tol)
    greedy = _Greedy(2 * n, perp.dim, 2 * n)
    used = rounds = 0
    while used < budget and not greedy.full:
        chunk = min(4 * (n + 1), budget - used)
        before = len(greedy.pvs)
        enum = enumerate_product_vectors(perp, tol, seed + 7919 * rounds, chunk)
        rounds += 1
        used += chunk
        greedy.absorb(enum.vectors())
        if rounds >= 2 and len(greedy.pvs) == before:
            break
    family = _Family(perp, tol)
    pvs = _polish(greedy.pvs, perp, family, max_steps=4 * n)
    cert = RangeCertificate(pvs, perp, full)
    if cert.is_valid():
        return cert
    s, c = cert.span().dim, cert.conjugate_span().dim
    raise BudgetExhausted(f"after {used} samples and {len(pvs) - len(greedy.pvs)} searches the spans reached {s}/{perp.dim} and {c}/{2 * n}")


class _Family:
    """The product vectors ``eta (x) xi`` of ``S``: ``eta`` in the generic kernel of the pencil at ``xi``."""

    def __init__(self, S: Subspace, tol: Tolerance = DEFAULT_TOL):
        self.M0, self.M1 = build_pencil(S, tol)
        self.n = S.n
        scale = np.linalg.norm(np.hstack([self.M0, self.M1]), 2) if len(self.M0) else 0.0
        ts = np.exp(2j * np.pi * np.arange(5) / 5) * 1.3
        self.r = max((rank(self.M0 + t * self.M1, tol, scale) for t in ts), default=0) if scale else 0

    def members(self, xis: np.ndarray) -> np.ndarray:
        M = xis[:, 0, None, None] * self.M0 + xis[:, 1, None, None] * self.M1
        if M.shape[1] == 0:
            return np.broadcast_to(np.eye(self.n, dtype=complex), (len(xis), self.n, self.n))
        _, _, Vh = np.linalg.svd(M)
        return Vh[:, self.r :, :].conj()

    def aligned(self, v: np.ndarray, conjugate: bool, grid=(12, 24)) -> ProductVector:
        """Member maximizing ``|<v, z>|`` (or ``|<v, z~>|``) over unit ``z``."""
        Vc = v.reshape(2, self.n).conj()

        def scores(xis):
            K = self.members(xis)
            a = xis.conj() if conjugate else xis
            r = np.einsum("gki,gi->gk", K @ Vc.T, a)
            return np.linalg.norm(r, axis=1), r, K

        def sphere(x):
            x = np.atleast_2d(x)
            return np.stack([np.cos(x[:, 0]), np.exp(1j * x[:, 1]) * np.sin(x[:, 0])], axis=-1)

        T, P = np.meshgrid(np.linspace(0, np.pi / 2, grid[0]), np.linspace(0, 2 * np.pi, grid[1], endpoint=False), indexing="ij")
        starts = np.column_stack([T.ravel(), P.ravel()])
        f = scores(sphere(starts))[0]
        x0 = starts[int(np.argmax(f))]
        x = minimize(lambda x: -scores(sphere(x))[0][0], x0, method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-12}).x
        if scores(sphere(x))[0][0] < f.max():
            x = x0
        _, r, K = scores(sphere(x))
        return ProductVector.make(r[0].conj() @ K[0], sphere(x)[0])


def _polish(pvs, perp: Subspace, family: _Family, max_steps: int) -> list[ProductVector]:
    """Add family members along the weakest eigenvector of ``A`` on ``D^perp`` or of ``A^tau``."""
    pvs = list(pvs)
    Q = perp.basis
    for _ in range(max_steps):
        if not pvs:
            pvs.append(family.aligned(Q[0], False))
            continue
        A = RangeCertificate(pvs, perp, perp).state()
        wA, VA = np.linalg.eigh(Q.conj() @ A.matrix @ Q.T)
        wT, VT = np.linalg.eigh(A.partial_transpose().matrix)
        relA, relT = wA[0] / wA[-1], wT[0] / wT[-1]
        if min(relA, relT) >= _COND_TARGET:
            break
        if relA <= relT:
            pvs.append(family.aligned(Q.T @ VA[:, 0], False))
        else:
            pvs.append(family.aligned(VT[:, 0], True))
    return pvs


def _reduced(S: Subspace, U: np.ndarray, tol: Tolerance) -> Subspace:
    """Coordinates of ``S`` (inside ``span(U) (x) C^2``) in the orthonormal rows ``U``."""
    mats = [tensor_to_mat(v, S.n) @ U.conj().T for v in S.basis]
    return Subspace.from_matrices(mats, U.shape[0], 2, tol) if mats else Subspace.zero(U.shape[0])


def _lift(pvs, U: np.ndarray) -> list[ProductVector]:
    return [ProductVector.make(pv.eta @ U, pv.xi) for pv in pvs]


@dataclass
class Witness:
    certificate: RangeCertificate
    state: BlockState
    E: Subspace
    report: FaceReport
    checks: dict = field(default_factory=dict)


def exposing_witness(
    D: Subspace,
    tol: Tolerance = DEFAULT_TOL,
    budget: int | None = None,
    seed: int = 0,
    report: FaceReport | None = None,
) -> Witness:
    """Separable state exposing ``Phi_D``, following the constructive proof of exposedness."""
    if report is None:
        report = classify(D, tol, seed)
    if report.verdict != Verdict.EXPOSED:
        raise NotExposed(f"Phi_D is not exposed (verdict {report.verdict.value})")
    n = D.n
    D1 = report.D1
    E = build_E(D1, tol)
    form = report.form
    if D1.dim == 0:
        pvs = entangled_complement_witness(D, tol, budget, seed, check=False).pvs
    elif isinstance(form, BetaTensorC2):
        U = orthocomplement([form.beta], n, tol)
        D2 = report.decomposition.D2
        sub = entangled_complement_witness(_reduced(D2, U, tol), tol, budget, seed, check=False)
        pvs = _lift(sub.pvs, U)
    else:
        pvs = _b_tensor_alpha_vectors(report, tol, budget, seed)
    cert = RangeCertificate(pvs, D.complement(tol), E.complement(tol))
    A = cert.state()
    w = Witness(cert, A, E, report)
    w.checks = witness_checks(w, tol)
    bad = [k for k, ok in w.checks.items() if k.endswith("_ok") and not ok]
    if bad:
        raise VerificationFailed(f"witness checks failed: {bad}")
    return w


def _b_tensor_alpha_vectors(report: FaceReport, tol, budget, seed) -> list[ProductVector]:
    dec = report.decomposition
    form: BTensorAlpha = dec.form
    n = dec.n
    U = orthocomplement(form.B, n, tol)
    # (xi_j + eta_j) (x) alpha_perp with <xi_j + eta_j, beta_i + delta_i> = 0, eta_j in B^perp
    rows = np.array([c.delta.conj() @ U.T for c in dec.coeffs]).reshape(dec.ell, U.shape[0])
    pvs = []
    for xi_j in form.B:
        rhs = np.array([-np.vdot(c.beta, xi_j) for c in dec.coeffs])
        coef = least_squares(rows, rhs, tol) if dec.ell else np.zeros(U.shape[0])
        pvs.append(ProductVector.make(xi_j + coef @ U, dec.alpha_perp))
    if U.shape[0]:
        sub = entangled_complement_witness(_reduced(dec.compressed_D2(tol), U, tol), tol, budget, seed, check=False)
        pvs += _lift(sub.pvs, U)
    return pvs


def witness_checks(w: Witness, tol: Tolerance = DEFAULT_TOL) -> dict:
    A, At = w.state, w.state.partial_transpose()
    n = A.n
    scale = A.norm()
    e1, e2 = w.certificate.errors()
    D_perp, E_perp = w.certificate.target_D_perp, w.certificate.target_E_perp
    rA, rAt = A.rank(tol), At.rank(tol)
    out = {
        "min_eig": A.min_eigenvalue(),
        "min_eig_pt": At.min_eigenvalue(),
        "rank": rA,
        "rank_pt": rAt,
        "span_error": e1,
        "conjugate_span_error": e2,
        "psd_ok": A.min_eigenvalue() >= -1e-9 * scale,
        "ppt_ok": At.min_eigenvalue() >= -1e-9 * scale,
        "certificate_ok": e1 < _SPAN_EPS and e2 < _SPAN_EPS,
        "rank_ok": rA == 2 * n - w.report.D.dim and rAt == 2 * n - w.E.dim,
    }
    out["range_ok"] = A.range(tol).equals(D_perp) and At.range(tol).equals(E_perp)
    return out


# --- dual face ------------------------------------------------------------

@dataclass
class DualFaceReport:
    zero_cp: float
    zero_ccp: float
    min_outside_cp: float
    min_outside_ccp: float
    threshold: float
    trials: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_dual_face(
    A: BlockState,
    D: Subspace,
    E: Subspace,
    trials: int = 100,
    seed: int = 0,
    tol: Tolerance = DEFAULT_TOL,
    strict: bool = True,
) -> DualFaceReport:
    """Check that ``A`` vanishes on ``Phi_D`` and ``Phi^E`` and is positive on sampled generators outside them."""
    n = A.n
    rng = np.random.default_rng(seed)
    threshold = 10 * tol.rel
    failures = []

    def pair_one(mat, cp):
        phi = MapSpec([mat], []) if cp else MapSpec([], [mat])
        return pairing(A, phi)

    zero_cp = max((abs(pair_one(V, True)) for V in D.matrices()), default=0.0)
    zero_ccp = max((abs(pair_one(W, False)) for W in E.matrices()), default=0.0)
    for V in D.matrices():
        if abs(pair_one(V, True)) >= 1e-9:
            failures.append(("cp_zero", V))
    for W in E.matrices():
        if abs(pair_one(W, False)) >= 1e-9:
            failures.append(("ccp_zero", W))

    mins = {}
    for label, S, cp in (("cp", D, True), ("ccp", E, False)):
        lowest = np.inf
        for _ in range(trials):
            v = rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
            v = v - S.project(v)
            nv = np.linalg.norm(v)
            if nv == 0:
                continue
            V = tensor_to_mat(v / nv, n)
            val = pair_one(V, cp)
            lowest = min(lowest, val)
            if val <= threshold:
                failures.append((f"{label}_positive", V))
        mins[label] = lowest
    rep = DualFaceReport(zero_cp, zero_ccp, mins["cp"], mins["ccp"], threshold, trials, failures)
    if strict and failures:
        kind, gen = failures[0]
        raise VerificationFailed(f"dual-face check {kind} failed", gen)
    return rep


# --- range criterion for a pair -------------------------------------------

@dataclass
class RangeCriterionResult:
    holds: bool
    product_vectors_conjugate_into_E: bool
    E_conjugate_into_D: bool
    perp_spanned: bool
    certificate: RangeCertificate | None = None


def check_range_criterion(
    D: Subspace,
    E: Subspace,
    tol: Tolerance = DEFAULT_TOL,
    budget: int | None = None,
    seed: int = 0,
) -> RangeCriterionResult:
    """Decide whether ``(D^perp, E^perp)`` satisfies the range criterion for completely separable ``E``."""
    if E.dim and is_completely_separable(E, tol) is None:
        raise ValueError("E must be completely separable")
    part = product_part(D, tol, seed)
    pvs = part.enumeration.vectors() if part.enumeration is not None else []
    into_E = all(E.contains(embed(partial_conjugate(pv)), tol) for pv in pvs)
    E_conj = build_E(E, tol)
    back = all(D.contains(v, tol) for v in E_conj.basis)
    spanned, _ = perp_spanned(D, tol, seed)
    holds = into_E and back and spanned
    res = RangeCriterionResult(holds, into_E, back, spanned)
    if holds:
        w = exposing_witness(D, tol, budget, seed)
        cert = RangeCertificate(w.certificate.pvs, D.complement(tol), E.complement(tol))
        if not cert.is_valid():
            raise VerificationFailed("certificate does not match the requested E")
        res.certificate = cert
    return res
