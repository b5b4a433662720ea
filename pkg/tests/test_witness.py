import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_pairing, unit

from expface.faces import Verdict, classify
from expface.generators import completely_entangled, generic
from expface.tensor import BlockState, ProductVector, Subspace, embed, mat_to_tensor
from expface.witness import (
    MapSpec,
    NotExposed,
    NotSeparable,
    RangeCertificate,
    build_E,
    check_range_criterion,
    entangled_complement_witness,
    exposing_witness,
    pairing,
    pairing_ccp,
    pairing_cp,
    verify_dual_face,
)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def span(*mats):
    return Subspace.from_matrices(list(mats))


SPANNED = (unit(1, 1, 3), unit(1, 3, 3) + unit(2, 2, 3))


def random_state(rng, n, rank=None):
    X = crandn(rng, 2 * n, rank or 2 * n)
    return BlockState(n, 2, X @ X.conj().T)


def test_pairing_identity_example():
    A = BlockState(2, 2, np.eye(4))
    assert pairing(A, MapSpec([np.eye(2)], [])) == pytest.approx(2.0)
    assert brute_pairing(np.eye(4), cp=[np.eye(2)]) == pytest.approx(2.0)


def test_pairing_matches_brute_force():
    rng = np.random.default_rng(0)
    for n in (2, 3):
        A = random_state(rng, n)
        V, W = crandn(rng, 2, n), crandn(rng, 2, n)
        assert pairing(A, MapSpec([V], [W])) == pytest.approx(brute_pairing(A.matrix, cp=[V], ccp=[W]).real)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**16))
def test_closed_forms_agree_with_expansion(n, seed):
    rng = np.random.default_rng(seed)
    A = random_state(rng, n)
    V, W = crandn(rng, 2, n), crandn(rng, 2, n)
    assert pairing_cp(A, V) == pytest.approx(pairing(A, MapSpec([V], [])), rel=1e-10, abs=1e-10)
    assert pairing_ccp(A, W) == pytest.approx(pairing(A, MapSpec([], [W])), rel=1e-10, abs=1e-10)
    # <A, phi^W> = <A^tau, phi_W>
    assert pairing(A, MapSpec([], [W])) == pytest.approx(pairing(A.partial_transpose(), MapSpec([W], [])), rel=1e-10, abs=1e-10)


def test_pairing_with_rank_one_state():
    rng = np.random.default_rng(1)
    V, W = crandn(rng, 2, 3), crandn(rng, 2, 3)
    z, w = mat_to_tensor(V), mat_to_tensor(W)
    A = BlockState.from_vectors([z], 3)
    assert pairing(A, MapSpec([W], [])) == pytest.approx(abs(np.vdot(z, w)) ** 2)
    w_perp = w - np.vdot(z, w) / np.vdot(z, z) * z
    W_perp = w_perp.reshape(2, 3)
    assert abs(pairing(A, MapSpec([W_perp], []))) < 1e-12


def test_pairing_dimension_mismatch():
    with pytest.raises(ValueError):
        pairing(BlockState(2, 2, np.eye(4)), MapSpec([np.eye(3)[:2]], []))


def test_build_E_examples():
    D1 = span(unit(1, 1, 3))
    assert build_E(D1).equals(D1)
    alpha = np.array([1, 1j]) / np.sqrt(2)
    B = np.eye(3)[:2]
    D1 = Subspace.from_vectors([np.kron(alpha, b) for b in B], 3)
    E = build_E(D1)
    assert E.equals(Subspace.from_vectors([np.kron(alpha.conj(), b) for b in B], 3))
    assert build_E(Subspace.zero(3)).dim == 0
    with pytest.raises(NotSeparable):
        build_E(span(np.eye(2)))


def test_entangled_complement_witness_examples():
    D = span(unit(1, 2, 2) + unit(2, 1, 2) + unit(2, 2, 2))
    cert = entangled_complement_witness(D)
    assert cert.span().dim == 3 and cert.conjugate_span().dim == 4
    assert cert.is_valid()
    D = Subspace.from_matrices(completely_entangled(3, 2, seed=4))
    cert = entangled_complement_witness(D)
    assert len(cert.pvs) >= 6 and cert.conjugate_span().dim == 6 and cert.is_valid()
    cert = entangled_complement_witness(Subspace.zero(3))
    assert len(cert.pvs) == 6 and cert.is_valid()


def test_entangled_complement_witness_rejects_product_vectors():
    with pytest.raises(ValueError):
        entangled_complement_witness(span(unit(1, 1, 2)))


def _check_witness(D, w):
    n = D.n
    A, At = w.state, w.state.partial_transpose()
    assert w.certificate.is_valid()
    assert A.min_eigenvalue() >= -1e-9 * A.norm()
    assert At.min_eigenvalue() >= -1e-9 * A.norm()
    assert A.rank() == 2 * n - D.dim
    assert At.rank() == 2 * n - w.E.dim
    assert A.range().equals(D.complement())
    assert At.range().equals(w.E.complement())


def test_exposing_witness_spanned_example():
    D = span(*SPANNED)
    w = exposing_witness(D)
    assert w.certificate.span().dim == 4 and w.certificate.conjugate_span().dim == 5
    assert w.E.equals(span(unit(1, 1, 3)))
    _check_witness(D, w)
    rep = verify_dual_face(w.state, D, w.E, trials=50, seed=1)
    assert rep.ok and rep.min_outside_cp > 1e-6 and rep.min_outside_ccp > 1e-6


def test_exposing_witness_rank_two_ray():
    for n in (2, 3):
        V = np.zeros((2, n), dtype=complex)
        V[0, 0], V[1, 1] = 1.0, 1.0
        D = span(V)
        w = exposing_witness(D)
        assert w.state.rank() == 2 * n - 1
        assert w.state.partial_transpose().rank() == 2 * n
        _check_witness(D, w)


def test_exposing_witness_separable_subspace_only():
    D = span(unit(1, 1, 3), unit(1, 2, 3))
    w = exposing_witness(D)
    _check_witness(D, w)


def test_exposing_witness_beta_tensor_c2():
    D = span(unit(1, 1, 3), unit(2, 1, 3), unit(1, 2, 3) + unit(2, 3, 3))
    w = exposing_witness(D)
    _check_witness(D, w)


def test_exposing_witness_refuses_unexposed():
    with pytest.raises(NotExposed):
        exposing_witness(span(unit(1, 1, 3), unit(1, 2, 3) + unit(2, 1, 3)))


def test_verify_dual_face_zero_and_positive_sides():
    D = span(*SPANNED)
    w = exposing_witness(D)
    for V in D.matrices():
        assert abs(pairing(w.state, MapSpec([V], []))) < 1e-12
    V_out = D.complement().matrices()[0]
    assert pairing(w.state, MapSpec([V_out], [])) > 1e-6


def test_verify_dual_face_detects_a_bad_state():
    D = span(*SPANNED)
    w = exposing_witness(D)
    # a product projector onto a vector of D is not in the dual face
    A = w.state + BlockState.from_vectors([mat_to_tensor(unit(1, 1, 3))], 3)
    rep = verify_dual_face(A, D, w.E, trials=5, seed=0, strict=False)
    assert not rep.ok
    assert rep.failures[0][0] == "cp_zero"


def test_check_range_criterion_examples():
    E = span(unit(1, 1, 3))
    res = check_range_criterion(span(*SPANNED), E)
    assert res.holds and res.certificate.is_valid()
    assert not check_range_criterion(span(unit(1, 1, 3), unit(1, 2, 3) + unit(2, 1, 3)), E).holds
    D = span(unit(1, 2, 2) + unit(2, 1, 2) + unit(2, 2, 2))
    res = check_range_criterion(D, Subspace.zero(2))
    assert res.holds and res.certificate.conjugate_span().dim == 4


def test_check_range_criterion_needs_matching_E():
    # product vectors of D (none) are trivially conjugate into E, but E is too big
    D = span(unit(1, 2, 2) + unit(2, 1, 2) + unit(2, 2, 2))
    res = check_range_criterion(D, span(unit(1, 1, 2)))
    assert not res.holds and not res.E_conjugate_into_D


def test_witness_on_generic_small_subspace():
    # a generic 1-dim subspace is spanned by a rank-two matrix
    D = Subspace.from_matrices(generic(3, 1, seed=11))
    assert classify(D).verdict == Verdict.EXPOSED
    _check_witness(D, exposing_witness(D))


def test_certificate_errors_for_wrong_targets():
    pvs = [ProductVector.make(e, x) for x in np.eye(2) for e in np.eye(2)]
    cert = RangeCertificate(pvs[:3], Subspace.full(2), Subspace.full(2))
    assert not cert.is_valid()
    cert = RangeCertificate(pvs, Subspace.full(2), Subspace.full(2))
    assert cert.is_valid()
    assert embed(pvs[0]).shape == (4,)


def test_thin_conjugate_direction_is_found():
    # nearly rank-one basis matrices: samples of the D^perp family reach one conjugate direction only weakly
    D = Subspace.from_matrices(completely_entangled(4, 3, seed=25))
    cert = entangled_complement_witness(D)
    assert cert.is_valid()
    ev = np.linalg.eigvalsh(cert.state().partial_transpose().matrix)
    assert ev[0] / ev[-1] > 1e-7
    _check_witness(D, exposing_witness(D))
