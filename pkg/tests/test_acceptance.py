"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed at the end of the run.

Run alone with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
"""

import functools
import sys
import time

import numpy as np

from oracles import grid_product_vectors, planted_subspace, same_ray_sets, unit

from expface.faces import Verdict, classify
from expface.generators import (
    b_tensor_alpha_plus_entangled,
    completely_entangled,
    generic,
    planted_kernel_state,
    separable_sum,
)
from expface.product import FINITE, INFINITE, canonical_ray_matrix, enumerate_product_vectors, product_part
from expface.reduction import peel, reduce
from expface.tensor import Subspace, embed
from expface.witness import (
    entangled_complement_witness,
    exposing_witness,
    verify_dual_face,
    witness_checks,
)

RESULTS = {}


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def test():
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            RESULTS[number] = (title, ok, detail, time.perf_counter() - t0)
            assert ok, detail

        return test

    return wrap


def span(*mats):
    return Subspace.from_matrices(list(mats))


def ray_key(Z):
    return tuple(np.round(np.concatenate([Z.real.ravel(), Z.imag.ravel()]), 8))


def equivalence_instances(n, count, seed0=0):
    """Constructed B (x) alpha + entangled instances whose product part is exactly the planted B (x) alpha."""
    out, seed = [], seed0
    while len(out) < count:
        inst = b_tensor_alpha_plus_entangled(n, seed=seed)
        seed += 1
        D = Subspace.from_matrices(inst.matrices)
        target = Subspace.from_vectors([np.kron(inst.alpha, b) for b in inst.B], n)
        part = product_part(D)
        if part.is_subspace and part.D1.equals(target):
            out.append(D)
    return out


_SUITE6 = {}


def suite6(n):
    if n not in _SUITE6:
        _SUITE6[n] = [(D, classify(D)) for D in equivalence_instances(n, 100, seed0=1000 * n)]
    return _SUITE6[n]


@criterion(1, "example A not exposed, 3 of 4 perp dimensions spanned")
def test_c01_example_not_spanned():
    rep = classify(span(unit(1, 1, 3), unit(1, 2, 3) + unit(2, 1, 3)))
    conds = (rep.cond_i, rep.cond_ii, rep.cond_iii)
    ok = conds == (False, False, False) and rep.verdict == Verdict.NOT_EXPOSED and rep.perp_product_span == 3
    return ok, f"conds={conds} verdict={rep.verdict.value} perp span={rep.perp_product_span}/4"


@criterion(2, "example B exposed, witness passes dual-face check")
def test_c02_example_spanned():
    D = span(unit(1, 1, 3), unit(1, 3, 3) + unit(2, 2, 3))
    rep = classify(D)
    w = exposing_witness(D, report=rep)
    dual = verify_dual_face(w.state, D, w.E, trials=100, seed=0, strict=False)
    zero = max(dual.zero_cp, dual.zero_ccp)
    margin = min(dual.min_outside_cp, dual.min_outside_ccp)
    conds = (rep.cond_i, rep.cond_ii, rep.cond_iii)
    ok = conds == (True, True, True) and rep.verdict == Verdict.EXPOSED and zero < 1e-9 and margin > 1e-6
    return ok, f"conds={conds} zero side {zero:.1e} margin {margin:.3e} over {dual.trials} trials"


@criterion(3, "face condition fails, exactly rays e11 and e11+e12+e21+e22")
def test_c03_counterexample():
    D = span(unit(1, 1, 2), unit(1, 2, 2) + unit(2, 1, 2) + unit(2, 2, 2))
    rep = classify(D)
    enum = enumerate_product_vectors(D)
    got = sorted(ray_key(canonical_ray_matrix(pv)) for pv in enum.rays)
    want = sorted(ray_key(Z) for Z in (unit(1, 1, 2), np.ones((2, 2), dtype=complex)))
    ok = rep.verdict == Verdict.FACE_CONDITION_FAILED and enum.kind == FINITE and got == want
    return ok, f"verdict={rep.verdict.value} rays={len(enum.rays)}"


@criterion(4, "unexposed face, one product vector in the complement")
def test_c04_unexposed():
    D = span(unit(1, 1, 2), unit(1, 2, 2) + unit(2, 1, 2))
    rep = classify(D)
    enum = enumerate_product_vectors(D.complement())
    ok = rep.face_condition and rep.verdict == Verdict.NOT_EXPOSED and enum.kind == FINITE and len(enum.rays) == 1
    return ok, f"face={rep.face_condition} verdict={rep.verdict.value} perp rays={len(enum.rays)}"


@criterion(5, "genericity: n rays for dim n, infinite family for dim n+1")
def test_c05_genericity():
    bad = []
    for n in range(2, 7):
        for seed in range(50):
            e = enumerate_product_vectors(Subspace.from_matrices(generic(n, n, seed=seed)))
            if e.kind != FINITE or len(e.rays) != n:
                bad.append(("dim n", n, seed, e.kind, len(e.rays)))
            e = enumerate_product_vectors(Subspace.from_matrices(generic(n, n + 1, seed=seed)))
            if e.kind != INFINITE:
                bad.append(("dim n+1", n, seed, e.kind))
    return not bad, f"500 instances, {len(bad)} failures {bad[:3]}"


@criterion(6, "conditions agree; all-true gives dim <= n-1; face gives dim <= n")
def test_c06_equivalence():
    bad, counts = [], {}
    for n in (3, 4, 5):
        inst = suite6(n)
        true = 0
        for D, rep in inst:
            if not rep.consistent or None in (rep.cond_i, rep.cond_ii, rep.cond_iii):
                bad.append((n, "conds", rep.cond_i, rep.cond_ii, rep.cond_iii))
            if rep.cond_iii and D.dim > n - 1:
                bad.append((n, "dim", D.dim))
            if rep.face_condition and D.dim > n:
                bad.append((n, "face dim", D.dim))
            true += bool(rep.cond_iii)
        counts[n] = (len(inst), true)
    return not bad, f"(instances, all-true) per n {counts}, {len(bad)} failures"


@criterion(7, "completely entangled subspaces get valid certificates")
def test_c07_entangled_certificates():
    pairs = [(n, d) for n in range(2, 6) for d in range(1, n)]
    bad, total = [], 0
    for s in range(50):
        n, d = pairs[s % len(pairs)]
        D = Subspace.from_matrices(completely_entangled(n, d, seed=s))
        cert = entangled_complement_witness(D)
        total += 1
        if not cert.is_valid(1e-8):
            bad.append((n, d, s, cert.errors()))
    return not bad, f"{total} instances, {len(bad)} invalid"


@criterion(8, "witness ranks 2n - dim D and 2n - dim E, states PSD and PPT")
def test_c08_witness_ranges():
    D2 = span(unit(1, 1, 3), unit(1, 3, 3) + unit(2, 2, 3))
    cases = [(D2, classify(D2))] + [c for n in (3, 4, 5) for c in suite6(n)]
    bad, built = [], 0
    for D, rep in cases:
        if rep.verdict != Verdict.EXPOSED:
            continue
        w = exposing_witness(D, report=rep)
        c = witness_checks(w)
        built += 1
        n, scale = D.n, w.state.norm()
        ok = (
            c["rank"] == 2 * n - D.dim
            and c["rank_pt"] == 2 * n - w.E.dim
            and w.state.min_eigenvalue() >= -1e-9 * scale
            and w.state.partial_transpose().min_eigenvalue() >= -1e-9 * scale
        )
        if not ok:
            bad.append((n, D.dim, w.E.dim, c["rank"], c["rank_pt"]))
    return not bad and built > 0, f"{built} exposed instances, {len(bad)} failures"


@criterion(9, "peeling drops both ranks and the support; reduce reconstructs")
def test_c09_peeling():
    bad, worst_split = [], 0.0
    for s in range(25):
        n = 2 + s % 4
        P = planted_kernel_state(n, seed=s)
        res = peel(P.state)
        c = res.checks
        worst_split = max(worst_split, c["split_error"])
        rb, ra = c["rank_before"], c["rank_after"]
        ok = (
            ra == (rb[0] - 1, rb[1] - 1)
            and c["support_after"] <= c["support_before"] - 1
            and c["kernel_ok"]
            and c["split_error"] < 1e-9
        )
        if not ok:
            bad.append((n, s, rb, ra, c["support_before"], c["support_after"]))
    worst_rec = 0.0
    for n in (2, 3, 4, 5):
        for seed in range(5):
            A, _ = separable_sum(n, n, seed=seed)
            red = reduce(A)
            err = np.linalg.norm(red.reconstruct() - A.matrix, 2)
            worst_rec = max(worst_rec, err)
            if red.status != "Separable" or err >= 1e-8:
                bad.append(("reduce", n, seed, red.status, err))
    return not bad, f"25 peels worst split {worst_split:.1e}, 20 reductions worst error {worst_rec:.1e}, {len(bad)} failures"


ORACLE_CONFIGS = [(2, 0, 2), (3, 0, 3), (4, 2, 1), (4, 3, 0), (3, 1, 1), (3, 0, 2), (2, 1, 0)]


@criterion(10, "grid-search oracle agrees with the enumeration")
def test_c10_oracle():
    bad = []
    for s in range(25):
        n, planted, extra = ORACLE_CONFIGS[s % len(ORACLE_CONFIGS)]
        mats = planted_subspace(n, planted, extra, np.random.default_rng(1000 + s))
        enum = enumerate_product_vectors(Subspace.from_matrices(mats))
        ours = [embed(pv) for pv in enum.rays]
        theirs = grid_product_vectors(mats, n)
        if enum.kind != FINITE or not same_ray_sets(ours, theirs):
            bad.append((s, n, len(ours), len(theirs)))
    return not bad, f"25 instances, {len(bad)} disagreements {bad[:3]}"


def summary_lines():
    lines = []
    for number in sorted(RESULTS):
        title, ok, detail, secs = RESULTS[number]
        lines.append(f"criterion {number:2d} {'PASS' if ok else 'FAIL'} ({secs:.1f}s) {title}: {detail}")
    return lines


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(summary_lines()))
    sys.exit(0 if all(r[1] for r in RESULTS.values()) else 1)
