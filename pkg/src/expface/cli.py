"""Command line interface: ``expface {pv,classify,witness,peel,gen}``.

Exit codes: 0 success, 1 bad or unsuitable input, 2 numerical failure.
Reports go to stdout (or ``--output``), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .faces import FaceReport, classify
from .generators import FIXTURES, KINDS, generate
from .linalg import Tolerance
from .product import INFINITE, EnumerationError, canonical_ray_matrix, enumerate_product_vectors
from .reduction import NoKernelPV, SearchFailed, peel, reduce
from .tensor import ProductVector
from .witness import BudgetExhausted, NotExposed, VerificationFailed, exposing_witness, verify_dual_face

log = logging.getLogger("expface")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# --- formatting ----------------------------------------------------------------

def ray_label(pv: ProductVector) -> str:
    """``e11+e12``-style name of a ray, scaled so its first nonzero entry is 1."""
    Z = canonical_ray_matrix(pv)
    parts = []
    for (i, j), c in np.ndenumerate(Z):
        if abs(c) < 1e-9:
            continue
        unit = f"e{i + 1}{j + 1}"
        if abs(c - 1) < 1e-9:
            parts.append(("+", unit))
        elif abs(c + 1) < 1e-9:
            parts.append(("-", unit))
        else:
            parts.append(("+", f"({c.real:.6g}{c.imag:+.6g}i){unit}"))
    text = "".join(sign + term for sign, term in parts)
    return text[1:] if text.startswith("+") else text


def _is_simple(label: str) -> bool:
    return "(" not in label


def pv_record(pv: ProductVector) -> dict:
    return {**io.pv_to_dict(pv), "matrix": io.encode_complex(pv.matrix()), "label": ray_label(pv)}


def enumeration_dict(enum) -> dict:
    return {
        "kind": enum.kind,
        "normal_rank": enum.normal_rank,
        "rays": [pv_record(pv) for pv in enum.rays],
        "family_samples": [io.pv_to_dict(pv) for pv in enum.family_samples],
    }


def enumeration_text(enum) -> str:
    rays = [ray_label(pv) for pv in enum.rays]
    if enum.kind == INFINITE:
        line = f"infinite family ({len(enum.family_samples)} samples)"
        if rays:
            line += f"; {len(rays)} isolated ray{'s' if len(rays) != 1 else ''}"
        return line
    head = f"{len(rays)} ray{'s' if len(rays) != 1 else ''}"
    if rays and all(_is_simple(r) for r in rays):
        return f"{head}: {', '.join(rays)}"
    return "\n".join([head] + [f"  {r}" for r in rays])


def _form_dict(form) -> dict | None:
    if form is None:
        return None
    if hasattr(form, "B"):
        return {"type": "BTensorAlpha", "B": io.encode_complex(form.B), "alpha": io.encode_complex(form.alpha)}
    return {"type": "BetaTensorC2", "beta": io.encode_complex(form.beta)}


def face_report_dict(rep: FaceReport) -> dict:
    out = {
        "verdict": rep.verdict.value,
        "face_condition": rep.face_condition,
        "cond_i": rep.cond_i,
        "cond_ii": rep.cond_ii,
        "cond_iii": rep.cond_iii,
        "consistent": rep.consistent,
        "n": rep.n,
        "dim_D": rep.D.dim,
        "dim_D1": rep.D1.dim,
        "D1_basis": [io.encode_complex(Z) for Z in rep.D1.matrices()],
        "form": _form_dict(rep.form),
        "perp_product_span": rep.perp_product_span,
        "dim_bound_n": rep.dim_bound_n,
        "dim_bound_n_minus_1": rep.dim_bound_n_minus_1,
        "coefficients": None,
    }
    dec = rep.decomposition
    if dec is not None and dec.coeffs:
        out["coefficients"] = [
            {"gamma": io.encode_complex(c.gamma), "beta": io.encode_complex(c.beta), "delta": io.encode_complex(c.delta)}
            for c in dec.coeffs
        ]
    return out


def _b(x) -> str:
    return "n/a" if x is None else str(bool(x)).lower()


def face_report_text(rep: FaceReport) -> str:
    return "\n".join(
        [
            f"verdict: {rep.verdict.value}",
            f"face condition: {_b(rep.face_condition)}",
            f"cond_i: {_b(rep.cond_i)}  cond_ii: {_b(rep.cond_ii)}  cond_iii: {_b(rep.cond_iii)}",
            f"dim D = {rep.D.dim}, dim D1 = {rep.D1.dim}, n = {rep.n}",
            f"product vectors in D^perp span {rep.perp_product_span} of {2 * rep.n - rep.D.dim}",
        ]
    )


# --- commands ------------------------------------------------------------------

def _tol(args) -> Tolerance:
    try:
        return Tolerance(args.tol_rel, args.tol_abs)
    except ValueError as exc:
        raise CommandError(str(exc), EXIT_INPUT) from exc


def run_pv(path, args) -> tuple[dict, str]:
    tol = _tol(args)
    D, data = io.load_subspace(path, tol)
    target = D.complement(tol) if args.perp else D
    if target.dim == 0:
        raise CommandError("the subspace to enumerate is zero", EXIT_INPUT)
    try:
        enum = enumerate_product_vectors(target, tol, args.seed)
    except EnumerationError as exc:
        raise CommandError(f"enumeration failed: {exc}", EXIT_NUMERIC) from exc
    rep = io.report_header("pv", data, tol, args.seed)
    rep.update(perp=args.perp, enumeration=enumeration_dict(enum))
    return rep, enumeration_text(enum)


def run_classify(path, args) -> tuple[dict, str]:
    tol = _tol(args)
    D, data = io.load_subspace(path, tol)
    try:
        face = classify(D, tol, args.seed)
    except EnumerationError as exc:
        raise CommandError(f"enumeration failed: {exc}", EXIT_NUMERIC) from exc
    rep = io.report_header("classify", data, tol, args.seed)
    rep["face_report"] = face_report_dict(face)
    return rep, face_report_text(face)


def run_witness(path, args) -> tuple[dict, str]:
    tol = _tol(args)
    D, data = io.load_subspace(path, tol)
    try:
        face = classify(D, tol, args.seed)
        w = exposing_witness(D, tol, args.budget, args.seed, report=face)
        dual = verify_dual_face(w.state, D, w.E, args.trials, args.seed, tol, strict=False)
    except NotExposed as exc:
        raise CommandError(str(exc), EXIT_INPUT) from exc
    except (EnumerationError, BudgetExhausted, VerificationFailed) as exc:
        raise CommandError(f"{type(exc).__name__}: {exc}", EXIT_NUMERIC) from exc
    rep = io.report_header("witness", data, tol, args.seed)
    rep["face_report"] = face_report_dict(face)
    rep["certificate"] = [io.pv_to_dict(pv) for pv in w.certificate.pvs]
    rep["E_basis"] = [io.encode_complex(Z) for Z in w.E.matrices()]
    rep["state"] = io.state_to_dict(w.state)
    rep["checks"] = io.plain(w.checks)
    rep["verification"] = {
        "ok": dual.ok,
        "trials": dual.trials,
        "threshold": dual.threshold,
        "max_zero_cp": dual.zero_cp,
        "max_zero_ccp": dual.zero_ccp,
        "min_outside_cp": dual.min_outside_cp,
        "min_outside_ccp": dual.min_outside_ccp,
        "failures": len(dual.failures),
    }
    text = "\n".join(
        [
            face_report_text(face),
            f"certificate: {len(w.certificate.pvs)} product vectors",
            f"rank A = {w.checks['rank']}, rank A^tau = {w.checks['rank_pt']}",
            f"dual face: {'ok' if dual.ok else 'FAILED'} (zero side {max(dual.zero_cp, dual.zero_ccp):.2e}, "
            f"min outside {min(dual.min_outside_cp, dual.min_outside_ccp):.3e})",
        ]
    )
    if not dual.ok:
        raise CommandError(text + "\ndual-face verification failed", EXIT_NUMERIC)
    return rep, text


def run_peel(path, args) -> tuple[dict, str]:
    tol = _tol(args)
    data = io.read_json(path)
    A = io.state_from_dict(data)
    rep = io.report_header("peel", data, tol, args.seed)
    if args.reduce:
        red = reduce(A, tol, args.budget, args.seed)
        err = float(np.linalg.norm(red.reconstruct() - A.matrix, 2))
        rep["reduction"] = {
            "status": red.status,
            "terms": [{"c": c, **io.pv_to_dict(pv)} for c, pv in red.terms],
            "residual": io.state_to_dict(red.residual),
            "reconstruction_error": err,
            "log": io.plain(red.log),
        }
        return rep, f"{red.status}: {len(red.terms)} terms, reconstruction error {err:.2e}"
    try:
        res = peel(A, tol, args.budget, args.seed)
    except NoKernelPV as exc:
        raise CommandError(f"NoKernelPV: {exc}", EXIT_INPUT) from exc
    except SearchFailed as exc:
        raise CommandError(f"SearchFailed: {exc} {exc.diagnostics}", EXIT_NUMERIC) from exc
    rep["peel"] = {
        "c": res.c,
        "q": io.pv_to_dict(res.q),
        "kernel_pv": io.pv_to_dict(res.kernel_pv),
        "A_tilde": io.state_to_dict(res.A_tilde),
        "checks": io.plain(res.checks),
    }
    ch = res.checks
    text = f"c = {res.c:.12g}"
    if "rank_before" in ch:
        text += f", ranks {tuple(ch['rank_before'])} -> {tuple(ch['rank_after'])}, support {ch['support_before']} -> {ch['support_after']}"
    return rep, text


def run_gen(args) -> tuple[dict, str]:
    kind = args.kind
    if kind == "fixture":
        if not args.name:
            raise CommandError("gen fixture needs --name", EXIT_INPUT)
        kind = args.name
    try:
        mats = generate(kind, args.n, args.dim, args.seed)
    except (ValueError, KeyError) as exc:
        raise CommandError(str(exc), EXIT_INPUT) from exc
    n = mats[0].shape[1]
    data = io.subspace_to_dict(mats, n)
    return data, io.dumps(data).rstrip("\n")


COMMANDS = {"pv": run_pv, "classify": run_classify, "witness": run_witness, "peel": run_peel}


def _run_one(command, path, args):
    try:
        rep, text = COMMANDS[command](path, args)
        return EXIT_OK, rep, text, None
    except io.BadInput as exc:
        return EXIT_INPUT, None, None, f"{path}: bad input: {exc}"
    except CommandError as exc:
        return exc.code, None, None, f"{path}: {exc}"


def _emit(args, rep, text):
    out = io.dumps(rep) if args.format == "json" else text + "\n"
    if args.output:
        Path(args.output).write_text(out)
    else:
        sys.stdout.write(out)


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rel", type=float, default=1e-8, help="relative singular value cutoff")
    common.add_argument("--tol-abs", type=float, default=1e-12, help="absolute singular value floor")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None, help="sample budget for randomized searches")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--jobs", type=int, default=1, help="worker processes when INPUT is a directory")
    common.add_argument("-o", "--output", default=None, help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="expface", description="Exposed faces of decomposable maps on 2 x n matrices.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("pv", parents=[common], help="enumerate product vectors of a subspace")
    s.add_argument("input")
    s.add_argument("--perp", action="store_true", help="enumerate the orthogonal complement instead")
    s = sub.add_parser("classify", parents=[common], help="face analysis of Phi_D")
    s.add_argument("input")
    s = sub.add_parser("witness", parents=[common], help="separable exposing state and its verification")
    s.add_argument("input")
    s.add_argument("--trials", type=int, default=100, help="random generators per side in the dual-face check")
    s = sub.add_parser("peel", parents=[common], help="peel one product projector from a PPT state")
    s.add_argument("input")
    s.add_argument("--reduce", action="store_true", help="peel repeatedly and report the decomposition")
    s = sub.add_parser("gen", parents=[common], help="write a subspace file")
    s.add_argument("kind", choices=KINDS + ("fixture",) + tuple(FIXTURES))
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--name", choices=tuple(FIXTURES), default=None, help="fixture name for kind 'fixture'")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(levelname)s: %(message)s")
    if args.command == "gen":
        try:
            data, text = run_gen(args)
        except CommandError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return exc.code
        out = io.dumps(data)
        if args.output:
            Path(args.output).write_text(out)
        else:
            sys.stdout.write(out)
        return EXIT_OK

    path = Path(args.input)
    if path.is_dir():
        return _run_batch(args, sorted(path.glob("*.json")))
    code, rep, text, err = _run_one(args.command, path, args)
    if err:
        print(f"error: {err}", file=sys.stderr)
        return code
    _emit(args, rep, text)
    return code


def _run_batch(args, paths) -> int:
    if not paths:
        print(f"error: no .json files in {args.input}", file=sys.stderr)
        return EXIT_INPUT
    jobs = max(1, args.jobs)
    if jobs == 1:
        results = [_run_one(args.command, p, args) for p in paths]
    else:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_one, [args.command] * len(paths), paths, [args] * len(paths)))
    reports, texts, worst = {}, [], EXIT_OK
    for p, (code, rep, text, err) in zip(paths, results):
        worst = max(worst, code)
        if err:
            print(f"error: {err}", file=sys.stderr)
            reports[p.name] = {"error": err, "exit_code": code}
        else:
            reports[p.name] = rep
            texts.append(f"== {p.name}\n{text}")
    _emit(args, {"files": reports}, "\n".join(texts))
    return worst


if __name__ == "__main__":
    sys.exit(main())
