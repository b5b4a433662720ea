"""JSON files for subspaces, states and reports.

Complex numbers are ``[re, im]`` pairs.  Floats are written with ``repr``
precision, so loading a file and writing it again gives identical bytes.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import __version__
from .linalg import DEFAULT_TOL, Tolerance, rank
from .tensor import BlockState, ProductVector, Subspace, mat_to_tensor

log = logging.getLogger(__name__)


class BadInput(ValueError):
    pass


def encode_complex(a) -> list:
    """Nested lists with every complex entry replaced by ``[re, im]``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(data, shape_tail=()) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise BadInput(f"not a numeric array: {exc}") from exc
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise BadInput("complex entries must be [re, im] pairs")
    if not np.all(np.isfinite(arr)):
        raise BadInput("non-finite entry")
    out = arr[..., 0] + 1j * arr[..., 1]
    if shape_tail and out.shape[-len(shape_tail):] != tuple(shape_tail):
        raise BadInput(f"expected trailing shape {shape_tail}, got {out.shape}")
    return out


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BadInput(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadInput(f"{path} is not valid JSON: {exc}") from exc


# --- subspaces ---------------------------------------------------------------

def subspace_to_dict(matrices, n: int, m: int = 2) -> dict:
    return {"m": m, "n": n, "basis": [encode_complex(Z) for Z in matrices]}


def subspace_from_dict(data: dict, tol: Tolerance = DEFAULT_TOL, require_m2: bool = True) -> tuple[Subspace, list]:
    """The subspace and the raw basis matrices of a subspace file."""
    if not isinstance(data, dict):
        raise BadInput("subspace file must be a JSON object")
    for key in ("m", "n", "basis"):
        if key not in data:
            raise BadInput(f"missing field {key!r}")
    m, n = data["m"], data["n"]
    if not (isinstance(m, int) and isinstance(n, int) and m >= 1 and n >= 1):
        raise BadInput("m and n must be positive integers")
    if require_m2 and m != 2:
        raise BadInput(f"analysis needs m = 2, got m = {m}")
    if not isinstance(data["basis"], list) or not data["basis"]:
        raise BadInput("basis must be a nonempty list")
    mats = [decode_complex(Z, (m, n)) for Z in data["basis"]]
    for Z in mats:
        if Z.shape != (m, n):
            raise BadInput(f"basis matrix of shape {Z.shape}, expected {(m, n)}")
    vecs = np.array([mat_to_tensor(Z) for Z in mats])
    r = rank(vecs, tol)
    if r == 0:
        raise BadInput("basis spans the zero subspace")
    if r < len(mats):
        log.warning("basis has %d elements but rank %d; re-orthonormalizing", len(mats), r)
    return Subspace.from_vectors(vecs, n, m, tol), mats


def load_subspace(path, tol: Tolerance = DEFAULT_TOL) -> tuple[Subspace, dict]:
    data = read_json(path)
    D, _ = subspace_from_dict(data, tol)
    return D, data


def write_subspace(path, matrices, n: int, m: int = 2) -> None:
    Path(path).write_text(dumps(subspace_to_dict(matrices, n, m)))


# --- states ------------------------------------------------------------------

def state_to_dict(A: BlockState) -> dict:
    return {"m": A.m, "n": A.n, "matrix": encode_complex(A.matrix)}


def state_from_dict(data: dict) -> BlockState:
    if not isinstance(data, dict) or not {"m", "n", "matrix"} <= set(data):
        raise BadInput("state file needs fields m, n, matrix")
    m, n = data["m"], data["n"]
    if m != 2:
        raise BadInput(f"states on C^n (x) C^2 only, got m = {m}")
    M = decode_complex(data["matrix"], (m * n, m * n))
    try:
        return BlockState(n, m, M)
    except ValueError as exc:
        raise BadInput(str(exc)) from exc


def load_state(path) -> BlockState:
    return state_from_dict(read_json(path))


# --- report pieces -------------------------------------------------------------

def pv_to_dict(pv: ProductVector) -> dict:
    return {"eta": encode_complex(pv.eta), "xi": encode_complex(pv.xi)}


def tolerance_to_dict(tol: Tolerance) -> dict:
    return {"rel": tol.rel, "abs": tol.abs}


def report_header(command: str, data_in: dict, tol: Tolerance, seed: int) -> dict:
    return {
        "command": command,
        "input": data_in,
        "seed": seed,
        "tolerance": tolerance_to_dict(tol),
        "version": __version__,
    }


def plain(obj):
    """Recursively convert numpy scalars, arrays and tuples to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return encode_complex(obj) if np.iscomplexobj(obj) else obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj
