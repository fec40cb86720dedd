"""JSON documents for models, STM lists and reports.

Matrices are row-major nested lists. Each subsystem records its five
dimensions so empty blocks survive a round trip. Floats are written with
Python's shortest round-trip representation, so reading back reproduces
every entry bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import BLOCK_NAMES, NetworkedSystem, SubsystemRealization

MODEL_FORMAT = "netlti-model"
DIM_NAMES = ("n_x", "n_v", "n_u", "n_z", "n_y")


class DocumentError(ValueError):
    """A document is not valid JSON or lacks a required field."""


def matrix_to_list(M: np.ndarray) -> list:
    return [[float(x) for x in row] for row in np.asarray(M, dtype=float)]


def _matrix(value, where: str, shape: tuple[int, int] | None = None) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{where}: not a numeric matrix ({exc})") from None
    if arr.size == 0:
        return np.zeros(shape if shape is not None else (0, 0))
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DocumentError(f"{where}: expected a 2-D array, got {arr.ndim}-D")
    return arr


def system_to_dict(system: NetworkedSystem) -> dict:
    subs = []
    for s in system.subsystems:
        d = {"dims": {k: int(getattr(s, k)) for k in DIM_NAMES}}
        d.update({name: matrix_to_list(getattr(s, name)) for name in BLOCK_NAMES})
        subs.append(d)
    return {"format": MODEL_FORMAT, "version": 1,
            "strict_assumption3": bool(system.interconnection.strict_assumption3),
            "phi": matrix_to_list(system.phi), "subsystems": subs}


def _subsystem_from_dict(d, where: str) -> SubsystemRealization:
    if not isinstance(d, dict):
        raise DocumentError(f"{where}: expected an object")
    if "A_TT" not in d:
        raise DocumentError(f"{where}: missing field 'A_TT'")
    dims = d.get("dims")
    if dims is None:
        blocks = {n: _matrix(d[n], f"{where}.{n}") for n in BLOCK_NAMES if n in d}
        return SubsystemRealization.create(**blocks)
    try:
        x, v, u, z, y = (int(dims[k]) for k in DIM_NAMES)
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"{where}.dims: bad or missing dimension ({exc})") from None
    shapes = dict(A_TT=(x, x), A_TS=(x, v), B_T=(x, u), A_ST=(z, x), A_SS=(z, v),
                  B_S=(z, u), C_T=(y, x), C_S=(y, v), D=(y, u))
    blocks = {n: _matrix(d.get(n, []), f"{where}.{n}", shapes[n])
              for n in BLOCK_NAMES}
    return SubsystemRealization(**blocks)


def system_from_dict(doc) -> NetworkedSystem:
    """Build a system; shape mismatches are left for :func:`model.validate`."""
    if not isinstance(doc, dict):
        raise DocumentError("top level: expected an object")
    if "subsystems" not in doc:
        raise DocumentError("top level: missing field 'subsystems'")
    subs_doc = doc["subsystems"]
    if not isinstance(subs_doc, list) or not subs_doc:
        raise DocumentError("subsystems: expected a non-empty list")
    subs = [_subsystem_from_dict(d, f"subsystems[{k}]")
            for k, d in enumerate(subs_doc)]
    Mv = sum(s.n_v for s in subs)
    Mz = sum(s.n_z for s in subs)
    phi = _matrix(doc.get("phi", []), "phi", (Mv, Mz))
    strict = bool(doc.get("strict_assumption3", False))
    return NetworkedSystem.build(subs, phi, strict_assumption3=strict)


def load_json(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: line {exc.lineno}, column {exc.colno}: "
                            f"{exc.msg}") from None


def read_model(path) -> NetworkedSystem:
    return system_from_dict(load_json(path))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def write_model(system: NetworkedSystem, path) -> None:
    write_json(system_to_dict(system), path)


def read_stms(path) -> list[np.ndarray]:
    """STM list from ``{"stms": [...]}``, a bare list, or a model document."""
    doc = load_json(path)
    if isinstance(doc, dict) and "subsystems" in doc:
        return [s.A_TT for s in system_from_dict(doc).subsystems]
    if isinstance(doc, dict):
        if "stms" not in doc:
            raise DocumentError("top level: expected 'stms' or 'subsystems'")
        doc = doc["stms"]
    if not isinstance(doc, list) or not doc:
        raise DocumentError("stms: expected a non-empty list of matrices")
    out = []
    for k, m in enumerate(doc):
        A = _matrix(m, f"stms[{k}]")
        if A.shape[0] != A.shape[1]:
            raise DocumentError(f"stms[{k}]: not square, shape {A.shape}")
        out.append(A)
    return out


def to_jsonable(obj):
    """Recursively convert numpy/complex values for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj
