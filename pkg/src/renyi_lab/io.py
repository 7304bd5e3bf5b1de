"""JSON formats for algebras, operators and channels; atomic file output.

Operator::

    {"algebra": {"dims": [2, 3], "weights": [1.0, 2.0]},
     "blocks": [{"re": [[...]], "im": [[...]]}, ...]}

Channel (``algebra`` optional when supplied separately)::

    {"kind": "kraus",   "ops": [operator | {"re": [[...]], "im": [[...]]}, ...]}
    {"kind": "superop", "matrix": {"re": [[...]], "im": [[...]]}}
    {"kind": "builtin", "name": "transpose", "params": {...}}

A raw ``{"re", "im"}`` Kraus matrix is a dense ``N x N`` matrix; it may move
mass between blocks (block permutations need that).
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .channels import Channel, build_channel
from .errors import AlgebraMismatch, InvalidParameter, RenyiLabError
from .operators import BlockAlgebra, Density, HermitianOperator, Operator

HERMITIAN_LOAD_ATOL = 1e-12


class FormatError(RenyiLabError, ValueError):
    """A file does not follow the documented JSON schema."""


def matrix_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(data: Any) -> np.ndarray:
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"expected a matrix {{'re': [[...]], 'im': [[...]]}}: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise FormatError(f"real part {re.shape} and imaginary part {im.shape} do not match")
    return re + 1j * im


def algebra_to_json(algebra: BlockAlgebra) -> dict:
    return algebra.to_json()


def algebra_from_json(data: Any) -> BlockAlgebra:
    try:
        return BlockAlgebra.from_json(data)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad algebra record: {exc}") from exc


def operator_to_json(x: Operator) -> dict:
    return {"algebra": x.algebra.to_json(), "blocks": [matrix_to_json(b) for b in x.blocks]}


def operator_from_json(data: Any, *, hermitian: bool = True, mirror: bool = False,
                       density: bool = False, algebra: BlockAlgebra | None = None) -> Operator:
    """Parse an operator record.

    With ``hermitian=True`` the blocks must be self-adjoint: by default a
    defect above ``1e-12`` is rejected, with ``mirror=True`` the upper
    triangle is mirrored instead. ``density=True`` additionally requires a
    positive semidefinite operator with positive trace.
    """
    if not isinstance(data, dict) or "blocks" not in data:
        raise FormatError("operator record needs a 'blocks' list")
    alg = algebra_from_json(data["algebra"]) if "algebra" in data else algebra
    if alg is None:
        raise FormatError("operator record has no 'algebra' and none was supplied")
    if algebra is not None and alg != algebra:
        raise AlgebraMismatch(f"operator algebra {alg} differs from {algebra}")
    blocks = [matrix_from_json(b) for b in data["blocks"]]
    if not hermitian and not density:
        return Operator(alg, blocks)
    atol = None if mirror else HERMITIAN_LOAD_ATOL
    cls = Density if density else HermitianOperator
    return cls(alg, blocks, atol=atol)


# -- channels ----------------------------------------------------------------

def _param_to_json(value: Any) -> Any:
    if isinstance(value, Channel):
        return channel_to_json(value, include_algebra=False)
    if isinstance(value, Operator):
        return operator_to_json(value)
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value) or value.ndim == 2:
            return matrix_to_json(value)
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_param_to_json(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def channel_to_json(ch: Channel, include_algebra: bool = True) -> dict:
    """Serialise ``ch``; builtins keep their name, everything else becomes Kraus or superop."""
    if ch.kind == "builtin":
        out = {"kind": "builtin", "name": ch.name,
               "params": {k: _param_to_json(v) for k, v in ch.params.items()}}
    elif ch.kraus_operators() is not None:
        out = {"kind": "kraus", "ops": [matrix_to_json(k) for k in ch.kraus_operators()]}
    else:
        out = {"kind": "superop", "matrix": matrix_to_json(ch.superoperator())}
    if ch.family:
        out["family"] = ch.family
    if include_algebra:
        out = {"algebra": ch.algebra.to_json(), **out}
    return out


def _operator_param(value: Any, algebra: BlockAlgebra):
    if isinstance(value, dict) and "blocks" in value:
        return operator_from_json(value, hermitian=False, algebra=algebra)
    return matrix_from_json(value)


def channel_from_json(data: Any, algebra: BlockAlgebra | None = None) -> Channel:
    if not isinstance(data, dict) or "kind" not in data:
        raise FormatError("channel record needs a 'kind'")
    if "algebra" in data:
        alg = algebra_from_json(data["algebra"])
        if algebra is not None and alg != algebra:
            raise AlgebraMismatch(f"channel algebra {alg} differs from {algebra}")
    elif algebra is not None:
        alg = algebra
    else:
        raise FormatError("channel record has no 'algebra' and none was supplied")
    kind = data["kind"]
    try:
        if kind == "kraus":
            ops = [_operator_param(op, alg) for op in data["ops"]]
            ch = Channel.from_kraus(alg, ops)
        elif kind == "superop":
            ch = Channel.from_superop(alg, matrix_from_json(data["matrix"]))
        elif kind == "builtin":
            ch = _builtin_from_json(alg, data["name"], data.get("params", {}))
        else:
            raise FormatError(f"unknown channel kind {kind!r}")
    except KeyError as exc:
        raise FormatError(f"channel record is missing {exc}") from exc
    ch.family = data.get("family")
    return ch


def _builtin_from_json(alg: BlockAlgebra, name: str, params: dict) -> Channel:
    p = dict(params)
    if name == "unitary_conjugation":
        p["unitary"] = _operator_param(p["unitary"], alg)
    elif name == "transpose" and p.get("basis") is not None:
        p["basis"] = _operator_param(p["basis"], alg)
    elif name == "pinching":
        p["projections"] = [_operator_param(q, alg) for q in p["projections"]]
    elif name == "mixture":
        p["channels"] = [channel_from_json(c, alg) for c in p["channels"]]
    return build_channel(alg, name, **p)


# -- files ---------------------------------------------------------------------

def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save_json(path: str | os.PathLike, obj: Any) -> None:
    write_atomic(path, dumps(obj))


def load_json(path: str | os.PathLike) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc


def load_operator(path, **kwargs) -> Operator:
    return operator_from_json(load_json(path), **kwargs)


def load_density(path, mirror: bool = False) -> Density:
    return operator_from_json(load_json(path), density=True, mirror=mirror)


def load_channel(path, algebra: BlockAlgebra | None = None) -> Channel:
    return channel_from_json(load_json(path), algebra)


def load_algebra(path) -> BlockAlgebra:
    data = load_json(path)
    return algebra_from_json(data.get("algebra", data) if isinstance(data, dict) else data)


__all__ = ["FormatError", "InvalidParameter", "algebra_from_json", "algebra_to_json",
           "channel_from_json", "channel_to_json", "dumps", "load_algebra", "load_channel",
           "load_density", "load_json", "load_operator", "matrix_from_json", "matrix_to_json",
           "operator_from_json", "operator_to_json", "save_json", "write_atomic"]
