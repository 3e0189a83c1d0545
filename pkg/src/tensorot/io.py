"""JSON file formats for tensors and marginal families.

Tensor files look like ``{"d": 2, "n": 2, "data": [...]}`` with the data
row-major (first index slowest); marginal files look like
``{"p": [[...], [...]]}``.  Floats are written with Python's shortest
round-trip representation, so save/load is bit-stable.
"""

from __future__ import annotations

import json

from .errors import ContractViolation
from .tensor import MarginalFamily, Tensor

__all__ = ["FileFormatError", "load_tensor", "save_tensor", "load_marginals", "save_marginals"]


class FileFormatError(ValueError):
    """A data file is missing a field or holds a malformed value."""


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise FileFormatError(f"{path}: expected a JSON object at top level")
    return obj


def load_tensor(path) -> Tensor:
    obj = _load_json(path)
    for field in ("d", "n", "data"):
        if field not in obj:
            raise FileFormatError(f"{path}: missing field '{field}'")
    try:
        d, n = int(obj["d"]), int(obj["n"])
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: fields 'd' and 'n' must be integers") from exc
    if d < 1 or n < 1:
        raise FileFormatError(f"{path}: fields 'd' and 'n' must be positive")
    try:
        return Tensor.from_flat(d, n, obj["data"])
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: field 'data' is malformed ({exc})") from exc


def save_tensor(A: Tensor, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(A.to_dict(), fh)
        fh.write("\n")


def load_marginals(path) -> MarginalFamily:
    obj = _load_json(path)
    if "p" not in obj:
        raise FileFormatError(f"{path}: missing field 'p'")
    try:
        return MarginalFamily.from_dict(obj)
    except (TypeError, ValueError, ContractViolation) as exc:
        raise FileFormatError(f"{path}: field 'p' is malformed ({exc})") from exc


def save_marginals(P: MarginalFamily, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(P.to_dict(), fh)
        fh.write("\n")
