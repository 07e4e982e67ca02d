"""Model sources: ``builtin:<name>?<query>`` strings and JSON model files.

A model file is a JSON object::

    {"name": "...", "n": 1, "m": 2,
     "A0": [[...]], "A": [[[...]], ...], "L": [[...]],
     "S": [[...]],                          (optional)
     "K": {"variant": ...},                 (optional, CompensatorSpec.to_dict)
     "constraint": {"Q": [...], "R": [[...]]},  (optional)
     "S_tilde": [[...]],                    (optional)
     "expected": {"pass": [...], "fail": [...], "type": [p, q], "envelope": "eta"}}
"""

import json
from pathlib import Path
from urllib.parse import parse_qs

import numpy as np

from . import catalog
from .compensator import CompensatorSpec
from .conditions import ConstraintBlock
from .system import HyperbolicSystem, StructureError

__all__ = ["ModelParseError", "load_model", "parse_builtin", "model_to_dict", "entry_from_dict"]


class ModelParseError(ValueError):
    """A model source that cannot be parsed; the message names the location."""


def _float(where, text):
    try:
        return float(text)
    except ValueError:
        raise ModelParseError(f"{where}: expected a number, got {text!r}") from None


def _vector(where, text):
    return [_float(where, v) for v in text.split(",")]


_QUERY = {
    "timoshenko": {"a": _float, "gamma": _float, "beta": _float},
    "euler-maxwell": {"rho": _float, "pprime": _float, "B": _vector, "beta": _float},
    "damped-wave": {"mu": _float},
}
_ARGNAMES = {"rho": "rho_inf", "pprime": "p_prime", "B": "B_inf"}


def parse_builtin(source):
    """``builtin:timoshenko?a=2&gamma=1`` -> CatalogEntry."""
    body = source[len("builtin:"):]
    name, _, query = body.partition("?")
    if name not in catalog.BUILDERS:
        raise ModelParseError(f"{source}: unknown builtin model {name!r} "
                              f"(known: {', '.join(sorted(catalog.BUILDERS))})")
    kwargs = {}
    for key, values in parse_qs(query, keep_blank_values=True, strict_parsing=False).items():
        conv = _QUERY[name].get(key)
        if conv is None:
            raise ModelParseError(f"{source}: unknown parameter {key!r} for {name}")
        if len(values) != 1:
            raise ModelParseError(f"{source}: parameter {key!r} given more than once")
        kwargs[_ARGNAMES.get(key, key)] = conv(f"{source}: parameter {key!r}", values[0])
    if query and not kwargs:
        raise ModelParseError(f"{source}: cannot parse query {query!r}")
    try:
        return catalog.BUILDERS[name](**kwargs)
    except ValueError as exc:
        raise ModelParseError(f"{source}: {exc}") from None


def _matrix(d, key, where, shape=None, required=True):
    if key not in d:
        if required:
            raise ModelParseError(f"{where}: missing key {key!r}")
        return None
    try:
        M = np.asarray(d[key], dtype=float)
    except (TypeError, ValueError):
        raise ModelParseError(f"{where}.{key}: not a numeric array") from None
    if shape is not None and M.shape != shape:
        raise ModelParseError(f"{where}.{key}: shape {M.shape}, expected {shape}")
    return M


def entry_from_dict(d, where="model"):
    """Build a CatalogEntry from the JSON model layout."""
    if not isinstance(d, dict):
        raise ModelParseError(f"{where}: top level must be an object")
    try:
        n, m = int(d["n"]), int(d["m"])
    except KeyError as exc:
        raise ModelParseError(f"{where}: missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise ModelParseError(f"{where}: n and m must be integers") from None
    A0 = _matrix(d, "A0", where, (m, m))
    A = _matrix(d, "A", where, (n, m, m))
    L = _matrix(d, "L", where, (m, m))
    try:
        sys = HyperbolicSystem(n, m, A0, list(A), L)
    except StructureError as exc:
        raise ModelParseError(f"{where}: {exc}") from None
    S = _matrix(d, "S", where, (m, m), required=False)
    K = None
    if "K" in d:
        try:
            K = CompensatorSpec.from_dict(d["K"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelParseError(f"{where}.K: {exc}") from None
    cb = None
    if "constraint" in d:
        c = d["constraint"]
        R = _matrix(c, "R", f"{where}.constraint")
        if R.ndim != 2 or R.shape[1] != m:
            raise ModelParseError(f"{where}.constraint.R: shape {R.shape}, expected (m1, {m})")
        Q = _matrix(c, "Q", f"{where}.constraint", (n,) + R.shape)
        try:
            cb = ConstraintBlock(R.shape[0], tuple(Q), R)
        except (StructureError, ValueError) as exc:
            raise ModelParseError(f"{where}.constraint: {exc}") from None
    S_tilde = _matrix(d, "S_tilde", where, required=False)
    expected = dict(d.get("expected", {}))
    if "type" in expected and expected["type"] is not None:
        expected["type"] = tuple(expected["type"])
    return catalog.CatalogEntry(str(d.get("name", "model")), dict(d.get("params", {})), sys,
                                cb=cb, S=S, K=K, S_tilde=S_tilde, expected=expected)


def load_model(source):
    """Resolve a ``--model`` argument: builtin string or path to a JSON file."""
    source = str(source)
    if source.startswith("builtin:"):
        return parse_builtin(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelParseError(f"{source}: {exc.strerror}") from None
    if not text.strip():
        raise ModelParseError(f"{source}: empty model file")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return entry_from_dict(d, source)


def model_to_dict(entry):
    """JSON layout of a CatalogEntry; compensators keep their parametric form."""
    sys = entry.sys
    d = {
        "name": entry.name,
        "params": entry.params,
        "n": sys.n,
        "m": sys.m,
        "A0": sys.A0.tolist(),
        "A": [a.tolist() for a in sys.A],
        "L": sys.L.tolist(),
    }
    if entry.S is not None:
        d["S"] = np.asarray(entry.S).tolist()
    if entry.K is not None:
        d["K"] = entry.K.to_dict()
    if entry.cb is not None:
        d["constraint"] = {"Q": [q.tolist() for q in entry.cb.Q], "R": entry.cb.R.tolist()}
    if entry.S_tilde is not None:
        d["S_tilde"] = np.asarray(entry.S_tilde).tolist()
    exp = dict(entry.expected)
    if exp.get("type") is not None:
        exp["type"] = list(exp["type"])
    d["expected"] = exp
    return d
