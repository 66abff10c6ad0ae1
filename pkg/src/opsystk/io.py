"""JSON dialects for systems, tensor elements, maps and catalogs.

Matrices are nested lists of reals, or ``{"re": [...], "im": [...]}`` when
complex. A system document is one of::

    {"builtin": "W6"}
    {"kind": "matrix_system", "n": 2, "generators": [M, ...]}
    {"kind": "matrix_system", "n": 2, "basis": [I, B1, ...]}
    {"kind": "function_system", "weights": [[1, 1, -1, -1]]}
    {"kind": "quotient", "n": 6, "parent": "diag", "null": [M or diagonal vector, ...]}

Tensor elements add ``"left"``, ``"right"``, ``"level"`` and ``"coeffs"``
(shape ``(dim left, dim right)`` at level 1, or ``(dim left, dim right, m, m)``).
"""
from __future__ import annotations

import json

import numpy as np

from . import opsys
from .errors import MalformedInput
from .experiments import Catalog
from .opsys import MatrixSystem, QuotientSystem
from .tensor import CpMapCandidate, TensorElement

BUILTINS = {
    "C": opsys.scalars,
    "W4": lambda: opsys.make_W(4),
    "W6": lambda: opsys.make_W(6),
    "W8": lambda: opsys.make_W(8),
    "W23": opsys.make_W23,
    "l6/J": opsys.j6,
}


def builtin(name):
    if name in BUILTINS:
        s = BUILTINS[name]()
    elif name.startswith("M") and name[1:].isdigit():
        s = opsys.full_algebra(int(name[1:]))
    elif name.startswith("l") and name[1:].isdigit():
        s = opsys.ell_inf(int(name[1:]))
    else:
        raise MalformedInput(f"unknown built-in system {name!r}")
    s.name = name
    return s


def parse_json(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedInput(f"{source}: {e.msg} at line {e.lineno}, column {e.colno}",
                             line=e.lineno, column=e.colno) from None


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise MalformedInput(f"cannot read {path}: {e.strerror}") from None
    return parse_json(text, path)


def decode_matrix(v):
    if isinstance(v, dict):
        if "re" not in v:
            raise MalformedInput("complex matrices need an 're' part")
        re = np.asarray(v["re"], dtype=float)
        im = np.asarray(v.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    try:
        return np.asarray(v, dtype=float).astype(complex)
    except (TypeError, ValueError):
        raise MalformedInput("matrix entries must be numbers") from None


def encode_matrix(a):
    a = np.asarray(a)
    if np.iscomplexobj(a) and np.max(np.abs(a.imag), initial=0.0) > 0:
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return np.real(a).tolist()


def _need(doc, key):
    if key not in doc:
        raise MalformedInput(f"missing field {key!r}")
    return doc[key]


def load_system(doc):
    """Build a matrix system or quotient from its JSON document."""
    if isinstance(doc, str):
        return builtin(doc)
    if not isinstance(doc, dict):
        raise MalformedInput("a system must be a JSON object or a built-in name")
    if "system" in doc and isinstance(doc["system"], dict):
        doc = doc["system"]
    if "builtin" in doc:
        return builtin(doc["builtin"])
    kind = doc.get("kind", "matrix_system")
    name = doc.get("name", "")
    try:
        if kind == "matrix_system":
            n = int(_need(doc, "n"))
            if "basis" in doc:
                basis = np.array([decode_matrix(b) for b in doc["basis"]])
                s = MatrixSystem(n, basis, name=name)
            else:
                gens = [decode_matrix(g) for g in doc.get("generators", [])]
                s = opsys.make_matrix_system(n, gens, name=name)
            if "congruence" in doc:
                s.congruence = decode_matrix(doc["congruence"])
            return s
        if kind == "function_system":
            return opsys.function_system(_need(doc, "weights"), name=name)
        if kind == "quotient":
            n = int(_need(doc, "n"))
            parent = doc.get("parent", "full")
            null = []
            for j in _need(doc, "null"):
                m = decode_matrix(j)
                if m.ndim == 1:
                    m = np.diag(m)
                null.append(m)
            return opsys.make_quotient(n, null, parent=parent, name=name)
    except (ValueError, TypeError) as e:
        raise MalformedInput(str(e)) from None
    raise MalformedInput(f"unknown system kind {kind!r}")


def dump_system(s):
    if isinstance(s, QuotientSystem):
        null = [np.real(np.diag(j)).tolist() for j in s.null.basis] if s.parent == "diag" \
            else [encode_matrix(j) for j in s.null.basis]
        return {"kind": "quotient", "name": s.name, "n": s.n, "parent": s.parent, "null": null}
    if isinstance(s, MatrixSystem):
        out = {"kind": "matrix_system", "name": s.name, "n": s.n, "basis": [encode_matrix(b) for b in s.basis]}
        if getattr(s, "congruence", None) is not None:
            out["congruence"] = encode_matrix(s.congruence)
        return out
    raise TypeError(f"cannot serialize {type(s).__name__}")


def load_tensor(doc):
    left = load_system(_need(doc, "left"))
    right = load_system(_need(doc, "right"))
    level = int(doc.get("level", 1))
    coeffs = doc.get("coeffs", "unit")
    if coeffs == "unit":
        return TensorElement.unit(left, right, level)
    c = decode_matrix(coeffs)
    if c.ndim == 2:
        if level != 1:
            raise MalformedInput("level > 1 needs coefficients of shape (dim left, dim right, m, m)")
        c = c[:, :, None, None]
    if c.shape != (left.dim, right.dim, level, level):
        raise MalformedInput(f"coefficients of shape {c.shape} do not match "
                             f"({left.dim}, {right.dim}, {level}, {level})")
    return TensorElement(left, right, c)


def dump_tensor(x):
    c = x.coeffs[:, :, 0, 0] if x.level == 1 else x.coeffs
    return {"left": dump_system(x.left), "right": dump_system(x.right), "level": x.level,
            "coeffs": encode_matrix(c)}


def load_map(doc):
    src = load_system(_need(doc, "source"))
    tgt = load_system(_need(doc, "target"))
    if "matrices" in doc:
        mats = np.array([decode_matrix(m) for m in doc["matrices"]])
        if mats.shape[0] != src.dim:
            raise MalformedInput(f"expected {src.dim} image matrices, got {mats.shape[0]}")
        return CpMapCandidate.from_matrices(src, tgt, mats)
    im = decode_matrix(_need(doc, "images"))
    if im.shape != (src.dim, tgt.dim):
        raise MalformedInput(f"images of shape {im.shape} do not match ({src.dim}, {tgt.dim})")
    return CpMapCandidate(src, tgt, im)


def load_catalog(doc):
    """``{"builtin": true, "seed": 0}``, a list of systems, or ``{"systems": {name: system}}``."""
    if doc is None:
        return Catalog.builtin()
    if isinstance(doc, dict) and doc.get("builtin") is True:
        return Catalog.builtin(seed=int(doc.get("seed", 0)), random_count=int(doc.get("random", 3)))
    cat = Catalog()
    if isinstance(doc, dict) and "systems" in doc:
        items = doc["systems"].items() if isinstance(doc["systems"], dict) else \
            [(None, s) for s in doc["systems"]]
    elif isinstance(doc, list):
        items = [(None, s) for s in doc]
    else:
        raise MalformedInput("unrecognized catalog document")
    for i, (name, sd) in enumerate(items):
        s = load_system(sd)
        cat.add(name or s.name or f"entry{i}", s)
    return cat
