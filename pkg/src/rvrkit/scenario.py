"""Scenario documents: strict JSON describing a state, projectors and requested analyses.

Minimal example::

    {
      "format_version": 1,
      "dimension": 4,
      "subsystems": [2, 2],
      "state": {"builtin": "singlet"},
      "projectors": {"builtin": "four_projector_example",
                     "alice": [0, 90], "bob": [225, 135]},
      "analyses": {"rvr": {}, "bell": {}, "entropy": {}}
    }

Complex entries are ``[real, imag]`` pairs, matrices are row-major lists of
rows. Angles are degrees in [0, 360). Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .bell import partially_entangled_state
from .entropy import make_singlet
from .errors import ScenarioSyntaxError, UnknownBuiltin, ValidationError
from .hilbert import (
    DensityOperator,
    Projector,
    embed,
    maximally_mixed,
    pure_state,
    spin_projector,
    tensor,
    validate_density,
    validate_projector,
)

FORMAT_VERSION = 1
ANALYSIS_ORDER = ("rvr", "bell", "entropy", "hvm")

_TOP_KEYS = {"format_version", "name", "dimension", "subsystems", "state", "projectors", "analyses", "hvm"}
_ANALYSIS_KEYS = {
    "rvr": {"max_subset"},
    "bell": {"full_sphere", "alice", "bob"},
    "entropy": set(),
    "hvm": set(),
}
_HVM_KEYS = {"name", "weights", "responses", "states", "expectations", "chsh"}


@dataclass(frozen=True, eq=False)
class HvmSpec:
    name: str
    weights: tuple[float, ...]
    responses: dict[str, tuple[int, ...]]
    expectations: tuple[tuple[str, ...], ...] = ()
    chsh: tuple[str, str, str, str] | None = None


@dataclass(frozen=True, eq=False)
class ScenarioFile:
    dimension: int
    subsystems: tuple[int, ...] | None
    state: DensityOperator
    state_description: str
    projectors: tuple[Projector, ...]
    labels: tuple[str, ...]
    slots: tuple[int | None, ...]
    analyses: dict[str, dict[str, Any]]
    hvm: tuple[HvmSpec, ...]
    source_hash: str
    name: str = ""


def _fail(msg: str, path: str) -> ScenarioSyntaxError:
    return ScenarioSyntaxError(msg, path)


def _expect(obj: Any, kind: type | tuple, path: str, what: str) -> Any:
    if isinstance(obj, bool) and kind in (int, float, (int, float)):
        raise _fail(f"{what} must be a number, got a boolean", path)
    if not isinstance(obj, kind):
        raise _fail(f"{what} must be {getattr(kind, '__name__', 'a number')}, got {type(obj).__name__}", path)
    return obj


def _check_keys(obj: dict, allowed: set[str], path: str, required: set[str] = frozenset()) -> None:
    for k in obj:
        if k not in allowed:
            raise _fail(f"unknown key {k!r}", f"{path}.{k}")
    for k in required:
        if k not in obj:
            raise _fail(f"missing required key {k!r}", path)


def _number(x: Any, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise _fail("expected a number", path)
    return float(x)


def _angle(x: Any, path: str) -> float:
    v = _number(x, path)
    if not 0.0 <= v < 360.0:
        raise _fail(f"angle {v} outside [0, 360)", path)
    return v


def _complex_matrix(obj: Any, path: str, dim: int | None = None) -> np.ndarray:
    _expect(obj, list, path, "matrix")
    n = len(obj)
    if n == 0 or (dim is not None and n != dim):
        raise _fail(f"matrix must have {dim if dim else 'at least one'} rows, got {n}", path)
    out = np.zeros((n, n), dtype=np.complex128)
    for i, row in enumerate(obj):
        _expect(row, list, f"{path}[{i}]", "matrix row")
        if len(row) != n:
            raise _fail(f"row has {len(row)} entries, expected {n}", f"{path}[{i}]")
        for j, entry in enumerate(row):
            p = f"{path}[{i}][{j}]"
            if not isinstance(entry, list) or len(entry) != 2:
                raise _fail("entry must be a [real, imag] pair", p)
            out[i, j] = complex(_number(entry[0], p + "[0]"), _number(entry[1], p + "[1]"))
    return out


def _complex_vector(obj: Any, path: str) -> np.ndarray:
    _expect(obj, list, path, "vector")
    out = []
    for i, entry in enumerate(obj):
        p = f"{path}[{i}]"
        if not isinstance(entry, list) or len(entry) != 2:
            raise _fail("entry must be a [real, imag] pair", p)
        out.append(complex(_number(entry[0], p + "[0]"), _number(entry[1], p + "[1]")))
    return np.array(out)


def _validated_density(m: np.ndarray, what: str) -> DensityOperator:
    try:
        return validate_density(m)
    except ValidationError as exc:
        raise type(exc)(f"{what}: {exc} (invariant {exc.what}, residual {exc.residual:.3e})",
                        residual=exc.residual, what=exc.what) from None


def _validated_projector(m: np.ndarray, what: str) -> Projector:
    try:
        return validate_projector(m)
    except ValidationError as exc:
        raise type(exc)(f"{what}: {exc} (invariant {exc.what}, residual {exc.residual:.3e})",
                        residual=exc.residual, what=exc.what) from None


def _state_factor(obj: Any, path: str) -> np.ndarray:
    _expect(obj, dict, path, "state factor")
    if "bloch" in obj:
        _check_keys(obj, {"bloch"}, path)
        ang = _expect(obj["bloch"], list, path + ".bloch", "bloch angles")
        if len(ang) != 2:
            raise _fail("bloch needs [theta, phi]", path + ".bloch")
        return spin_projector(_angle(ang[0], path + ".bloch[0]"), _angle(ang[1], path + ".bloch[1]")).matrix
    if "builtin" in obj:
        _check_keys(obj, {"builtin", "dimension"}, path)
        if obj["builtin"] != "maximally_mixed":
            raise UnknownBuiltin(f"{path}: unknown factor builtin {obj['builtin']!r}")
        d = int(_expect(obj.get("dimension", 2), int, path + ".dimension", "dimension"))
        return maximally_mixed(d).matrix
    if "matrix" in obj:
        _check_keys(obj, {"matrix"}, path)
        return _complex_matrix(obj["matrix"], path + ".matrix")
    raise _fail("factor needs one of 'bloch', 'builtin', 'matrix'", path)


def _parse_state(obj: Any, dim: int, path: str) -> tuple[DensityOperator, str]:
    _expect(obj, dict, path, "state")
    if "builtin" in obj:
        name = obj["builtin"]
        if name == "singlet":
            _check_keys(obj, {"builtin"}, path)
            rho, desc = make_singlet(), "singlet"
        elif name == "maximally_mixed":
            _check_keys(obj, {"builtin"}, path)
            rho, desc = maximally_mixed(dim), "maximally_mixed"
        elif name == "partially_entangled":
            _check_keys(obj, {"builtin", "eta"}, path, {"eta"})
            eta = _number(obj["eta"], path + ".eta")
            rho, desc = partially_entangled_state(eta), f"partially_entangled(eta={eta:g})"
        else:
            raise UnknownBuiltin(f"{path}.builtin: unknown state builtin {name!r}")
    elif "product" in obj:
        _check_keys(obj, {"product"}, path)
        factors = _expect(obj["product"], list, path + ".product", "product factors")
        if not factors:
            raise _fail("product needs at least one factor", path + ".product")
        mats = [_state_factor(f, f"{path}.product[{i}]") for i, f in enumerate(factors)]
        rho, desc = _validated_density(tensor(*mats).matrix, "state"), "product"
    elif "matrix" in obj:
        _check_keys(obj, {"matrix"}, path)
        rho, desc = _validated_density(_complex_matrix(obj["matrix"], path + ".matrix", dim), "state"), "matrix"
    elif "vector" in obj:
        _check_keys(obj, {"vector"}, path)
        v = _complex_vector(obj["vector"], path + ".vector")
        rho, desc = pure_state(v), "pure"
    else:
        raise _fail("state needs one of 'builtin', 'product', 'matrix', 'vector'", path)
    if rho.dim != dim:
        raise ValidationError(f"state has dimension {rho.dim}, scenario declares {dim}", residual=float(abs(rho.dim - dim)), what="dimension")
    return _validated_density(rho.matrix, "state"), desc


def _parse_projectors(obj: Any, dim: int, subsystems, path: str):
    if isinstance(obj, dict):
        _check_keys(obj, {"builtin", "alice", "bob"}, path, {"builtin"})
        if obj["builtin"] != "four_projector_example":
            raise UnknownBuiltin(f"{path}.builtin: unknown projector builtin {obj['builtin']!r}")
        if dim != 4:
            raise ValidationError("four_projector_example needs dimension 4", residual=float(abs(dim - 4)), what="dimension")
        alice = [_angle(x, f"{path}.alice[{i}]") for i, x in enumerate(obj.get("alice", [0.0, 90.0]))]
        bob = [_angle(x, f"{path}.bob[{i}]") for i, x in enumerate(obj.get("bob", [225.0, 135.0]))]
        if len(alice) != 2 or len(bob) != 2:
            raise _fail("alice and bob need two angles each", path)
        a = [embed(spin_projector(t), 0, [2, 2]) for t in alice]
        b = [embed(spin_projector(t), 1, [2, 2]) for t in bob]
        return (a[0], b[0], a[1], b[1]), ("a1", "b1", "a2", "b2"), (0, 1, 0, 1)

    items = _expect(obj, list, path, "projectors")
    projs, labels, slots = [], [], []
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        _expect(item, dict, p, "projector")
        label = item.get("label", f"P{i}")
        _expect(label, str, p + ".label", "label")
        if "spin" in item:
            _check_keys(item, {"label", "spin"}, p)
            spin = _expect(item["spin"], dict, p + ".spin", "spin spec")
            _check_keys(spin, {"theta", "phi", "slot"}, p + ".spin", {"theta"})
            slot = int(_expect(spin.get("slot", 0), int, p + ".spin.slot", "slot"))
            dims = list(subsystems) if subsystems else [2]
            if slot < 0 or slot >= len(dims):
                raise _fail(f"slot {slot} out of range", p + ".spin.slot")
            q = spin_projector(_angle(spin["theta"], p + ".spin.theta"), _angle(spin.get("phi", 0.0), p + ".spin.phi"))
            m = embed(q, slot, dims).matrix
        elif "matrix" in item:
            _check_keys(item, {"label", "matrix"}, p)
            m = _complex_matrix(item["matrix"], p + ".matrix", dim)
            slot = None
        else:
            raise _fail("projector needs 'spin' or 'matrix'", p)
        if m.shape[0] != dim:
            raise ValidationError(f"projector {label!r} has dimension {m.shape[0]}, expected {dim}",
                                  residual=float(abs(m.shape[0] - dim)), what="dimension")
        projs.append(_validated_projector(m, f"projector {label!r}"))
        labels.append(label)
        slots.append(slot)
    if len(set(labels)) != len(labels):
        raise _fail("projector labels must be unique", path)
    return tuple(projs), tuple(labels), tuple(slots)


def _parse_hvm(obj: Any, path: str) -> tuple[HvmSpec, ...]:
    items = _expect(obj, list, path, "hvm")
    out = []
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        _expect(item, dict, p, "hvm model")
        _check_keys(item, _HVM_KEYS, p, {"weights", "responses"})
        weights = tuple(_number(w, f"{p}.weights[{j}]") for j, w in enumerate(_expect(item["weights"], list, p + ".weights", "weights")))
        resp_obj = _expect(item["responses"], dict, p + ".responses", "responses")
        responses = {}
        for lab, vals in resp_obj.items():
            vals = _expect(vals, list, f"{p}.responses.{lab}", "response table")
            for j, v in enumerate(vals):
                if v not in (0, 1) or isinstance(v, bool):
                    raise _fail("responses must be 0 or 1", f"{p}.responses.{lab}[{j}]")
            responses[lab] = tuple(int(v) for v in vals)
        exps = tuple(tuple(_expect(e, list, f"{p}.expectations[{j}]", "label list")) for j, e in enumerate(item.get("expectations", [])))
        chsh = item.get("chsh")
        if chsh is not None:
            chsh = _expect(chsh, list, p + ".chsh", "chsh labels")
            if len(chsh) != 4:
                raise _fail("chsh needs four labels [a1, a2, b1, b2]", p + ".chsh")
            chsh = tuple(chsh)
        out.append(HvmSpec(str(item.get("name", f"model{i}")), weights, responses, exps, chsh))
    return tuple(out)


def parse_scenario(text: str) -> ScenarioFile:
    """Parse and validate a scenario document.

    Raises :class:`ScenarioSyntaxError` (with line:column or a JSON path),
    :class:`~rvrkit.errors.ValidationError` for operators that fail their
    invariants, and :class:`UnknownBuiltin` for unrecognised builtin names.
    """
    source_hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    _expect(doc, dict, "$", "scenario")
    _check_keys(doc, _TOP_KEYS, "$", {"format_version", "dimension", "state", "analyses"})
    if doc["format_version"] != FORMAT_VERSION:
        raise _fail(f"unsupported format_version {doc['format_version']!r}", "$.format_version")
    dim = _expect(doc["dimension"], int, "$.dimension", "dimension")
    if dim < 1:
        raise _fail("dimension must be positive", "$.dimension")

    subsystems = doc.get("subsystems")
    if subsystems is not None:
        _expect(subsystems, list, "$.subsystems", "subsystems")
        subsystems = tuple(int(_expect(d, int, f"$.subsystems[{i}]", "subsystem dimension")) for i, d in enumerate(subsystems))
        if int(np.prod(subsystems)) != dim:
            raise _fail(f"subsystems {list(subsystems)} do not multiply to {dim}", "$.subsystems")
    elif dim == 4:
        subsystems = (2, 2)

    state, desc = _parse_state(doc["state"], dim, "$.state")
    if "projectors" in doc:
        projs, labels, slots = _parse_projectors(doc["projectors"], dim, subsystems, "$.projectors")
    else:
        projs, labels, slots = (), (), ()

    analyses_obj = _expect(doc["analyses"], dict, "$.analyses", "analyses")
    analyses: dict[str, dict[str, Any]] = {}
    for name in analyses_obj:
        if name not in _ANALYSIS_KEYS:
            raise _fail(f"unknown analysis {name!r}", f"$.analyses.{name}")
    for name in ANALYSIS_ORDER:
        if name in analyses_obj:
            params = _expect(analyses_obj[name], dict, f"$.analyses.{name}", "analysis parameters")
            _check_keys(params, _ANALYSIS_KEYS[name], f"$.analyses.{name}")
            analyses[name] = dict(params)
    if "max_subset" in analyses.get("rvr", {}):
        ms = _expect(analyses["rvr"]["max_subset"], int, "$.analyses.rvr.max_subset", "max_subset")
        if ms < 2:
            raise _fail("max_subset must be at least 2", "$.analyses.rvr.max_subset")

    hvm = _parse_hvm(doc["hvm"], "$.hvm") if "hvm" in doc else ()
    name = doc.get("name", "")
    _expect(name, str, "$.name", "name")
    return ScenarioFile(dim, subsystems, state, desc, projs, labels, slots, analyses, hvm, source_hash, name)
