"""Pipeline orchestration and report emission.

A report is a plain nested dict with a fixed key order, so the structured
form (JSON) is byte-identical across runs. Every float goes through
:func:`num`, which rounds to 12 significant digits. Re-parsing the emitted
JSON therefore gives back exactly the stored values.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from . import __version__
from .bell import (
    HvmModel,
    TwoQubitScenario,
    chsh_per_state,
    hvm_chsh,
    hvm_expectation,
    maximize_chsh,
    quantum_chsh,
    scenario_correlators,
)
from .entropy import EntropyReport, information_inequality_report, product_form_probe
from .errors import RvrError
from .rvr import (
    DEFAULT_MAX_SUBSET,
    FarkasCertificate,
    QuadrilateralCertificate,
    build_rvr,
    completeness_lp,
    hull_oracle,
    kochen_specker_witness,
    scan_quadrilaterals,
)
from .scenario import ANALYSIS_ORDER, FORMAT_VERSION, ScenarioFile

log = logging.getLogger(__name__)

SIG_DIGITS = 12
CHSH_CLASSICAL_BOUND = 2.0
BELL_VIOLATION_TOL = 1e-9
SCAN_REPORT_LIMIT = 20

SUBCOMMAND_ANALYSES = {
    "check": set(ANALYSIS_ORDER),
    "bell": {"bell"},
    "entropy": {"entropy"},
    "oracle": {"rvr"},
}


def num(x: float) -> float:
    """Round to 12 significant digits; -0.0 becomes 0.0."""
    x = float(f"{float(x):.{SIG_DIGITS}g}")
    return 0.0 if x == 0 else x


@dataclass
class RunOptions:
    subcommand: str = "check"
    max_subset: int | None = None
    full_sphere: bool | None = None
    timestamp: bool = False


@dataclass
class Report:
    scenario_hash: str
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    skipped: list[dict[str, str]] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    timestamp: str | None = None

    def tree(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "generator": f"rvrkit {__version__}",
            "scenario_hash": self.scenario_hash,
        }
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        if self.sections:
            out["sections"] = self.sections
        if self.skipped:
            out["skipped"] = self.skipped
        if self.sections:
            out["violations"] = self.violations
        return out

    @property
    def exit_code(self) -> int:
        return 1 if self.violations else 0


# sections ------------------------------------------------------------------------


def _certificate_tree(cert, labels) -> dict[str, Any]:
    if isinstance(cert, QuadrilateralCertificate):
        return {
            "kind": "quadrilateral",
            "indices": list(cert.indices),
            "labels": list(cert.labels),
            "slack": num(cert.slack),
        }
    if isinstance(cert, FarkasCertificate):
        terms = [
            {"subset": [labels[i] for i in s], "indices": list(s), "coefficient": num(c)}
            for s, c in cert.coefficients.items()
            if abs(c) > 1e-12
        ]
        return {"kind": "farkas", "constant": num(cert.constant), "terms": terms, "slack": num(cert.slack)}
    raise TypeError(type(cert))


def _rvr_section(sc: ScenarioFile, params: dict, opts: RunOptions, report: Report, with_oracle: bool) -> dict:
    if not sc.projectors:
        raise RvrError("scenario has no projectors")
    max_subset = opts.max_subset or params.get("max_subset", DEFAULT_MAX_SUBSET)
    model = build_rvr(sc.projectors, sc.state, max_subset=max_subset, labels=sc.labels)
    sec: dict[str, Any] = {
        "max_subset": max_subset,
        "variables": list(model.labels),
        "complement": list(model.complement),
        "defined_marginals": [
            {"subset": [model.labels[i] for i in s], "indices": list(s), "p": num(p)}
            for s, p in model.defined.items()
        ],
    }
    scan = scan_quadrilaterals(model)
    sec["quadrilateral_scan"] = {
        "count": len(scan),
        "min_slack": num(scan[0][1]) if scan else None,
        "most_violated": [
            {"indices": list(q), "labels": [model.labels[i] for i in q], "slack": num(s)}
            for q, s in scan[:SCAN_REPORT_LIMIT]
        ],
    }
    result = completeness_lp(model)
    lp: dict[str, Any] = {"status": result.status, "phase1_value": num(result.lp.phase1_value)}
    if result.complete:
        lp["witness"] = {"n": result.witness.n, "base_variables": [model.labels[i] for i in model.base_variables],
                         "probs": [num(x) for x in result.witness.probs]}
        lp["max_witness_error"] = num(result.max_witness_error)
    else:
        lp["certificate"] = _certificate_tree(result.certificate, model.labels)
        if result.certificate is not result.farkas:
            lp["farkas"] = _certificate_tree(result.farkas, model.labels)
        report.violations.append("rvr: incomplete (no joint distribution)")
    sec["lp"] = lp
    ks = kochen_specker_witness(model)
    sec["kochen_specker_witness"] = _certificate_tree(ks, model.labels) if ks else None
    if ks is not None:
        report.violations.append("rvr: quadrilateral inequality violated")

    if with_oracle:
        orc: dict[str, Any] = {"float_status": result.status}
        try:
            exact = hull_oracle(model)
        except RvrError as exc:
            orc["error"] = str(exc)
        else:
            orc["exact_member"] = exact.member
            orc["agree"] = exact.member == result.complete
            if exact.member:
                orc["exact_weights"] = [str(w) for w in exact.weights]
            else:
                orc["separating_normal"] = [str(c) for c in exact.normal]
                orc["separating_offset"] = str(exact.offset)
            if not orc["agree"]:
                report.violations.append("oracle: float LP and exact oracle disagree")
        sec["oracle"] = orc
    return sec


def _bell_pair(sc: ScenarioFile, params: dict) -> tuple[list[int], list[int]] | None:
    idx = {lab: i for i, lab in enumerate(sc.labels)}
    if "alice" in params or "bob" in params:
        try:
            return [idx[x] for x in params.get("alice", [])], [idx[x] for x in params.get("bob", [])]
        except KeyError as exc:
            raise RvrError(f"bell settings refer to unknown projector {exc.args[0]!r}") from None
    alice = [i for i, s in enumerate(sc.slots) if s == 0]
    bob = [i for i, s in enumerate(sc.slots) if s == 1]
    if len(alice) == 2 and len(bob) == 2:
        return alice, bob
    return None


def _bell_section(sc: ScenarioFile, params: dict, opts: RunOptions, report: Report) -> dict:
    if sc.dimension != 4:
        raise RvrError("bell analysis needs a two-qubit (dimension 4) state")
    full = opts.full_sphere if opts.full_sphere is not None else bool(params.get("full_sphere", False))
    sec: dict[str, Any] = {}
    pair = _bell_pair(sc, params)
    if pair is not None:
        alice, bob = pair
        if len(alice) != 2 or len(bob) != 2:
            raise RvrError("bell settings need two Alice and two Bob projectors")
        s = TwoQubitScenario(sc.state, tuple(sc.projectors[i] for i in alice), tuple(sc.projectors[i] for i in bob))
        value = quantum_chsh(s)
        sec["scenario"] = {
            "alice": [sc.labels[i] for i in alice],
            "bob": [sc.labels[i] for i in bob],
            "correlators": {k: num(v) for k, v in scenario_correlators(s).items()},
            "chsh": num(value),
        }
        if value > CHSH_CLASSICAL_BOUND + BELL_VIOLATION_TOL:
            report.violations.append("bell: CHSH above 2 at the given settings")
    else:
        sec["scenario"] = None
        sec["scenario_note"] = "projectors do not form two Alice and two Bob settings"
    opt = maximize_chsh(sc.state, full_sphere=full)
    sec["optimum"] = {
        "full_sphere": full,
        "alice": [[num(s.theta), num(s.phi)] for s in opt.alice],
        "bob": [[num(s.theta), num(s.phi)] for s in opt.bob],
        "value": num(opt.value),
        "grid_value": num(opt.grid_value),
        "refine_iterations": opt.refine_iterations,
    }
    sec["tsirelson_bound"] = num(2 * math.sqrt(2))
    if opt.value > CHSH_CLASSICAL_BOUND + BELL_VIOLATION_TOL:
        report.violations.append("bell: optimal settings violate CHSH")
    return sec


def _entropy_section(sc: ScenarioFile, params: dict, opts: RunOptions, report: Report) -> dict:
    dims = sc.subsystems or (sc.dimension,)
    rep: EntropyReport = information_inequality_report(sc.state, dims)
    sec = {
        "subsystems": list(dims),
        "total_nats": num(rep.total),
        "total_bits": num(EntropyReport.bits(rep.total)),
        "parts_nats": [num(s) for s in rep.parts],
        "parts_bits": [num(EntropyReport.bits(s)) for s in rep.parts],
        "lower_bound_slack": num(rep.lower_bound_slack),
        "subadditivity_slack": num(rep.subadditivity_slack),
        "violation": rep.violation,
        "product_form": product_form_probe(sc.state, dims) is not None if len(dims) > 1 else True,
    }
    bell = report.sections.get("bell", {})
    if "optimum" in bell:
        sec["max_chsh"] = bell["optimum"]["value"]
    elif sc.dimension == 4 and len(dims) == 2:
        sec["max_chsh"] = num(maximize_chsh(sc.state).value)
    if rep.violation:
        report.violations.append("entropy: a subsystem has more entropy than the whole")
    return sec


def _hvm_section(sc: ScenarioFile, params: dict, opts: RunOptions, report: Report) -> dict:
    models = []
    for spec in sc.hvm:
        entry: dict[str, Any] = {"name": spec.name}
        try:
            model = HvmModel(np.array(spec.weights), {k: np.array(v) for k, v in spec.responses.items()})
            entry["expectations"] = [
                {"observables": list(obs), "value": num(hvm_expectation(model, obs))} for obs in spec.expectations
            ]
            if spec.chsh:
                entry["chsh"] = num(hvm_chsh(model, *spec.chsh))
                terms = chsh_per_state(model, *spec.chsh)
                entry["per_state_bound_ok"] = bool(np.all(np.abs(np.abs(terms) - 2.0) < 1e-12))
                if entry["chsh"] > CHSH_CLASSICAL_BOUND + 1e-12:
                    report.violations.append(f"hvm: model {spec.name!r} exceeds the CHSH bound")
        except RvrError as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
        models.append(entry)
    return {"models": models}


_SECTIONS = {
    "rvr": lambda sc, p, o, r: _rvr_section(sc, p, o, r, with_oracle=o.subcommand == "oracle"),
    "bell": _bell_section,
    "entropy": _entropy_section,
    "hvm": _hvm_section,
}


def run(sc: ScenarioFile, opts: RunOptions | None = None) -> Report:
    """Run the requested analyses in the fixed order rvr, bell, entropy, hvm.

    A failing analysis is recorded inside its own section and does not stop
    the others.
    """
    opts = opts or RunOptions()
    allowed = SUBCOMMAND_ANALYSES[opts.subcommand]
    report = Report(sc.source_hash)
    if opts.timestamp:
        report.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    for name in ANALYSIS_ORDER:
        if name not in sc.analyses:
            continue
        if name not in allowed:
            report.skipped.append({"analysis": name, "reason": f"not run by the '{opts.subcommand}' subcommand"})
            continue
        try:
            report.sections[name] = _SECTIONS[name](sc, sc.analyses[name], opts, report)
        except (RvrError, ValueError, ArithmeticError) as exc:
            log.warning("%s analysis failed: %s", name, exc)
            report.sections[name] = {"error": f"{type(exc).__name__}: {exc}"}
    if opts.subcommand == "oracle" and "rvr" not in sc.analyses:
        try:
            report.sections["rvr"] = _SECTIONS["rvr"](sc, {}, opts, report)
        except (RvrError, ValueError, ArithmeticError) as exc:
            report.sections["rvr"] = {"error": f"{type(exc).__name__}: {exc}"}
    return report


# emission ------------------------------------------------------------------------


def emit(report: Report, fmt: str = "text") -> str:
    if fmt == "structured":
        return json.dumps(report.tree(), indent=2, ensure_ascii=False) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    return _emit_text(report.tree())


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if v is None:
        return "-"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _table(rows: Iterable[Iterable[Any]], header: list[str]) -> list[str]:
    rows = [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
    return [line(header), line(["-" * w for w in widths])] + [line(r) for r in rows]


def _emit_text(tree: dict) -> str:
    out = [f"rvrkit report (format {tree['format_version']})", f"scenario sha256: {tree['scenario_hash']}"]
    if "timestamp" in tree:
        out.append(f"timestamp: {tree['timestamp']}")
    for name, sec in tree.get("sections", {}).items():
        out += ["", f"== {name} =="]
        if "error" in sec and len(sec) == 1:
            out.append(f"error: {sec['error']}")
            continue
        if name == "rvr":
            out.append(f"variables: {', '.join(sec['variables'])}  (max subset {sec['max_subset']})")
            out.append("defined marginals:")
            out += ["  " + r for r in _table(([",".join(d["subset"]), d["p"]] for d in sec["defined_marginals"]), ["subset", "p"])]
            qs = sec["quadrilateral_scan"]
            out.append(f"quadrilateral scan: {qs['count']} admissible, min slack {_fmt(qs['min_slack'])}")
            out += ["  " + r for r in _table(([",".join(q["labels"]), q["slack"]] for q in qs["most_violated"]), ["a1,b1,b2,a2", "slack"])]
            lp = sec["lp"]
            out.append(f"LP: {lp['status']} (phase-1 value {_fmt(lp['phase1_value'])})")
            if "witness" in lp:
                out.append(f"  witness over {', '.join(lp['witness']['base_variables'])}: {_fmt(lp['witness']['probs'])}")
                out.append(f"  max marginal error {_fmt(lp['max_witness_error'])}")
            if "certificate" in lp:
                c = lp["certificate"]
                what = ",".join(c["labels"]) if c["kind"] == "quadrilateral" else f"{len(c['terms'])} terms"
                out.append(f"  certificate ({c['kind']}): {what}, slack {_fmt(c['slack'])}")
            ks = sec["kochen_specker_witness"]
            out.append("Kochen-Specker witness: " + (f"{','.join(ks['labels'])} slack {_fmt(ks['slack'])}" if ks else "none"))
            if "oracle" in sec:
                o = sec["oracle"]
                out.append("exact oracle: " + ", ".join(f"{k}={_fmt(v)}" for k, v in o.items()))
        elif name == "bell":
            sc = sec.get("scenario")
            if sc:
                out += _table(sc["correlators"].items(), ["pair", "<AB>"])
                out.append(f"CHSH at given settings: {_fmt(sc['chsh'])}")
            elif "scenario_note" in sec:
                out.append(sec["scenario_note"])
            o = sec["optimum"]
            out.append(f"max CHSH: {_fmt(o['value'])}  alice {_fmt(o['alice'])}  bob {_fmt(o['bob'])}")
            out.append(f"Tsirelson bound: {_fmt(sec['tsirelson_bound'])}")
        elif name == "entropy":
            rows = [["whole", sec["total_nats"], sec["total_bits"]]]
            rows += [[f"part {i}", n, b] for i, (n, b) in enumerate(zip(sec["parts_nats"], sec["parts_bits"]))]
            out += _table(rows, ["system", "S (nats)", "S (bits)"])
            out.append(f"lower-bound slack {_fmt(sec['lower_bound_slack'])}, subadditivity slack {_fmt(sec['subadditivity_slack'])}")
            out.append(f"violation: {sec['violation']}  product form: {sec['product_form']}")
            if "max_chsh" in sec:
                out.append(f"max CHSH (for comparison): {_fmt(sec['max_chsh'])}")
        elif name == "hvm":
            for m in sec["models"]:
                out.append(f"model {m['name']}:")
                if "error" in m:
                    out.append(f"  error: {m['error']}")
                    continue
                for e in m["expectations"]:
                    out.append(f"  <{' '.join(e['observables'])}> = {_fmt(e['value'])}")
                if "chsh" in m:
                    out.append(f"  CHSH = {_fmt(m['chsh'])} (per-state bound ok: {m['per_state_bound_ok']})")
    for s in tree.get("skipped", []):
        out.append(f"skipped {s['analysis']}: {s['reason']}")
    if "violations" in tree:
        out += ["", "violations: " + ("none" if not tree["violations"] else "; ".join(tree["violations"]))]
    return "\n".join(out) + "\n"
