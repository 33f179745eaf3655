"""Command-line entry point: ``maxvar <task> scenario.yaml [--seed N] [--out PATH]``.

Scenario files are YAML (JSON is a subset) with keys::

    chart:   {coords: [...], vertical: [...], time: t}
    options: {seed, trials, tol, samples}
    ...task payload (see README)

Forms are written either as a mapping ``{"y^z": "-x", "x^y": "z"}`` (basis
names joined by ``^``; ``"1"`` for the 0-form part) or as a list of
``{indices: [...], coeff: "..."}`` records.  Expressions are strings.

Exit codes: 0 pass, 1 verification/engine failure, 2 input error.  Output is
JSON with sorted keys and floats written with 12 digits after the point.
Numeric artifacts are written next to ``--out`` with suffixes ``.traj.txt``
and ``.section.txt``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import symexpr as sx
from .config import EngineOptions, using
from .errors import (ChartMismatch, DegreeError, ExprSyntaxError, MaxvarError, ScenarioError,
                     UnknownIdentifier, VerificationError)
from .extcalc import Chart, DiffForm, VecField
from .flow import SectionGrid, build_section, integrate, monitor_divergence, section_residual
from .liouville import (HyperHamData, LiouvilleProblem, build_hamiltonian, build_hyperhamiltonian,
                        build_nambu, build_theta_general, standard_hyperkahler)
from .varprin import (VariationalProblem, extract_annihilator, normalize_time, sample_points,
                      variational_module, verify_annihilation)

TASKS = ("extract", "build-liouville", "build-hamiltonian", "build-nambu", "build-hyperham",
         "verify", "flow", "section")
INPUT_ERRORS = (ScenarioError, ExprSyntaxError, UnknownIdentifier, DegreeError, ChartMismatch)
TRAJ_SUFFIX = ".traj.txt"
SECTION_SUFFIX = ".section.txt"


# ---------------------------------------------------------------------------
# deterministic output
# ---------------------------------------------------------------------------


def _encode(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return f"{v:.12e}" if math.isfinite(v) else json.dumps(str(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v[k], indent, level + 1)}"
                 for k in sorted(v, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            return "[]"
        items = [pad + _encode(x, indent, level + 1) for x in v]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(str(v))


def emit_report(results: dict, indent: int = 2) -> str:
    """Serialize with sorted keys and floats as ``%.12e``; identical input gives identical bytes."""
    return _encode(results, indent, 0) + "\n"


# ---------------------------------------------------------------------------
# scenario parsing
# ---------------------------------------------------------------------------


def load_scenario(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", path=str(path)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = {"line": mark.line + 1, "column": mark.column + 1} if mark else {}
        raise ScenarioError(f"malformed scenario file: {getattr(exc, 'problem', exc)}",
                            path=str(path), **loc) from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping", path=str(path))
    return data


def _need(d, key, kind=None):
    if key not in d or d[key] is None:
        raise ScenarioError(f"missing key {key!r}")
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ScenarioError(f"key {key!r} has the wrong type")
    return v


def parse_chart(spec) -> Chart:
    if not isinstance(spec, dict):
        raise ScenarioError("chart must be a mapping")
    coords = _need(spec, "coords", list)
    try:
        return Chart(tuple(str(c) for c in coords), tuple(spec.get("vertical") or ()),
                     spec.get("time"))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def parse_form(chart: Chart, spec, degree=None) -> DiffForm:
    if isinstance(spec, dict):
        records = []
        for key, coeff in spec.items():
            key = str(key).strip()
            names = [] if key in ("", "1") else [k.strip() for k in key.split("^")]
            records.append({"indices": names, "coeff": str(coeff)})
        spec = records
    if not isinstance(spec, list):
        raise ScenarioError("a form must be a mapping or a list of records")
    for rec in spec:
        if not isinstance(rec, dict) or "indices" not in rec:
            raise ScenarioError("form record needs 'indices'")
    form = DiffForm.from_records(chart, spec, degree)
    if degree is not None and form.degree != degree:
        raise DegreeError(f"expected a form of degree {degree}, got {form.degree}")
    return form


def _expr(chart, s):
    return chart.parse(str(s))


def _options(scenario, args) -> EngineOptions:
    opts = dict(scenario.get("options") or {})
    allowed = {"seed", "trials", "tol", "samples"}
    unknown = set(opts) - allowed
    if unknown:
        raise ScenarioError(f"unknown option {sorted(unknown)[0]!r}")
    for k in allowed:
        if getattr(args, k, None) is not None:
            opts[k] = getattr(args, k)
    try:
        return EngineOptions(trials=int(opts.get("trials", 25)), tol=float(opts.get("tol", 1e-9)),
                             seed=int(opts.get("seed", 0)), samples=int(opts.get("samples", 200)))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad option value: {exc}") from None


def _field_doc(v: VecField):
    return {"coords": list(v.chart.coords), "components": v.strings()}


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------


class _Ctx:
    def __init__(self, out):
        self.out = out
        self.artifacts = []

    def artifact(self, suffix):
        if self.out is None:
            return None
        path = str(self.out) + suffix
        self.artifacts.append(path)
        return path


def _problem(chart, sc):
    if "theta" in sc:
        return VariationalProblem(chart, theta=parse_form(chart, sc["theta"], chart.n - 2))
    if "eta" in sc:
        return VariationalProblem(chart, eta=parse_form(chart, sc["eta"], chart.n - 1))
    raise ScenarioError("need 'theta' or 'eta'")


def _witnesses(chart, sc):
    return [chart.point(w) for w in sc.get("witnesses") or []]


def task_extract(sc, ctx):
    chart = parse_chart(_need(sc, "chart"))
    vp = _problem(chart, sc)
    ann = extract_annihilator(vp, witnesses=_witnesses(chart, sc))
    doc = {"field": _field_doc(ann.field), "components": ann.field.strings(),
           "divergence_zero": True, "passed": True}
    if chart.time is not None:
        doc["normalized"] = _field_doc(normalize_time(ann, vp).field)
    if chart.vertical and vp.theta is not None:
        doc["proper"] = bool(vp.is_proper())
        doc["variational_module"] = [p.records() for p in variational_module(vp)]
    return doc


def _flow_block(sc, dyn, ctx, default_monitors):
    spec = sc.get("flow")
    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise ScenarioError("'flow' must be a mapping")
    return _run_flow(spec, dyn, ctx, default_monitors)


def _run_flow(spec, dyn, ctx, default_monitors=None):
    names = dyn.chart.space_coords
    start = _need(spec, "start")
    if isinstance(start, dict):
        start = [start[c] for c in names]
    if len(start) != len(names):
        raise ScenarioError(f"'start' needs {len(names)} values")
    monitors = spec.get("monitors", default_monitors) or {}
    if isinstance(monitors, list):
        monitors = {str(m): m for m in monitors}
    for m in monitors.values():
        sx.parse_expr(str(m), tuple(names) + ((dyn.chart.time,) if dyn.chart.time else ()))
    t_end = float(_need(spec, "t_end"))
    h = float(spec.get("h", 1e-3))
    tol = float(spec.get("monitor_tol", 1e-8))
    traj = integrate(dyn, [float(s) for s in start], t_end, h,
                     monitors={k: str(v) for k, v in monitors.items()})
    drifts = traj.drift()
    mon = [{"name": k, "drift": drifts[k], "passed": drifts[k] < tol} for k in monitors]
    div = float(np.max(np.abs(traj.monitor("divergence"))))
    path = ctx.artifact(TRAJ_SUFFIX)
    if path:
        traj.write(path)
    return {"t_end": traj.times[-1], "h": traj.h, "steps": len(traj.times) - 1,
            "final_state": list(traj.final), "monitors": mon, "max_divergence": div,
            "monitor_tol": tol, "passed": all(m["passed"] for m in mon) and div < tol,
            "artifact": path}


def _built_doc(built, sc, ctx, default_monitors=None):
    vp = built.problem
    recovered = normalize_time(extract_annihilator(vp), vp).field
    round_trip = all(sx.is_zero(a - b) for a, b in
                     zip(recovered.components, built.field.components))
    doc = {"theta": vp.theta.records(), "extended_chart": list(vp.chart.coords),
           "dynamics": _field_doc(built.dynamics), "field": _field_doc(built.field),
           "report": built.report.to_dict(), "round_trip": round_trip}
    passed = built.report.passed and round_trip
    flow = _flow_block(sc, built.dynamics, ctx, default_monitors)
    if flow is not None:
        doc["flow"] = flow
        passed = passed and flow["passed"]
    doc["passed"] = passed
    return doc


def _builder_common(sc):
    ext = sc.get("extend") or {}
    return {"time": str(ext.get("time", "t")), "vertical": ext.get("vertical")}


def task_build_liouville(sc, ctx):
    P = parse_chart(_need(sc, "chart"))
    omega = parse_form(P, sc["omega"], P.n) if "omega" in sc else DiffForm.volume(P)
    gamma = parse_form(P, _need(sc, "gamma"), P.n - 2)
    sigma = parse_form(P, sc["sigma"], P.n - 1) if "sigma" in sc else None
    built = build_theta_general(LiouvilleProblem(P, omega, gamma), sigma, **_builder_common(sc))
    return _built_doc(built, sc, ctx)


def task_build_hamiltonian(sc, ctx):
    P = parse_chart(_need(sc, "chart"))
    omega = parse_form(P, _need(sc, "omega"), 2)
    H = _expr(P, _need(sc, "H"))
    beta = parse_form(P, sc["beta"], 1) if "beta" in sc else None
    built = build_hamiltonian(P, omega, H, beta, **_builder_common(sc))
    return _built_doc(built, sc, ctx, {"H": str(H)})


def task_build_nambu(sc, ctx):
    P = parse_chart(_need(sc, "chart"))
    hams = [_expr(P, h) for h in _need(sc, "functions", list)]
    Omega = parse_form(P, sc["omega"], P.n) if "omega" in sc else None
    sigma = parse_form(P, sc["sigma"], P.n - 1) if "sigma" in sc else None
    built = build_nambu(P, hams, Omega, sigma, **_builder_common(sc))
    monitors = {f"H{i + 2}": str(h) for i, h in enumerate(hams)}
    doc = _built_doc(built, sc, ctx, monitors)
    doc["first_integrals_conserved"] = built.extra["first_integrals_conserved"]
    return doc


def task_build_hyperham(sc, ctx):
    P = parse_chart(_need(sc, "chart"))
    omegas = sc.get("omegas", "standard")
    if omegas == "standard":
        omegas = standard_hyperkahler(P)
    else:
        if not isinstance(omegas, list) or len(omegas) != 3:
            raise ScenarioError("'omegas' must be 'standard' or a list of three 2-forms")
        omegas = [parse_form(P, w, 2) for w in omegas]
    hams = _need(sc, "hamiltonians", list)
    sigmas = sc.get("sigmas")
    if sigmas is not None:
        sigmas = tuple(parse_form(P, s, 1) for s in sigmas)
    data = HyperHamData(P, omegas, [_expr(P, h) for h in hams], int(sc.get("sign", 1)), sigmas)
    built = build_hyperhamiltonian(data, **_builder_common(sc))
    return _built_doc(built, sc, ctx, {f"H{i + 1}": str(h) for i, h in enumerate(data.hams)})


def task_verify(sc, ctx):
    chart = parse_chart(_need(sc, "chart"))
    comps = _need(sc, "field", list)
    v = VecField(chart, [_expr(chart, c) for c in comps])
    if "form" in sc:
        form = parse_form(chart, sc["form"])
    else:
        form = _problem(chart, sc).eta
    report = verify_annihilation(v, form, samples=int(sc.get("points", 100)),
                                 residual_tol=float(sc.get("residual_tol", 1e-9)))
    doc = {"report": report.to_dict(), "passed": report.passed}
    if sc.get("divergence_points"):
        pts = sample_points(chart, int(sc["divergence_points"]), "cli-div")
        doc["max_divergence"] = monitor_divergence(v, pts)
    return doc


def task_flow(sc, ctx):
    chart = parse_chart(_need(sc, "chart"))
    comps = _need(sc, "field", list)
    v = VecField(chart, [_expr(chart, c) for c in comps])
    return _run_flow(sc, v, ctx)


def task_section(sc, ctx):
    chart = parse_chart(_need(sc, "chart"))
    if chart.time is None or len(chart.vertical) != 2:
        raise ScenarioError("section needs a time coordinate and two vertical coordinates")
    vp = _problem(chart, sc)
    Z = normalize_time(extract_annihilator(vp), vp)
    psis = variational_module(vp)
    spec = _need(sc, "phi0", dict)
    params = []
    for p in _need(spec, "params", list):
        if not isinstance(p, dict):
            raise ScenarioError("each parameter needs name/start/stop/num")
        params.append((str(_need(p, "name")), float(_need(p, "start")), float(_need(p, "stop")),
                       int(_need(p, "num"))))
    coords = _need(spec, "coords", dict)
    for c in coords:
        chart.index(c)
    phi0 = SectionGrid.from_exprs(chart, params, {k: str(v) for k, v in coords.items()})
    steps = int(_need(sc, "steps"))
    h = float(_need(sc, "h"))
    sec = build_section(phi0, Z, steps, h)
    res = section_residual(sec, psis)
    tol = float(sc.get("residual_tol", 1e-5))
    path = ctx.artifact(SECTION_SUFFIX)
    if path:
        sec.write(path)
    return {"field": _field_doc(Z.field), "shape": list(sec.shape), "spacing": list(sec.spacing),
            "tangency_margin": sec.margin, "residual": res, "residual_tol": tol,
            "passed": res < tol, "artifact": path}


HANDLERS = {"extract": task_extract, "build-liouville": task_build_liouville,
            "build-hamiltonian": task_build_hamiltonian, "build-nambu": task_build_nambu,
            "build-hyperham": task_build_hyperham, "verify": task_verify, "flow": task_flow,
            "section": task_section}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def run(task: str, scenario_path, args) -> tuple[int, dict]:
    """Execute one task; returns (exit code, output document)."""
    ctx = _Ctx(getattr(args, "out", None))
    doc = {"task": task, "scenario": str(scenario_path)}
    try:
        sc = load_scenario(scenario_path)
        declared = sc.get("task")
        if declared is not None and declared != task:
            raise ScenarioError(f"scenario is for task {declared!r}, not {task!r}")
        opts = _options(sc, args)
        doc["seed"] = opts.seed
        with using(trials=opts.trials, tol=opts.tol, seed=opts.seed, samples=opts.samples):
            result = HANDLERS[task](sc, ctx)
        doc.update(result)
        doc["artifacts"] = ctx.artifacts
        doc["status"] = "pass" if result.get("passed") else "fail"
        return (0 if result.get("passed") else 1), doc
    except INPUT_ERRORS as exc:
        doc.update(status="error", error=exc.record())
        return 2, doc
    except VerificationError as exc:
        doc.update(status="fail", error=exc.record())
        return 1, doc
    except MaxvarError as exc:
        doc.update(status="fail", error=exc.record())
        return 1, doc
    except (KeyError, TypeError, ValueError) as exc:
        doc.update(status="error", error={"code": "cli.scenario", "message": str(exc)})
        return 2, doc


def build_parser():
    parser = argparse.ArgumentParser(prog="maxvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("scenario")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--samples", type=int)
        p.add_argument("--out", help="output document path (stdout when omitted)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, doc = run(args.task, args.scenario, args)
    text = emit_report(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
