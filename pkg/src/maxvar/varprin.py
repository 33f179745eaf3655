"""Maximal-degree variational problems: the variational module, the annihilator
of ``eta = d theta``, time normalisation, and pointwise characteristic spaces.

"Nowhere zero" is certified by sampling only: a scalar fails when it is tiny at
a sample point or changes sign between samples (a root then lies on the segment
between them and is located by bisection); a form fails when all of its
coefficients are tiny at a sample point.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import symexpr as sx
from .config import options
from .errors import ConsistencyError, DegreeError, SingularFormError
from .extcalc import (Chart, DiffForm, VecField, coefficient_values, contract, eval_form_batch,
                      ext_deriv)
from .kernels import compile_expr, eval_batch


def sample_points(chart: Chart, count: int, tag: str = "", witnesses=()) -> np.ndarray:
    """``count`` uniform points of [-1, 1]^n (seeded by the engine seed and ``tag``),
    preceded by any explicit witness points."""
    rng = np.random.default_rng([options().seed, zlib.crc32(tag.encode())])
    pts = rng.uniform(-1.0, 1.0, size=(count, chart.n))
    if len(witnesses):
        w = np.array([[float(chart.point(p)[c]) for c in chart.coords] for p in witnesses])
        pts = np.vstack([w, pts])
    return pts


def _point_dict(chart, row):
    return {c: float(v) for c, v in zip(chart.coords, row)}


def check_nowhere_zero(expr: sx.Expr, chart: Chart, samples=None, witnesses=(), what="function"):
    """Raise ``SingularFormError`` unless ``expr`` looks nowhere zero on [-1, 1]^n."""
    expr = sx.simplify(expr)
    if isinstance(expr, sx.Const):
        if expr.value == 0:
            raise SingularFormError(f"{what} is identically zero")
        return
    samples = options().samples if samples is None else samples
    pts = sample_points(chart, samples, "nz:" + str(expr), witnesses)
    prog = compile_expr(expr, chart.coords)
    vals, mags = eval_batch(prog, pts)
    bad = ~np.isfinite(vals) | (np.abs(vals) <= options().tol * (1.0 + mags))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SingularFormError(f"{what} {expr} vanishes at a sample point",
                                witness_point=_point_dict(chart, pts[i]))
    pos, neg = vals > 0, vals < 0
    if np.any(pos) and np.any(neg):
        a, b = pts[int(np.argmax(pos))], pts[int(np.argmax(neg))]
        for _ in range(80):
            mid = 0.5 * (a + b)
            v, _ = eval_batch(prog, mid[None, :])
            if not np.isfinite(v[0]) or v[0] == 0:
                a = b = mid
                break
            if v[0] > 0:
                a = mid
            else:
                b = mid
        raise SingularFormError(f"{what} {expr} changes sign, so it has a zero",
                                witness_point=_point_dict(chart, 0.5 * (a + b)))


def check_form_nowhere_zero(form: DiffForm, samples=None, witnesses=(), what="form"):
    if form.is_empty():
        raise SingularFormError(f"{what} is identically zero")
    if len(form.terms) == 1:
        (c,) = form.terms.values()
        check_nowhere_zero(c, form.chart, samples, witnesses, what)
        return
    # one coefficient certified nowhere zero is enough
    for c in form.terms.values():
        try:
            check_nowhere_zero(c, form.chart, samples, (), what)
            if not len(witnesses):
                return
            break
        except SingularFormError:
            continue
    samples = options().samples if samples is None else samples
    pts = sample_points(form.chart, samples, "nzf", witnesses)
    _, vals = coefficient_values(form, pts)
    norms = np.sqrt((vals ** 2).sum(axis=1))
    bad = norms <= options().tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SingularFormError(f"{what} vanishes at a sample point",
                                witness_point=_point_dict(form.chart, pts[i]))


class VariationalProblem:
    """``theta`` of degree n-2 on a chart with a designated vertical pair.

    May also be built from a closed ``eta`` alone (``theta`` then unknown).
    ``allow_degenerate`` admits ``d theta = 0`` so basic forms can be inspected.
    """

    def __init__(self, chart: Chart, theta: DiffForm | None = None, eta: DiffForm | None = None,
                 allow_degenerate: bool = False):
        self.chart = chart
        n = chart.n
        if theta is not None:
            if theta.degree != n - 2:
                raise DegreeError(f"theta must have degree n-2 = {n - 2}, got {theta.degree}")
            theta = theta if theta.chart == chart else theta.lift(chart)
            eta = ext_deriv(theta)
        elif eta is not None:
            if eta.degree != n - 1:
                raise DegreeError(f"eta must have degree n-1 = {n - 1}, got {eta.degree}")
            # closedness is the divergence witness checked by extract_annihilator
            eta = eta if eta.chart == chart else eta.lift(chart)
        else:
            raise ValueError("need theta or eta")
        if chart.vertical and len(chart.vertical) != 2:
            raise DegreeError("a maximal-degree problem has exactly two vertical coordinates")
        if eta.is_empty() and not allow_degenerate:
            raise SingularFormError("d(theta) is identically zero")
        self.theta = theta
        self.eta = eta

    @property
    def n(self):
        return self.chart.n

    def is_proper(self):
        if self.theta is None or not self.chart.vertical:
            return None
        return not is_basic(self.theta, self.chart)


@dataclass
class AnnihilatorField:
    field: VecField
    normalized: bool = False

    @property
    def chart(self):
        return self.field.chart

    def dynamics(self, phase_chart: Chart | None = None) -> VecField:
        """The part of the field along the non-time coordinates (``Y`` in ``d_t + Y``)."""
        chart = self.chart
        if phase_chart is None:
            phase_chart = Chart(chart.space_coords)
        return self.field.restrict(phase_chart)


def vertical_fields(chart: Chart):
    if not chart.vertical:
        raise DegreeError("no vertical coordinates designated")
    return [VecField.coordinate(chart, v) for v in chart.vertical]


def variational_module(vp: VariationalProblem, basis=None):
    """Generators ``Psi_j = V_j ⨼ d theta`` for the vertical basis ``V_j``."""
    basis = vertical_fields(vp.chart) if basis is None else basis
    return [contract(v, vp.eta) for v in basis]


def is_basic(a: DiffForm, chart: Chart | None = None) -> bool:
    chart = a.chart if chart is None else chart
    if a.degree == 0:
        return True
    fields = [VecField.coordinate(a.chart, v) for v in chart.vertical]
    if not fields:
        raise DegreeError("no vertical coordinates designated")
    return all(contract(v, a).is_empty() for v in fields)


def _flatten(generators, point):
    chart = generators[0].chart
    keys = sorted({k for g in generators for k in g.terms})
    pt = np.array([[float(chart.point(point)[c]) for c in chart.coords]])
    mat = np.zeros((len(generators), len(keys)))
    col = {k: j for j, k in enumerate(keys)}
    for i, g in enumerate(generators):
        if g.is_empty():
            continue
        gk, vals = coefficient_values(g, pt)
        for k, v in zip(gk, vals[0]):
            mat[i, col[k]] = v
    return mat


def _numeric_rank(mat, rtol=None):
    rtol = options().rank_rtol if rtol is None else rtol
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def module_rank_at(generators, point, rtol=None) -> int:
    """Rank at ``point`` of the generators' coefficient vectors."""
    if not generators:
        return 0
    degs = {g.degree for g in generators}
    if len(degs) != 1:
        raise DegreeError("generators must share a degree")
    return _numeric_rank(_flatten(generators, point), rtol)


def _contraction_matrix(generators, point):
    """Rows (alpha, J), columns mu: coefficient of dx^J in ``d_mu ⨼ eta_alpha`` at ``point``."""
    chart = generators[0].chart
    pt = np.array([[float(chart.point(point)[c]) for c in chart.coords]])
    rows = {}
    for a, g in enumerate(generators):
        if g.is_empty():
            continue
        keys, vals = coefficient_values(g, pt)
        for I, c in zip(keys, vals[0]):
            for j, mu in enumerate(I):
                row = rows.setdefault((a, I[:j] + I[j + 1:]), np.zeros(chart.n))
                row[mu] += c if j % 2 == 0 else -c
    if not rows:
        return np.zeros((0, chart.n))
    return np.array([rows[k] for k in sorted(rows)])


def characteristic_space_at(generators, point, rtol=None) -> np.ndarray:
    """Orthonormal basis (rows) of ``{xi : xi ⨼ eta_alpha = 0 at point for all alpha}``."""
    if not generators:
        raise DegreeError("no generators")
    if any(g.degree == 0 for g in generators):
        raise DegreeError("generators must have positive degree")
    n = generators[0].chart.n
    A = _contraction_matrix(generators, point)
    rtol = options().rank_rtol if rtol is None else rtol
    if A.size == 0 or not np.any(A):
        return np.eye(n)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > rtol * s[0]))
    return vt[rank:]


def vertical_annihilators_at(vp: VariationalProblem, point, rtol=None) -> np.ndarray:
    """Vertical directions annihilating the variational module at ``point`` (basis rows)."""
    psis = variational_module(vp)
    A = _contraction_matrix(psis, point)
    vidx = list(vp.chart.vertical_indices)
    sub = A[:, vidx] if A.size else np.zeros((0, len(vidx)))
    rtol = options().rank_rtol if rtol is None else rtol
    if sub.size == 0 or not np.any(sub):
        null = np.eye(len(vidx))
    else:
        _, s, vt = np.linalg.svd(sub)
        null = vt[int(np.sum(s > rtol * s[0])):]
    out = np.zeros((len(null), vp.n))
    out[:, vidx] = null
    return out


def annihilator_components(eta: DiffForm):
    """``A^mu = (-1)^mu * c_{(0..n-1) without mu}`` (0-based mu), so that
    ``eta = A^mu (d_mu ⨼ Omega)`` with ``Omega = dx^0 ^ ... ^ dx^{n-1}``."""
    n = eta.chart.n
    comps = []
    for mu in range(n):
        key = tuple(i for i in range(n) if i != mu)
        c = eta.terms.get(key, sx.ZERO)
        comps.append(c if mu % 2 == 0 else sx.negate(c))
    return comps


def extract_annihilator(vp: VariationalProblem, samples=None, witnesses=()) -> AnnihilatorField:
    """The generator ``X = A^mu d_mu`` of the annihilator of ``eta``."""
    check_form_nowhere_zero(vp.eta, samples, witnesses, what="eta")
    X = VecField(vp.chart, annihilator_components(vp.eta))
    if not sx.is_zero(X.divergence()):
        raise ConsistencyError(f"divergence of the extracted field is not zero: {X.divergence()}")
    return AnnihilatorField(X, normalized=False)


def normalize_time(x: AnnihilatorField, vp: VariationalProblem | None = None, samples=None,
                   witnesses=()) -> AnnihilatorField:
    """Rescale so the time component is 1: ``X_0 = d_t + Y``."""
    chart = x.chart if vp is None else vp.chart
    if chart.time is None:
        raise DegreeError("chart has no time coordinate")
    f = x.field
    At = f[chart.time]
    if isinstance(At, sx.Const) and At.value == 1:
        return AnnihilatorField(f, normalized=True)
    if sx.is_zero(At):
        raise SingularFormError("time component is identically zero (theta not transversal)")
    check_nowhere_zero(At, chart, samples, witnesses, what="time component")
    comps = [sx.ONE if c == chart.time else sx.simplify(sx.Div(g, At))
             for c, g in zip(chart.coords, f.components)]
    return AnnihilatorField(VecField(chart, comps), normalized=True)


@dataclass
class AnnihilationReport:
    symbolic_verdict: bool
    max_numeric_residual: float
    samples_used: int
    witness_point: dict | None = None
    residual_tol: float = 1e-9
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.symbolic_verdict and self.max_numeric_residual <= self.residual_tol

    def to_dict(self):
        out = {"symbolic_verdict": self.symbolic_verdict,
               "max_numeric_residual": float(self.max_numeric_residual),
               "samples_used": self.samples_used,
               "residual_tol": self.residual_tol,
               "passed": self.passed}
        if self.witness_point is not None:
            out["witness_point"] = self.witness_point
        out.update(self.extra)
        return out


def field_values(v: VecField, points) -> np.ndarray:
    pts = np.atleast_2d(points)
    out = np.empty((len(pts), v.chart.n))
    for j, f in enumerate(v.components):
        out[:, j], _ = eval_batch(compile_expr(f, v.chart.coords), pts)
    return out


def verify_annihilation(x: VecField, a: DiffForm, samples: int = 100,
                        residual_tol: float = 1e-9) -> AnnihilationReport:
    """Symbolic check that ``x ⨼ a`` prunes to zero, plus a numeric residual of
    ``a(x, r_2, ..., r_k)`` over random points and random frames."""
    if a.degree == 0:
        raise DegreeError("cannot contract into a 0-form")
    symbolic = contract(x, a).is_empty()
    chart = a.chart
    rng = np.random.default_rng([options().seed, 7])
    pts = rng.uniform(-1.0, 1.0, size=(samples, chart.n))
    xs = field_values(x, pts)
    ok = np.all(np.isfinite(xs), axis=1)
    frames = np.empty((samples, a.degree, chart.n))
    frames[:, 0, :] = xs
    frames[:, 1:, :] = rng.uniform(-1.0, 1.0, size=(samples, a.degree - 1, chart.n))
    res = np.abs(eval_form_batch(a, pts[ok], frames[ok]))
    worst = float(res.max()) if len(res) else 0.0
    witness = None
    if not symbolic or worst > residual_tol:
        witness = _point_dict(chart, pts[ok][int(np.argmax(res))]) if len(res) else None
    return AnnihilationReport(symbolic, worst, int(ok.sum()), witness, residual_tol)
