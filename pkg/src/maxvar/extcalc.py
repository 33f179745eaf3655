"""Differential forms and vector fields on a single coordinate chart.

Forms are stored sparsely as ``{increasing index tuple: coefficient}``.  The
interior product is the left contraction: inserting a vector into slot ``j``
(0-based) of ``dx^I`` carries the sign ``(-1)**j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import symexpr as sx
from .config import options
from .errors import ChartMismatch, DegreeError, EvaluationError, UnknownIdentifier
from .kernels import compile_expr, eval_batch


@dataclass(frozen=True)
class Chart:
    """Ordered coordinates with an optional fibration ``pi : M -> B``.

    ``vertical`` names the fibre coordinates of ``pi``; ``time`` names the
    coordinate spanning the ``T`` factor of ``tau : M -> T``.
    """

    coords: tuple
    vertical: tuple = ()
    time: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "vertical", tuple(self.vertical or ()))
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"coordinate names must be distinct: {self.coords}")
        for c in self.coords:
            if c in sx.FUNCTIONS or not c.isidentifier():
                raise ValueError(f"invalid coordinate name {c!r}")
        for v in self.vertical:
            if v not in self.coords:
                raise UnknownIdentifier(v)
        if self.vertical and not 1 <= len(self.vertical) < len(self.coords):
            raise ValueError("vertical coordinate count must satisfy 1 <= r < n")
        if self.time is not None:
            if self.time not in self.coords:
                raise UnknownIdentifier(self.time)
            if self.time in self.vertical:
                raise ValueError("the time coordinate cannot be vertical")

    @property
    def n(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise UnknownIdentifier(name) from None

    @property
    def vertical_indices(self):
        return tuple(self.index(v) for v in self.vertical)

    @property
    def time_index(self):
        return None if self.time is None else self.index(self.time)

    @property
    def space_coords(self):
        return tuple(c for c in self.coords if c != self.time)

    def extend(self, time: str = "t", vertical=None) -> "Chart":
        """Append a time coordinate: ``M = P x T``."""
        return Chart(self.coords + (time,), self.vertical if vertical is None else vertical, time)

    def with_fibration(self, vertical=(), time=None) -> "Chart":
        return Chart(self.coords, vertical, time)

    def parse(self, source) -> sx.Expr:
        if isinstance(source, sx.Expr):
            unknown = source.free_symbols - set(self.coords)
            if unknown:
                raise UnknownIdentifier(sorted(unknown)[0])
            return source
        if isinstance(source, (int, float, Fraction)):
            return sx.as_expr(source)
        return sx.parse_expr(source, self)

    def point(self, values) -> dict:
        if isinstance(values, dict):
            return values
        return dict(zip(self.coords, values))

    def same_coords(self, other: "Chart") -> bool:
        return self.coords == other.coords


def _check_chart(a, b):
    if not a.chart.same_coords(b.chart):
        raise ChartMismatch(f"charts differ: {a.chart.coords} vs {b.chart.coords}")


def _sort_sign(idx):
    """Sort ``idx`` by bubble sort; return (sorted tuple, permutation sign) or None on repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return None
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return tuple(idx), sign


def prune_zero(c: sx.Expr) -> bool:
    """Whether a coefficient should be dropped (simplified and zero-tested)."""
    if isinstance(c, sx.Const):
        return c.value == 0
    if options().strict:
        return False
    return sx.is_zero(c)


class DiffForm:
    """A degree-``k`` form ``sum_I c_I dx^I`` with ``I`` strictly increasing."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms=None):
        self.chart = chart
        self.degree = int(degree)
        if self.degree < 0:
            raise DegreeError("negative degree")
        acc = {}
        for idx, coeff in (terms or {}).items():
            idx = tuple(chart.index(i) if isinstance(i, str) else int(i) for i in idx)
            if len(idx) != self.degree:
                raise DegreeError(f"index {idx} does not match degree {self.degree}")
            if any(not 0 <= i < chart.n for i in idx):
                raise DegreeError(f"index {idx} out of range for dimension {chart.n}")
            sorted_sign = _sort_sign(idx)
            if sorted_sign is None:
                continue
            key, sign = sorted_sign
            c = chart.parse(coeff)
            c = c if sign > 0 else sx.negate(c)
            acc[key] = acc[key] + c if key in acc else c
        self.terms = {}
        for key in sorted(acc):
            c = sx.simplify(acc[key])
            if not prune_zero(c):
                self.terms[key] = c

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, chart, degree):
        return cls(chart, degree, {})

    @classmethod
    def scalar(cls, chart, f):
        return cls(chart, 0, {(): f})

    @classmethod
    def basis(cls, chart, *names, coeff=1):
        """``coeff * dx^{names[0]} ^ dx^{names[1]} ^ ...`` (order applied with sign)."""
        return cls(chart, len(names), {tuple(names): coeff})

    @classmethod
    def volume(cls, chart, coeff=1):
        return cls(chart, chart.n, {tuple(range(chart.n)): coeff})

    @classmethod
    def from_records(cls, chart, records, degree=None):
        """Build from ``[{indices: [names], coeff: "expr"}, ...]``."""
        terms = {}
        for rec in records:
            idx = tuple(chart.index(n) for n in rec["indices"])
            if degree is None:
                degree = len(idx)
            elif degree != len(idx):
                raise DegreeError("form records mix degrees")
            c = chart.parse(str(rec.get("coeff", "1")))
            sorted_sign = _sort_sign(idx)
            if sorted_sign is None:
                continue
            key, sign = sorted_sign
            c = c if sign > 0 else sx.negate(c)
            terms[key] = terms[key] + c if key in terms else c
        if degree is None:
            degree = 0
        return cls(chart, degree, terms)

    # inspection ---------------------------------------------------------
    def items(self):
        return self.terms.items()

    def is_empty(self) -> bool:
        return not self.terms

    def coeff(self, *names) -> sx.Expr:
        idx = tuple(self.chart.index(n) if isinstance(n, str) else n for n in names)
        sorted_sign = _sort_sign(idx)
        if sorted_sign is None:
            return sx.ZERO
        key, sign = sorted_sign
        c = self.terms.get(key, sx.ZERO)
        return c if sign > 0 else sx.simplify(sx.negate(c))

    def records(self):
        return [{"indices": [self.chart.coords[i] for i in idx], "coeff": str(c)}
                for idx, c in self.terms.items()]

    def __repr__(self):
        if not self.terms:
            return f"DiffForm(0, degree={self.degree})"
        parts = []
        for idx, c in self.terms.items():
            basis = "^".join("d" + self.chart.coords[i] for i in idx) or "1"
            parts.append(f"({c})*{basis}")
        return " + ".join(parts)

    # algebra ------------------------------------------------------------
    def __add__(self, other):
        return add_scaled(self, sx.ONE, other)

    def __sub__(self, other):
        return add_scaled(self, sx.MINUS_ONE, other)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "DiffForm":
        c = self.chart.parse(c)
        return DiffForm(self.chart, self.degree, {k: c * v for k, v in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __xor__(self, other):
        return wedge(self, other)

    def lift(self, chart: Chart) -> "DiffForm":
        """Re-express on a chart whose coordinates include this chart's."""
        m = [chart.index(c) for c in self.chart.coords]
        return DiffForm(chart, self.degree, {tuple(m[i] for i in k): v for k, v in self.terms.items()})

    def equals(self, other) -> bool:
        """Coefficientwise equality decided by the zero test."""
        _check_chart(self, other)
        return self.degree == other.degree and (self - other).is_empty()


class VecField:
    """A vector field ``sum_mu f^mu d/dx^mu``."""

    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components):
        comps = tuple(sx.simplify(chart.parse(c)) for c in components)
        if len(comps) != chart.n:
            raise DegreeError(f"expected {chart.n} components, got {len(comps)}")
        self.chart = chart
        self.components = comps

    @classmethod
    def coordinate(cls, chart, name):
        comps = [0] * chart.n
        comps[chart.index(name)] = 1
        return cls(chart, comps)

    @classmethod
    def zero(cls, chart):
        return cls(chart, [0] * chart.n)

    def __getitem__(self, name):
        return self.components[self.chart.index(name) if isinstance(name, str) else name]

    def __add__(self, other):
        _check_chart(self, other)
        return VecField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        _check_chart(self, other)
        return VecField(self.chart, [a - b for a, b in zip(self.components, other.components)])

    def scale(self, c):
        c = self.chart.parse(c)
        return VecField(self.chart, [c * f for f in self.components])

    def lift(self, chart):
        comps = [sx.ZERO] * chart.n
        for name, f in zip(self.chart.coords, self.components):
            comps[chart.index(name)] = f
        return VecField(chart, comps)

    def restrict(self, chart):
        """Components along ``chart``'s coordinates (dropping the others)."""
        return VecField(chart, [self[c] for c in chart.coords])

    def divergence(self) -> sx.Expr:
        return sx.simplify(sx.Add([sx.diff(f, x) for f, x in zip(self.components, self.chart.coords)]))

    def at(self, point) -> np.ndarray:
        p = self.chart.point(point)
        return np.array([sx.eval_at(f, p) for f in self.components])

    def strings(self):
        return [str(c) for c in self.components]

    def __repr__(self):
        return "VecField(" + ", ".join(f"{c}: {f}" for c, f in zip(self.chart.coords, self.components)) + ")"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    _check_chart(a, b)
    deg = a.degree + b.degree
    terms = {}
    for I, ca in a.terms.items():
        for J, cb in b.terms.items():
            ss = _sort_sign(I + J)
            if ss is None:
                continue
            key, sign = ss
            t = sx.Mul((ca, cb)) if sign > 0 else sx.Mul((sx.MINUS_ONE, ca, cb))
            terms.setdefault(key, []).append(t)
    if deg > a.chart.n:
        return DiffForm(a.chart, deg, {})
    return DiffForm(a.chart, deg, {k: sx.Add(v) for k, v in terms.items()})


def exterior_power(a: DiffForm, k: int) -> DiffForm:
    """``a ^ a ^ ... ^ a`` (k factors, no factorial scaling); k = 0 gives 1."""
    out = DiffForm.scalar(a.chart, 1)
    for _ in range(k):
        out = wedge(out, a)
    return out


def ext_deriv(a: DiffForm) -> DiffForm:
    chart = a.chart
    terms = {}
    for I, c in a.terms.items():
        for j, x in enumerate(chart.coords):
            if j in I or x not in c.free_symbols:
                continue
            dc = sx.diff(c, x)
            if isinstance(dc, sx.Const) and dc.value == 0:
                continue
            pos = sum(1 for i in I if i < j)
            key = tuple(sorted(I + (j,)))
            terms.setdefault(key, []).append(dc if pos % 2 == 0 else sx.negate(dc))
    return DiffForm(chart, a.degree + 1, {k: sx.Add(v) for k, v in terms.items()}
                    if a.degree + 1 <= chart.n else {})


d = ext_deriv


def contract(v: VecField, a: DiffForm) -> DiffForm:
    """Interior product ``v ⨼ a``."""
    _check_chart(v, a)
    if a.degree == 0:
        raise DegreeError("cannot contract a vector field into a 0-form")
    terms = {}
    for I, c in a.terms.items():
        for j, i in enumerate(I):
            f = v.components[i]
            if isinstance(f, sx.Const) and f.value == 0:
                continue
            t = sx.Mul((f, c)) if j % 2 == 0 else sx.Mul((sx.MINUS_ONE, f, c))
            terms.setdefault(I[:j] + I[j + 1:], []).append(t)
    return DiffForm(a.chart, a.degree - 1, {k: sx.Add(v) for k, v in terms.items()})


def lie_derivative(v: VecField, a: DiffForm) -> DiffForm:
    """Cartan formula ``L_v a = v ⨼ da + d(v ⨼ a)``."""
    _check_chart(v, a)
    first = contract(v, ext_deriv(a)) if a.degree < a.chart.n else DiffForm.zero(a.chart, a.degree)
    if a.degree == 0:
        return first
    return first + ext_deriv(contract(v, a))


def add_scaled(a: DiffForm, c, b: DiffForm) -> DiffForm:
    """``a + c*b`` coefficientwise."""
    _check_chart(a, b)
    if a.degree != b.degree:
        raise DegreeError(f"degree mismatch: {a.degree} vs {b.degree}")
    c = a.chart.parse(c)
    terms = dict(a.terms)
    for k, v in b.terms.items():
        t = sx.Mul((c, v))
        terms[k] = sx.Add((terms[k], t)) if k in terms else t
    return DiffForm(a.chart, a.degree, terms)


def coefficient_values(a: DiffForm, points) -> tuple:
    """Evaluate every coefficient at each row of ``points``.

    Returns (list of index tuples, array of shape (m, len(tuples))).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    keys = list(a.terms)
    out = np.empty((pts.shape[0], len(keys)))
    for j, k in enumerate(keys):
        vals, _ = eval_batch(compile_expr(a.terms[k], a.chart.coords), pts)
        out[:, j] = vals
    if not np.all(np.isfinite(out)):
        raise EvaluationError("form coefficient could not be evaluated at a point")
    return keys, out


def eval_form(a: DiffForm, point, vectors) -> float:
    """Value of ``a`` at ``point`` on the tangent vectors ``vectors``.

    ``dx^I(v_1..v_k) = det[v_a^{I_b}]``; no factorial normalisation.
    """
    vectors = np.asarray(vectors, dtype=float).reshape(len(vectors), -1) if len(vectors) else \
        np.zeros((0, a.chart.n))
    if len(vectors) != a.degree:
        raise DegreeError(f"need {a.degree} vectors, got {len(vectors)}")
    p = a.chart.point(point)
    pt = np.array([[float(p[c]) for c in a.chart.coords]])
    if a.degree == 0:
        _, vals = coefficient_values(a, pt)
        return float(vals[0, 0]) if vals.size else 0.0
    keys, vals = coefficient_values(a, pt)
    total = 0.0
    for k, c in zip(keys, vals[0]):
        total += c * np.linalg.det(vectors[:, list(k)])
    return float(total)


def eval_form_batch(a: DiffForm, points, frames) -> np.ndarray:
    """``eval_form`` at many points; ``frames`` has shape (m, degree, n)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    frames = np.asarray(frames, dtype=float)
    if a.degree == 0:
        keys, vals = coefficient_values(a, points)
        return vals[:, 0] if keys else np.zeros(len(points))
    keys, vals = coefficient_values(a, points)
    out = np.zeros(len(points))
    for j, k in enumerate(keys):
        out += vals[:, j] * np.linalg.det(frames[:, :, list(k)])
    return out


def two_form_matrix(omega: DiffForm):
    """Antisymmetric matrix ``W`` with ``omega = sum_{i<j} W_ij dx^i ^ dx^j``."""
    if omega.degree != 2:
        raise DegreeError("expected a 2-form")
    n = omega.chart.n
    W = [[sx.ZERO] * n for _ in range(n)]
    for (i, j), c in omega.terms.items():
        W[i][j] = c
        W[j][i] = sx.simplify(sx.negate(c))
    return W


def linear_primitive(a: DiffForm) -> DiffForm:
    """Primitive ``(1/k) E ⨼ a`` of a closed constant-coefficient k-form (E the Euler field)."""
    if any(not isinstance(c, sx.Const) for c in a.terms.values()):
        raise DegreeError("linear primitive needs constant coefficients")
    euler = VecField(a.chart, [sx.Sym(x) for x in a.chart.coords])
    return contract(euler, a).scale(sx.Const(Fraction(1, a.degree)))


__all__ = ["Chart", "DiffForm", "VecField", "add_scaled", "contract", "d", "eval_form",
           "eval_form_batch", "exterior_power", "ext_deriv", "lie_derivative",
           "linear_primitive", "two_form_matrix", "wedge"]
