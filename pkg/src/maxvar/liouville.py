"""Builders for the inverse problem: from Liouville data (a volume form and a
vector field preserving it) to a maximal-degree variational form ``theta`` on
the extended phase space ``M = P x T``.

Every builder returns a :class:`BuiltPrinciple` bundling the variational
problem, the independently computed dynamical field ``X`` on ``P``, the
characteristic field ``Z = d_t + X`` on ``M`` and an annihilation report.
The time coordinate is appended last to the phase-space chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import symexpr as sx
from .config import options
from .errors import (ConsistencyError, DegenerateFormError, DegreeError,
                     VerificationError)
from .extcalc import (Chart, DiffForm, VecField, coefficient_values, contract, exterior_power,
                      ext_deriv, linear_primitive, two_form_matrix, wedge)
from .varprin import (AnnihilationReport, VariationalProblem, check_form_nowhere_zero,
                      check_nowhere_zero, sample_points, verify_annihilation)


@dataclass
class LiouvilleProblem:
    """Phase chart ``P``, volume form ``omega`` (degree p) and ``gamma`` (degree p-2)."""

    chart: Chart
    omega: DiffForm
    gamma: DiffForm

    def __post_init__(self):
        p = self.chart.n
        if p < 2:
            raise DegreeError("phase space needs dimension >= 2")
        if self.omega.degree != p or len(self.omega.terms) != 1:
            raise DegreeError("omega must be a single-term top-degree form")
        if self.gamma.degree != p - 2:
            raise DegreeError(f"gamma must have degree p-2 = {p - 2}, got {self.gamma.degree}")

    @property
    def chi(self) -> DiffForm:
        return ext_deriv(self.gamma)


@dataclass
class HyperHamData:
    """Three symplectic forms and three Hamiltonians on ``R^{4N}``; ``sign`` fixes orientation."""

    chart: Chart
    omegas: tuple
    hams: tuple
    sign: int = 1
    sigmas: tuple | None = None

    def __post_init__(self):
        self.omegas = tuple(self.omegas)
        self.hams = tuple(self.chart.parse(h) for h in self.hams)
        if self.chart.n % 4:
            raise DegreeError("hyperhamiltonian dynamics needs dimension 4N")
        if len(self.omegas) != 3 or len(self.hams) != 3:
            raise DegreeError("need exactly three symplectic forms and three Hamiltonians")
        if any(w.degree != 2 for w in self.omegas):
            raise DegreeError("symplectic forms must be 2-forms")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def N(self) -> int:
        return self.chart.n // 4


@dataclass
class BuiltPrinciple:
    problem: VariationalProblem
    dynamics: VecField
    field: VecField
    report: AnnihilationReport
    extra: dict = field(default_factory=dict)

    @property
    def theta(self) -> DiffForm:
        return self.problem.theta


# ---------------------------------------------------------------------------
# linear algebra over expressions
# ---------------------------------------------------------------------------


def solve_linear(A, b):
    """Solve ``A x = b`` by Gaussian elimination over expressions.

    A pivot is accepted only if it fails the zero test; constant pivots are
    preferred so constant-coefficient systems stay exact.
    """
    n = len(A)
    M = [[sx.simplify(sx.as_expr(v)) for v in row] + [sx.simplify(sx.as_expr(b[i]))]
         for i, row in enumerate(A)]
    for col in range(n):
        candidates = [r for r in range(col, n) if not sx.is_zero(M[r][col])]
        if not candidates:
            raise DegenerateFormError(f"no nonzero pivot in column {col}")
        consts = [r for r in candidates if isinstance(M[r][col], sx.Const)]
        piv = (consts or candidates)[0]
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        for r in range(n):
            if r == col or isinstance(M[r][col], sx.Const) and M[r][col].value == 0:
                continue
            f = sx.simplify(sx.Div(M[r][col], pv))
            M[r] = [sx.simplify(a - f * c) for a, c in zip(M[r], M[col])]
    return [sx.simplify(sx.Div(M[i][n], M[i][i])) for i in range(n)]


def hamiltonian_field(omega: DiffForm, H) -> VecField:
    """The field ``X_H`` with ``X_H ⨼ omega = dH``, i.e. ``W^T X = grad H``."""
    chart = omega.chart
    H = chart.parse(H)
    W = two_form_matrix(omega)
    n = chart.n
    grad = [sx.diff(H, x) for x in chart.coords]
    if all(isinstance(g, sx.Const) and g.value == 0 for g in grad):
        return VecField.zero(chart)
    WT = [[W[j][i] for j in range(n)] for i in range(n)]
    return VecField(chart, solve_linear(WT, grad))


def check_nondegenerate(omega: DiffForm, samples=None, witnesses=(), what="omega"):
    """Numeric full rank of the 2-form's matrix at every sample point."""
    chart = omega.chart
    n = chart.n
    if n % 2 or omega.is_empty():
        raise DegenerateFormError(f"{what} is degenerate")
    samples = options().samples if samples is None else samples
    pts = sample_points(chart, samples, "nondeg", witnesses)
    keys, vals = coefficient_values(omega, pts)
    W = np.zeros((len(pts), n, n))
    for j, (a, b) in enumerate(keys):
        W[:, a, b] = vals[:, j]
        W[:, b, a] = -vals[:, j]
    s = np.linalg.svd(W, compute_uv=False)
    bad = s[:, -1] <= options().tol * np.maximum(1.0, s[:, 0])
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DegenerateFormError(f"{what} is degenerate at a sample point",
                                  witness_point={c: float(v) for c, v in zip(chart.coords, pts[i])})


def _check_closed(a: DiffForm, what):
    if not ext_deriv(a).is_empty():
        raise ConsistencyError(f"{what} is not closed")


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def solve_contraction(omega_top: DiffForm, rhs: DiffForm, samples=None, witnesses=()) -> VecField:
    """The unique ``X`` with ``X ⨼ omega_top = rhs``."""
    chart = omega_top.chart
    p = chart.n
    if omega_top.degree != p or len(omega_top.terms) != 1:
        raise DegreeError("omega_top must be a single-term top-degree form")
    if rhs.degree != p - 1:
        raise DegreeError(f"rhs must have degree {p - 1}, got {rhs.degree}")
    (c,) = omega_top.terms.values()
    check_nowhere_zero(c, chart, samples, witnesses, what="volume coefficient")
    comps = []
    for mu in range(p):
        r = rhs.terms.get(tuple(i for i in range(p) if i != mu), sx.ZERO)
        if mu % 2:
            r = sx.negate(r)
        comps.append(sx.Div(r, c) if not (isinstance(c, sx.Const) and c.value == 1) else r)
    return VecField(chart, comps)


def default_sigma(chart: Chart) -> DiffForm:
    """``x^1 dx^2 ^ ... ^ dx^p``, a primitive of the standard volume form."""
    if chart.n < 2:
        raise DegreeError("need at least two coordinates")
    return DiffForm.basis(chart, *chart.coords[1:], coeff=sx.Sym(chart.coords[0]))


def _primitive_of_volume(omega: DiffForm) -> DiffForm:
    (c,) = omega.terms.values()
    if not isinstance(c, sx.Const):
        raise ConsistencyError("volume form has a non-constant coefficient; supply sigma")
    return default_sigma(omega.chart).scale(c)


def _linear_primitive(form: DiffForm, name: str) -> DiffForm:
    if any(not isinstance(c, sx.Const) for c in form.terms.values()):
        raise ConsistencyError(f"form has non-constant coefficients; supply {name}")
    return linear_primitive(form)


def _extended(chart: Chart, time: str, vertical) -> Chart:
    if vertical is None:
        vertical = chart.coords[:2]
    return Chart(chart.coords + (time,), tuple(vertical), time)


def _finish(vp, X, report_samples, residual_tol, extra=None):
    M = vp.chart
    Z = VecField.coordinate(M, M.time) + X.lift(M)
    report = verify_annihilation(Z, vp.eta, samples=report_samples, residual_tol=residual_tol)
    if not report.passed:
        raise VerificationError("Z does not annihilate d(theta); sign convention fault",
                                **report.to_dict())
    return BuiltPrinciple(vp, X, Z, report, extra or {})


def build_theta_general(lp: LiouvilleProblem, sigma: DiffForm | None = None, time: str = "t",
                        vertical=None, samples=None, witnesses=(), report_samples: int = 100,
                        residual_tol: float = 1e-9) -> BuiltPrinciple:
    """``theta = sigma + (-1)^p gamma ^ dt`` for the Liouville field of ``(omega, gamma)``."""
    P = lp.chart
    p = P.n
    sigma = _primitive_of_volume(lp.omega) if sigma is None else sigma
    if sigma.degree != p - 1 or not ext_deriv(sigma).equals(lp.omega):
        raise ConsistencyError("d(sigma) does not equal omega")
    X = solve_contraction(lp.omega, lp.chi, samples, witnesses)
    M = _extended(P, time, vertical)
    dt = DiffForm.basis(M, time)
    g = wedge(lp.gamma.lift(M), dt)
    theta = sigma.lift(M) + (g if p % 2 == 0 else -g)
    vp = VariationalProblem(M, theta=theta)
    check_form_nowhere_zero(vp.eta, samples, what="d(theta)")
    return _finish(vp, X, report_samples, residual_tol)


def build_hamiltonian(chart: Chart, omega: DiffForm, H, beta: DiffForm | None = None,
                      time: str = "t", vertical=None, samples=None, witnesses=(),
                      report_samples: int = 100, residual_tol: float = 1e-9) -> BuiltPrinciple:
    """``theta = (beta + H dt) ^ zeta`` with ``zeta = omega^{m-1} / (m-1)!`` and ``m d beta = omega``."""
    p = chart.n
    if p % 2:
        raise DegreeError("symplectic phase space must be even-dimensional")
    m = p // 2
    H = chart.parse(H)
    _check_closed(omega, "omega")
    check_nondegenerate(omega, samples, witnesses)
    if beta is None:
        beta = _linear_primitive(omega, "beta").scale(sx.Const(Fraction(1, m)))
    if beta.degree != 1 or not ext_deriv(beta).scale(m).equals(omega):
        raise ConsistencyError("m d(beta) does not equal omega")
    X = hamiltonian_field(omega, H)
    zeta = exterior_power(omega, m - 1).scale(sx.Const(Fraction(1, math.factorial(m - 1))))
    M = _extended(chart, time, vertical)
    dt = DiffForm.basis(M, time)
    theta = wedge(beta.lift(M) + dt.scale(H), zeta.lift(M))
    vp = VariationalProblem(M, theta=theta)
    check_form_nowhere_zero(vp.eta, samples, what="d(theta)")
    return _finish(vp, X, report_samples, residual_tol, {"zeta": zeta})


def build_nambu(chart: Chart, hams, Omega: DiffForm | None = None, sigma: DiffForm | None = None,
                time: str = "t", vertical=None, samples=None, witnesses=(),
                report_samples: int = 100, residual_tol: float = 1e-9) -> BuiltPrinciple:
    """Nambu dynamics ``X ⨼ Omega = dH_2 ^ ... ^ dH_p`` via ``gamma = H_2 dH_3 ^ ... ^ dH_p``."""
    p = chart.n
    hams = [chart.parse(h) for h in hams]
    if len(hams) != p - 1:
        raise DegreeError(f"need p-1 = {p - 1} functions, got {len(hams)}")
    Omega = DiffForm.volume(chart) if Omega is None else Omega
    dHs = [ext_deriv(DiffForm.scalar(chart, h)) for h in hams]
    chi = DiffForm.scalar(chart, 1)
    for dh in dHs:
        chi = wedge(chi, dh)
    tail = DiffForm.scalar(chart, 1)
    for dh in dHs[1:]:
        tail = wedge(tail, dh)
    gamma = tail.scale(hams[0])
    if not ext_deriv(gamma).equals(chi):
        raise ConsistencyError("d(gamma) does not equal dH_2 ^ ... ^ dH_p")
    built = build_theta_general(LiouvilleProblem(chart, Omega, gamma), sigma, time, vertical,
                                samples, witnesses, report_samples, residual_tol)
    X = built.dynamics
    conserved = [contract(X, dh).is_empty() for dh in dHs]
    built.extra["first_integrals_conserved"] = conserved
    if not all(conserved):
        raise ConsistencyError("a Nambu function is not conserved by the field")
    return built


def build_hyperhamiltonian(data: HyperHamData, time: str = "t", vertical=None, samples=None,
                           witnesses=(), report_samples: int = 100,
                           residual_tol: float = 1e-9) -> BuiltPrinciple:
    """``theta = sum sigma_a ^ zeta_a + 6 N s sum H^a zeta_a ^ dt`` with ``zeta_a = omega_a^{2N-1}``."""
    chart, N = data.chart, data.N
    M = _extended(chart, time, vertical)
    dt = DiffForm.basis(M, time)
    sigmas = data.sigmas or (None, None, None)
    theta = DiffForm.zero(M, 4 * N - 1)
    blocks = []
    X = VecField.zero(chart)
    for a, (w, H, sig) in enumerate(zip(data.omegas, data.hams, sigmas), start=1):
        _check_closed(w, f"omega_{a}")
        check_nondegenerate(w, samples, witnesses, what=f"omega_{a}")
        sig = _linear_primitive(w, f"sigma_{a}") if sig is None else sig
        if not ext_deriv(sig).equals(w):
            raise ConsistencyError(f"d(sigma_{a}) does not equal omega_{a}")
        zeta = exterior_power(w, 2 * N - 1).lift(M)
        Xa = hamiltonian_field(w, H)
        part = wedge(sig.lift(M), zeta) + wedge(zeta, dt).scale(sx.Const(6 * N * data.sign) * H)
        theta = theta + part
        X = X + Xa
        blocks.append((Xa, ext_deriv(part)))
    vp = VariationalProblem(M, theta=theta)
    check_form_nowhere_zero(vp.eta, samples, what="d(theta)")
    Z = VecField.coordinate(M, time) + X.lift(M)
    if not contract(Z, dt).equals(DiffForm.scalar(M, 1)):
        raise VerificationError("Z ⨼ dt is not 1")
    report = verify_annihilation(Z, vp.eta, samples=report_samples, residual_tol=residual_tol)
    # diagnostic per block: (d_t + 3 X_a) annihilates block a's share of d(theta)
    block_res = []
    for Xa, deta in blocks:
        Za = VecField.coordinate(M, time) + Xa.lift(M).scale(3)
        block_res.append(verify_annihilation(Za, deta, samples=report_samples,
                                             residual_tol=residual_tol).max_numeric_residual)
    report.extra["block_residuals"] = block_res
    if not report.passed:
        leak = int(np.argmax(block_res)) + 1
        raise VerificationError(f"Z does not annihilate d(theta); block {leak} leaks residual",
                                **report.to_dict())
    return BuiltPrinciple(vp, X, Z, report, {"block_residuals": block_res})


def standard_hyperkahler(chart: Chart):
    """The three standard symplectic structures on ``R^4`` (coordinates in chart order)."""
    if chart.n != 4:
        raise DegreeError("standard structures are defined on R^4")
    x1, x2, x3, x4 = chart.coords
    B = DiffForm.basis
    return (B(chart, x1, x2) + B(chart, x3, x4),
            B(chart, x1, x3) + B(chart, x4, x2),
            B(chart, x1, x4) + B(chart, x2, x3))


__all__ = ["BuiltPrinciple", "HyperHamData", "LiouvilleProblem", "build_hamiltonian",
           "build_hyperhamiltonian", "build_nambu", "build_theta_general", "default_sigma",
           "hamiltonian_field", "solve_contraction", "solve_linear", "standard_hyperkahler"]
