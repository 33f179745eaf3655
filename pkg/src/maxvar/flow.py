"""Numerical layer: RK4 trajectories with invariant monitors, volume checks,
and critical sections swept out by the characteristic flow.

A :class:`SectionGrid` is a structured lattice in parameter space whose nodes
carry full coordinates on ``M``.  For an initial section ``phi0`` the
parameters are coordinates on ``B0``; flowing adds one axis (the flow time),
so tangent vectors of the swept section come from central differences along
the lattice axes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import symexpr as sx
from .errors import BlowUpError, DegreeError, GridError, TangencyError
from .extcalc import Chart, VecField, eval_form_batch
from .kernels import compile_bundle, compile_expr, eval_batch, rk4
from .varprin import AnnihilatorField

BLOW_UP_BOUND = 1e6
TANGENCY_THRESHOLD = 1e-3
_CLOCK = "__clock__"


def _format(v):
    return f"{v:.12e}"


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    names: tuple
    times: np.ndarray
    states: np.ndarray
    monitor_names: tuple = ()
    monitors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    h: float = 0.0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def monitor(self, name) -> np.ndarray:
        return self.monitors[:, self.monitor_names.index(name)]

    def drift(self, name=None):
        """``max_t |I(t) - I(0)|`` for one monitor, or a dict over all of them."""
        if name is not None:
            m = self.monitor(name)
            return float(np.max(np.abs(m - m[0])))
        return {n: self.drift(n) for n in self.monitor_names}

    def write(self, path):
        """One line per step: ``index t state... monitors...``."""
        with open(path, "w") as fh:
            fh.write("# step t " + " ".join(self.names) + "".join(
                f" [{n}]" for n in self.monitor_names) + "\n")
            for i, (t, y) in enumerate(zip(self.times, self.states)):
                cols = [_format(t)] + [_format(v) for v in y]
                if len(self.monitor_names):
                    cols += [_format(v) for v in self.monitors[i]]
                fh.write(f"{i} " + " ".join(cols) + "\n")


def _phase_field(fld):
    """(state names, component exprs, time name) for a field or a normalized annihilator."""
    if isinstance(fld, AnnihilatorField):
        if not fld.normalized:
            raise DegreeError("annihilator field must be time-normalized before integration")
        fld = fld.field
    chart = fld.chart
    if chart.time is not None:
        tcomp = fld[chart.time]
        if not (isinstance(tcomp, sx.Const) and tcomp.value == 1):
            raise DegreeError("time component of the field must be 1")
        names = chart.space_coords
        return names, [fld[c] for c in names], chart.time
    return chart.coords, list(fld.components), _CLOCK


def _steps(t_end, h):
    if not h > 0:
        raise ValueError("step size must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    n = max(1, math.ceil(t_end / h - 1e-9)) if t_end > 0 else 0
    return n, (t_end / n if n else h)


def _run(exprs, names, time_name, Y0, t0, h, steps, bound, backend):
    bundle = compile_bundle(exprs, tuple(names) + (time_name,))
    states, fail = rk4(bundle, Y0, t0, h, steps, bound if bound is not None else BLOW_UP_BOUND,
                       backend=backend)
    if fail >= 0:
        raise BlowUpError(f"state left the ball of radius {bound or BLOW_UP_BOUND}",
                          step=int(fail), time=float(t0 + fail * h))
    return states


def _eval_columns(exprs, names, X):
    out = np.empty((len(X), len(exprs)))
    for j, e in enumerate(exprs):
        out[:, j], _ = eval_batch(compile_expr(e, tuple(names)), X)
    return out


def integrate(fld, start, t_end: float, h: float, monitors=None, t0: float = 0.0,
              bound: float | None = None, backend=None) -> Trajectory:
    """Fixed-step classical RK4 from ``start`` to ``t0 + t_end``.

    The step is shrunk to ``t_end / ceil(t_end / h)`` so the grid ends exactly
    at ``t_end``.  ``monitors`` maps names to expressions (or is a list of
    expressions); the field's divergence is always monitored as ``divergence``.
    """
    names, exprs, tname = _phase_field(fld)
    if isinstance(start, dict):
        start = [start[c] for c in names]
    y0 = np.asarray(start, dtype=float)
    if y0.shape != (len(names),):
        raise DegreeError(f"start must have {len(names)} entries")
    steps, h_eff = _steps(t_end, h)
    states = _run(exprs, names, tname, y0[None, :], t0, h_eff, steps, bound, backend)[:, 0, :]
    times = t0 + h_eff * np.arange(steps + 1)
    mon = {}
    if monitors is not None:
        items = monitors.items() if isinstance(monitors, dict) else ((str(m), m) for m in monitors)
        allowed = tuple(names) + (tname,)
        for k, e in items:
            mon[str(k)] = sx.simplify(sx.parse_expr(e, allowed) if isinstance(e, str) else e)
    div = sx.simplify(sx.Add([sx.diff(f, x) for f, x in zip(exprs, names)]))
    mon["divergence"] = div
    X = np.hstack([states, times[:, None]])
    vals = _eval_columns(list(mon.values()), tuple(names) + (tname,), X)
    return Trajectory(tuple(names), times, states, tuple(mon), vals, h_eff)


def monitor_divergence(fld, points) -> float:
    """``max |sum_mu d f^mu / dx^mu|`` over ``points`` (rows in chart order, or dicts)."""
    if isinstance(fld, AnnihilatorField):
        fld = fld.field
    chart = fld.chart
    pts = [[p[c] for c in chart.coords] for p in points] if len(points) and isinstance(
        points[0], dict) else points
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    vals, _ = eval_batch(compile_expr(fld.divergence(), chart.coords), pts)
    return float(np.max(np.abs(vals))) if len(vals) else 0.0


def flow_jacobian_det(fld, start, t_end: float, h: float, eps: float = 1e-5, t0: float = 0.0,
                      backend=None):
    """Determinants of the flow map's Jacobian along the trajectory from ``start``.

    Columns are central differences of ``2d`` perturbed trajectories, all
    integrated in one batch.  Returns (times, dets).
    """
    names, exprs, tname = _phase_field(fld)
    d = len(names)
    y0 = np.asarray([start[c] for c in names] if isinstance(start, dict) else start, dtype=float)
    E = np.eye(d) * eps
    Y0 = np.vstack([y0 + E, y0 - E])
    steps, h_eff = _steps(t_end, h)
    states = _run(exprs, names, tname, Y0, t0, h_eff, steps, None, backend)
    J = (states[:, :d, :] - states[:, d:, :]) / (2 * eps)   # (steps+1, column i, row j)
    dets = np.linalg.det(J)
    return t0 + h_eff * np.arange(steps + 1), dets


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------


@dataclass
class SectionGrid:
    """Structured lattice of points on ``M``; ``values`` has shape ``(*shape, n)``."""

    chart: Chart
    values: np.ndarray
    spacing: tuple
    axes: tuple = ()
    margin: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.spacing = tuple(float(s) for s in self.spacing)
        if self.values.shape[-1] != self.chart.n:
            raise GridError(f"node values must have {self.chart.n} coordinates")
        if len(self.spacing) != self.values.ndim - 1:
            raise GridError("need one spacing per lattice axis")
        if any(not s > 0 for s in self.spacing):
            raise GridError("lattice spacing must be positive")
        if not np.all(np.isfinite(self.values)):
            raise GridError("node values must be finite")
        if not self.axes:
            self.axes = tuple(f"u{i + 1}" for i in range(len(self.spacing)))

    @property
    def shape(self):
        return self.values.shape[:-1]

    @property
    def k(self):
        return len(self.shape)

    @property
    def fiber_values(self) -> np.ndarray:
        return self.values[..., list(self.chart.vertical_indices)]

    @classmethod
    def from_exprs(cls, chart: Chart, params, coords) -> "SectionGrid":
        """Lattice over ``params = [(name, start, stop, num), ...]`` with node
        coordinates given by expressions in the parameter names."""
        names = tuple(p[0] for p in params)
        axes = [np.linspace(float(a), float(b), int(num)) for _, a, b, num in params]
        for (nm, a, b, num) in params:
            if int(num) < 2:
                raise GridError(f"axis {nm} needs at least 2 nodes")
        spacing = tuple((float(b) - float(a)) / (int(num) - 1) for _, a, b, num in params)
        mesh = np.meshgrid(*axes, indexing="ij") if axes else []
        flat = np.stack([m.ravel() for m in mesh], axis=1) if axes else np.zeros((1, 0))
        shape = tuple(len(a) for a in axes)
        vals = np.empty((len(flat), chart.n))
        missing = [c for c in chart.coords if c not in coords]
        if missing:
            raise GridError(f"no expression for coordinate {missing[0]}")
        for j, c in enumerate(chart.coords):
            e = coords[c]
            e = sx.parse_expr(e, names) if isinstance(e, str) else sx.as_expr(e)
            vals[:, j], _ = eval_batch(compile_expr(sx.simplify(e), names), flat)
        return cls(chart, vals.reshape(shape + (chart.n,)), spacing, names)

    def write(self, path):
        """One node per line: ``lattice indices... coordinates...``."""
        with open(path, "w") as fh:
            fh.write("# " + " ".join(self.axes) + " | " + " ".join(self.chart.coords)
                     + " | spacing " + " ".join(_format(s) for s in self.spacing) + "\n")
            for idx in itertools.product(*(range(s) for s in self.shape)):
                fh.write(" ".join(map(str, idx)) + (" " if idx else "")
                         + " ".join(_format(v) for v in self.values[idx]) + "\n")


def _char_field(fld) -> VecField:
    if isinstance(fld, AnnihilatorField):
        if not fld.normalized:
            raise DegreeError("characteristic field must be time-normalized")
        fld = fld.field
    return fld


def _flow_nodes(Z: VecField, pts, h, steps, backend=None):
    """Flow points of ``M`` along ``Z`` (autonomously, time as a state)."""
    return _run(list(Z.components), Z.chart.coords, _CLOCK, pts, 0.0, h, steps, None, backend)


def _tangents(values, spacing, interior=True):
    """Central-difference tangent vectors along each lattice axis.

    With ``interior`` the result covers interior nodes only; otherwise one-sided
    differences are used at the ends.
    """
    out = []
    k = values.ndim - 1
    for a in range(k):
        if interior:
            sl_p = [slice(1, -1)] * k
            sl_m = [slice(1, -1)] * k
            sl_p[a] = slice(2, None)
            sl_m[a] = slice(None, -2)
            out.append((values[tuple(sl_p)] - values[tuple(sl_m)]) / (2 * spacing[a]))
        else:
            out.append(np.gradient(values, spacing[a], axis=a))
    return out


def tangency_margin(phi0: SectionGrid, Z: VecField) -> float:
    """Smallest sine of the angle between ``Z`` and the tangent space of ``phi0`` over its nodes."""
    pts = phi0.values.reshape(-1, phi0.chart.n)
    zs = np.stack([eval_batch(compile_expr(f, Z.chart.coords), pts)[0] for f in Z.components], 1)
    znorm = np.linalg.norm(zs, axis=1)
    if phi0.k == 0:
        return float(np.min(np.where(znorm > 0, 1.0, 0.0)))
    T = np.stack([t.reshape(-1, phi0.chart.n) for t in _tangents(phi0.values, phi0.spacing,
                                                                   interior=False)], axis=2)
    sines = np.empty(len(pts))
    for i in range(len(pts)):
        if znorm[i] == 0:
            sines[i] = 0.0
            continue
        q, _ = np.linalg.qr(T[i])
        z = zs[i] / znorm[i]
        sines[i] = np.linalg.norm(z - q @ (q.T @ z))
    return float(np.min(sines))


def build_section(phi0: SectionGrid, fld, steps: int, h: float,
                  threshold: float = TANGENCY_THRESHOLD, backend=None) -> SectionGrid:
    """Sweep ``phi0`` along the characteristic field: one new lattice axis of
    ``steps + 1`` nodes spaced by the flow time ``h``."""
    Z = _char_field(fld)
    if not phi0.chart.same_coords(Z.chart):
        raise GridError("section and field live on different charts")
    if steps < 1 or not h > 0:
        raise GridError("need at least one flow step of positive size")
    margin = tangency_margin(phi0, Z)
    if margin < threshold:
        raise TangencyError(f"initial data is tangent to the field (margin {margin:.3e})",
                            margin=margin)
    pts = phi0.values.reshape(-1, phi0.chart.n)
    states = _flow_nodes(Z, pts, h, steps, backend)           # (steps+1, m, n)
    vals = np.moveaxis(states, 0, 1).reshape(phi0.shape + (steps + 1, phi0.chart.n))
    return SectionGrid(phi0.chart, vals, phi0.spacing + (h,), phi0.axes + ("tau",), margin)


def flow_section(phi: SectionGrid, fld, tau: float, h: float, backend=None) -> SectionGrid:
    """Move every node of ``phi`` by the time-``tau`` flow of the field."""
    Z = _char_field(fld)
    steps, h_eff = _steps(tau, h)
    pts = phi.values.reshape(-1, phi.chart.n)
    final = _flow_nodes(Z, pts, h_eff, steps, backend)[-1]
    return SectionGrid(phi.chart, final.reshape(phi.values.shape), phi.spacing, phi.axes)


def section_residual(phi: SectionGrid, psis) -> float:
    """Max over interior nodes, generators and k-frames of ``|Psi_j(T_1, ..., T_k)|``."""
    if any(s < 3 for s in phi.shape):
        raise GridError("grid too coarse: need at least 3 nodes per axis")
    psis = [p for p in psis if not p.is_empty()]
    if not psis:
        return 0.0
    k = phi.k
    T = _tangents(phi.values, phi.spacing)                   # k arrays (*interior, n)
    pts = phi.values[tuple([slice(1, -1)] * k)].reshape(-1, phi.chart.n)
    tang = np.stack([t.reshape(-1, phi.chart.n) for t in T], axis=1)   # (m, k, n)
    worst = 0.0
    for psi in psis:
        if psi.degree > k:
            raise DegreeError("generator degree exceeds the section dimension")
        for sub in itertools.combinations(range(k), psi.degree):
            vals = eval_form_batch(psi, pts, tang[:, list(sub), :])
            worst = max(worst, float(np.max(np.abs(vals))))
    return worst


__all__ = ["BLOW_UP_BOUND", "SectionGrid", "TANGENCY_THRESHOLD", "Trajectory", "build_section",
           "flow_jacobian_det", "flow_section", "integrate", "monitor_divergence",
           "section_residual", "tangency_margin"]
