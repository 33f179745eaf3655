import math

import numpy as np
import pytest

from maxvar.errors import BlowUpError, GridError, TangencyError
from maxvar.extcalc import Chart, DiffForm, VecField
from maxvar.flow import (SectionGrid, build_section, flow_jacobian_det, flow_section, integrate,
                         monitor_divergence, section_residual, tangency_margin)
from maxvar.liouville import build_hamiltonian, build_nambu
from maxvar.varprin import (AnnihilatorField, VariationalProblem, extract_annihilator,
                            normalize_time, variational_module)

P = Chart(("q", "p"))
R3 = Chart(("x", "y", "z"))
P2 = Chart(("q1", "p1", "q2", "p2"))
H2 = "(x^2 + y^2 + z^2)/2"
H3 = "x^2/2 + y^2/4 + z^2/6"


def oscillator2():
    w = DiffForm.basis(P2, "q1", "p1") + DiffForm.basis(P2, "q2", "p2")
    return build_hamiltonian(P2, w, "(q1^2 + p1^2 + q2^2 + p2^2)/2", vertical=("p1", "p2"))


def phi0_grid(M, spacing, extent=0.1):
    n = int(round(extent / spacing)) + 1
    return SectionGrid.from_exprs(
        M, [("u", 0, extent, n), ("v", 0, extent, n)],
        {"q1": "u", "p1": "u/2 + v/3 + 1/5", "q2": "v", "p2": "u - v/4", "t": 0})


def test_oscillator_returns_to_start():
    tr = integrate(VecField(P, ["p", "-q"]), [1, 0], 2 * math.pi, 1e-3,
                   monitors={"H": "(q^2 + p^2)/2"})
    assert np.max(np.abs(tr.final - [1, 0])) < 1e-9
    assert tr.times[-1] == pytest.approx(2 * math.pi, abs=1e-12)
    assert tr.h <= 1e-3
    # analytic circle along the way
    assert np.max(np.abs(tr.states[:, 0] - np.cos(tr.times))) < 1e-9
    assert tr.drift("H") < 1e-12


def test_zero_field_is_constant():
    tr = integrate(VecField.zero(R3), [0.1, 0.2, 0.3], 1.0, 0.1)
    assert np.all(tr.states == [0.1, 0.2, 0.3])
    assert tr.monitor_names == ("divergence",)


def test_euler_top_first_integrals():
    built = build_nambu(R3, [H2, H3])
    tr = integrate(built.dynamics, [1, 1, 1], 10, 1e-3, monitors={"H2": H2, "H3": H3})
    assert tr.drift("H2") < 1e-8 and tr.drift("H3") < 1e-8
    assert len(tr.times) == 10001


def test_normalized_annihilator_can_be_integrated():
    built = build_hamiltonian(P, DiffForm.basis(P, "q", "p"), "(q^2 + p^2)/2")
    x0 = normalize_time(extract_annihilator(built.problem), built.problem)
    tr = integrate(x0, {"q": 0, "p": 1}, 1.0, 1e-3)
    assert tr.names == ("q", "p")
    assert abs(tr.final[0] - math.sin(1.0)) < 1e-12
    with pytest.raises(Exception):
        integrate(AnnihilatorField(x0.field, normalized=False), [0, 1], 1.0, 1e-3)


def test_time_dependent_field():
    M = Chart(("x", "t"), time="t")
    tr = integrate(VecField(M, ["t^2", "1"]), [0.0], 2.0, 0.01, t0=1.0)
    assert abs(tr.final[0] - (27 - 1) / 3) < 1e-12


def test_blow_up_and_bad_step():
    with pytest.raises(BlowUpError) as exc:
        integrate(VecField(Chart(("x",)), ["x^2"]), [1.0], 2.0, 1e-3)
    assert 0.99 < exc.value.record()["time"] < 1.01
    with pytest.raises(ValueError):
        integrate(VecField(P, ["p", "-q"]), [1, 0], 1.0, 0.0)


def test_step_is_shrunk_to_hit_t_end():
    tr = integrate(VecField(P, ["p", "-q"]), [1, 0], 1.0, 0.3)
    assert len(tr.times) == 5 and tr.times[-1] == pytest.approx(1.0)


def test_monitor_divergence_examples():
    rng = np.random.default_rng(0)
    eta = DiffForm.basis(R3, "y", "z", coeff="-x") + DiffForm.basis(R3, "x", "y", coeff="z")
    x = extract_annihilator(VariationalProblem(R3, eta=eta))
    pts = rng.uniform(-1, 1, (100, 3))
    assert monitor_divergence(x, pts) < 1e-9
    assert monitor_divergence(VecField(R3, ["x", "0", "0"]), pts) == 1.0
    assert monitor_divergence(build_nambu(R3, [H2, H3]).dynamics, pts) < 1e-12
    assert monitor_divergence(VecField(R3, ["x", "0", "0"]),
                              [{"x": 0.0, "y": 1.0, "z": 2.0}]) == 1.0


def test_flow_map_preserves_volume():
    for fld, start in ((build_nambu(R3, [H2, H3]).dynamics, [1, 1, 1]),
                       (VecField(P, ["p", "-q"]), [0.5, 0.2])):
        _, dets = flow_jacobian_det(fld, start, 10, 1e-3)
        assert np.max(np.abs(dets - 1)) < 1e-6


def test_flow_map_of_expanding_field():
    times, dets = flow_jacobian_det(VecField(Chart(("x", "y")), ["x", "0"]), [0.3, 0.1], 1.0, 1e-3)
    assert abs(dets[-1] - math.e) < 1e-8


def test_product_section_for_time_translation():
    M = Chart(("x", "y", "t"), vertical=("x", "y"), time="t")
    phi0 = SectionGrid(M, np.array([0.4, -0.2, 0.0]), ())
    sec = build_section(phi0, VecField(M, ["0", "0", "1"]), 5, 0.1)
    assert sec.shape == (6,)
    assert np.all(sec.fiber_values == [0.4, -0.2])
    assert np.allclose(sec.values[:, 2], np.arange(6) * 0.1)
    M4 = Chart(("x", "y", "s", "t"), vertical=("x", "y"), time="t")
    phi0 = SectionGrid.from_exprs(M4, [("u", 0, 1, 4)], {"x": "1", "y": "2", "s": "u", "t": "0"})
    sec = build_section(phi0, VecField(M4, ["0", "0", "0", "1"]), 3, 0.5)
    assert sec.shape == (4, 4) and sec.axes == ("u", "tau")
    assert np.all(sec.fiber_values == [1, 2])


def test_tangency_error():
    M4 = Chart(("x", "y", "s", "t"), vertical=("x", "y"), time="t")
    phi0 = SectionGrid.from_exprs(M4, [("u", 0, 1, 4)], {"x": "1", "y": "2", "s": "0", "t": "u"})
    Z = VecField(M4, ["0", "0", "0", "1"])
    assert tangency_margin(phi0, Z) < 1e-12
    with pytest.raises(TangencyError):
        build_section(phi0, Z, 3, 0.1)


def test_built_section_is_critical_with_second_order_convergence():
    built = oscillator2()
    M = built.problem.chart
    psis = variational_module(built.problem)
    coarse = section_residual(build_section(phi0_grid(M, 1e-2), built.field, 10, 1e-2), psis)
    fine = section_residual(build_section(phi0_grid(M, 5e-3), built.field, 20, 5e-3), psis)
    assert coarse < 1e-5
    assert 3 <= coarse / fine <= 5


def test_random_section_is_not_critical():
    built = oscillator2()
    M = built.problem.chart
    phi = SectionGrid.from_exprs(
        M, [("a", 0.2, 1, 9), ("b", 0.2, 1, 9), ("c", 0, 1, 9)],
        {"q1": "a", "q2": "b", "t": "c", "p1": "a*b + c^2 - a", "p2": "b^2 - a*c + 1"})
    assert section_residual(phi, variational_module(built.problem)) > 1e-2


def test_integral_sections_stay_integral():
    built = oscillator2()
    M = built.problem.chart
    psis = variational_module(built.problem)
    sec = build_section(phi0_grid(M, 1e-2), built.field, 10, 1e-2)
    r0 = section_residual(sec, psis)
    r1 = section_residual(flow_section(sec, built.field, 0.7, 1e-2), psis)
    assert r1 < 1e-5 and r1 < 10 * r0


def test_residual_edge_cases():
    M = Chart(("x", "y", "s", "t"), vertical=("x", "y"), time="t")
    grid = SectionGrid.from_exprs(M, [("u", 0, 1, 3), ("w", 0, 1, 3)],
                                  {"x": "u*w", "y": "w", "s": "u", "t": "w"})
    assert section_residual(grid, [DiffForm.zero(M, 2), DiffForm.zero(M, 2)]) == 0.0
    small = SectionGrid.from_exprs(M, [("u", 0, 1, 2), ("w", 0, 1, 3)],
                                   {"x": "u", "y": "w", "s": "u", "t": "w"})
    with pytest.raises(GridError):
        section_residual(small, [DiffForm.basis(M, "x", "y")])
    with pytest.raises(GridError):
        SectionGrid(M, np.zeros((3, 3, 4)), (0.1, 0.0))
    with pytest.raises(GridError):
        SectionGrid(M, np.full((3, 4), np.nan), (0.1,))


def test_serialization(tmp_path):
    tr = integrate(VecField(P, ["p", "-q"]), [1, 0], 0.2, 0.1, monitors={"H": "(q^2+p^2)/2"})
    path = tmp_path / "t.traj.txt"
    tr.write(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# step t q p [H] [divergence]"
    assert lines[1].split() == ["0", "0.000000000000e+00", "1.000000000000e+00",
                                "0.000000000000e+00", "5.000000000000e-01", "0.000000000000e+00"]
    assert len(lines) == 4
    M = Chart(("x", "y", "t"), vertical=("x", "y"), time="t")
    grid = SectionGrid.from_exprs(M, [("u", 0, 1, 2)], {"x": "u", "y": "1", "t": "0"})
    gpath = tmp_path / "g.section.txt"
    grid.write(gpath)
    glines = gpath.read_text().splitlines()
    assert glines[0].startswith("# u | x y t | spacing")
    assert glines[2].split()[:2] == ["1", "1.000000000000e+00"]
