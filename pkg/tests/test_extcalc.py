import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxvar import symexpr as sx
from maxvar.errors import DegreeError, UnknownIdentifier
from maxvar.extcalc import (Chart, DiffForm, VecField, add_scaled, contract, eval_form,
                            eval_form_batch, exterior_power, ext_deriv, lie_derivative,
                            linear_primitive, two_form_matrix, wedge)
from maxvar.randgen import random_expr, random_form

C3 = Chart(("x", "y", "z"))
C4 = Chart(("x", "y", "z", "w"))
seeds = st.integers(0, 2**32 - 1)


def B(chart, *names, coeff=1):
    return DiffForm.basis(chart, *names, coeff=coeff)


# --- an independent dense oracle: value of a form on k vectors -------------

def dense_value(a, point, vecs):
    """sum_I c_I(p) det(v[:, I]) computed straight from the stored terms."""
    p = a.chart.point(point)
    V = np.asarray(vecs, dtype=float).reshape(len(vecs), a.chart.n)
    total = 0.0
    for I, c in a.terms.items():
        total += sx.eval_at(c, p) * (np.linalg.det(V[:, list(I)]) if I else 1.0)
    return total


def shuffle_wedge(a, b, point, vecs):
    """(a ^ b)(v) as a signed sum over (k, l)-shuffles."""
    k, l = a.degree, b.degree
    total = 0.0
    for left in itertools.combinations(range(k + l), k):
        right = [i for i in range(k + l) if i not in left]
        perm = list(left) + right
        inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
        total += (-1) ** inv * dense_value(a, point, [vecs[i] for i in left]) * \
            dense_value(b, point, [vecs[i] for i in right])
    return total


def test_worked_examples():
    assert wedge(B(C3, "x"), B(C3, "x")).is_empty()
    xdy = B(C4, "y", coeff="x")
    assert wedge(xdy, B(C4, "z", "w")).equals(B(C4, "y", "z", "w", coeff="x"))
    assert ext_deriv(B(C3, "y", coeff="x")).equals(B(C3, "x", "y"))
    assert ext_deriv(B(C3, "x")).is_empty()
    vol = DiffForm.volume(C3)
    assert contract(VecField.coordinate(C3, "z"), vol).equals(B(C3, "x", "y"))
    assert contract(VecField.coordinate(C3, "y"), vol).equals(-B(C3, "x", "z"))
    P = Chart(("q", "p"))
    X = VecField(P, ["p", "-q"])
    dH = ext_deriv(DiffForm.scalar(P, "(q^2+p^2)/2"))
    assert contract(X, B(P, "q", "p")).equals(dH)


def test_volume_primitive():
    for n in (2, 3, 4, 5):
        c = Chart(tuple(f"x{i}" for i in range(1, n + 1)))
        sigma = B(c, *c.coords[1:], coeff=c.coords[0])
        assert ext_deriv(sigma).equals(DiffForm.volume(c))


def test_lie_derivative_examples():
    assert lie_derivative(VecField.coordinate(C3, "x"), B(C3, "x", coeff="x")).equals(B(C3, "x"))
    vol = DiffForm.volume(C3)
    assert lie_derivative(VecField(C3, ["-x", "0", "z"]), vol).is_empty()
    assert lie_derivative(VecField(C3, ["x", "0", "0"]), vol).equals(vol)


def test_add_scaled_examples():
    a = B(C3, "x", "y", coeff="x*z")
    assert add_scaled(a, 1, -a).is_empty()
    b = B(C3, "z", coeff="y")
    assert add_scaled(DiffForm.zero(C3, 1), "x", b).equals(b.scale("x"))
    s = add_scaled(B(C3, "x"), "x", B(C3, "y"))
    assert s.coeff("x") == sx.ONE and str(s.coeff("y")) == "x"


def test_eval_form_examples():
    dxdy = B(C3, "x", "y")
    assert eval_form(dxdy, {"x": 0.3, "y": 1, "z": 2}, [(1, 0, 0), (0, 1, 0)]) == pytest.approx(1)
    assert eval_form(dxdy, {"x": 0, "y": 0, "z": 0}, [(1, 0, 0), (1, 0, 0)]) == 0
    assert eval_form(B(C3, "x", "y", coeff="z"), {"x": 0, "y": 0, "z": 2},
                     [(1, 0, 0), (0, 3, 0)]) == pytest.approx(6)


def test_errors():
    with pytest.raises(DegreeError):
        contract(VecField.coordinate(C3, "x"), DiffForm.scalar(C3, "x"))
    with pytest.raises(UnknownIdentifier):
        B(C3, "x", coeff="w")
    with pytest.raises(UnknownIdentifier):
        Chart(("x", "y"), vertical=("v",))
    with pytest.raises(DegreeError):
        DiffForm(C3, 2, {("x",): 1})


def test_indices_sorted_with_sign_on_load():
    f = DiffForm.from_records(C3, [{"indices": ["y", "x"], "coeff": "z"}])
    assert f.equals(B(C3, "x", "y", coeff="-z"))
    assert f.coeff("y", "x") == sx.Sym("z")


def test_wedge_above_top_degree_is_empty():
    assert wedge(DiffForm.volume(C3), B(C3, "x")).is_empty()


def test_exterior_power_has_no_factorial():
    c = Chart(("q1", "p1", "q2", "p2"))
    w = B(c, "q1", "p1") + B(c, "q2", "p2")
    assert exterior_power(w, 2).equals(DiffForm.volume(c, 2))
    assert exterior_power(w, 0).equals(DiffForm.scalar(c, 1))


def test_two_form_matrix_antisymmetric():
    w = B(C4, "x", "y", coeff="z") + B(C4, "y", "w")
    W = two_form_matrix(w)
    assert W[0][1] == sx.Sym("z") and str(W[1][0]) == "-z"
    assert W[1][3] == sx.ONE and W[3][1] == sx.MINUS_ONE


def test_linear_primitive():
    w = B(C4, "x", "y") + B(C4, "z", "w", coeff=3)
    assert ext_deriv(linear_primitive(w)).equals(w)
    with pytest.raises(DegreeError):
        linear_primitive(B(C4, "x", "y", coeff="x"))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_wedge_matches_shuffle_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    c = Chart(tuple(f"x{i}" for i in range(n)))
    k = int(rng.integers(0, n + 1))
    l = int(rng.integers(0, n + 1 - k))
    a = random_form(c, k, rng, n_terms=3)
    b = random_form(c, l, rng, n_terms=3)
    ab = wedge(a, b)
    for _ in range(3):
        p = rng.uniform(-1, 1, n)
        vecs = rng.uniform(-1, 1, (k + l, n))
        assert abs(dense_value(ab, p, vecs) - shuffle_wedge(a, b, p, vecs)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_contract_matches_first_slot_insertion(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    c = Chart(tuple(f"x{i}" for i in range(n)))
    k = int(rng.integers(1, n + 1))
    a = random_form(c, k, rng, n_terms=3)
    v = VecField(c, [random_expr(c.coords, rng) for _ in range(n)])
    ia = contract(v, a)
    for _ in range(3):
        p = rng.uniform(-1, 1, n)
        vecs = rng.uniform(-1, 1, (k - 1, n))
        lhs = dense_value(ia, p, vecs)
        rhs = dense_value(a, p, np.vstack([v.at(p)[None, :], vecs]))
        assert abs(lhs - rhs) < 1e-9


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_ext_deriv_matches_finite_difference_formula(seed):
    """For constant vectors: d a(v_0..v_k) = sum_i (-1)^i D_{v_i} a(v_0..^v_i..v_k)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    c = Chart(tuple(f"x{i}" for i in range(n)))
    k = int(rng.integers(0, n))
    a = random_form(c, k, rng, n_terms=2, funcs=False)
    da = ext_deriv(a)
    p = rng.uniform(-0.5, 0.5, n)
    vecs = rng.uniform(-1, 1, (k + 1, n))
    h = 1e-5
    expected = 0.0
    for i in range(k + 1):
        rest = np.delete(vecs, i, axis=0)
        fd = (dense_value(a, p + h * vecs[i], rest) - dense_value(a, p - h * vecs[i], rest)) / (2 * h)
        expected += (-1) ** i * fd
    assert abs(dense_value(da, p, vecs) - expected) < 1e-6


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_laws(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    c = Chart(tuple(f"x{i}" for i in range(n)))
    k = int(rng.integers(0, n + 1))
    l = int(rng.integers(0, n + 1))
    a, b = random_form(c, k, rng), random_form(c, l, rng)
    v = VecField(c, [random_expr(c.coords, rng) for _ in range(n)])
    assert ext_deriv(ext_deriv(a)).is_empty()
    assert wedge(a, b).equals(wedge(b, a).scale((-1) ** (k * l)))
    if k + l >= 1:
        lhs = contract(v, wedge(a, b))
        left = wedge(contract(v, a), b) if k else DiffForm.zero(c, k + l - 1)
        right = wedge(a, contract(v, b)) if l else DiffForm.zero(c, k + l - 1)
        assert lhs.equals(left + right.scale((-1) ** k))
    if k >= 2:
        assert contract(v, contract(v, a)).is_empty()


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_cartan_divergence_identity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    c = Chart(tuple(f"x{i}" for i in range(n)))
    v = VecField(c, [random_expr(c.coords, rng) for _ in range(n)])
    vol = DiffForm.volume(c)
    assert lie_derivative(v, vol).equals(vol.scale(v.divergence()))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_eval_form_agrees_with_contraction(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    c = Chart(tuple(f"x{i}" for i in range(n)))
    a = random_form(c, 1, rng, n_terms=3)
    vhat = rng.integers(-3, 4, n)
    v = VecField(c, [int(x) for x in vhat])
    p = rng.uniform(-1, 1, n)
    coeff = contract(v, a).terms.get((), sx.ZERO)
    assert abs(eval_form(a, p, [vhat]) - sx.eval_at(coeff, c.point(p))) < 1e-10


def test_eval_form_batch_matches_scalar_path():
    rng = np.random.default_rng(3)
    a = random_form(C4, 2, rng, n_terms=4)
    pts = rng.uniform(-1, 1, (10, 4))
    frames = rng.uniform(-1, 1, (10, 2, 4))
    batch = eval_form_batch(a, pts, frames)
    for i in range(10):
        assert abs(batch[i] - eval_form(a, pts[i], frames[i])) < 1e-12
