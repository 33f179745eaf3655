import numpy as np
import pytest

from maxvar import kernels
from maxvar import symexpr as sx
from maxvar.randgen import random_expr

NAMES = ("x", "y", "z")
needs_cython = pytest.mark.skipif("cython" not in kernels.BACKENDS,
                                  reason="compiled extension not built")


def test_eval_matches_tree_evaluation():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (50, 3))
    for _ in range(20):
        e = random_expr(NAMES, rng, max_deg=4)
        prog = kernels.compile_expr(e, NAMES)
        for backend in kernels.BACKENDS:
            vals, mags = kernels.eval_batch(prog, X, backend=backend)
            ref = [sx.eval_at(e, dict(zip(NAMES, row))) for row in X]
            assert np.allclose(vals, ref, rtol=1e-12, atol=1e-12)
            assert np.all(mags >= np.abs(vals) - 1e-15)


def test_negative_powers_and_functions():
    e = sx.parse_expr("x^-2 + sqrt(y^2 + 1)*exp(-z) - cos(x)/sin(y + 2)", NAMES)
    X = np.array([[0.5, 0.1, -0.3], [1.5, -0.7, 0.2]])
    ref = [sx.eval_at(e, dict(zip(NAMES, r))) for r in X]
    for backend in kernels.BACKENDS:
        vals, _ = kernels.eval_batch(kernels.compile_expr(e, NAMES), X, backend=backend)
        assert np.allclose(vals, ref, rtol=1e-13)


def test_division_by_zero_gives_non_finite():
    prog = kernels.compile_expr(sx.parse_expr("1/x", NAMES), NAMES)
    for backend in kernels.BACKENDS:
        vals, _ = kernels.eval_batch(prog, np.array([[0.0, 1.0, 1.0]]), backend=backend)
        assert not np.isfinite(vals[0])


def test_column_count_checked():
    prog = kernels.compile_expr(sx.parse_expr("x", NAMES), NAMES)
    with pytest.raises(ValueError):
        kernels.eval_batch(prog, np.zeros((2, 2)))


def _bundle(srcs, names):
    return kernels.compile_bundle([sx.parse_expr(s, names) for s in srcs], names)


def test_rk4_backends_agree():
    names = ("x", "y", "z", "t")
    b = _bundle(["-y*z/6 + sin(t)/10", "2*x*z/3", "-x*y/2"], names)
    Y0 = np.array([[1.0, 1.0, 1.0], [0.2, -0.4, 0.9]])
    results = [kernels.rk4(b, Y0, 0.5, 1e-2, 300, backend=be) for be in kernels.BACKENDS]
    for states, fail in results:
        assert fail == -1 and states.shape == (301, 2, 3)
    for states, _ in results[1:]:
        assert np.allclose(states, results[0][0], rtol=1e-13, atol=1e-13)


def test_rk4_blow_up_detected():
    b = _bundle(["x^2"], ("x", "t"))
    for be in kernels.BACKENDS:
        states, fail = kernels.rk4(b, np.array([[1.0]]), 0.0, 1e-2, 500, bound=1e3, backend=be)
        assert fail > 0 and len(states) == fail + 1


@needs_cython
def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_pure_backend_forced_by_environment():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "import maxvar.kernels as k; print(k.BACKEND)"],
                         env={"MAXVAR_PURE": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
