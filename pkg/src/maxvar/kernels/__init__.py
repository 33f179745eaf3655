"""Numeric kernels with a compiled fast path and a pure-Python fallback.

The Cython extension ``_ckernels`` is used when it was built; otherwise (or
when ``MAXVAR_PURE=1`` is set) the NumPy implementation is selected at import.
"""

import os

import numpy as np

from . import _pykernels
from .program import Bundle, Program, compile_bundle, compile_expr

try:
    if os.environ.get("MAXVAR_PURE"):
        raise ImportError("pure backend forced")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

BACKEND = "cython" if _ckernels is not None else "python"
_impl = BACKENDS[BACKEND]


def eval_batch(prog: Program, X, backend=None):
    """Evaluate ``prog`` on each row of ``X``; returns (values, subterm magnitudes)."""
    impl = BACKENDS[backend] if backend else _impl
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
    if X.shape[1] != prog.nvars:
        raise ValueError(f"expected {prog.nvars} columns, got {X.shape[1]}")
    if len(prog.code) == 0:
        return np.zeros(X.shape[0]), np.zeros(X.shape[0])
    return impl.eval_batch(prog.code, prog.consts, X)


def rk4(bundle: Bundle, Y0, t0: float, h: float, steps: int, bound: float = 1e6, backend=None):
    """Fixed-step RK4 for every row of ``Y0``.

    Program variable ``d`` (one past the state) is the time.  Returns
    (states (steps+1, m, d), first failing step or -1).
    """
    impl = BACKENDS[backend] if backend else _impl
    Y0 = np.ascontiguousarray(np.atleast_2d(np.asarray(Y0, dtype=float)))
    if impl is _pykernels:
        return impl.rk4(bundle, Y0, t0, h, int(steps), bound)
    return impl.rk4(bundle.code, bundle.starts, bundle.consts, Y0, float(t0), float(h),
                    int(steps), float(bound))


__all__ = ["BACKEND", "BACKENDS", "Bundle", "Program", "compile_bundle", "compile_expr",
           "eval_batch", "rk4"]
