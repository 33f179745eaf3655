"""Pure-Python/NumPy kernels; used when the compiled extension is unavailable."""

import numpy as np

from .program import (OP_ADD, OP_CONST, OP_COS, OP_DIV, OP_EXP, OP_MUL, OP_POWI, OP_SIN,
                      OP_SQRT, OP_VAR)

_UNARY = {OP_SIN: np.sin, OP_COS: np.cos, OP_EXP: np.exp, OP_SQRT: np.sqrt}


def eval_batch(code, consts, X):
    """Evaluate one program at every row of ``X``.

    Returns (values, largest |subterm| per row).
    """
    m = X.shape[0]
    stack = []
    mag = np.zeros(m)
    with np.errstate(all="ignore"):
        for op, arg in code:
            if op == OP_CONST:
                v = np.full(m, consts[arg])
            elif op == OP_VAR:
                v = X[:, arg]
            elif op == OP_ADD:
                b = stack.pop()
                v = stack.pop() + b
            elif op == OP_MUL:
                b = stack.pop()
                v = stack.pop() * b
            elif op == OP_DIV:
                b = stack.pop()
                v = stack.pop() / b
            elif op == OP_POWI:
                a = stack.pop()
                v = a ** arg if arg >= 0 else 1.0 / a ** (-arg)
            else:
                v = _UNARY[op](stack.pop())
            stack.append(v)
            mag = np.maximum(mag, np.abs(v))
    return np.asarray(stack[-1], dtype=float), mag


_PY_UNARY = {OP_SIN: "np.sin", OP_COS: "np.cos", OP_EXP: "np.exp", OP_SQRT: "np.sqrt"}


def _codegen(bundle):
    """Generate ``f(Y, t) -> dY`` for a bundle; Y has shape (d, m)."""
    code, consts, starts = bundle.code, bundle.consts, bundle.starts
    d = bundle.size
    lines = ["def f(Y, t):"]
    outs = []
    k = 0
    for c in range(d):
        stack = []
        for op, arg in code[starts[c]:starts[c + 1]]:
            if op == OP_CONST:
                stack.append(repr(float(consts[arg])))
                continue
            if op == OP_VAR:
                stack.append(f"Y[{arg}]" if arg < d else "t")
                continue
            if op in (OP_ADD, OP_MUL, OP_DIV):
                b, a = stack.pop(), stack.pop()
                sym = {OP_ADD: "+", OP_MUL: "*", OP_DIV: "/"}[op]
                expr = f"{a} {sym} {b}"
            elif op == OP_POWI:
                a = stack.pop()
                expr = f"{a} ** {arg}" if arg >= 0 else f"1.0 / {a} ** {-arg}"
            else:
                expr = f"{_PY_UNARY[op]}({stack.pop()})"
            lines.append(f"    v{k} = {expr}")
            stack.append(f"v{k}")
            k += 1
        outs.append(f"{stack[-1]} + zero")
    lines.insert(1, "    zero = np.zeros(Y.shape[1])")
    lines.append(f"    return np.array([{', '.join(outs)}])")
    ns = {"np": np}
    exec("\n".join(lines), ns)
    return ns["f"]


def rk4(bundle, Y0, t0, h, steps, bound):
    """Classical RK4 on every row of ``Y0`` (shape (m, d)).

    Returns (states of shape (steps+1, m, d), index of the first failing step
    or -1).  A step fails when the state leaves the ball of radius ``bound``
    or stops being finite.
    """
    f = bundle.cache.get("py")
    if f is None:
        f = bundle.cache["py"] = _codegen(bundle)
    Y = np.array(Y0, dtype=float).T.copy()
    out = np.empty((steps + 1,) + Y.T.shape)
    out[0] = Y.T
    with np.errstate(all="ignore"):
        for n in range(steps):
            t = t0 + n * h
            k1 = f(Y, t)
            k2 = f(Y + 0.5 * h * k1, t + 0.5 * h)
            k3 = f(Y + 0.5 * h * k2, t + 0.5 * h)
            k4 = f(Y + h * k3, t + h)
            Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[n + 1] = Y.T
            norms = np.sqrt((Y * Y).sum(axis=0))
            if not np.all(np.isfinite(norms)) or np.any(norms > bound):
                return out[: n + 2], n + 1
    return out, -1
