"""Flatten expression trees into postfix programs for the numeric kernels.

A program is an (L, 2) int64 array of (opcode, argument) pairs plus a float64
constant pool.  Several programs evaluated together (one per vector-field
component) are concatenated into a ``Bundle`` with start offsets.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..symexpr import Add, Const, Div, Func, Mul, Pow, Sym

OP_CONST, OP_VAR, OP_ADD, OP_MUL, OP_DIV, OP_POWI, OP_SIN, OP_COS, OP_EXP, OP_SQRT = range(10)
_FUNC_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP, "sqrt": OP_SQRT}


@dataclass(frozen=True, eq=False)
class Program:
    code: np.ndarray
    consts: np.ndarray
    nvars: int
    depth: int


@dataclass(eq=False)
class Bundle:
    code: np.ndarray
    consts: np.ndarray
    starts: np.ndarray   # len = components + 1
    nvars: int
    depth: int
    cache: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.starts) - 1


def _emit(e, index, code, consts, const_index):
    """Append postfix code for ``e``; returns the stack depth it needs."""
    if isinstance(e, Const):
        v = float(e.value)
        k = const_index.get(v)
        if k is None:
            k = const_index[v] = len(consts)
            consts.append(v)
        code.append((OP_CONST, k))
        return 1
    if isinstance(e, Sym):
        code.append((OP_VAR, index[e.name]))
        return 1
    if isinstance(e, (Add, Mul)):
        items = e.terms if isinstance(e, Add) else e.factors
        op = OP_ADD if isinstance(e, Add) else OP_MUL
        depth = _emit(items[0], index, code, consts, const_index)
        for item in items[1:]:
            depth = max(depth, 1 + _emit(item, index, code, consts, const_index))
            code.append((op, 0))
        return depth
    if isinstance(e, Pow):
        depth = _emit(e.base, index, code, consts, const_index)
        code.append((OP_POWI, e.exp))
        return depth
    if isinstance(e, Div):
        d1 = _emit(e.num, index, code, consts, const_index)
        d2 = _emit(e.den, index, code, consts, const_index)
        code.append((OP_DIV, 0))
        return max(d1, 1 + d2)
    if isinstance(e, Func):
        depth = _emit(e.arg, index, code, consts, const_index)
        code.append((_FUNC_OPS[e.name], 0))
        return depth
    raise TypeError(f"cannot compile {e!r}")


@lru_cache(maxsize=4096)
def compile_expr(e, names) -> Program:
    names = tuple(names)
    index = {n: i for i, n in enumerate(names)}
    missing = e.free_symbols - set(index)
    if missing:
        raise KeyError(f"no variable slot for {sorted(missing)}")
    code, consts = [], []
    depth = _emit(e, index, code, consts, {})
    return Program(np.asarray(code, dtype=np.int64).reshape(-1, 2),
                   np.asarray(consts, dtype=np.float64), len(names), depth)


def compile_bundle(exprs, names) -> Bundle:
    progs = [compile_expr(e, tuple(names)) for e in exprs]
    codes, consts, starts = [], [], [0]
    for p in progs:
        c = p.code.copy()
        c[c[:, 0] == OP_CONST, 1] += sum(len(q) for q in consts)
        codes.append(c)
        consts.append(p.consts)
        starts.append(starts[-1] + len(c))
    code = np.vstack(codes) if codes else np.empty((0, 2), dtype=np.int64)
    pool = np.concatenate(consts) if consts else np.empty(0)
    return Bundle(np.ascontiguousarray(code), np.ascontiguousarray(pool),
                  np.asarray(starts, dtype=np.int64), len(tuple(names)),
                  max((p.depth for p in progs), default=1))
