"""Symbolic scalar expressions over chart coordinates.

Expressions are immutable trees with exact rational constants.  There is no
full canonical form: ``simplify`` folds constants, removes identities, expands
polynomial products and collects like terms, and equality to zero is decided
numerically by ``is_zero``.
"""

from __future__ import annotations

import math
import re
import zlib
from fractions import Fraction

import numpy as np

from .config import options
from .errors import EvaluationError, ExprSyntaxError, UnknownIdentifier, ZeroTestError

FUNCTIONS = ("sin", "cos", "exp", "sqrt")

# Pow(Add, n) is expanded by simplify only up to this exponent.
MAX_EXPAND_POWER = 6


class Expr:
    __slots__ = ("_hash", "_str", "_simple", "_free")

    def __init__(self):
        self._hash = None
        self._str = None
        self._simple = None
        self._free = None

    # structural identity -------------------------------------------------
    def _args(self):
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return self._args() == other._args()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((type(self).__name__, self._args()))
        return self._hash

    def __str__(self):
        if self._str is None:
            self._str = to_string(self)
        return self._str

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(repr, self._args()))})"

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            self._free = self._compute_free()
        return self._free

    def _compute_free(self):
        out = set()
        for a in self._args():
            if isinstance(a, Expr):
                out |= a.free_symbols
            elif isinstance(a, tuple):
                for b in a:
                    out |= b.free_symbols
        return frozenset(out)

    # arithmetic builds raw nodes; simplify() normalises ---------------------
    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, negate(as_expr(other))))

    def __rsub__(self, other):
        return Add((as_expr(other), negate(self)))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        return Pow(self, n)

    def __neg__(self):
        return negate(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = Fraction(value)

    def _args(self):
        return (self.value,)

    def _compute_free(self):
        return frozenset()


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        super().__init__()
        self.name = name

    def _args(self):
        return (self.name,)

    def _compute_free(self):
        return frozenset((self.name,))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple(terms)

    def _args(self):
        return (self.terms,)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        super().__init__()
        self.factors = tuple(factors)

    def _args(self):
        return (self.factors,)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        super().__init__()
        self.base = base
        self.exp = int(exp)

    def _args(self):
        return (self.base, self.exp)


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        super().__init__()
        self.num = num
        self.den = den

    def _args(self):
        return (self.num, self.den)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        super().__init__()
        if name not in FUNCTIONS:
            raise UnknownIdentifier(name)
        self.name = name
        self.arg = arg

    def _args(self):
        return (self.name, self.arg)


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, float):
        return Const(Fraction(value).limit_denominator(10**12))
    raise TypeError(f"cannot convert {value!r} to an expression")


def symbols(names):
    return tuple(Sym(n) for n in (names.split() if isinstance(names, str) else names))


def negate(e: Expr) -> Expr:
    """Structural negation used by the parser and printer."""
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Mul) and e.factors and isinstance(e.factors[0], Const):
        return Mul((Const(-e.factors[0].value),) + e.factors[1:])
    if isinstance(e, Mul):
        return Mul((MINUS_ONE,) + e.factors)
    return Mul((MINUS_ONE, e))


def sin(e):
    return Func("sin", as_expr(e))


def cos(e):
    return Func("cos", as_expr(e))


def exp(e):
    return Func("exp", as_expr(e))


def sqrt(e):
    return Func("sqrt", as_expr(e))


def count_operators(e: Expr) -> int:
    if isinstance(e, (Const, Sym)):
        return 0
    if isinstance(e, Add):
        return 1 + sum(count_operators(t) for t in e.terms)
    if isinstance(e, Mul):
        return 1 + sum(count_operators(f) for f in e.factors)
    if isinstance(e, Pow):
        return 1 + count_operators(e.base)
    if isinstance(e, Div):
        return 1 + count_operators(e.num) + count_operators(e.den)
    return 1 + count_operators(e.arg)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _names_of(chart):
    if chart is None:
        return None
    coords = getattr(chart, "coords", chart)
    return frozenset(coords)


class _Parser:
    def __init__(self, src, names):
        self.tokens = _tokenize(src)
        self.i = 0
        self.names = names

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            raise ExprSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else negate(t))
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self):
        negative = False
        if self.peek()[1] == "-":
            self.take()
            negative = True
        acc = [self.factor()]
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            f = self.factor()
            if op == "*":
                acc.append(f)
            else:
                num = acc[0] if len(acc) == 1 else Mul(acc)
                if isinstance(num, Const) and isinstance(f, Const) and f.value != 0:
                    acc = [Const(num.value / f.value)]
                else:
                    acc = [Div(num, f)]
        t = acc[0] if len(acc) == 1 else Mul(acc)
        return negate(t) if negative else t

    def factor(self):
        if self.peek()[1] == "-":
            self.take()
            return negate(self.factor())
        base = self.base()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError("exponent must be an integer", pos)
            return Pow(base, sign * int(val))
        return base

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "id":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifier(val, pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            if val in FUNCTIONS or (self.names is not None and val not in self.names):
                raise UnknownIdentifier(val, pos)
            return Sym(val)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse_expr(source: str, chart=None) -> Expr:
    """Parse ``source`` into an expression tree.

    ``chart`` may be a Chart or any iterable of coordinate names; when given,
    every identifier must be one of them.  ``-x^2`` means ``-(x^2)``.
    """
    return _Parser(str(source), _names_of(chart)).parse()


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------


def _const_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _is_negative(e):
    if isinstance(e, Const):
        return e.value < 0
    return isinstance(e, Mul) and bool(e.factors) and isinstance(e.factors[0], Const) \
        and e.factors[0].value < 0


def _mul_str(factors):
    parts = []
    for i, f in enumerate(factors):
        if isinstance(f, (Add, Mul)):
            s = f"({to_string(f)})"
        elif isinstance(f, Div) and i > 0:
            s = f"({to_string(f)})"
        elif isinstance(f, Const) and i > 0 and (f.value < 0 or f.value.denominator != 1):
            s = f"({_const_str(f.value)})"
        else:
            s = to_string(f)
        parts.append(s)
    return "*".join(parts)


def to_string(e: Expr) -> str:
    """Render in the parser's grammar; ``parse_expr(to_string(e)) == e``."""
    if isinstance(e, Const):
        return _const_str(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Pow):
        b = e.base
        if isinstance(b, (Sym, Func)) or (isinstance(b, Const) and b.value >= 0
                                          and b.value.denominator == 1):
            bs = to_string(b)
        else:
            bs = f"({to_string(b)})"
        return f"{bs}^{e.exp}"
    if isinstance(e, Div):
        n, d = e.num, e.den
        ns = f"({to_string(n)})" if isinstance(n, Add) or _is_negative(n) else to_string(n)
        if isinstance(d, (Add, Mul, Div)) or (isinstance(d, Const) and
                                              (d.value < 0 or d.value.denominator != 1)):
            ds = f"({to_string(d)})"
        else:
            ds = to_string(d)
        return f"{ns}/{ds}"
    if isinstance(e, Mul):
        fs = e.factors
        if len(fs) >= 2 and isinstance(fs[0], Const) and fs[0].value == -1:
            rest = fs[1:]
            if not isinstance(rest[0], Const) and not (len(rest) == 1 and isinstance(rest[0], Mul)):
                return "-" + _mul_str(rest)
        return _mul_str(fs)
    if isinstance(e, Add):
        out = []
        for i, t in enumerate(e.terms):
            if isinstance(t, Add):
                s = f"({to_string(t)})"
                out.append(s if i == 0 else " + " + s)
            elif i == 0:
                out.append(to_string(t))
            elif _is_negative(t):
                out.append(" - " + _negated_string(t))
            else:
                out.append(" + " + to_string(t))
        return "".join(out)
    raise TypeError(f"unknown node {e!r}")


def _negated_string(t):
    """String for ``-t`` where ``t`` is a negative Const or Mul; reparses to ``t`` after '-'."""
    if isinstance(t, Const):
        return _const_str(-t.value)
    c = -t.factors[0].value
    rest = t.factors[1:]
    if c == 1:
        if isinstance(rest[0], Const) or (len(rest) == 1 and isinstance(rest[0], Mul)):
            return _mul_str((ONE,) + rest)
        return _mul_str(rest)
    return _mul_str((Const(c),) + rest)


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------


def _sort_key(e):
    return str(e)


def _split_coeff(term):
    if isinstance(term, Const):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        return term.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), term


def _scale(c: Fraction, rest: Expr) -> Expr:
    if rest == ONE:
        return Const(c)
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    return Mul((Const(c), rest))


def _add_terms(terms):
    coeffs = {}
    order = []
    stack = list(terms)
    flat = []
    while stack:
        t = stack.pop(0)
        if isinstance(t, Add):
            stack[0:0] = list(t.terms)
        else:
            flat.append(t)
    for t in flat:
        c, rest = _split_coeff(t)
        if c == 0:
            continue
        if rest in coeffs:
            coeffs[rest] += c
        else:
            coeffs[rest] = c
            order.append(rest)
    out = [_scale(coeffs[r], r) for r in order if coeffs[r] != 0]
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda t: (isinstance(t, Const), _sort_key(_split_coeff(t)[1])))
    return Add(out)


def _mul_factors(factors):
    coeff = Fraction(1)
    powers = {}
    order = []
    dens = []

    def push(base, n):
        if base in powers:
            powers[base] += n
        else:
            powers[base] = n
            order.append(base)

    stack = list(factors)
    while stack:
        f = stack.pop()
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Mul):
            stack.extend(f.factors)
        elif isinstance(f, Pow):
            push(f.base, f.exp)
        elif isinstance(f, Div):
            stack.append(f.num)
            dens.append(f.den)
        else:
            push(f, 1)
    if coeff == 0:
        return ZERO
    if dens:
        num = _mul_factors([Const(coeff)] + [Pow(b, powers[b]) for b in order])
        return _divide(num, _mul_factors(dens))
    sums = []
    plain = []
    for b in order:
        n = powers[b]
        if n == 0:
            continue
        if isinstance(b, Add) and 0 < n <= MAX_EXPAND_POWER:
            sums.extend([b] * n)
        elif isinstance(b, Const):
            coeff *= b.value ** n
        else:
            plain.append(b if n == 1 else Pow(b, n))
    if sums:
        expanded = [_scale(coeff, _assemble(plain))]
        for s in sums:
            expanded = [_mul_factors([a, t]) for a in expanded for t in s.terms]
        return _add_terms(expanded)
    return _scale(coeff, _assemble(plain))


def _assemble(plain):
    if not plain:
        return ONE
    if len(plain) == 1:
        return plain[0]
    return Mul(sorted(plain, key=_sort_key))


def _power(b, n):
    if n == 0:
        return ONE
    if n == 1:
        return b
    if isinstance(b, Const):
        if b.value == 0 and n < 0:
            return Pow(b, n)
        return Const(b.value ** n)
    if isinstance(b, Pow):
        return _power(b.base, b.exp * n)
    if isinstance(b, Mul):
        return _mul_factors([_power(f, n) for f in b.factors])
    if isinstance(b, Div):
        if n > 0:
            return _divide(_power(b.num, n), _power(b.den, n))
        return _divide(_power(b.den, -n), _power(b.num, -n))
    if isinstance(b, Add) and 0 < n <= MAX_EXPAND_POWER:
        return _mul_factors([b] * n)
    return Pow(b, n)


def _has_sum(e):
    if isinstance(e, Add):
        return True
    if isinstance(e, Pow):
        return isinstance(e.base, Add)
    if isinstance(e, Mul):
        return any(_has_sum(f) for f in e.factors)
    return isinstance(e, Div)


def _divide(a, b):
    if isinstance(b, Const):
        if b.value == 0:
            return Div(a, b)
        return _mul_factors([Const(1 / b.value), a])
    if a == b:
        return ONE
    if isinstance(a, Const) and a.value == 0:
        return ZERO
    if isinstance(a, Div):
        return _divide(a.num, _mul_factors([a.den, b]))
    if isinstance(b, Div):
        return _divide(_mul_factors([a, b.den]), b.num)
    if not _has_sum(b):
        return _mul_factors([a, _power(b, -1)])
    # pull a rational coefficient out of the denominator
    c, rest = _split_coeff(b)
    if c != 1 and not isinstance(rest, Const):
        return _divide(_mul_factors([Const(1 / c), a]), rest)
    return Div(a, b)


def _func(name, a):
    if isinstance(a, Const):
        v = a.value
        if v == 0 and name in ("sin", "sqrt"):
            return ZERO
        if v == 0 and name in ("cos", "exp"):
            return ONE
        if name == "sqrt" and v > 0:
            rn, rd = math.isqrt(v.numerator), math.isqrt(v.denominator)
            if rn * rn == v.numerator and rd * rd == v.denominator:
                return Const(Fraction(rn, rd))
    return Func(name, a)


def _simplify_once(e):
    if isinstance(e, (Const, Sym)):
        return e
    if isinstance(e, Func):
        return _func(e.name, simplify(e.arg))
    if isinstance(e, Pow):
        return _power(simplify(e.base), e.exp)
    if isinstance(e, Div):
        return _divide(simplify(e.num), simplify(e.den))
    if isinstance(e, Add):
        return _add_terms([simplify(t) for t in e.terms])
    if isinstance(e, Mul):
        return _mul_factors([simplify(f) for f in e.factors])
    raise TypeError(f"unknown node {e!r}")


def simplify(e: Expr) -> Expr:
    """Fold constants, drop identities, expand products of sums, collect like terms.

    Idempotent: the result is iterated to a fixed point and cached on the node.
    """
    e = as_expr(e)
    if e._simple is not None:
        return e._simple
    cur = e
    for _ in range(8):
        nxt = _simplify_once(cur)
        if nxt == cur:
            break
        cur = nxt
    cur._simple = cur
    e._simple = cur
    return cur


# ---------------------------------------------------------------------------
# calculus and evaluation
# ---------------------------------------------------------------------------


def _diff(e, x):
    if x not in e.free_symbols:
        return ZERO
    if isinstance(e, Sym):
        return ONE
    if isinstance(e, Add):
        return Add([_diff(t, x) for t in e.terms])
    if isinstance(e, Mul):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            if x in f.free_symbols:
                terms.append(Mul(fs[:i] + (_diff(f, x),) + fs[i + 1:]))
        return Add(terms)
    if isinstance(e, Pow):
        return Mul((Const(e.exp), Pow(e.base, e.exp - 1), _diff(e.base, x)))
    if isinstance(e, Div):
        a, b = e.num, e.den
        return Div(Add((Mul((_diff(a, x), b)), negate(Mul((a, _diff(b, x)))))), Pow(b, 2))
    if isinstance(e, Func):
        da = _diff(e.arg, x)
        if e.name == "sin":
            return Mul((Func("cos", e.arg), da))
        if e.name == "cos":
            return Mul((MINUS_ONE, Func("sin", e.arg), da))
        if e.name == "exp":
            return Mul((e, da))
        return Div(da, Mul((Const(2), e)))
    raise TypeError(f"unknown node {e!r}")


def diff(e: Expr, coord: str, chart=None) -> Expr:
    """Exact partial derivative with respect to ``coord``, simplified."""
    names = _names_of(chart)
    if names is not None and coord not in names:
        raise UnknownIdentifier(coord)
    return simplify(_diff(as_expr(e), coord))


def substitute(e: Expr, mapping) -> Expr:
    """Replace symbols by expressions (raw tree; call simplify afterwards)."""
    if isinstance(e, Sym):
        v = mapping.get(e.name)
        return e if v is None else as_expr(v)
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return Add([substitute(t, mapping) for t in e.terms])
    if isinstance(e, Mul):
        return Mul([substitute(f, mapping) for f in e.factors])
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exp)
    if isinstance(e, Div):
        return Div(substitute(e.num, mapping), substitute(e.den, mapping))
    return Func(e.name, substitute(e.arg, mapping))


def rename(e: Expr, mapping) -> Expr:
    return substitute(e, {k: Sym(v) for k, v in mapping.items()})


_FLOAT_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


def eval_at(e: Expr, point) -> float:
    """IEEE double evaluation at ``point`` (a name -> value mapping)."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(point[e.name])
        except KeyError:
            raise EvaluationError(f"no value for coordinate {e.name!r}") from None
    if isinstance(e, Add):
        return math.fsum(eval_at(t, point) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= eval_at(f, point)
        return out
    if isinstance(e, Pow):
        b = eval_at(e.base, point)
        if b == 0.0 and e.exp < 0:
            raise EvaluationError(f"division by zero in {e}", expr=str(e))
        try:
            return b ** e.exp
        except OverflowError:
            raise EvaluationError(f"overflow in {e}") from None
    if isinstance(e, Div):
        d = eval_at(e.den, point)
        if d == 0.0:
            raise EvaluationError(f"division by zero in {e}", expr=str(e))
        return eval_at(e.num, point) / d
    a = eval_at(e.arg, point)
    if e.name == "sqrt":
        if a < 0:
            raise EvaluationError(f"sqrt of negative value {a!r}", expr=str(e))
        return math.sqrt(a)
    try:
        return _FLOAT_FUNCS[e.name](a)
    except OverflowError:
        raise EvaluationError(f"overflow in {e}") from None


def _rng_for(e: Expr):
    return np.random.default_rng([options().seed, zlib.crc32(str(e).encode())])


def sample_values(e: Expr, n_points: int, rng=None, names=None, budget_factor=20):
    """Evaluate ``e`` at ``n_points`` uniform points of [-1, 1]^k.

    Returns (points, values, subterm_magnitudes, names); points where the
    evaluation fails are resampled until the budget is exhausted.
    """
    from .kernels import compile_expr, eval_batch

    names = tuple(sorted(e.free_symbols)) if names is None else tuple(names)
    rng = _rng_for(e) if rng is None else rng
    prog = compile_expr(e, names)
    pts = np.empty((0, len(names)))
    vals = np.empty(0)
    mags = np.empty(0)
    budget = budget_factor * n_points
    while len(vals) < n_points:
        need = n_points - len(vals)
        if budget < need:
            raise ZeroTestError(f"evaluation failed too often while sampling {e}")
        budget -= need
        cand = rng.uniform(-1.0, 1.0, size=(need, len(names)))
        v, m = eval_batch(prog, cand)
        ok = np.isfinite(v) & np.isfinite(m)
        pts = np.vstack([pts, cand[ok]])
        vals = np.concatenate([vals, v[ok]])
        mags = np.concatenate([mags, m[ok]])
    return pts, vals, mags, names


def is_zero(e: Expr, trials: int | None = None, tol: float | None = None) -> bool:
    """Probabilistic identity test.

    A ``False`` answer is certain (a witness point exists); ``True`` is a
    heuristic backed by ``trials`` random points in [-1, 1]^n.
    """
    opts = options()
    trials = opts.trials if trials is None else trials
    tol = opts.tol if tol is None else tol
    if trials < 1:
        raise ValueError("trials must be >= 1")
    e = simplify(e)
    if isinstance(e, Const):
        return e.value == 0
    _, vals, mags, _ = sample_values(e, trials)
    return bool(np.all(np.abs(vals) <= tol * (1.0 + mags)))
