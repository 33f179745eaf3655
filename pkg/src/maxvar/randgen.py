"""Random expressions and forms for property tests, acceptance corpora and benchmarks."""

import itertools
from fractions import Fraction

from . import symexpr as sx
from .extcalc import DiffForm


def random_form(chart, degree, rng, n_terms=2, max_deg=2, funcs=True, coeff_scale=1):
    """A random sparse form with polynomial (optionally transcendental) coefficients."""
    combos = list(itertools.combinations(range(chart.n), degree))
    picks = rng.choice(len(combos), size=min(n_terms, len(combos)), replace=False)
    terms = {}
    for p in picks:
        terms[combos[p]] = random_expr(chart.coords, rng, max_deg=max_deg, funcs=funcs,
                                       scale=coeff_scale)
    return DiffForm(chart, degree, terms)


def random_expr(names, rng, max_deg=2, n_mono=3, funcs=True, scale=1):
    """A random polynomial in ``names`` plus, optionally, one transcendental factor."""
    terms = []
    for _ in range(n_mono):
        c = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4))) * scale
        if c == 0:
            continue
        powers = rng.integers(0, max_deg + 1, size=len(names))
        while powers.sum() > max_deg:
            powers[rng.integers(len(names))] = 0
        fs = [sx.Const(c)] + [sx.Pow(sx.Sym(n), int(k)) for n, k in zip(names, powers) if k]
        terms.append(sx.Mul(fs))
    e = sx.Add(terms) if terms else sx.Const(1)
    if funcs and rng.random() < 0.3:
        f = ("sin", "cos", "exp")[int(rng.integers(3))]
        e = sx.Mul((e, sx.Func(f, sx.Sym(names[int(rng.integers(len(names)))]))))
    return sx.simplify(e)
