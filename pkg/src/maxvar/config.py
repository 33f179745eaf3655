"""Engine-wide sampling options.

Options live in a ContextVar so concurrent callers can override them locally
without touching shared state.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class EngineOptions:
    trials: int = 25          # points per probabilistic zero test
    tol: float = 1e-9         # relative zero-test tolerance
    seed: int = 0
    samples: int = 200        # points for "nowhere zero" certification
    strict: bool = False      # disable coefficient pruning
    rank_rtol: float = 1e-8   # numeric-rank threshold, relative to largest singular value


_current = ContextVar("maxvar_options", default=EngineOptions())


def options() -> EngineOptions:
    return _current.get()


@contextmanager
def using(**overrides):
    """Temporarily override engine options, e.g. ``with using(seed=3): ...``."""
    token = _current.set(replace(_current.get(), **overrides))
    try:
        yield _current.get()
    finally:
        _current.reset(token)
