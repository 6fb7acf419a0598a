"""Process-wide numeric tolerance.

The default is 1e-9. The ``BALPOLY_TOL`` environment variable overrides it at
import time, and :func:`tolerance` overrides it for a block of code.
"""
import os
from contextlib import contextmanager

DEFAULT_TOL = 1e-9
ENV_VAR = "BALPOLY_TOL"


def _initial() -> float:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return DEFAULT_TOL
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive float, got {raw!r}") from None
    if not value > 0:
        raise ValueError(f"{ENV_VAR} must be positive, got {raw!r}")
    return value


_state = {"tol": _initial()}


def get_tol() -> float:
    return _state["tol"]


def set_tol(value: float) -> None:
    if not value > 0:
        raise ValueError("tolerance must be positive")
    _state["tol"] = float(value)


@contextmanager
def tolerance(value: float):
    old = get_tol()
    set_tol(value)
    try:
        yield
    finally:
        _state["tol"] = old
