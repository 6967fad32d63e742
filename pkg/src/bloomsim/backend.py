"""Stepper backend selection.

The time stepper has two implementations with identical call semantics: a
Cython extension (built at install time when a compiler is around) and a
numpy fallback.  ``auto`` prefers the compiled one.  Results are bitwise
reproducible per backend but only agree to rounding between the two, so run
manifests record the resolved name and replays refuse a silent switch.

Override order: explicit argument, then the BLOOMSIM_BACKEND environment
variable, then ``auto``.
"""
from __future__ import annotations

import os

from .errors import ConfigError

__all__ = ["available_backends", "resolve_backend", "get_run_chunk"]

_CHOICES = ("auto", "cython", "python")


def available_backends() -> list[str]:
    """Usable backend names, preferred first."""
    out = ["python"]
    try:
        from . import _stepper  # noqa: F401
        out.insert(0, "cython")
    except ImportError:
        pass
    return out


def resolve_backend(requested: str | None = None) -> str:
    """Map a request (or the environment default) to a concrete backend."""
    req = requested if requested is not None else os.environ.get("BLOOMSIM_BACKEND", "auto")
    if req not in _CHOICES:
        raise ConfigError(
            [f"unknown backend {req!r}; choose one of {', '.join(_CHOICES)}"]
        )
    avail = available_backends()
    if req == "auto":
        return avail[0]
    if req not in avail:
        raise ConfigError(
            [f"backend {req!r} requested but the compiled stepper is not importable"]
        )
    return req


def get_run_chunk(backend: str):
    """Fetch the chunk kernel for a resolved backend name."""
    if backend == "cython":
        from ._stepper import run_chunk
        return run_chunk
    if backend == "python":
        from ._stepper_py import run_chunk
        return run_chunk
    raise ConfigError([f"backend {backend!r} is not a concrete backend"])
