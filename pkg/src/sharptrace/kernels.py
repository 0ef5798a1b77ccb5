"""Hot kernels: the compiled extension when importable, else the Python reference.

Set ``SHARPTRACE_PURE_PYTHON=1`` to force the fallback (benchmarks and tests
use it to compare the two).
"""

from __future__ import annotations

import os

from . import _pykernels

__all__ = ["BACKEND", "available", "backend", "transport_simplex", "ag_gaps", "pricing_block"]

_impl = _pykernels
BACKEND = "python"
if os.environ.get("SHARPTRACE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def available() -> list[str]:
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def backend(name: str | None = None):
    """The kernel module for ``name`` ("cython" or "python"); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def transport_simplex(C, supply, demand, max_iter: int, tol: float):
    return _impl.transport_simplex(C, supply, demand, int(max_iter), float(tol))


def ag_gaps(eigs, a: float):
    return _impl.ag_gaps(eigs, float(a))


def pricing_block(m: int, n: int) -> int:
    return _impl.pricing_block(m, n)
