"""Sweep-kernel selection: compiled core when importable, numpy otherwise."""

from __future__ import annotations

from . import _psor_numpy

try:
    from . import _psor_core

    HAVE_COMPILED = True
except ImportError:  # extension not built; fallback is fully equivalent
    _psor_core = None
    HAVE_COMPILED = False


def available_backends() -> list[str]:
    return ["compiled", "numpy"] if HAVE_COMPILED else ["numpy"]


def default_backend() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"


def get_sweeper(backend: str | None = None):
    """Return (name, sweep callable).

    The compiled callable takes (indptr, indices, data, diag, rhs, x, order,
    clamp, relax); the numpy one additionally accepts matrix/color_slices
    keywords for its vectorized path.
    """
    if backend is None:
        backend = default_backend()
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but not built")
        return "compiled", _psor_core.psor_sweep
    if backend == "numpy":
        return "numpy", _psor_numpy.psor_sweep
    raise ValueError(f"unknown backend {backend!r}")
