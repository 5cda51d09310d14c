"""Numerical laboratory for the variable-coefficient Signorini problem.

Subpackages by theme: coeffs (matrix fields, deskewing frames), grid
(structured grids, sampled fields, SGF1 i/o), quadrature, exact (closed-form
solutions), solver (PSOR and the LCP oracle), symmetry, functionals (Weiss
and truncated frequency), fb (free-boundary extraction and classification),
cli.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    coeffs,
    config,
    exact,
    fb,
    fields,
    functionals,
    grid,
    presets,
    quadrature,
    solver,
    symmetry,
)
