"""Shared fixtures: solved problem ensembles and exact fields are expensive,
so they are session-scoped and built once."""

import numpy as np
import pytest

from thinobstacle.fb import coincidence_set, free_boundary
from thinobstacle.grid import Grid
from thinobstacle.presets import boundary_data, coefficient_preset
from thinobstacle.solver import SignoriniProblem, solve_psor


def ensemble_params(seed):
    """Deterministic double-well boundary data parameters per seed."""
    rng = np.random.default_rng(seed + 500)
    return {
        "a": rng.uniform(0.3, 0.4),
        "b": rng.uniform(0.7, 0.8),
        "s": rng.uniform(12.0, 18.0),
        "c0": rng.uniform(0.2, 0.35),
        "tilt": rng.uniform(-0.1, 0.1),
    }


def solve_ensemble_member(seed, m=257):
    A = coefficient_preset(f"var_diag:{seed}", 2)
    grid = Grid(2, m)
    bd = boundary_data("wells", 2, **ensemble_params(seed))
    prob = SignoriniProblem(A, grid, bd, name=f"ensemble:{seed}")
    sol = solve_psor(prob, tol=1e-10, relax=1.95)
    return A, sol


@pytest.fixture(scope="session")
def ensemble():
    """Three seeded variable-coefficient solved problems with their
    coincidence sets and free-boundary points."""
    out = []
    for seed in (1, 2, 3):
        A, sol = solve_ensemble_member(seed)
        cs = coincidence_set(sol)
        pts = free_boundary(cs)
        out.append({"seed": seed, "A": A, "solution": sol, "cs": cs,
                    "points": pts})
    return out


@pytest.fixture(scope="session")
def exact_regular_257():
    from thinobstacle.exact import exact_solution_field
    return exact_solution_field("regular", Grid(2, 257))


@pytest.fixture(scope="session")
def exact_singular_257():
    from thinobstacle.exact import exact_solution_field
    return exact_solution_field("polynomial", Grid(2, 257),
                                name="x1sq_minus_xnsq")


@pytest.fixture(scope="session")
def exact_super_257():
    from thinobstacle.exact import exact_solution_field
    return exact_solution_field("super", Grid(2, 257))
