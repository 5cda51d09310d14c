"""Configuration parsing and typed accessors."""

import numpy as np
import pytest

from thinobstacle.config import RunConfig, load_config, parse_config
from thinobstacle.errors import ConfigError


GOOD = """
# demo configuration
problem.n = 2
problem.m = 65
problem.A = var_diag:3
problem.drift = constant:1,0
problem.drift_p = 8
boundary.kind = humps
boundary.dimple = 0.6
solver.relax = 1.95
solver.tol = 1e-11
analysis.gauge_M = 0.005
output.dir = out
seed = 42
"""


def test_parse_types():
    cfg = parse_config(GOOD)
    assert cfg["problem.n"] == 2 and isinstance(cfg["problem.n"], int)
    assert cfg["solver.relax"] == 1.95
    assert cfg["solver.tol"] == 1e-11
    assert cfg["problem.A"] == "var_diag:3"
    assert cfg["boundary.dimple"] == 0.6
    assert cfg["seed"] == 42


def test_parse_bool_and_list():
    cfg = parse_config("solver.warm_start = false\nboundary.centers = -0.5, 0.5\n")
    assert cfg["solver.warm_start"] is False
    assert cfg["boundary.centers"] == (-0.5, 0.5)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("nonsense.key = 1\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError):
        parse_config("problem.n 2\n")


def test_run_config_builds_problem():
    rc = RunConfig(parse_config(GOOD))
    prob = rc.problem()
    assert prob.grid.n == 2 and prob.grid.m == 65
    assert prob.A.name == "var_diag:3"
    assert prob.drift is not None
    assert prob.drift_p == 8.0
    b = prob.drift(np.zeros((3, 2)))
    assert np.allclose(b, [[1.0, 0.0]] * 3)
    kw = rc.solver_kwargs()
    assert kw["relax"] == 1.95 and kw["tol"] == 1e-11
    assert rc.output_dir == "out"
    assert rc.seed == 42


def test_classify_config_passthrough():
    rc = RunConfig(parse_config("analysis.gauge_M = 0.01\n"
                                "analysis.band = 0.2\n"
                                "analysis.kappa0 = 6\n"))
    cc = rc.classify_config()
    assert cc.gauge_M == 0.01
    assert cc.band == 0.2
    assert cc.kappa0 == 6.0


def test_bad_drift_spec_is_config_error():
    rc = RunConfig(parse_config("problem.drift = constant:1,0,0\n"))
    with pytest.raises(ConfigError):
        rc.problem()


def test_load_config_round_trip(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(GOOD)
    rc = load_config(p)
    assert rc.m == 65
    assert rc.coefficients().name == "var_diag:3"
