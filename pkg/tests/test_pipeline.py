import math

import numpy as np
import pytest

from gradrobust.pipeline import (error_report, load_mode, sample_grid, solve_problem, spaces,
                                 unit_mesh)
from gradrobust.problems import example_gradient_cubic, example_incompressible


def test_element_pairs():
    V, Q = spaces(unit_mesh(2), "q2_q1")
    assert Q.kind.family == "q" and Q.degree == 1
    with pytest.raises(ValueError):
        spaces(unit_mesh(2), "p2_p1")


def test_robust_needs_discontinuous_pressure():
    with pytest.raises(ValueError):
        load_mode("robust", "q2_q1")
    with pytest.raises(ValueError):
        load_mode("fancy", "q2_dgp1")


def test_error_report_fields():
    pb = example_incompressible(1.0)
    sol = solve_problem(pb, unit_mesh(4))
    rep = error_report(pb, sol)
    assert rep.h == 0.25 and rep.dofs == 2 * 81 + 48
    assert rep.constitutive_residual == rep.div_residual <= 1e-10
    assert rep.solver_residual <= 1e-10
    assert rep.err_h1 >= rep.err_h1_semi >= 0


def test_robust_and_naive_agree_without_gradient_part():
    # a load with no irrotational part: both methods converge to the same field
    pb = example_incompressible(1.0)
    a = error_report(pb, solve_problem(pb, unit_mesh(8), "q2_dgp1", "robust")).err_h1
    b = error_report(pb, solve_problem(pb, unit_mesh(8), "q2_dgp1", "naive")).err_h1
    assert a == pytest.approx(b, rel=0.2)


def test_gradient_load_robustness_gap():
    pb = example_gradient_cubic(1e-5, 1e3)
    robust = error_report(pb, solve_problem(pb, unit_mesh(4))).norm_u_h1
    naive = error_report(pb, solve_problem(pb, unit_mesh(4), "q2_dgp1", "naive")).norm_u_h1
    assert naive > 100 * robust


def test_sample_grid():
    sol = solve_problem(example_incompressible(1.0), unit_mesh(4))
    grid = sample_grid(sol.u_h, 5)
    assert grid.shape == (25, 4)
    np.testing.assert_allclose(grid[:5, 0], np.linspace(0, 1, 5))
    assert np.abs(grid[[0, 4, 20, 24], 2:]).max() == 0.0
