import numpy as np
import pytest

from hcurl_ife.assembly import Discretization
from hcurl_ife.diagnostics import (
    INFSUP_CRITICAL_CONTRAST,
    TOLERANCES,
    CheckResult,
    geometric_violations,
    infsup_grid,
    element_residuals,
    ife_standard_gap,
    mesh_residuals,
    random_element_suite,
    random_right_cut,
    run_checks,
    unisolvence_sweep,
)
from hcurl_ife.geometry import Circle
from hcurl_ife.ife import CoefficientPair
from hcurl_ife.mesh import build_uniform_triangulation

from conftest import EXPERIMENT_SETS

CIRCLE = Circle(np.pi / 5)


def test_check_line_format():
    assert CheckResult("x", 1e-13, 1e-12, True).line().startswith("PASS x: worst=1.000e-13")
    assert CheckResult("x", 1.0, 0.0, False, "why").line().endswith("why")


def test_element_residuals_within_tolerance(rng):
    for _ in range(200):
        cut, coeff = random_right_cut(rng)
        res = element_residuals(cut, coeff, rng=rng)
        for key, tol in TOLERANCES.items():
            if key in res:
                assert res[key] <= tol, key
        assert res["unisolvence_a"] >= -1e-12 and res["unisolvence_b"] >= -1e-12


def test_random_suite_small():
    worst = random_element_suite(300, seed=3)
    assert worst["kronecker"] <= 1e-11 and worst["ct_round_trip"] <= 1e-13
    assert unisolvence_sweep(300, seed=3) >= -1e-12


def test_random_suite_reproducible():
    assert random_element_suite(50, seed=9) == random_element_suite(50, seed=9)


@pytest.mark.parametrize("coeff", EXPERIMENT_SETS)
def test_mesh_residuals(coeff):
    disc = Discretization(build_uniform_triangulation(16), CIRCLE, coeff)
    res = mesh_residuals(disc)
    for key, tol in TOLERANCES.items():
        if key in res:
            assert res[key] <= tol, key
    assert res["pg_curl_equals_galerkin_global"] <= 1e-12
    assert geometric_violations(disc)[0] == 0


def test_infsup_grid_ranges():
    r = infsup_grid(100)
    assert r["violation"] <= 1e-12
    assert np.isclose(r["lambda1_min"], (5 - 3 * np.sqrt(3)) / 8, atol=1e-3)
    assert np.isclose(r["lambda2_max"], 1.0)


def test_infsup_sign_change_near_critical_contrast():
    assert np.isclose(INFSUP_CRITICAL_CONTRAST, 41.785, atol=1e-3)
    assert infsup_grid(100, rho=41.5)["inner_min"] > 0
    assert infsup_grid(100, rho=42.2)["inner_min"] < 0


def test_matched_gap_is_zero():
    assert ife_standard_gap(build_uniform_triangulation(16), CIRCLE) <= 1e-12


def test_run_checks_passes_with_expected_sign_change():
    res = run_checks(16, CIRCLE, CoefficientPair(1.0, 0.1, 1.0, 50.0), n_random=200)
    assert all(c.passed for c in res), [c.line() for c in res if not c.passed]
    pos = [c for c in res if c.name == "infsup_positivity_prediction"][0]
    assert pos.worst < 0
