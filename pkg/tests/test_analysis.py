"""Thresholds, equilibria, stability, sensitivities, and the special function."""
import math

import numpy as np
import pytest

from ebofrac.analysis import (
    RootFindingError,
    disease_free_equilibrium,
    endemic_equilibrium,
    endemic_gap,
    jacobian,
    mittag_leffler,
    ngm_matrices,
    r0_closed_form,
    r0_spectral,
    sensitivity_indices,
    stability_check,
    susceptibility_factor,
)
from ebofrac.model import rhs_uncontrolled
from ebofrac.params import ModelParams

from reference import (
    ML_CONSTANTS,
    R0_NOMINAL,
    R0_NO_VACCINATION_NO_HOSPITAL,
    SENSITIVITY_REFERENCE,
    draw_params,
    explicit_v_inverse,
)

RNG = np.random.default_rng(915)


# -- disease-free equilibrium ------------------------------------------------

def test_dfe_is_a_fixed_point():
    for _ in range(20):
        p = draw_params(RNG)
        dfe = disease_free_equilibrium(p)
        assert dfe.kind == "disease-free"
        assert dfe.lambda_star == 0.0
        assert dfe.residual(p) < 1e-8 * max(1.0, p.Lambda / p.mu)


def test_dfe_total_population_is_demographic_limit():
    for _ in range(20):
        p = draw_params(RNG)
        y = disease_free_equilibrium(p).state
        assert y.S + y.V == pytest.approx(p.Lambda / p.mu, rel=1e-12)
        assert y.E == y.Is == y.Ia == y.H == y.D == y.R == 0.0


def test_susceptibility_factor_formula_and_range():
    for _ in range(20):
        p = draw_params(RNG)
        psi = susceptibility_factor(p)
        expected = (p.q1 + (1.0 - p.epsilon) * p.v) / (p.q1 + p.v)
        assert psi == pytest.approx(expected, rel=1e-14)
        assert 0.0 < psi <= 1.0
        # effective susceptible pool at the disease-free point
        y = disease_free_equilibrium(p).state
        assert y.S + (1.0 - p.epsilon) * y.V == pytest.approx(
            psi * p.Lambda / p.mu, rel=1e-10)


def test_perfect_vaccine_still_leaves_waned_susceptibles():
    p = ModelParams(epsilon=1.0)
    psi = susceptibility_factor(p)
    assert 0.0 < psi < 1.0
    assert psi == pytest.approx(p.q1 / (p.q1 + p.v), rel=1e-14)


# -- next-generation structure ----------------------------------------------

def test_ngm_new_infections_only_in_exposed_row():
    for _ in range(10):
        p = draw_params(RNG)
        ngm = ngm_matrices(p)
        psi = susceptibility_factor(p)
        expected_row = np.array([0.0, p.beta * psi, p.beta * p.eta_a * psi,
                                 0.0, p.beta * p.eta_d * psi])
        assert np.allclose(ngm.F[0], expected_row, rtol=1e-13)
        assert np.array_equal(ngm.F[1:], np.zeros((4, 5)))
        assert ngm.psi == psi


def test_ngm_transition_matrix_inverse_closed_form():
    """V times the hand-derived occupancy inverse must give the identity."""
    for _ in range(10):
        p = draw_params(RNG)
        ngm = ngm_matrices(p)
        inv = explicit_v_inverse(p)
        assert np.allclose(ngm.V @ inv, np.eye(5), atol=1e-12)
        assert np.allclose(inv @ ngm.V, np.eye(5), atol=1e-12)


def test_r0_closed_form_equals_spectral_radius():
    for _ in range(30):
        p = draw_params(RNG)
        assert r0_closed_form(p) == pytest.approx(r0_spectral(p), rel=1e-10)


def test_r0_closed_form_equals_explicit_ngm_product():
    """Spectral radius of F V^-1 with the independent inverse."""
    for _ in range(10):
        p = draw_params(RNG)
        ngm = ngm_matrices(p)
        K = ngm.F @ explicit_v_inverse(p)
        rho = max(abs(np.linalg.eigvals(K)))
        assert r0_closed_form(p) == pytest.approx(rho, rel=1e-12)


def test_r0_frozen_values():
    assert r0_closed_form(ModelParams()) == pytest.approx(R0_NOMINAL, rel=1e-13)
    assert r0_closed_form(ModelParams(v=0.0, h_s=0.0)) == pytest.approx(
        R0_NO_VACCINATION_NO_HOSPITAL, rel=1e-13)


def test_r0_scales_linearly_in_beta():
    p = ModelParams()
    assert r0_closed_form(p.replace(beta=2.0 * p.beta)) == pytest.approx(
        2.0 * r0_closed_form(p), rel=1e-12)


# -- endemic equilibrium -----------------------------------------------------

def test_endemic_absent_below_threshold():
    assert endemic_equilibrium(ModelParams()) is None


def test_endemic_gap_at_zero_reproduces_r0():
    for _ in range(20):
        p = draw_params(RNG)
        assert endemic_gap(p, 0.0) + 1.0 == pytest.approx(
            r0_closed_form(p), rel=1e-10)


def test_endemic_point_when_supercritical():
    found = 0
    for _ in range(40):
        p = draw_params(RNG)
        if r0_closed_form(p) <= 1.0:
            assert endemic_equilibrium(p) is None
            continue
        ee = endemic_equilibrium(p)
        assert ee is not None and ee.kind == "endemic"
        assert ee.lambda_star > 0.0
        assert ee.residual(p) < 1e-8 * max(1.0, p.Lambda / p.mu)
        assert abs(endemic_gap(p, ee.lambda_star)) < 1e-10
        y = ee.state.as_array()
        assert np.all(y > 0.0)
        found += 1
    assert found >= 5  # the box is wide enough that growth is common


def test_endemic_infection_level_rises_with_beta():
    p = ModelParams(v=0.0, h_s=0.0)
    lo = endemic_equilibrium(p)
    hi = endemic_equilibrium(p.replace(beta=1.5 * p.beta))
    assert hi.lambda_star > lo.lambda_star
    assert hi.state.Is > lo.state.Is


# -- jacobian and stability --------------------------------------------------

def test_jacobian_first_order_prediction():
    p = ModelParams()
    y = np.array([9e5, 3e4, 40.0, 25.0, 12.0, 8.0, 5.0, 1e4])
    J = jacobian(p, y)
    rng = np.random.default_rng(42)
    for _ in range(5):
        dy = rng.uniform(-1.0, 1.0, size=8)
        f0 = rhs_uncontrolled(0.0, y, p)
        f1 = rhs_uncontrolled(0.0, y + dy, p)
        assert np.allclose(f1 - f0, J @ dy, rtol=5e-4, atol=5e-5)


def test_jacobian_column_sums_are_loss_rates():
    """Conservation: total flux responds only through mu and the burial rate."""
    p = ModelParams()
    y = np.array([8e5, 1e5, 100.0, 60.0, 30.0, 20.0, 15.0, 5e4])
    J = jacobian(p, y)
    sums = J.sum(axis=0)
    for i in range(8):
        expected = -p.mu_d if i == 6 else -p.mu
        assert sums[i] == pytest.approx(expected, abs=1e-7)


def test_dfe_stability_tracks_r0():
    nom = ModelParams()
    assert r0_closed_form(nom) < 1.0
    res = stability_check(disease_free_equilibrium(nom), nom)
    assert res.verdict == "stable"
    assert res.threshold == pytest.approx(nom.alpha * math.pi / 2.0, rel=1e-15)
    assert res.margin > 0.0
    assert len(res.eigenvalues) == 8

    growth = ModelParams(v=0.0, h_s=0.0)
    assert r0_closed_form(growth) > 1.0
    res = stability_check(disease_free_equilibrium(growth), growth)
    assert res.verdict == "unstable"
    assert res.margin < 0.0


def test_endemic_stability_when_it_exists():
    growth = ModelParams(v=0.0, h_s=0.0)
    ee = endemic_equilibrium(growth)
    res = stability_check(ee, growth)
    assert res.verdict == "stable"


def test_stability_margin_consistent_with_eigenvalues():
    p = ModelParams()
    res = stability_check(disease_free_equilibrium(p), p)
    args = np.abs(np.angle(res.eigenvalues))
    assert res.margin == pytest.approx(args.min() - res.threshold, rel=1e-12)


def test_fractional_order_widens_stability_region():
    """Same Jacobian, smaller alpha, larger margin."""
    p1 = ModelParams(alpha=1.0)
    p2 = ModelParams(alpha=0.6)
    m1 = stability_check(disease_free_equilibrium(p1), p1).margin
    m2 = stability_check(disease_free_equilibrium(p2), p2).margin
    assert m2 > m1


# -- sensitivity indices -----------------------------------------------------

def test_sensitivity_matches_high_precision_reference():
    report = sensitivity_indices(ModelParams())
    assert report.r0 == pytest.approx(R0_NOMINAL, rel=1e-12)
    assert set(report.indices) == set(SENSITIVITY_REFERENCE)
    for name, ref in SENSITIVITY_REFERENCE.items():
        assert report.indices[name] == pytest.approx(ref, rel=1e-6, abs=1e-9), name


def test_sensitivity_signs_and_classes():
    report = sensitivity_indices(ModelParams())
    assert report.sign("beta") == 1
    assert report.sign("epsilon") == -1
    assert report.sign("Lambda") == 0
    assert report.magnitude_class("beta") == "very high"
    assert report.magnitude_class("epsilon") == "very high"
    assert report.magnitude_class("eta_d") == "high"
    assert report.magnitude_class("omega") == "moderate"
    assert report.magnitude_class("gamma_s") == "low"
    assert report.magnitude_class("sigma") == "very low"


def test_sensitivity_to_dict_and_csv(tmp_path):
    report = sensitivity_indices(ModelParams())
    doc = report.to_dict()
    assert doc["R0"] == report.r0
    assert doc["indices"]["beta"]["sign"] == 1
    path = tmp_path / "sens.csv"
    report.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "parameter,index"
    assert len(lines) == 1 + len(report.indices)
    loaded = {row.split(",")[0]: float(row.split(",")[1]) for row in lines[1:]}
    assert loaded == pytest.approx(report.indices)


def test_sensitivity_beta_index_is_exactly_one_structurally():
    """R0 is proportional to beta, so its normalized index is 1 up to
    differencing error at any admissible parameter point."""
    for _ in range(5):
        p = draw_params(RNG)
        report = sensitivity_indices(p)
        assert report.indices["beta"] == pytest.approx(1.0, abs=1e-9)


def test_sensitivity_burial_mirrors_deceased_transmission():
    """eta_d and mu_d enter R0 only through eta_d/mu_d, so their indices
    are exact negatives."""
    report = sensitivity_indices(ModelParams())
    assert report.indices["eta_d"] == pytest.approx(
        -report.indices["mu_d"], rel=1e-9)


# -- Mittag-Leffler ----------------------------------------------------------

def test_ml_reduces_to_exponential():
    for x in (-3.0, -1.0, 0.5, 1.0, 4.0):
        assert mittag_leffler(1.0, 1.0, x) == pytest.approx(math.exp(x), rel=1e-12)


def test_ml_classical_identities():
    # E_{2,1}(z) = cosh(sqrt(z))
    assert mittag_leffler(2.0, 1.0, 1.0) == pytest.approx(math.cosh(1.0), rel=1e-12)
    # E_{1,2}(z) = (e^z - 1)/z
    assert mittag_leffler(1.0, 2.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-12)
    # z = 0 collapses to 1/Gamma(beta)
    assert mittag_leffler(0.7, 1.3, 0.0) == pytest.approx(
        1.0 / math.gamma(1.3), rel=1e-14)


def test_ml_frozen_reference_values():
    for a, b, z, ref in ML_CONSTANTS:
        assert mittag_leffler(a, b, z) == pytest.approx(ref, rel=1e-9), (a, b, z)


def test_ml_monotone_decay_on_negative_axis():
    values = [mittag_leffler(0.85, 1.0, -x) for x in np.linspace(0.0, 40.0, 81)]
    assert values[0] == pytest.approx(1.0, rel=1e-14)
    assert all(v > 0.0 for v in values)
    assert all(a > b for a, b in zip(values, values[1:]))


def test_ml_large_positive_argument_overflows_to_inf():
    assert math.isinf(mittag_leffler(0.5, 1.0, 1e6))


def test_root_finding_error_is_exported():
    assert issubclass(RootFindingError, RuntimeError)
