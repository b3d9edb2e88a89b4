import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mildar.estimation import (
    ZeroDenominatorError,
    aggregates,
    estimate,
    estimate_rho,
    estimate_theta,
    residuals,
    rho_from_residuals,
    total,
)
from mildar.harness import run_property_suite
from mildar.model import ModelConfig, Regime, simulate


def test_hand_example_theta(hand_path):
    assert estimate_theta(hand_path) == pytest.approx(4.965125 / 2.3225, rel=1e-14)
    assert estimate_theta(hand_path) == pytest.approx(2.1378364, abs=1e-7)


def test_hand_example_aggregates(hand_path):
    agg = aggregates(hand_path)
    assert agg.P_n == pytest.approx(4.965125, rel=1e-14)
    assert agg.S_n_minus_1 == pytest.approx(2.3225, rel=1e-14)
    assert agg.S_n == pytest.approx(1 + 1.3225 + 3.3175**2, rel=1e-14)
    assert agg.L_n == 6.0
    assert agg.M_n == pytest.approx(1.3, rel=1e-14)
    assert agg.N_n == pytest.approx(2.0, rel=1e-14)
    assert agg.EV_n == pytest.approx(-0.9, rel=1e-13)
    # N_n = (M_n - EV_n) / theta_n
    assert agg.N_n == pytest.approx((agg.M_n - agg.EV_n) / 1.1, rel=1e-12)


def test_hand_example_rho(hand_path):
    # two-line calculation in exact arithmetic from the rounded theta_hat
    th = Fraction(4.965125) / Fraction(2.3225)
    x = [Fraction(0), Fraction(1), Fraction(1.15), Fraction(3.3175)]
    e = [Fraction(0)] + [x[k] - th * x[k - 1] for k in (1, 2, 3)]
    expected = sum(e[k] * e[k - 1] for k in (1, 2, 3)) / sum(e[k - 1] ** 2 for k in (1, 2, 3))
    est = estimate(hand_path)
    assert est.rho_hat == pytest.approx(float(expected), rel=1e-10)
    assert estimate_rho(hand_path, est.theta_hat) == pytest.approx(float(expected), rel=1e-10)


def test_zero_path_errors(zero_path):
    with pytest.raises(ZeroDenominatorError):
        estimate_theta(zero_path)
    with pytest.raises(ZeroDenominatorError):
        estimate(zero_path)
    with pytest.raises(ZeroDenominatorError):
        rho_from_residuals(np.zeros(10))
    agg = aggregates(zero_path)
    assert all(value == 0.0 for value in vars(agg).values())


def test_residuals_match_definition(hand_path):
    est = estimate(hand_path)
    direct = np.zeros(4)
    direct[1:] = hand_path.x[1:] - est.theta_hat * hand_path.x[:-1]
    np.testing.assert_allclose(est.residuals, direct, rtol=1e-12, atol=1e-12)
    assert est.residuals[0] == 0.0


def test_plugin_residuals_are_true_errors():
    path = simulate(ModelConfig(1.0, 0.5, n=2000), 4)
    assert np.array_equal(residuals(path, path.config.theta), path.eps)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**63), n=st.integers(2, 400), regime=st.sampled_from(list(Regime)), g2=st.floats(0.2, 3))
def test_quotient_and_decomposition(seed, n, regime, g2):
    path = simulate(ModelConfig(1.0, g2, n=n, regime=regime), seed)
    est = estimate(path)
    assert est.theta_hat * est.S_n_minus_1 == pytest.approx(est.P_n, rel=1e-12)
    # theta_dev is (P_n - theta_n S_{n-1,n}) / S_{n-1,n}, evaluated without cancellation
    naive = (est.P_n - path.config.theta * est.S_n_minus_1) / est.S_n_minus_1
    assert est.theta_dev == pytest.approx(naive, abs=1e-13 * (1 + abs(path.config.theta)))
    assert est.theta_minus_rho == pytest.approx(est.theta_dev + path.config.theta - path.config.rho, abs=1e-12)
    assert est.S_n_minus_1 > 0


def test_n_relation_random_paths():
    for seed in range(1000):
        path = simulate(ModelConfig(1.5, 0.8, n=60, regime="PM"), seed)
        agg = aggregates(path)
        rhs = (agg.M_n - agg.EV_n) / path.config.theta
        assert abs(agg.N_n - rhs) / (1 + max(abs(agg.N_n), abs(rhs))) < 1e-10


def test_summation_modes():
    terms = np.array([1e16, 1.0, -1e16, 1.0])
    assert total(terms, "compensated") == 2.0
    assert total(terms, "plain") == (1e16 + 1.0 - 1e16) + 1.0
    assert total(np.array([]), "plain") == 0.0
    with pytest.raises(ValueError):
        total(terms, "pairwise")


def test_result_rows_serialise():
    est = estimate(simulate(ModelConfig(2.0, 1.0), 5))
    row = est.to_row(seed=5)
    assert row["seed"] == 5 and "theta_hat" in row and "N_n" in row
    json.dumps(row)


def test_consistency_suite():
    report = run_property_suite("consistency", 0)
    assert report.passed, report.to_dict()


def test_prop5_suite():
    report = run_property_suite("prop5", 1)
    assert report.passed, report.to_dict()
