import dataclasses
import math

import numpy as np
import pytest

from mildar.estimation import estimate
from mildar.harness import CampaignConfig, run_campaign, run_property_suite
from mildar.limits import (
    BranchMismatch,
    CauchyRef,
    TheoremBranch,
    analytic_scale,
    analytic_tail_fraction,
    cauchy_reference,
    infer_branch,
    ks_distance,
    normalized_statistic,
    quantile_table,
    ratio_cauchy,
    ratio_covariance,
    ratio_scale_oracle,
    split_finite,
    tail_fraction,
)
from mildar.model import ModelConfig, simulate

T = TheoremBranch


def _with_dev(est, config, dev):
    return dataclasses.replace(est, theta_dev=dev, theta_minus_rho=dev + config.theta - config.rho)


def test_t1_3_centering_zero():
    cfg = ModelConfig(1.0, 1.0, n=400)
    est = _with_dev(estimate(simulate(cfg, 0)), cfg, cfg.theta / cfg.n)
    assert normalized_statistic(T.T1_3, est, cfg) == pytest.approx(0.0, abs=1e-10)


def test_t1_1_zero_at_truth():
    cfg = ModelConfig(2.0, 1.0, n=400)
    est = _with_dev(estimate(simulate(cfg, 0)), cfg, 0.0)
    assert normalized_statistic(T.T1_1, est, cfg) == 0.0


def test_t1_2_zero_at_bias_limit():
    cfg = ModelConfig(1.0, 2.0, n=400)
    # k_n (theta_hat - theta_n) = gamma2 - gamma1 means theta_hat = rho_n
    est = dataclasses.replace(estimate(simulate(cfg, 0)), theta_minus_rho=0.0)
    assert normalized_statistic(T.T1_2, est, cfg) == 0.0


def test_t1_2_matches_printed_centering_form():
    cfg = ModelConfig(1.0, 2.0, n=50)
    est = estimate(simulate(cfg, 3))
    g1, g2, k, n = cfg.gamma1, cfg.gamma2, cfg.k_n, cfg.n
    centred = k * est.theta_dev - (g2 - g1)
    expected = (g1 + g2) / (2 * g2 * (g2 - g1)) * (cfg.rho / cfg.theta) ** n * centred
    assert normalized_statistic(T.T1_2, est, cfg) == pytest.approx(expected, rel=1e-8)


def test_ratio_power_avoids_overflow():
    from mildar.limits import _signed_ratio_power

    assert _signed_ratio_power(1.5, -1.2, 3) == pytest.approx((1.5 / -1.2) ** 3, rel=1e-14)
    # 1.5**2001 overflows on its own; the ratio power does not
    assert _signed_ratio_power(1.5, -1.2, 2001) == pytest.approx(-math.exp(2001 * math.log(1.25)), rel=1e-12)
    assert math.isfinite(_signed_ratio_power(1.5, 1.2, 2001))


@pytest.mark.parametrize(
    "branch, g1, g2, regime",
    [
        (T.T1_1, 1.0, 2.0, "PP"),
        (T.T1_1, 2.0, 1.0, "PM"),
        (T.T1_2, 2.0, 1.0, "PP"),
        (T.T1_3, 2.0, 1.0, "MM"),
        (T.T2_1, 2.0, 1.0, "PP"),
        (T.T2_2, 2.0, 1.0, "MP"),
        (T.T2_1, 1.0, 1.0, "PM"),
    ],
)
def test_branch_mismatch(branch, g1, g2, regime):
    cfg = ModelConfig(g1, g2, regime=regime)
    with pytest.raises(BranchMismatch):
        cauchy_reference(branch, cfg)
    est = estimate(simulate(cfg, 0))
    with pytest.raises(BranchMismatch):
        normalized_statistic(branch, est, cfg)


def test_infer_branch():
    assert infer_branch(ModelConfig(2.0, 1.0)) is T.T1_1
    assert infer_branch(ModelConfig(1.0, 2.0, regime="MM")) is T.T1_2
    assert infer_branch(ModelConfig(1.0, 1.0)) is T.T1_3
    assert infer_branch(ModelConfig(2.0, 1.0, regime="MP")) is T.T2_1
    assert infer_branch(ModelConfig(1.0, 2.0, regime="PM")) is T.T2_2
    with pytest.raises(BranchMismatch):
        infer_branch(ModelConfig(1.0, 1.0, regime="PM"))


def test_reference_examples():
    assert cauchy_reference(T.T2_1, ModelConfig(2.0, 1.0, regime="PM")) == CauchyRef(0.0, 1.0)
    assert cauchy_reference(T.T2_2, ModelConfig(1.0, 3.0, regime="MP")) == CauchyRef(0.0, 1.0)
    t13 = cauchy_reference(T.T1_3, ModelConfig(1.0, 1.0))
    assert (t13.location, t13.scale) == (1.0, 0.5)
    t11 = cauchy_reference(T.T1_1, ModelConfig(2.0, 1.0))
    assert t11.location == pytest.approx(4 / 3, rel=1e-15)
    assert t11.scale == pytest.approx(math.sqrt(2) / 3, rel=1e-15)
    t12 = cauchy_reference(T.T1_2, ModelConfig(1.0, 3.0))
    assert t12.location == pytest.approx(1.5) and t12.scale == pytest.approx(math.sqrt(3) / 2)


@pytest.mark.parametrize("branch, g1, g2", [(T.T1_1, 2.0, 1.0), (T.T1_1, 3.0, 0.5), (T.T1_2, 1.0, 2.0), (T.T1_2, 0.3, 2.5), (T.T1_3, 1.0, 1.0), (T.T1_3, 2.5, 2.5)])
def test_analytic_scale_equals_ratio_law(branch, g1, g2):
    cfg = ModelConfig(g1, g2)
    law = ratio_cauchy(ratio_covariance(branch, cfg))
    ref = cauchy_reference(branch, cfg)
    assert law.scale == pytest.approx(ref.scale, rel=1e-12)
    assert law.location == pytest.approx(ref.location, rel=1e-12)


def test_mm_references_negate_location():
    for branch, g1, g2 in [(T.T1_1, 2.0, 1.0), (T.T1_2, 1.0, 2.0), (T.T1_3, 1.0, 1.0)]:
        pp = cauchy_reference(branch, ModelConfig(g1, g2, regime="PP"))
        mm = cauchy_reference(branch, ModelConfig(g1, g2, regime="MM"))
        assert mm.location == -pp.location and mm.scale == pp.scale


def test_mm_statistic_is_negated_pp_statistic():
    from mildar.model import sign_flip

    pp_cfg = ModelConfig(2.0, 1.0, n=400)
    path = simulate(pp_cfg, 8)
    flipped = sign_flip(path)
    a = normalized_statistic(T.T1_1, estimate(path), pp_cfg)
    b = normalized_statistic(T.T1_1, estimate(flipped), flipped.config)
    assert b == pytest.approx(-a, rel=1e-12)


def test_centering_suite():
    assert run_property_suite("centering").passed


def test_cauchy_ref_validation():
    with pytest.raises(ValueError):
        CauchyRef(0.0, 0.0)
    with pytest.raises(ValueError):
        CauchyRef(float("nan"), 1.0)
    ref = CauchyRef(1.0, 2.0)
    assert ref.cdf(1.0) == 0.5
    assert ref.cdf(3.0) == pytest.approx(0.5 + math.atan(1.0) / math.pi)


def test_ks_plug_in_quantiles():
    ref = CauchyRef(0.3, 1.7)
    R = 1000
    samples = ref.ppf((np.arange(1, R + 1) - 0.5) / R)
    assert ks_distance(samples, ref) == pytest.approx(1 / (2 * R), rel=1e-6)


def test_ks_point_mass():
    ref = CauchyRef(2.0, 1.0)
    assert ks_distance(np.full(50, 2.0), ref) == pytest.approx(0.5)


def test_ks_rejects_bad_input():
    ref = CauchyRef(0.0, 1.0)
    with pytest.raises(ValueError, match="1 non-finite"):
        ks_distance([0.0, 1.0, float("nan")], ref)
    with pytest.raises(ValueError):
        ks_distance([0.0], ref)
    finite, bad = split_finite([1.0, float("inf"), -float("inf"), 2.0])
    assert bad == 2 and finite.tolist() == [1.0, 2.0]


def test_ks_on_reference_draws():
    ref = CauchyRef(1.0, 0.5)
    hits = sum(ks_distance(ref.sample(1000, seed), ref) < 0.043 for seed in range(100))
    assert hits >= 90


def test_quantile_table():
    ref = CauchyRef(1.5, 2.0)
    table = quantile_table([1.0, 2.0, 3.0], ref, [0.5])
    assert table.analytic[0] == 1.5 and table.empirical[0] == 2.0
    full = quantile_table(ref.sample(1000, 4), ref)
    assert np.all(np.diff(full.empirical) >= 0) and np.all(np.diff(full.analytic) > 0)
    median = full.empirical[list(full.probs).index(0.5)]
    assert abs(median - ref.location) < 0.1 * ref.scale
    for bad in ([0.0], [0.5, 1.0], [-0.1]):
        with pytest.raises(ValueError):
            quantile_table([1.0, 2.0], ref, bad)
    assert table.to_rows() == [{"prob": 0.5, "empirical": 2.0, "analytic": 1.5}]


def test_tail_fraction():
    ref = CauchyRef(0.0, 1.0)
    assert analytic_tail_fraction(10.0) == pytest.approx(0.0635, abs=1e-4)
    assert tail_fraction(ref.sample(100_000, 1), ref) == pytest.approx(analytic_tail_fraction(), abs=0.004)


def test_scale_oracle_small():
    cov = ratio_covariance(T.T1_1, ModelConfig(2.0, 1.0))
    fit = ratio_scale_oracle(cov, samples=200_000, seed=3)
    assert fit.relative_error(analytic_scale(T.T1_1, ModelConfig(2.0, 1.0))) < 0.02
    assert fit.location == pytest.approx(4 / 3, abs=0.01)


def test_tail_index_suite():
    report = run_property_suite("tail_index", 0, reps=4000)
    assert report.passed, report.to_dict()


def _t1_3_run(alpha, n, reps=2000):
    res = run_campaign(CampaignConfig(ModelConfig(1.0, 1.0, alpha=alpha, n=n), T.T1_3, reps, 0))
    return abs(np.median(res.statistics) - res.ref.location), res.ks


def test_t1_3_gap_is_a_finite_k_effect():
    # the T1_3 statistic carries an O(1/k_n) bias: it shrinks with n and with a faster k_n
    gap_400, ks_400 = _t1_3_run(1 / 3, 400)
    gap_2000, _ = _t1_3_run(1 / 3, 2000)
    gap_fast, ks_fast = _t1_3_run(0.5, 400)
    assert gap_2000 < gap_400
    assert gap_fast < gap_400 / 2
    assert ks_fast < 0.10 < ks_400
