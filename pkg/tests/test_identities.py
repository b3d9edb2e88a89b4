import numpy as np
import pytest

from mildar.estimation import ZeroDenominatorError
from mildar.harness import run_property_suite
from mildar.identities import (
    CATALOG,
    rel_residual,
    summarize,
    verify_P_decomposition,
    verify_S_decomposition,
    verify_closed_forms,
    verify_lemma2,
    verify_path,
    verify_signflip_estimator,
    verify_step_identities,
)
from mildar.model import ModelConfig, simulate


def _by_id(reports):
    return {(r.identity_id, r.detail): r for r in reports}


def test_rel_residual():
    assert rel_residual(0.0, 0.0) == 0.0
    assert rel_residual(1.0, 2.0) == pytest.approx(1 / 3)
    assert rel_residual(float("nan"), 1.0) == float("inf")


def test_hand_example_catalog(hand_path):
    reports = verify_path(hand_path)
    required = [r for r in reports if r.identity_id != "step_Xn1_printed"]
    assert all(r.passed for r in required if not r.skipped), [r for r in required if not r.passed]
    ids = {r.identity_id for r in reports}
    assert ids == set(CATALOG) - {"lemma2_equal"}


def test_hand_step_identity(hand_path):
    step = _by_id(verify_step_identities(hand_path))
    # X_2 = (X_3 - eps_3) / theta = (3.3175 - 2.0525) / 1.1 = 1.15
    assert step[("step_Xn1", "")].lhs == pytest.approx(1.15**2, rel=1e-14)
    assert step[("step_Xn1", "")].passed
    printed = step[("step_Xn1_printed", "")]
    assert not printed.passed and "printed_variant" in printed.condition_flags
    assert not printed.unflagged_failure


def test_hand_signflip(hand_path):
    rep = verify_signflip_estimator(hand_path)
    assert rep.lhs == pytest.approx(-2.1378364, abs=1e-7)
    assert rep.rel_residual == 0.0


def test_zero_path_trivial(zero_path):
    assert verify_S_decomposition(zero_path).rel_residual == 0.0
    assert all(r.rel_residual == 0.0 for r in verify_P_decomposition(zero_path))
    assert all(r.rel_residual == 0.0 for r in verify_step_identities(zero_path))
    with pytest.raises(ZeroDenominatorError):
        verify_signflip_estimator(zero_path)
    signflip = [r for r in verify_path(zero_path) if r.identity_id == "signflip"][0]
    assert signflip.skipped and "zero_denominator" in signflip.condition_flags


def test_design_point_s_decomposition():
    cfg = ModelConfig(1.0, 0.5, n=400)
    for seed in range(100):
        assert verify_S_decomposition(simulate(cfg, seed)).rel_residual < 1e-7


@pytest.mark.parametrize("regime", ["PP", "PM", "MM", "MP"])
def test_p_decomposition_regimes(regime):
    cfg = ModelConfig(0.7, 1.9, alpha=0.4, n=300, regime=regime)
    for seed in range(50):
        reps = verify_P_decomposition(simulate(cfg, seed))
        assert [r.identity_id for r in reps] == ["ex_Pn", "ex_PnSn1", "P_decomp"]
        assert all(r.passed for r in reps)


def test_p_decomposition_skips_equal_and_near_equal():
    eq = verify_P_decomposition(simulate(ModelConfig(1.0, 1.0, n=100), 0))
    assert eq[-1].skipped and "equal_roots" in eq[-1].condition_flags
    near = verify_P_decomposition(simulate(ModelConfig(1.0, 1.0 + 1e-8, n=100), 0))
    assert near[-1].skipped and "near_equal_roots" in near[-1].condition_flags
    assert near[0].passed and near[1].passed


def test_lemma2_branches():
    eq = verify_lemma2(simulate(ModelConfig(1.5, 1.5, n=200, regime="MM"), 3))
    assert {r.identity_id for r in eq} == {"lemma2_equal"} and all(r.passed for r in eq)
    assert [r.detail for r in eq] == ["X_n^2", "X_n*eps_n", "eps_n^2"]
    dist = verify_lemma2(simulate(ModelConfig(1.5, 0.5, n=200, regime="MP"), 3))
    assert {r.identity_id for r in dist} == {"lemma2_distinct"} and all(r.passed for r in dist)


def test_closed_forms_flag_branch():
    reps = verify_closed_forms(simulate(ModelConfig(1.0, 1.0, n=50), 0))
    assert reps[0].detail.startswith("equal") and reps[0].passed
    near = verify_closed_forms(simulate(ModelConfig(1.0, 1.0 + 1e-8, n=50), 0))
    assert near[0].skipped and "near_equal_roots" in near[0].condition_flags


def test_overflow_flag():
    cfg = ModelConfig(3.0, 2.0, alpha=0.2, n=2000)
    reps = verify_path(simulate(cfg, 0))
    assert all("overflow_risk" in r.condition_flags for r in reps)
    assert not any(r.unflagged_failure for r in reps)


def test_summarize_counts(hand_path):
    summary = summarize(verify_path(hand_path))
    assert summary["S_decomp"]["checked"] == 1 and summary["S_decomp"]["passed"] == 1
    assert summary["step_Xn1_printed"]["flagged_failures"] == 1


@pytest.mark.parametrize("suite", ["signflip", "lemma2_distinct", "lemma2_equal", "P_decomp", "step_XnXn1"])
def test_single_identity_suites(suite):
    report = run_property_suite(suite, 5)
    assert report.passed, report.to_dict()


def test_printed_variant_recorded_not_required():
    report = run_property_suite("step_Xn1_printed", 5)
    assert report.passed
    assert report.details["step_Xn1_printed_holds_fraction"] == 0.0


def test_compensated_never_worse():
    report = run_property_suite("summation", 2, count=60)
    assert report.passed, report.to_dict()
    assert set(report.details) >= {"S_decomp", "N_relation"}


def test_compensated_sums_are_exactly_rounded():
    path = simulate(ModelConfig(1.0, 2.0, n=400), 1)
    rows = {r.identity_id: r for r in verify_path(path, "compensated")}
    assert rows["N_relation"].passed and rows["S_decomp"].passed
    assert not np.isnan(rows["ex_Sn"].rel_residual)
