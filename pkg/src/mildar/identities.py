"""Exact finite-sample identities checked numerically on sampled paths.

Each check evaluates both sides from the raw path and reports the mixed
relative residual ``|lhs - rhs| / (1 + max(|lhs|, |rhs|))``. Catalog ids are
stable strings used by the CLI output and the property suites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mildar.estimation import ZeroDenominatorError, aggregates, estimate_theta, total
from mildar.functionals import functionals
from mildar.model import (
    EQUAL_ROOTS_RTOL,
    NearEqualRootsError,
    SamplePath,
    closed_form_eps,
    closed_form_path,
    closed_form_terms,
    effective_params,
    overflow_risk,
    sign_flip,
)

# identity id -> pass threshold on the relative residual
CATALOG: dict[str, float] = {
    "S_decomp": 1e-7,
    "ex_Sn": 1e-7,
    "P_decomp": 1e-7,
    "ex_Pn": 1e-7,
    "ex_PnSn1": 1e-7,
    "step_Xn1": 1e-10,
    "step_Xn1_printed": 1e-10,
    "step_XnXn1": 1e-10,
    "N_relation": 1e-10,
    "signflip": 1e-14,
    "closed_form_X": 1e-8,
    "closed_form_eps": 1e-8,
    "lemma2_distinct": 1e-8,
    "lemma2_equal": 1e-8,
}

# Residual expected from rounding is roughly cond * ROUNDING_SLACK; above the
# tolerance the check is flagged ill-conditioned instead of failing silently.
ROUNDING_SLACK = 1e-13


def rel_residual(lhs: float, rhs: float) -> float:
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return math.inf
    return abs(lhs - rhs) / (1.0 + max(abs(lhs), abs(rhs)))


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    lhs: float
    rhs: float
    rel_residual: float
    tolerance: float
    condition_flags: tuple[str, ...] = ()
    detail: str = ""
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return not self.skipped and self.rel_residual < self.tolerance

    @property
    def unflagged_failure(self) -> bool:
        return not self.skipped and not self.passed and not self.condition_flags

    def to_row(self, seed: int | None = None) -> dict:
        row = {} if seed is None else {"seed": seed}
        row.update(
            identity_id=self.identity_id,
            detail=self.detail,
            lhs=self.lhs,
            rhs=self.rhs,
            rel_residual=self.rel_residual,
            tolerance=self.tolerance,
            passed=self.passed,
            skipped=self.skipped,
            flags=";".join(self.condition_flags),
        )
        return row


def _pow(base: float, exp: int) -> float:
    # numpy powers overflow to inf (flagged by the caller) instead of raising
    return float(np.float64(base) ** exp)


def _base_flags(path: SamplePath) -> list[str]:
    flags = []
    if overflow_risk(path.config):
        flags.append("overflow_risk")
    return flags


def _report(
    identity_id: str,
    lhs: float,
    rhs_terms: Sequence[float],
    path: SamplePath,
    detail: str = "",
    lhs_terms: Sequence[float] = (),
    extra_flags: Sequence[str] = (),
) -> IdentityReport:
    lhs = float(lhs)
    rhs = float(sum(rhs_terms))
    tol = CATALOG[identity_id]
    flags = _base_flags(path) + list(extra_flags)
    res = rel_residual(lhs, rhs)
    if not math.isfinite(res):
        flags.append("nonfinite")
    else:
        scale = 1.0 + max(abs(lhs), abs(rhs))
        cond = (sum(abs(t) for t in rhs_terms) + sum(abs(t) for t in lhs_terms)) / scale
        if cond * ROUNDING_SLACK > tol:
            flags.append("ill_conditioned")
    return IdentityReport(identity_id, lhs, rhs, res, tol, tuple(flags), detail)


def _skipped(identity_id: str, path: SamplePath, reason: str, detail: str = "") -> IdentityReport:
    return IdentityReport(
        identity_id,
        math.nan,
        math.nan,
        math.nan,
        CATALOG[identity_id],
        tuple(_base_flags(path) + [reason]),
        detail,
        skipped=True,
    )


def _near_equal(path: SamplePath) -> bool:
    theta, rho, _ = effective_params(path.config)
    return not path.config.equal_roots and abs(theta - rho) < EQUAL_ROOTS_RTOL * (abs(theta) + abs(rho))


def _remainder_s(t: float, r: float, n: int, x_n: float, e_n: float, agg) -> list[float]:
    """Terms of X_n^2/(theta^2-1) + R_{n1}."""
    d = (1 - t * r) * (1 - t * t) * (1 - r * r)
    return [
        x_n * x_n / (t * t - 1),
        2 * t * r / ((1 - t * r) * (t * t - 1)) * x_n * e_n,
        -r * r * (1 + t * r) / d * e_n * e_n,
        (1 + t * r) / d * agg.L_n,
        2 * t / ((1 - t * r) * (1 - t * t)) * agg.M_n,
        2 * r * (1 + t * r) / d * agg.EV_n,
    ]


def verify_S_decomposition(path: SamplePath, summation: str = "plain") -> IdentityReport:
    """S_{n-1,n} = X_n^2 / (theta^2 - 1) + R_{n1}."""
    t, r, _ = effective_params(path.config)
    agg = aggregates(path, summation)
    terms = _remainder_s(t, r, path.n, path.x[-1], path.eps[-1], agg)
    return _report("S_decomp", agg.S_n_minus_1, terms, path)


def verify_ex_Sn(path: SamplePath, summation: str = "plain") -> IdentityReport:
    """(1 - (t+r)^2 - (tr)^2) S_{n-1} in terms of X_n, X_{n-1}, L, P_{n-1}, M, N."""
    t, r, _ = effective_params(path.config)
    agg = aggregates(path, summation)
    x = path.x
    p_prev = total(x[1:-1] * x[:-2], summation)
    s_coef = 1 - (t + r) ** 2 - (t * r) ** 2
    terms = [
        -x[-1] ** 2,
        -((t * r) ** 2) * x[-2] ** 2,
        agg.L_n,
        -2 * t * r * (t + r) * p_prev,
        2 * (t + r) * agg.M_n,
        -2 * t * r * agg.N_n,
    ]
    return _report("ex_Sn", s_coef * agg.S_n_minus_1, terms, path)


def verify_P_decomposition(path: SamplePath, summation: str = "plain") -> list[IdentityReport]:
    """P_decomp (needs distinct roots) together with the intermediate forms ex_Pn and ex_PnSn1.

    The left side P_n - theta_n S_{n-1,n} is taken as sum X_{k-1} eps_k, the
    same quantity without the cancellation of two ~1e47 numbers.
    """
    t, r, k_n = effective_params(path.config)
    n = path.n
    agg = aggregates(path, summation)
    x_n, x_prev, e_n = path.x[-1], path.x[-2], path.eps[-1]
    out = []

    ex_pn = [
        (t + r) / (1 + t * r) * agg.S_n_minus_1,
        agg.M_n / (1 + t * r),
        t * r / (1 + t * r) * x_n * x_prev,
    ]
    out.append(_report("ex_Pn", agg.P_n, ex_pn, path))

    lhs = agg.P_minus_theta_S
    d = (1 - t * r) * (1 - r * r)
    ex_pnsn1 = [
        -r / (1 - t * r) * x_n * e_n,
        -(r**3) / d * e_n * e_n,
        agg.M_n / (1 - t * r),
        r / d * agg.L_n,
        2 * r * r / d * agg.EV_n,
    ]
    out.append(_report("ex_PnSn1", lhs, ex_pnsn1, path))

    if path.config.equal_roots:
        out.append(_skipped("P_decomp", path, "equal_roots"))
        return out
    if _near_equal(path):
        out.append(_skipped("P_decomp", path, "near_equal_roots"))
        return out
    fs = functionals(path)
    tn, rn = _pow(t, n), _pow(r, n)
    terms = [
        t * r / ((t * r - 1) * (t - r)) * k_n * tn * rn * fs.xi_theta * fs.xi_rho,
        r * r / ((t - r) * (1 - r * r)) * k_n * rn * rn * fs.xi_rho**2,
        agg.M_n / (1 - t * r),
        r / d * agg.L_n,
        2 * r * r / d * agg.EV_n,
    ]
    out.append(_report("P_decomp", lhs, terms, path))
    return out


def verify_step_identities(path: SamplePath, summation: str = "plain") -> list[IdentityReport]:
    """One-step relations between X_{n-1}, X_n and eps_n, and the N_n relation.

    ``step_Xn1`` divides by theta_n^2 (the algebraically correct form);
    ``step_Xn1_printed`` divides by theta_n as typeset and is reported with the
    ``printed_variant`` flag so its outcome is recorded but never fatal.
    """
    t, _, _ = effective_params(path.config)
    agg = aggregates(path, summation)
    x_n, x_prev, e_n = path.x[-1], path.x[-2], path.eps[-1]
    square = [x_n * x_n / t**2, e_n * e_n / t**2, -2 * x_n * e_n / t**2]
    return [
        _report("step_Xn1", x_prev * x_prev, square, path),
        _report("step_Xn1_printed", x_prev * x_prev, [s * t for s in square], path,
                extra_flags=["printed_variant"]),
        _report("step_XnXn1", x_prev * x_n, [x_n * x_n / t, -x_n * e_n / t], path),
        _report("N_relation", agg.N_n, [agg.M_n / t, -agg.EV_n / t], path),
    ]


def verify_signflip_estimator(path: SamplePath, summation: str = "plain") -> IdentityReport:
    """theta_hat on the sign-flipped path equals -theta_hat.

    Raises :class:`ZeroDenominatorError` on degenerate paths.
    """
    theta_hat = estimate_theta(path, summation)
    flipped = estimate_theta(sign_flip(path), summation)
    return _report("signflip", flipped, [-theta_hat], path)


def verify_closed_forms(path: SamplePath) -> list[IdentityReport]:
    """Recursion against the closed-form expansions of X_k (all k) and eps_n."""
    out = []
    try:
        cf, branch = closed_form_path(path)
    except NearEqualRootsError:
        out.append(_skipped("closed_form_X", path, "near_equal_roots"))
    else:
        x = path.x
        scale = 1.0 + np.maximum(np.abs(x), np.abs(cf))
        res = np.abs(cf - x) / scale
        worst = int(np.argmax(res))
        flags = _base_flags(path)
        if not np.all(np.isfinite(res)):
            flags.append("nonfinite")
        elif branch == "distinct":
            first, second = closed_form_terms(path)
            cond = float(np.max((np.abs(first) + np.abs(second)) / scale[1:]))
            if cond * ROUNDING_SLACK > CATALOG["closed_form_X"]:
                flags.append("ill_conditioned")
        out.append(
            IdentityReport(
                "closed_form_X",
                float(x[worst]),
                float(cf[worst]),
                float(res[worst]),
                CATALOG["closed_form_X"],
                tuple(flags),
                detail=f"{branch};k={worst}",
            )
        )
    out.append(_report("closed_form_eps", path.eps[-1], [closed_form_eps(path, path.n)], path))
    return out


def verify_lemma2(path: SamplePath) -> list[IdentityReport]:
    """X_n^2, X_n eps_n and eps_n^2 written through xi, eta and phi."""
    t, r, k_n = effective_params(path.config)
    n = path.n
    fs = functionals(path)
    x_n, e_n = path.x[-1], path.eps[-1]
    if path.config.equal_roots:
        t2n = _pow(t, 2 * n)
        return [
            _report("lemma2_equal", x_n * x_n, [n * n * k_n * t2n * fs.phi_theta**2], path, "X_n^2"),
            _report("lemma2_equal", x_n * e_n, [n * k_n * t2n * fs.phi_theta * fs.xi_theta], path, "X_n*eps_n"),
            _report("lemma2_equal", e_n * e_n, [k_n * t2n * fs.xi_theta**2], path, "eps_n^2"),
        ]
    if _near_equal(path):
        return [_skipped("lemma2_distinct", path, "near_equal_roots", d) for d in ("X_n^2", "X_n*eps_n", "eps_n^2")]
    tn, rn = _pow(t, n), _pow(r, n)
    g = (t - r) ** 2
    xt, xr = fs.xi_theta, fs.xi_rho
    return [
        _report(
            "lemma2_distinct",
            x_n * x_n,
            [
                t * t / g * tn * tn * k_n * xt * xt,
                r * r / g * rn * rn * k_n * xr * xr,
                -2 * t * r / g * tn * rn * k_n * xt * xr,
            ],
            path,
            "X_n^2",
        ),
        _report(
            "lemma2_distinct",
            x_n * e_n,
            [t / (t - r) * tn * rn * k_n * xt * xr, -r / (t - r) * rn * rn * k_n * xr * xr],
            path,
            "X_n*eps_n",
        ),
        _report("lemma2_distinct", e_n * e_n, [k_n * rn * rn * xr * xr], path, "eps_n^2"),
    ]


def verify_path(path: SamplePath, summation: str = "plain") -> list[IdentityReport]:
    """Run the whole catalog on one path."""
    with np.errstate(all="ignore"):
        return _verify_path(path, summation)


def _verify_path(path: SamplePath, summation: str) -> list[IdentityReport]:
    reports = [verify_S_decomposition(path, summation), verify_ex_Sn(path, summation)]
    reports += verify_P_decomposition(path, summation)
    reports += verify_step_identities(path, summation)
    try:
        reports.append(verify_signflip_estimator(path, summation))
    except ZeroDenominatorError:
        reports.append(_skipped("signflip", path, "zero_denominator"))
    reports += verify_closed_forms(path)
    reports += verify_lemma2(path)
    return reports


def summarize(reports: Sequence[IdentityReport]) -> dict[str, dict[str, float]]:
    """Per-identity counts and worst residual."""
    out: dict[str, dict[str, float]] = {}
    for rep in reports:
        s = out.setdefault(
            rep.identity_id,
            {"checked": 0, "passed": 0, "skipped": 0, "flagged_failures": 0, "unflagged_failures": 0, "max_residual": 0.0},
        )
        if rep.skipped:
            s["skipped"] += 1
            continue
        s["checked"] += 1
        s["passed"] += rep.passed
        s["flagged_failures"] += (not rep.passed) and bool(rep.condition_flags)
        s["unflagged_failures"] += rep.unflagged_failure
        s["max_residual"] = max(s["max_residual"], rep.rel_residual)
    return out


__all__ = [
    "CATALOG",
    "IdentityReport",
    "rel_residual",
    "summarize",
    "verify_P_decomposition",
    "verify_S_decomposition",
    "verify_closed_forms",
    "verify_ex_Sn",
    "verify_lemma2",
    "verify_path",
    "verify_signflip_estimator",
    "verify_step_identities",
]
