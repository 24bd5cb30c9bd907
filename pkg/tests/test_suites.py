"""Inequality verification suites.

Each suite is a sampled Gronwall or regularity estimate; green means zero
violations beyond the relative budget. The acceptance module re-runs the
three trajectory suites at full size, so these stay at default counts.
"""

import numpy as np
import pytest

from imlab.errors import ConfigError
from imlab.gap_analysis import exponents, m0_bound
from imlab.nonlinearity import holder_quotient_of_derivative
from imlab.suites import (
    ALL_SUITES,
    suite_dist_theta_eps,
    suite_distp,
    suite_jdistance,
    suite_jnorm,
    suite_psi_uniform,
    run_suites,
)


def test_registry():
    assert ALL_SUITES == ("distp", "Jnorm", "distThetaEpsilon", "PsiUniform",
                          "Jdistance")
    with pytest.raises(ConfigError, match="unknown suites"):
        run_suites(None, names=("distp", "bogus"))


def test_distp_suite(lab, limit):
    res = suite_distp(lab, limit, lab.rng("suites"), count=40)
    assert res.name == "distp"
    assert res.samples > 0
    assert res.violations == 0 and res.passed
    # the bound is tight at t = 0 where both sides equal the separation
    assert res.worst_ratio <= 1.0 + 1e-8


def test_jnorm_suite(lab, limit):
    res = suite_jnorm(lab, limit, lab.rng("suites"), count=40)
    assert res.violations == 0 and res.passed
    assert res.worst_ratio <= 1.0 + 1e-8


def test_dist_theta_eps_suite(lab, limit):
    res = suite_dist_theta_eps(lab, limit, lab.rng("suites"), count=40)
    assert res.violations == 0 and res.passed
    assert 0 < res.worst_ratio < 1.0


def test_psi_uniform_suite(lab, limit):
    res = suite_psi_uniform(lab, limit, np.random.default_rng(42))
    assert res.violations == 0 and res.passed
    d = res.details
    # M comes from the fixed-point bound at the theta-sampled quotient; the
    # suite draws that quotient first, so replaying the stream recovers it
    l_theta = holder_quotient_of_derivative(limit.F, d["theta"],
                                            rng=np.random.default_rng(42))
    lam = exponents(lab.limit_problem.lambda_m, lab.limit_problem.lambda_m1,
                    lab.constants["L_F"], lab.kappa, lab.limit_problem.alpha,
                    d["theta"])
    want = m0_bound(lab.limit_problem.lambda_m1, lab.constants["L_F"],
                    l_theta, lab.limit_problem.alpha, lam[2])
    assert d["M"] == pytest.approx(want, rel=1e-12)
    assert d["input_certificate"] <= d["M"] * (1 + 1e-8)
    assert d["output_certificate"] <= 1.1 * d["M"] * (1 + 1e-8)
    assert d["output_norm_sup"] <= 1.0 + 1e-8


def test_psi_uniform_at_half_window(lab, limit):
    theta = 0.5 * lab.gap.theta_tilde
    res = suite_psi_uniform(lab, limit, lab.rng("suites"), theta=theta)
    assert res.passed
    assert res.details["theta"] == pytest.approx(theta)


def test_jdistance_suite(lab, limit):
    res = suite_jdistance(lab, limit, lab.rng("suites"))
    assert res.violations == 0 and res.passed
    assert res.worst_ratio <= 1.0 + 1e-8


def test_run_suites_subset(lab, limit):
    results = run_suites(lab, names=("distp", "Jnorm"), limit=limit)
    assert list(results) == ["distp", "Jnorm"]
    assert all(r.passed for r in results.values())
