"""Distance estimators and the rate study.

The multiplicative spectral family with identity extension has closed-form
perturbation sizes (tau, rho) and exactly linear derivative mismatch in eps,
which pins the estimators down without reference to the solver. Solved-member
checks then exercise the full pipeline at the largest default eps.
"""

import numpy as np
import pytest

from imlab.errors import ConfigError
from imlab.lyapunov_perron import DerivativeField, GraphFunction
from imlab.perturbation_harness import (
    beta_eps,
    c1_distance,
    c1theta_distance,
    derivative_mismatch,
    holder_seminorm_of_difference,
    instantiate,
    rate_study,
    rho_of,
    solve_member,
    sup_distance,
    tau_eps,
    theta_comparison,
)


@pytest.fixture(scope="module")
def member(lab):
    return solve_member(lab, 0.1)


def test_instantiate_contract(lab):
    problem, F, pair = instantiate(lab, 0.01)
    assert np.allclose(problem.eigenvalues, lab.limit_problem.eigenvalues * 1.01,
                       rtol=1e-15)
    assert np.array_equal(pair.E, np.eye(32))
    u = np.zeros((1, 32))
    assert not np.allclose(F.eval_batch(u), lab.limit_F.eval_batch(u))
    p0, F0, _ = instantiate(lab, 0.0)
    assert np.array_equal(p0.eigenvalues, lab.limit_problem.eigenvalues)
    assert np.allclose(F0.eval_batch(u), lab.limit_F.eval_batch(u))


def test_tau_closed_form(lab):
    # alpha = 0 and lambda_1 = 2: the resolvent gap is eps / (2 (1 + eps))
    for eps in (0.01, 0.1):
        assert tau_eps(lab, eps) == pytest.approx(eps / (2 * (1 + eps)), rel=1e-13)
    assert tau_eps(lab, 0.0) == 0.0


def test_rho_linear_in_eps(lab):
    rho = rho_of(lab, 0.05)
    assert rho == pytest.approx(0.05 * lab.family.direction_sup(), rel=1e-13)
    assert rho_of(lab, 0.0) == 0.0


def test_beta_linear_in_eps(lab, limit):
    b1 = beta_eps(lab, 0.05, limit.graph)
    b2 = beta_eps(lab, 0.1, limit.graph)
    assert b1 > 0
    assert b2 == pytest.approx(2 * b1, rel=1e-11)
    assert beta_eps(lab, 0.0, limit.graph) == 0.0


def constant_graph(problem, axes, c):
    vals = np.zeros(tuple(ax.size for ax in axes) + (problem.n_modes - problem.m,))
    vals[..., 0] = c
    return GraphFunction(problem, axes, vals, None)


def test_sup_distance_constant_offset(lab, limit):
    problem = lab.limit_problem
    axes = limit.graph.axes
    pair = lab.extension_at(0.0)
    phi0 = GraphFunction.zeros(problem, axes)
    phi_eps = constant_graph(problem, axes, 0.3)
    assert sup_distance(phi_eps, phi0, pair) == pytest.approx(0.3, rel=1e-14)
    assert sup_distance(phi0, phi0, pair) == 0.0


def test_c1_distance_constant_field(lab, limit):
    problem = lab.limit_problem
    axes = limit.graph.axes
    pair = lab.extension_at(0.0)
    f0 = DerivativeField.zeros(problem, axes)
    vals = np.zeros(f0.values.shape)
    vals[..., 0, 0] = 0.2
    fe = f0.with_values(vals)
    assert c1_distance(fe, f0, pair) == pytest.approx(0.2, rel=1e-14)
    assert c1_distance(f0, f0, pair) == 0.0


def test_derivative_mismatch_identity_extension(lab, limit, member):
    z = limit.graph.nodes()[:5]
    delta = derivative_mismatch(member.field, limit.field, member.pair, z)
    m = lab.limit_problem.m
    assert delta.shape == (5, 32, m)
    # identity E: slow rows cancel, fast rows compare the fields directly
    assert np.all(delta[:, :m, :] == 0.0)
    want = limit.field.eval(z) - member.field.eval(z)
    assert np.allclose(delta[:, m:, :], want, atol=1e-15)


def test_self_distance_is_zero(lab, limit):
    pair = lab.extension_at(0.0)
    assert sup_distance(limit.graph, limit.graph, pair) == 0.0
    assert c1_distance(limit.field, limit.field, pair) == 0.0
    semis, pair_sup = holder_seminorm_of_difference(
        limit.field, limit.field, pair, (lab.theta,), rng=np.random.default_rng(0)
    )
    assert semis[lab.theta] == 0.0 and pair_sup == 0.0


def test_member_distances_are_stable_under_refinement(lab, limit, member):
    pair = member.pair
    d2 = sup_distance(member.graph, limit.graph, pair, refine=2)
    d4 = sup_distance(member.graph, limit.graph, pair, refine=4)
    assert 0 < d2 < 1e-2
    assert abs(d4 - d2) <= 0.05 * max(d2, d4)
    c2 = c1_distance(member.field, limit.field, pair, refine=2)
    c4 = c1_distance(member.field, limit.field, pair, refine=4)
    assert 0 < c2 < 1e-2
    assert abs(c4 - c2) <= 0.05 * max(c2, c4)


def test_c1theta_distance_components(lab, limit, member):
    res = c1theta_distance(
        member.graph, limit.graph, member.field, limit.field, member.pair,
        lab.theta, lab.theta_star, rng=lab.rng("study"),
    )
    assert res.value == pytest.approx(res.sup_part + res.deriv_part + res.seminorm)
    assert res.sup_part > 0 and res.deriv_part > 0 and res.seminorm >= 0
    assert res.interpolation_ok
    ratio = lab.theta / lab.theta_star
    want = res.seminorm_star**ratio * (2 * res.deriv_part) ** (1 - ratio)
    assert res.interpolation_bound == pytest.approx(want, rel=1e-12)
    with pytest.raises(ConfigError):
        c1theta_distance(
            member.graph, limit.graph, member.field, limit.field, member.pair,
            lab.theta_star, lab.theta_star,
        )


def test_seminorm_estimator_is_continuous_in_theta(lab, limit, member):
    semis, _ = holder_seminorm_of_difference(
        member.field, limit.field, member.pair, (1e-3, 2e-3),
        rng=np.random.default_rng(3),
    )
    lo, hi = semis[1e-3], semis[2e-3]
    assert lo > 0
    assert abs(hi - lo) <= 0.01 * lo


def test_rate_study_degenerate_grid(lab):
    report = rate_study(lab, eps_grid=(0.0,))
    row = report.rows[0]
    assert row.d_sup == 0.0 and row.d_c1 == 0.0 and row.d_c1theta == 0.0
    assert row.tau == 0.0 and row.rho == 0.0 and row.beta == 0.0
    assert report.all_pass and report.interpolation_ok


def test_rate_study_short_grid(lab, tmp_path):
    report = rate_study(lab, eps_grid=(0.01, 0.003))
    assert [r.eps for r in report.rows] == [0.01, 0.003]
    assert report.rows[0].d_sup > report.rows[1].d_sup > 0
    assert report.all_pass and report.interpolation_ok
    assert set(report.fits) >= {"sup_vs_bound", "sup_vs_eps", "c1theta_vs_bound"}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    report.write_csv(a)
    report.write_csv(b)
    assert a.read_bytes() == b.read_bytes()
    report.write_json(tmp_path / "r.json")
    assert (tmp_path / "r.json").stat().st_size > 0


def test_rate_study_rejects_negative_eps(lab):
    with pytest.raises(ConfigError):
        rate_study(lab, eps_grid=(0.01, -0.5))


def test_fitted_constant_stable_under_grid_shift(lab):
    base = rate_study(lab, eps_grid=(1e-2, 1e-3))
    shifted = rate_study(lab, eps_grid=(10**-2.5, 10**-3.5))
    c0 = base.fitted_C_sup
    c1 = shifted.fitted_C_sup
    assert c0 > 0 and c1 > 0
    assert 0.5 <= c1 / c0 <= 2.0


def test_theta_comparison_envelope(lab, limit, member):
    eps = member.eps
    sizes = {
        "beta": beta_eps(lab, eps, limit.graph),
        "tau_log": tau_eps(lab, eps) * max(1.0, -np.log(tau_eps(lab, eps))),
        "rho": rho_of(lab, eps),
        "d_c1_deriv": c1_distance(member.field, limit.field, member.pair),
    }
    comp = theta_comparison(lab, limit, member, sizes, xi_samples=20,
                            rng=lab.rng("study"))
    assert comp.violations == 0
    assert comp.fitted_C > 0
    assert comp.measured.shape == (20, comp.times.size)
    assert np.all(np.diff(comp.envelope) > 0)  # envelope grows backward in time
