"""Cutoff nonlinearities: geometry, derivatives, certification.

The jacobian oracle is central finite differencing of eval_batch; the bump
geometry has exact plateau and vanishing regions by construction, so those
are asserted without tolerance.
"""

import numpy as np
import pytest

from imlab.errors import CertificationError, ConfigError, DimensionError
from imlab.nonlinearity import (
    ConstantBase,
    CosineBase,
    CutoffNonlinearity,
    PerturbedNonlinearityPair,
    SineBase,
    SumBase,
    certify_constants,
    constant_map,
    cutoff_derivative,
    cutoff_value,
    holder_quotient_of_derivative,
    rho_eps,
    zero_map,
)
from imlab.spectral_core import SpectralProblem, alpha_norm, identity_pair


def make_problem(n=5, alpha=0.0):
    ev = 2.0 * np.arange(1, n + 1) ** 2
    return SpectralProblem(eigenvalues=ev.astype(float), m=1, alpha=alpha)


def sine_field(problem, seed=3, amp=0.05, k=4):
    rng = np.random.default_rng(seed)
    n = problem.n_modes
    base = SineBase(
        n_modes=n,
        amplitudes=amp * rng.uniform(0.5, 1.0, size=k),
        weights=rng.normal(size=(k, n)),
        phases=rng.uniform(0, 2 * np.pi, size=k),
    )
    return CutoffNonlinearity(problem=problem, base=base, cutoff_radius=1.0)


def test_cutoff_plateau_and_support():
    assert cutoff_value(np.array(0.0), 1.0) == 1.0
    assert cutoff_value(np.array(0.5), 1.0) == 1.0
    assert cutoff_value(np.array(0.75), 1.0) == 0.5
    assert cutoff_value(np.array(1.0), 1.0) == 0.0
    assert cutoff_value(np.array(2.3), 1.0) == 0.0
    rs = np.linspace(0.5, 1.0, 60)
    vals = cutoff_value(rs, 1.0)
    assert np.all(np.diff(vals) <= 0)
    inner = cutoff_value(np.linspace(0.55, 0.95, 40), 1.0)
    assert np.all(np.diff(inner) < 0)  # strictly decreasing away from the flat ends
    assert cutoff_derivative(np.array(0.4), 1.0) == 0.0
    assert cutoff_derivative(np.array(1.1), 1.0) == 0.0


def test_cutoff_derivative_matches_fd():
    rs = np.linspace(0.55, 0.97, 25)
    h = 1e-6
    fd = (cutoff_value(rs + h, 1.0) - cutoff_value(rs - h, 1.0)) / (2 * h)
    exact = cutoff_derivative(rs, 1.0)
    assert np.allclose(exact, fd, atol=1e-7)


def test_base_maps_value_and_scale():
    n = 4
    amps = np.array([0.2, 0.3])
    w = np.ones((2, n))
    sine = SineBase(n_modes=n, amplitudes=amps, weights=w, phases=np.zeros(2))
    assert np.allclose(sine.value(np.zeros(n)), 0.0)
    cos = CosineBase(n_modes=n, amplitudes=amps, weights=w)
    v0 = cos.value(np.zeros(n))[0]
    assert np.allclose(v0[:2], amps) and np.allclose(v0[2:], 0.0)
    assert np.allclose(cos.scaled(2.0).value(np.zeros(n)), 2.0 * v0)
    const = ConstantBase(vector=np.arange(float(n)))
    assert np.allclose(const.jacobian(np.ones(n)), 0.0)
    both = SumBase(sine, cos, second_scale=0.5)
    u = np.full(n, 0.1)
    assert np.allclose(both.value(u), sine.value(u) + 0.5 * cos.value(u))
    assert np.allclose(both.jacobian(u), sine.jacobian(u) + 0.5 * cos.jacobian(u))


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_jacobian_matches_finite_differences(alpha):
    problem = make_problem(alpha=alpha)
    F = sine_field(problem)
    rng = np.random.default_rng(5)
    # plateau, annulus, and exterior points all exercise different branches
    pts = []
    for target in (0.3, 0.8, 1.4):
        u = rng.normal(size=problem.n_modes)
        pts.append(u * target / alpha_norm(problem, u))
    pts = np.array(pts)
    jac = F.jacobian_batch(pts)
    h = 1e-6
    for b, u in enumerate(pts):
        for j in range(problem.n_modes):
            e = np.zeros(problem.n_modes)
            e[j] = h
            fd = (F.eval_F(u + e) - F.eval_F(u - e)) / (2 * h)
            assert np.allclose(jac[b, :, j], fd, atol=5e-8), (b, j)


def test_eval_vanishes_outside_support():
    problem = make_problem()
    F = sine_field(problem)
    far = np.full(problem.n_modes, 3.0)
    assert np.all(F.eval_F(far) == 0.0)
    assert np.all(F.jacobian_batch(far[None]) == 0.0)


def test_constant_and_zero_fixtures():
    problem = make_problem(2)
    F = constant_map(problem, [0.0, 1.0])
    assert F.analytic_fixture and F.support_radius is None
    assert F.C_F == 1.0
    assert np.allclose(F.eval_F(np.array([5.0, -3.0])), [0.0, 1.0])
    assert np.all(F.jacobian_batch(np.zeros((1, 2))) == 0.0)
    Z = zero_map(problem)
    assert Z.C_F == 0.0 and Z.L_F == 0.0
    assert np.all(Z.eval_batch(np.ones((4, 2))) == 0.0)
    with pytest.raises(ConfigError):
        certify_constants(F, rng=np.random.default_rng(0))


def test_certification_accepts_honest_constants():
    problem = make_problem()
    raw = sine_field(problem)
    rng = np.random.default_rng(9)
    sampled = certify_constants(
        raw.with_constants(C_F=10.0, L_F=10.0, theta_F=1.0, L=100.0),
        sample_count=400,
        rng=rng,
        pair_count=2000,
    )
    honest = raw.with_constants(
        C_F=1.1 * sampled["C_F"],
        L_F=1.1 * sampled["L_F"],
        theta_F=1.0,
        L=1.1 * sampled["L"],
    )
    out = certify_constants(honest, sample_count=400, rng=np.random.default_rng(10), pair_count=2000)
    assert out["C_F"] <= honest.C_F and out["L_F"] <= honest.L_F and out["L"] <= honest.L


@pytest.mark.parametrize(
    "lie, phrase",
    [
        (dict(C_F=1e-9, L_F=10.0, L=100.0), "sup |F|"),
        (dict(C_F=10.0, L_F=1e-9, L=100.0), "sup |DF|"),
        (dict(C_F=10.0, L_F=10.0, L=1e-12), "Hoelder quotient"),
    ],
)
def test_certification_rejects_lies_with_witness(lie, phrase):
    problem = make_problem()
    F = sine_field(problem).with_constants(theta_F=1.0, **lie)
    with pytest.raises(CertificationError) as err:
        certify_constants(F, sample_count=400, rng=np.random.default_rng(2), pair_count=2000)
    assert phrase in str(err.value)
    assert err.value.witness is not None


def test_holder_quotient_of_linear_map_is_zero():
    problem = make_problem(3)
    F = CutoffNonlinearity(
        problem=problem, base=ConstantBase(vector=[0.1, 0.0, 0.0]), cutoff_radius=None
    )
    q = holder_quotient_of_derivative(F, 0.5, sample_count=200, rng=np.random.default_rng(1))
    assert q == 0.0


def test_holder_quotient_positive_for_cutoff_field(lab):
    q = holder_quotient_of_derivative(lab.limit_F, lab.theta, sample_count=500,
                                      rng=np.random.default_rng(4))
    assert np.isfinite(q) and q > 0


def test_pair_guards():
    base = ConstantBase(vector=np.zeros(3))
    with pytest.raises(ConfigError):
        PerturbedNonlinearityPair(base0=base, direction=base, eps_max=-0.1)
    with pytest.raises(ConfigError):
        PerturbedNonlinearityPair(base0=base, direction=base, eps_max=0.1, rule="scaling")
    pair = PerturbedNonlinearityPair(base0=base, direction=base, eps_max=0.1)
    problem = make_problem(3)
    consts = dict(C_F=1.0, L_F=1.0, theta_F=1.0, L=1.0)
    with pytest.raises(ConfigError):
        pair.member(problem, 0.2, 1.0, consts)
    limit = pair.member(problem, 0.0, 1.0, consts)
    assert limit.base is base


def test_dimension_mismatch_rejected():
    problem = make_problem(4)
    with pytest.raises(DimensionError):
        CutoffNonlinearity(problem=problem, base=ConstantBase(vector=np.zeros(3)),
                           cutoff_radius=1.0)


def test_rho_eps_exact_for_cosine_direction():
    problem = make_problem(alpha=0.0)
    n = problem.n_modes
    base0 = SineBase(
        n_modes=n,
        amplitudes=np.array([0.05, 0.02]),
        weights=np.random.default_rng(0).normal(size=(2, n)),
        phases=np.array([0.3, 1.1]),
    )
    direction = CosineBase(n_modes=n, amplitudes=np.array([0.3, 0.4]), weights=np.ones((2, n)))
    family = PerturbedNonlinearityPair(base0=base0, direction=direction, eps_max=0.1)
    consts = dict(C_F=1.0, L_F=1.0, theta_F=1.0, L=1.0)
    eps = 0.05
    F_eps = family.member(problem, eps, 1.0, consts)
    F_lim = family.limit_member(problem, eps, 1.0, consts)
    pair = identity_pair(problem, problem)
    rho = rho_eps(F_eps, F_lim, pair.E, sample_count=300, rng=np.random.default_rng(6))
    # the mismatch eps * zeta(r) |cos(W u)| |amps| peaks at the origin sample
    assert rho == pytest.approx(eps * family.direction_sup(), rel=1e-14)
