"""Cutoff nonlinearities with certified Lipschitz and Hoelder constants.

The prepared nonlinearity is a smooth base map multiplied by a radial bump
in the alpha-norm: identically 1 on the inner plateau (radius R/2), smooth
in the annulus, identically 0 outside radius R. Constants are certified by
seeded dense sampling with a fixed slack factor; certification failures are
loud and carry a witness.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CertificationError, ConfigError, DimensionError
from .spectral_core import SpectralProblem, alpha_norm_batch

#: Slack applied on top of sampled maxima when certifying constants.
CERT_SLACK = 1.1


# ---------------------------------------------------------------------------
# Radial bump cutoff


def _bump_f(x):
    """exp(-1/x) continued by 0 for x <= 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 1e-12
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _bump_fprime(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 1e-12
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def cutoff_value(r, radius: float):
    """Smooth bump: 1 for r <= radius/2, 0 for r >= radius."""
    r = np.asarray(r, dtype=float)
    s = (r - radius / 2.0) / (radius / 2.0)
    s = np.clip(s, 0.0, 1.0)
    fa = _bump_f(1.0 - s)
    fb = _bump_f(s)
    return fa / (fa + fb + 1e-300)


def cutoff_derivative(r, radius: float):
    """Derivative of the bump with respect to r; zero off the annulus."""
    r = np.asarray(r, dtype=float)
    half = radius / 2.0
    s = (r - half) / half
    inside = (s > 0.0) & (s < 1.0)
    out = np.zeros_like(s)
    sc = s[inside]
    fa, fb = _bump_f(1.0 - sc), _bump_f(sc)
    dfa, dfb = _bump_fprime(1.0 - sc), _bump_fprime(sc)
    out[inside] = -(dfa * fb + fa * dfb) / (fa + fb) ** 2 / half
    return out


# ---------------------------------------------------------------------------
# Base maps: smooth maps with exact derivatives on the coefficient space


class SineBase:
    """amplitudes * sin(W u + phases) written into the first K coefficients."""

    def __init__(self, n_modes: int, amplitudes, weights, phases):
        self.n = int(n_modes)
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.phases = np.asarray(phases, dtype=float)
        k = self.amplitudes.size
        if self.weights.shape != (k, self.n) or self.phases.shape != (k,):
            raise ConfigError("inconsistent sine base shapes")
        self.k = k

    def value(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.zeros((u.shape[0], self.n))
        out[:, : self.k] = self.amplitudes * np.sin(u @ self.weights.T + self.phases)
        return out

    def jacobian(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.zeros((u.shape[0], self.n, self.n))
        c = self.amplitudes * np.cos(u @ self.weights.T + self.phases)
        out[:, : self.k, :] = c[:, :, None] * self.weights[None, :, :]
        return out

    def scaled(self, factor: float) -> "SineBase":
        return SineBase(self.n, self.amplitudes * factor, self.weights, self.phases)


class CosineBase:
    """amplitudes * cos(W u) written into the first K coefficients.

    Zero phase makes the value norm peak exactly at u = 0, which sits on the
    cutoff plateau; perturbation-size oracles rely on that.
    """

    def __init__(self, n_modes: int, amplitudes, weights):
        self.n = int(n_modes)
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.k = self.amplitudes.size
        if self.weights.shape != (self.k, self.n):
            raise ConfigError("inconsistent cosine base shapes")

    def value(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.zeros((u.shape[0], self.n))
        out[:, : self.k] = self.amplitudes * np.cos(u @ self.weights.T)
        return out

    def jacobian(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.zeros((u.shape[0], self.n, self.n))
        c = -self.amplitudes * np.sin(u @ self.weights.T)
        out[:, : self.k, :] = c[:, :, None] * self.weights[None, :, :]
        return out

    def scaled(self, factor: float) -> "CosineBase":
        return CosineBase(self.n, self.amplitudes * factor, self.weights)


class ConstantBase:
    """Constant map; its Jacobian vanishes identically."""

    def __init__(self, vector):
        self.vector = np.asarray(vector, dtype=float)
        self.n = self.vector.size

    def value(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.broadcast_to(self.vector, (u.shape[0], self.n)).copy()

    def jacobian(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.zeros((u.shape[0], self.n, self.n))

    def scaled(self, factor: float) -> "ConstantBase":
        return ConstantBase(self.vector * factor)


class SumBase:
    """Pointwise sum of two base maps on the same coefficient space."""

    def __init__(self, first, second, second_scale: float = 1.0):
        if first.n != second.n:
            raise DimensionError("base maps live on different spaces")
        self.first, self.second = first, second
        self.second_scale = float(second_scale)
        self.n = first.n

    def value(self, u):
        return self.first.value(u) + self.second_scale * self.second.value(u)

    def jacobian(self, u):
        return self.first.jacobian(u) + self.second_scale * self.second.jacobian(u)


# ---------------------------------------------------------------------------
# Cutoff nonlinearity


@dataclass(eq=False)
class CutoffNonlinearity:
    """Base map times a radial alpha-norm bump, with certified constants.

    cutoff_radius None disables the bump entirely; that variant exists for
    closed-form fixtures and is flagged so reports can record that
    certification was skipped.
    """

    problem: SpectralProblem
    base: object
    cutoff_radius: float | None
    C_F: float = 0.0
    L_F: float = 0.0
    theta_F: float = 1.0
    L: float = 0.0

    def __post_init__(self):
        if self.base.n != self.problem.n_modes:
            raise DimensionError("base map does not match the problem dimension")
        if self.cutoff_radius is not None and self.cutoff_radius <= 0:
            raise ConfigError("cutoff radius must be positive")
        if not 0.0 < self.theta_F <= 1.0:
            raise ConfigError("theta_F must lie in (0, 1]")

    @property
    def analytic_fixture(self) -> bool:
        return self.cutoff_radius is None

    @property
    def support_radius(self) -> float | None:
        return self.cutoff_radius

    def eval_batch(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[-1] != self.problem.n_modes:
            raise DimensionError("wrong coefficient count")
        vals = self.base.value(u)
        if self.cutoff_radius is None:
            return vals
        r = alpha_norm_batch(self.problem, u)
        return vals * cutoff_value(r, self.cutoff_radius)[:, None]

    def eval_F(self, u) -> np.ndarray:
        return self.eval_batch(np.asarray(u, dtype=float)[None, :])[0]

    def jacobian_batch(self, u) -> np.ndarray:
        """Exact Jacobians, product rule through the radial bump."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[-1] != self.problem.n_modes:
            raise DimensionError("wrong coefficient count")
        jac = self.base.jacobian(u)
        if self.cutoff_radius is None:
            return jac
        r = alpha_norm_batch(self.problem, u)
        zeta = cutoff_value(r, self.cutoff_radius)
        dzeta = cutoff_derivative(r, self.cutoff_radius)
        out = jac * zeta[:, None, None]
        live = dzeta != 0.0
        if np.any(live):
            # gradient of the alpha-norm: lambda^(2 alpha) u / r, zero on plateau
            w2 = self.problem.alpha_weights**2
            grad = (u[live] * w2) / r[live, None]
            vals = self.base.value(u[live])
            out[live] += dzeta[live, None, None] * vals[:, :, None] * grad[:, None, :]
        return out

    def eval_DF(self, u) -> np.ndarray:
        return self.jacobian_batch(np.asarray(u, dtype=float)[None, :])[0]

    def with_constants(self, C_F, L_F, theta_F, L) -> "CutoffNonlinearity":
        return replace(self, C_F=C_F, L_F=L_F, theta_F=theta_F, L=L)


def constant_map(problem: SpectralProblem, vector) -> CutoffNonlinearity:
    """Closed-form fixture: constant F without cutoff. Lipschitz constant 0."""
    vec = np.asarray(vector, dtype=float)
    base = ConstantBase(vec)
    return CutoffNonlinearity(
        problem=problem,
        base=base,
        cutoff_radius=None,
        C_F=float(np.linalg.norm(vec)),
        L_F=0.0,
        theta_F=1.0,
        L=0.0,
    )


def zero_map(problem: SpectralProblem) -> CutoffNonlinearity:
    return constant_map(problem, np.zeros(problem.n_modes))


# ---------------------------------------------------------------------------
# Sampling and certification


def _ball_samples(problem: SpectralProblem, radius: float, count: int, rng):
    """Seeded samples covering plateau, annulus, and exterior shells.

    Includes the origin and scaled axis points so that plateau extremes of
    well-prepared maps are hit exactly.
    """
    n = problem.n_modes
    w = problem.alpha_weights
    dirs = rng.standard_normal((count, n))
    dirs /= np.linalg.norm(dirs * w, axis=1)[:, None] + 1e-300
    # deterministic radius ladder: plateau, annulus, exterior
    radii = np.concatenate(
        [
            np.linspace(0.0, 0.5 * radius, count // 3),
            np.linspace(0.5 * radius, radius, count // 3),
            np.linspace(radius, 2.0 * radius, count - 2 * (count // 3)),
        ]
    )
    pts = dirs * radii[:, None]
    axis = np.eye(n)[: min(n, 8)] / w[: min(n, 8), None]
    extras = np.concatenate([np.zeros((1, n)), 0.25 * radius * axis])
    return np.concatenate([extras, pts])


def _df_opnorms(F: CutoffNonlinearity, u) -> np.ndarray:
    """Operator norms of DF(u) from the alpha-weighted norm to the plain norm."""
    jac = F.jacobian_batch(u)
    jac = jac / F.problem.alpha_weights[None, None, :]
    return np.linalg.svd(jac, compute_uv=False)[:, 0]


def certify_constants(
    F: CutoffNonlinearity,
    sample_count: int = 2000,
    rng=None,
    pair_count: int = 10_000,
) -> dict:
    """Sample sup norms and difference quotients; fail loudly on violations.

    Returns the sampled estimates (before slack). Raises CertificationError
    with a witness when a sample exceeds a configured constant.
    """
    if F.analytic_fixture:
        raise ConfigError("analytic fixtures skip certification by design")
    rng = np.random.default_rng(0) if rng is None else rng
    radius = F.cutoff_radius
    pts = _ball_samples(F.problem, radius, sample_count, rng)

    values = np.linalg.norm(F.eval_batch(pts), axis=1)
    c_hat = float(values.max())
    i_worst = int(values.argmax())
    if c_hat > F.C_F:
        raise CertificationError(
            f"sampled sup |F| = {c_hat:.6g} exceeds configured C_F = {F.C_F:.6g}",
            witness=pts[i_worst],
        )

    slopes = _df_opnorms(F, pts)
    l_hat = float(slopes.max())
    if l_hat > F.L_F:
        raise CertificationError(
            f"sampled sup |DF| = {l_hat:.6g} exceeds configured L_F = {F.L_F:.6g}",
            witness=pts[int(slopes.argmax())],
        )

    # Hoelder quotient of the derivative at exponent theta_F over point pairs.
    a = _ball_samples(F.problem, radius, pair_count // 2, rng)
    b = a + rng.standard_normal(a.shape) * (0.05 * radius)
    ja, jb = F.jacobian_batch(a), F.jacobian_batch(b)
    dj = (ja - jb) / F.problem.alpha_weights[None, None, :]
    num = np.linalg.svd(dj, compute_uv=False)[:, 0]
    den = alpha_norm_batch(F.problem, a - b) ** F.theta_F
    quot = num / (den + 1e-300)
    h_hat = float(quot.max())
    if h_hat > F.L:
        raise CertificationError(
            f"sampled derivative Hoelder quotient {h_hat:.6g} exceeds "
            f"configured L = {F.L:.6g}",
            witness=(a[int(quot.argmax())], b[int(quot.argmax())]),
        )
    return {"C_F": c_hat, "L_F": l_hat, "L": h_hat}


def holder_quotient_of_derivative(
    F: CutoffNonlinearity, theta: float, sample_count: int = 4000, rng=None
) -> float:
    """Sampled Hoelder-theta quotient of DF over the support ball, with slack."""
    rng = np.random.default_rng(0) if rng is None else rng
    radius = F.cutoff_radius if F.cutoff_radius is not None else 1.0
    a = _ball_samples(F.problem, radius, sample_count, rng)
    scales = 10.0 ** rng.uniform(-3, 0, size=a.shape[0])
    b = a + rng.standard_normal(a.shape) * (scales[:, None] * 0.3 * radius)
    ja, jb = F.jacobian_batch(a), F.jacobian_batch(b)
    dj = (ja - jb) / F.problem.alpha_weights[None, None, :]
    num = np.linalg.svd(dj, compute_uv=False)[:, 0]
    den = alpha_norm_batch(F.problem, a - b) ** theta
    return CERT_SLACK * float((num / (den + 1e-300)).max())


# ---------------------------------------------------------------------------
# Perturbed families


@dataclass(eq=False)
class PerturbedNonlinearityPair:
    """Limit nonlinearity plus a perturbation direction.

    The only built rule is additive: the perturbed member applies the shared
    cutoff to base0 + eps * direction, and the limit member is eps-free.
    The configured constants must hold uniformly over [0, eps_max].
    """

    base0: object
    direction: object
    eps_max: float
    rule: str = "additive"

    def __post_init__(self):
        if self.rule != "additive":
            raise ConfigError(f"unknown perturbation rule {self.rule!r}")
        if self.eps_max < 0:
            raise ConfigError("eps_max must be nonnegative")

    def member(
        self, problem: SpectralProblem, eps: float, cutoff_radius: float, constants: dict
    ) -> CutoffNonlinearity:
        if eps < 0 or eps > self.eps_max * (1 + 1e-12):
            raise ConfigError(f"eps={eps} outside [0, {self.eps_max}]")
        base = self.base0 if eps == 0.0 else SumBase(self.base0, self.direction, eps)
        return CutoffNonlinearity(
            problem=problem, base=base, cutoff_radius=cutoff_radius, **constants
        )

    def limit_member(
        self, problem: SpectralProblem, eps: float, cutoff_radius: float, constants: dict
    ) -> CutoffNonlinearity:
        # additive rule: the limit problem's nonlinearity does not move with eps
        return CutoffNonlinearity(
            problem=problem, base=self.base0, cutoff_radius=cutoff_radius, **constants
        )

    def direction_sup(self) -> float:
        """Sup norm of the direction; exact for zero-phase cosine directions."""
        return float(np.linalg.norm(self.direction.amplitudes))


def rho_eps(
    F_eps: CutoffNonlinearity,
    F_limit: CutoffNonlinearity,
    pair_E: np.ndarray,
    sample_count: int = 2000,
    rng=None,
) -> float:
    """Sampled sup of |F_eps(E u) - E F_limit(u)| over the support ball.

    The sample ladder covers plateau, annulus, and exterior shells and
    always includes the origin, so additive families with identity extension
    and zero-phase cosine directions are measured exactly.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    radius = F_limit.cutoff_radius or 1.0
    pts = _ball_samples(F_limit.problem, radius, sample_count, rng)
    lifted = pts @ np.asarray(pair_E, dtype=float).T
    diff = F_eps.eval_batch(lifted) - F_limit.eval_batch(pts) @ np.asarray(pair_E).T
    return float(np.linalg.norm(diff, axis=1).max())
