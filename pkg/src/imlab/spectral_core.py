"""Diagonal spectral model problems: norms, projections, semigroups.

A model problem is a positive diagonal operator given by its eigenvalue
sequence, a slow-mode count m, and a fractional power alpha. Vectors are
plain numpy arrays of eigenbasis coefficients (CoefVector below); all
operator norms between weighted spaces reduce to singular values of
diagonally reweighted matrices and are computed exactly via SVD.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError

# Coefficient vectors are bare numpy arrays; operations validate lengths.
CoefVector = np.ndarray


def _readonly(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralProblem:
    """Eigenvalues (ascending, positive), slow-mode count m, exponent alpha."""

    eigenvalues: np.ndarray
    m: int
    alpha: float = 0.0

    def __post_init__(self):
        ev = _readonly(self.eigenvalues)
        object.__setattr__(self, "eigenvalues", ev)
        if ev.ndim != 1 or ev.size < 2:
            raise ConfigError("need a 1-d eigenvalue sequence with at least two modes")
        if not np.all(ev > 0):
            raise ConfigError("eigenvalues must be positive")
        if not np.all(np.diff(ev) >= 0):
            raise ConfigError("eigenvalues must be ascending")
        if not 1 <= self.m < ev.size:
            raise ConfigError(f"m={self.m} must satisfy 1 <= m < {ev.size}")
        if ev[self.m] <= ev[self.m - 1]:
            raise ConfigError("lambda_m must be strictly below lambda_{m+1}")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha={self.alpha} outside [0, 1)")

    @property
    def n_modes(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def lambda_m(self) -> float:
        return float(self.eigenvalues[self.m - 1])

    @property
    def lambda_m1(self) -> float:
        return float(self.eigenvalues[self.m])

    @property
    def alpha_weights(self) -> np.ndarray:
        """Diagonal of the alpha-power weighting, lambda_i**alpha."""
        return self.eigenvalues**self.alpha

    def check_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.n_modes:
            raise DimensionError(
                f"expected {self.n_modes} coefficients, got {v.shape[-1]}"
            )
        return v


def spectrum_from_rule(rule: str, n: int, scale: float = 1.0) -> np.ndarray:
    """Generate an eigenvalue sequence from a named rule."""
    if n < 2:
        raise ConfigError("need at least two modes")
    if scale <= 0:
        raise ConfigError("scale must be positive")
    if rule == "i^2":
        return scale * np.arange(1, n + 1, dtype=float) ** 2
    if rule == "linear":
        return scale * np.arange(1, n + 1, dtype=float)
    raise ConfigError(f"unknown spectrum rule {rule!r}")


def alpha_norm(problem: SpectralProblem, v) -> float:
    """Fractional-power norm (sum v_i^2 lambda_i^(2 alpha))^(1/2)."""
    v = problem.check_vector(v)
    return float(np.linalg.norm(v * problem.alpha_weights))


def alpha_norm_batch(problem: SpectralProblem, v) -> np.ndarray:
    v = problem.check_vector(v)
    return np.linalg.norm(v * problem.alpha_weights, axis=-1)


def weighted_coord_norm(problem: SpectralProblem, p) -> float:
    """Slow-coordinate norm using the first m eigenvalue weights."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != problem.m:
        raise DimensionError(f"expected {problem.m} coordinates, got {p.shape[-1]}")
    w = problem.alpha_weights[: problem.m]
    return float(np.linalg.norm(p * w))


def coord_norm_batch(problem: SpectralProblem, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    w = problem.alpha_weights[: problem.m]
    return np.linalg.norm(p * w, axis=-1)


def split(problem: SpectralProblem, v):
    """Split into (slow, fast) coefficient blocks. Recombination is exact."""
    v = problem.check_vector(v)
    return v[..., : problem.m].copy(), v[..., problem.m :].copy()


def recombine(problem: SpectralProblem, p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != problem.m or q.shape[-1] != problem.n_modes - problem.m:
        raise DimensionError("block sizes do not match the problem split")
    return np.concatenate([p, q], axis=-1)


def semigroup_q(problem: SpectralProblem, t: float, q) -> np.ndarray:
    """Fast-block semigroup e^(-lambda_i t) q_i for i > m; needs t >= 0."""
    if t < 0:
        raise DomainError("fast-block semigroup is only defined for t >= 0")
    q = np.asarray(q, dtype=float)
    lam = problem.eigenvalues[problem.m :]
    if q.shape[-1] != lam.size:
        raise DimensionError(f"expected {lam.size} fast coefficients")
    return q * np.exp(-lam * t)


def semigroup_p(problem: SpectralProblem, t: float, p) -> np.ndarray:
    """Slow-block semigroup e^(-lambda_i t) p_i for i <= m; any real t."""
    p = np.asarray(p, dtype=float)
    lam = problem.eigenvalues[: problem.m]
    if p.shape[-1] != lam.size:
        raise DimensionError(f"expected {lam.size} slow coefficients")
    return p * np.exp(-lam * t)


@dataclass(frozen=True, eq=False)
class ExtensionPair:
    """Extension E and restriction M between two coefficient spaces.

    M @ E must equal the identity on the smaller (limit) space exactly.
    kappa is a certified common bound for the operator norms of E and M in
    the plain and alpha-weighted norms of the two problems.
    """

    E: np.ndarray
    M: np.ndarray
    kappa: float = 1.0

    def __post_init__(self):
        E = _readonly(self.E)
        M = _readonly(self.M)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "M", M)
        if E.ndim != 2 or M.ndim != 2 or E.shape != M.T.shape:
            raise ConfigError("E and M must be transpose-compatible matrices")
        n0 = E.shape[1]
        if not np.allclose(M @ E, np.eye(n0), rtol=0.0, atol=1e-12):
            raise ConfigError("M @ E must be the identity on the limit space")
        if self.kappa < 1.0:
            raise ConfigError("kappa must be at least 1")


def _opnorm(mat, row_weights=None, col_weights=None) -> float:
    """Largest singular value of diag(row_weights) @ mat @ diag(1/col_weights)."""
    mat = np.asarray(mat, dtype=float)
    if row_weights is not None:
        mat = mat * np.asarray(row_weights)[:, None]
    if col_weights is not None:
        mat = mat / np.asarray(col_weights)[None, :]
    if mat.size == 0:
        return 0.0
    return float(np.linalg.svd(mat, compute_uv=False)[0])


def certify_kappa(E, M, limit: SpectralProblem, perturbed: SpectralProblem) -> float:
    """Exact common operator-norm bound for E and M, plain and weighted."""
    w0 = limit.alpha_weights
    we = perturbed.alpha_weights
    norms = (
        _opnorm(E),
        _opnorm(M),
        _opnorm(E, row_weights=we, col_weights=w0),
        _opnorm(M, row_weights=w0, col_weights=we),
    )
    return max(1.0, max(norms))


def identity_pair(limit: SpectralProblem, perturbed: SpectralProblem) -> ExtensionPair:
    """Identity extension/restriction; kappa certified for the given spectra."""
    n0, ne = limit.n_modes, perturbed.n_modes
    if ne < n0:
        raise ConfigError("perturbed problem cannot have fewer modes than the limit")
    E = np.zeros((ne, n0))
    E[:n0, :n0] = np.eye(n0)
    M = E.T.copy()
    kappa = certify_kappa(E, M, limit, perturbed)
    return ExtensionPair(E=E, M=M, kappa=kappa)


def mode_mixing_pair(
    limit: SpectralProblem,
    perturbed: SpectralProblem,
    angle: float,
    modes: tuple[int, int],
) -> ExtensionPair:
    """Orthogonal rotation mixing two modes; exercises kappa > 1 at alpha > 0.

    Modes are zero-based indices into the shared coefficient space.
    """
    n0, ne = limit.n_modes, perturbed.n_modes
    if ne != n0:
        raise ConfigError("mode mixing requires equal mode counts")
    i, j = modes
    if not (0 <= i < n0 and 0 <= j < n0 and i != j):
        raise ConfigError(f"invalid mode pair {modes}")
    E = np.eye(n0)
    c, s = np.cos(angle), np.sin(angle)
    E[i, i] = c
    E[j, j] = c
    E[i, j] = -s
    E[j, i] = s
    M = E.T.copy()
    kappa = certify_kappa(E, M, limit, perturbed)
    return ExtensionPair(E=E, M=M, kappa=kappa)


@dataclass(frozen=True, eq=False)
class CoordIso:
    """Isomorphism between the slow subspace and R^m slow coordinates.

    For the perturbed problem the slow basis consists of the slow projections
    of the extended limit eigenfunctions; its coordinate matrix is the top
    left m-by-m block of E. For a problem compared against itself the block
    is the identity and coordinates are literal slow coefficients, so the
    coordinate norm of a slow vector equals its alpha-norm exactly.
    """

    problem: SpectralProblem
    basis: np.ndarray = None

    def __post_init__(self):
        m = self.problem.m
        basis = np.eye(m) if self.basis is None else np.asarray(self.basis, float)
        if basis.shape != (m, m):
            raise ConfigError(f"basis block must be {m}x{m}")
        if abs(np.linalg.det(basis)) < 1e-12:
            raise ConfigError("slow basis block is numerically singular")
        object.__setattr__(self, "basis", _readonly(basis))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.basis, np.eye(self.problem.m)))

    def to_coords(self, w) -> np.ndarray:
        """Full coefficient vector (or slow block) to slow coordinates."""
        w = np.asarray(w, dtype=float)
        if w.shape[-1] == self.problem.n_modes:
            w = w[..., : self.problem.m]
        elif w.shape[-1] != self.problem.m:
            raise DimensionError("expected a full vector or a slow block")
        if self.is_identity:
            return w.copy()
        return np.linalg.solve(self.basis, w[..., None])[..., 0]

    def from_coords(self, z) -> np.ndarray:
        """Slow coordinates to a full coefficient vector (fast block zero)."""
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.problem.m:
            raise DimensionError(f"expected {self.problem.m} coordinates")
        p = z if self.is_identity else (self.basis @ z[..., None])[..., 0]
        full = np.zeros(z.shape[:-1] + (self.problem.n_modes,))
        full[..., : self.problem.m] = p
        return full


def coord_iso_for_pair(pair: ExtensionPair, perturbed: SpectralProblem) -> CoordIso:
    m = perturbed.m
    return CoordIso(problem=perturbed, basis=pair.E[:m, :m])


def resolvent_deficiency(
    limit: SpectralProblem, perturbed: SpectralProblem, pair: ExtensionPair
) -> float:
    """Exact operator norm of inv(A_eps) E - E inv(A_0).

    Measured from the plain limit norm into the alpha-weighted perturbed
    norm; the largest singular value of the weighted matrix, never sampled.
    """
    E = pair.E
    if E.shape != (perturbed.n_modes, limit.n_modes):
        raise DimensionError("extension shape does not match the two problems")
    diff = E / perturbed.eigenvalues[:, None] - E / limit.eigenvalues[None, :]
    return _opnorm(diff, row_weights=perturbed.alpha_weights)


def norm_equivalence_delta(limit: SpectralProblem, perturbed: SpectralProblem) -> float:
    """Smallest delta with (1-delta)|.|_0 <= |.|_eps <= (1+delta)|.|_0.

    Both coordinate norms weight the same slow coordinates, so the extreme
    ratios of (lambda_i^eps / lambda_i^0)^alpha over i <= m decide delta.
    """
    if limit.m != perturbed.m:
        raise ConfigError("slow-mode counts differ")
    m = limit.m
    ratios = (perturbed.eigenvalues[:m] / limit.eigenvalues[:m]) ** limit.alpha
    return max(float(ratios.max()) - 1.0, 1.0 - float(ratios.min()), 0.0)
