"""Distances between the limit manifold and perturbed manifolds.

Every comparison maps limit objects into the perturbed space through the
extension operator and measures in the perturbed norms. Point distances use
the slow-coordinate correspondence induced by the extension, computed exactly
node by node; derivative distances use the graph-independent correspondence
through the slow-slow block of the extension. Identity extensions reduce both
to plain slow-coordinate matching without a special case.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .config import Laboratory
from .errors import ConfigError
from .lyapunov_perron import (
    DerivativeResult,
    ManifoldResult,
    SolveSettings,
    integrate_Theta,
    slow_flow_rate,
    solve_derivative,
    solve_manifold,
)
from .nonlinearity import rho_eps
from .spectral_core import (
    alpha_norm_batch,
    coord_norm_batch,
    norm_equivalence_delta,
    resolvent_deficiency,
)

_PASS_SLACK = 1.0 + 1e-9


def instantiate(lab: Laboratory, eps: float):
    """Concrete triple for one family member: problem, map, extension."""
    return lab.problem_at(eps), lab.nonlinearity_at(eps), lab.extension_at(eps)


@dataclass(eq=False)
class SolvedMember:
    """One family member solved to its graph and derivative field."""

    eps: float
    problem: object
    F: object
    pair: object
    manifold: ManifoldResult
    derivative: DerivativeResult

    @property
    def graph(self):
        return self.manifold.graph

    @property
    def field(self):
        return self.derivative.field


def solve_member(lab: Laboratory, eps: float, settings=None, theta=None) -> SolvedMember:
    problem, F, pair = instantiate(lab, eps)
    settings = settings or lab.solve_settings
    theta = lab.theta if theta is None else theta
    man = solve_manifold(problem, F, settings)
    der = solve_derivative(problem, F, man.graph, theta, settings)
    return SolvedMember(
        eps=eps, problem=problem, F=F, pair=pair, manifold=man, derivative=der
    )


# ---------------------------------------------------------------------------
# Perturbation sizes


def tau_eps(lab: Laboratory, eps: float) -> float:
    """Resolvent deficiency of the member against the limit problem."""
    problem, _, pair = instantiate(lab, eps)
    return resolvent_deficiency(lab.limit_problem, problem, pair)


def rho_of(lab: Laboratory, eps: float, rng=None) -> float:
    problem, F_eps, pair = instantiate(lab, eps)
    rng = lab.rng("study") if rng is None else rng
    return rho_eps(F_eps, lab.limit_F, pair.E, rng=rng)


def beta_eps(lab: Laboratory, eps: float, manifold0) -> float:
    """Sup over the solved limit manifold of the derivative mismatch
    DF_eps(E u) E - E DF_0(u), measured alpha-weighted to plain."""
    graph = getattr(manifold0, "graph", manifold0)
    problem, F_eps, pair = instantiate(lab, eps)
    z = _refined_grid(graph, 2)
    u0 = _lift_full(graph, z)
    e_mat = np.asarray(pair.E, dtype=float)
    lifted = u0 @ e_mat.T
    mism = F_eps.jacobian_batch(lifted) @ e_mat - e_mat @ lab.limit_F.jacobian_batch(u0)
    w0 = lab.limit_problem.alpha_weights
    return float(np.linalg.svd(mism / w0[None, None, :], compute_uv=False)[:, 0].max())


# ---------------------------------------------------------------------------
# Sample sets over the limit graph


def _refined_grid(obj, refine: int) -> np.ndarray:
    """Limit grid refined by an integer factor, as slow-coordinate samples."""
    axes = [
        np.linspace(ax[0], ax[-1], refine * (ax.size - 1) + 1) for ax in obj.axes
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=-1)


def _lift_full(graph, z) -> np.ndarray:
    m = graph.problem.m
    u = np.zeros((z.shape[0], graph.problem.n_modes))
    u[:, :m] = z
    u[:, m:] = graph.eval(z)
    return u


# ---------------------------------------------------------------------------
# Distance estimators


def sup_distance(phi_eps, phi0, pair, refine: int = 2) -> float:
    """Largest perturbed-space alpha-norm gap between corresponding graph
    points, over the limit grid refined by the given factor.

    The perturbed point sits at the slow part of the lifted limit point, so
    the slow blocks cancel exactly and only the fast graphs are compared.
    """
    z = _refined_grid(phi0, refine)
    lifted = _lift_full(phi0, z) @ np.asarray(pair.E, dtype=float).T
    w = lifted[:, : phi0.problem.m]
    point_eps = np.concatenate([w, phi_eps.eval(w)], axis=1)
    return float(alpha_norm_batch(phi_eps.problem, lifted - point_eps).max())


def derivative_mismatch(field_eps, field0, pair, z) -> np.ndarray:
    """E DPsi_0(z) - DPsi_eps(B z) B at each slow sample, shape (B, N_eps, m).

    B is the slow-slow block of the extension, so the correspondence needs no
    graph evaluation. Both graph derivatives enter as maps from the slow space
    into the full space, identity over the slow block suppressed; the
    extension of the suppressed identity cancels only when E is the identity,
    so the slow-fast coupling of E is kept explicitly.
    """
    m = field0.problem.m
    e_mat = np.asarray(pair.E, dtype=float)
    b_mat = e_mat[:m, :m]
    delta = np.asarray(e_mat[None, :, m:] @ field0.eval(z))
    delta[:, m:, :] -= field_eps.eval(z @ b_mat.T) @ b_mat[None]
    return delta


def _mismatch_norms(problem0, problem_eps, delta) -> np.ndarray:
    """Operator norms of tangent mismatches, limit slow alpha-norm to
    perturbed alpha-norm."""
    w0 = problem0.alpha_weights[: problem0.m]
    we = problem_eps.alpha_weights
    scaled = delta * we[None, :, None] / w0[None, None, :]
    return np.linalg.svd(scaled, compute_uv=False)[..., 0]


def c1_distance(field_eps, field0, pair, refine: int = 2) -> float:
    """Sup of the derivative mismatch norm over the refined limit grid.

    This is the derivative part only; the full C1 distance adds the sup
    distance of the graphs.
    """
    z = _refined_grid(field0, refine)
    delta = derivative_mismatch(field_eps, field0, pair, z)
    return float(_mismatch_norms(field0.problem, field_eps.problem, delta).max())


def holder_seminorm_of_difference(
    field_eps,
    field0,
    pair,
    thetas,
    rng=None,
    pairs_per_scale: int = 200,
):
    """Hoelder seminorms of the derivative mismatch at several exponents over
    one shared dyadic pair set.

    Returns (seminorms keyed by exponent, sup of mismatch norms over all
    sampled points). Sharing the point set keeps interpolation inequalities
    between the returned values structural rather than statistical.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    half = np.array([ax[-1] for ax in field0.axes])
    spacing = min(ax[1] - ax[0] for ax in field0.axes)
    top = 1.9 * float(half.min())
    scales = []
    s = spacing
    while s < top:
        scales.append(s)
        s *= 2.0
    scales.append(top)

    problem0, problem_eps = field0.problem, field_eps.problem
    m = problem0.m
    seminorms = {float(t): 0.0 for t in thetas}
    point_sup = 0.0
    for ell in scales:
        dirs = rng.standard_normal((pairs_per_scale, m))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        offset = ell * dirs
        lo = -half + np.maximum(-offset, 0.0)
        hi = half - np.maximum(offset, 0.0)
        z1 = lo + rng.uniform(size=(pairs_per_scale, m)) * (hi - lo)
        z2 = z1 + offset
        d1 = derivative_mismatch(field_eps, field0, pair, z1)
        d2 = derivative_mismatch(field_eps, field0, pair, z2)
        num = _mismatch_norms(problem0, problem_eps, d1 - d2)
        point_sup = max(
            point_sup,
            float(_mismatch_norms(problem0, problem_eps, d1).max()),
            float(_mismatch_norms(problem0, problem_eps, d2).max()),
        )
        sep = coord_norm_batch(problem0, z2 - z1)
        for t in seminorms:
            seminorms[t] = max(seminorms[t], float((num / sep**t).max()))
    return seminorms, point_sup


@dataclass(eq=False)
class C1ThetaDistance:
    """C1,theta distance with its parts and the interpolation cross-check.

    value = sup_part + deriv_part + seminorm. The interpolation bound
    dominates the seminorm whenever theta < theta_star because every sampled
    quotient factors through the theta_star quotient and the pair sup; a
    violation therefore indicates a broken estimator, not a tight constant.
    """

    value: float
    sup_part: float
    deriv_part: float
    seminorm: float
    seminorm_star: float
    pair_point_sup: float
    interpolation_bound: float
    interpolation_ok: bool


def c1theta_distance(
    phi_eps,
    phi0,
    field_eps,
    field0,
    pair,
    theta: float,
    theta_star: float,
    rng=None,
    refine: int = 2,
    pairs_per_scale: int = 200,
) -> C1ThetaDistance:
    """Full C1,theta distance between corresponding graphs.

    The seminorm at theta_star and the pair point sup are measured on the
    same dyadic pair set as the seminorm at theta, so the reported
    interpolation bound is a structural identity check.
    """
    if not 0.0 < theta < theta_star:
        raise ConfigError("need 0 < theta < theta_star")
    sup_part = sup_distance(phi_eps, phi0, pair, refine=refine)
    grid_deriv = c1_distance(field_eps, field0, pair, refine=refine)
    seminorms, pair_sup = holder_seminorm_of_difference(
        field_eps, field0, pair, (theta, theta_star), rng=rng,
        pairs_per_scale=pairs_per_scale,
    )
    deriv_part = max(grid_deriv, pair_sup)
    seminorm = seminorms[theta]
    seminorm_star = seminorms[theta_star]
    ratio = theta / theta_star
    interpolation_bound = seminorm_star**ratio * (2.0 * deriv_part) ** (1.0 - ratio)
    return C1ThetaDistance(
        value=sup_part + deriv_part + seminorm,
        sup_part=sup_part,
        deriv_part=deriv_part,
        seminorm=seminorm,
        seminorm_star=seminorm_star,
        pair_point_sup=pair_sup,
        interpolation_bound=interpolation_bound,
        interpolation_ok=seminorm <= interpolation_bound * _PASS_SLACK,
    )


# ---------------------------------------------------------------------------
# Linearization comparison along backward trajectories


@dataclass(eq=False)
class ThetaComparison:
    times: np.ndarray
    measured: np.ndarray  # (samples, times)
    envelope: np.ndarray  # (times,)
    fitted_C: float
    violations: int


def theta_comparison(
    lab: Laboratory,
    limit: SolvedMember,
    member: SolvedMember,
    sizes: dict,
    xi_samples: int = 50,
    t_final: float | None = None,
    rng=None,
) -> ThetaComparison:
    """Backward growth of the linearization mismatch against its envelope.

    The envelope combines the perturbation sizes at exponent theta with the
    composite backward rate and the derivative-field mismatch at the slower
    rate; the prefactor is fitted as the largest measured ratio.
    """
    rng = lab.rng("study") if rng is None else rng
    theta = lab.theta
    kappa = lab.kappa
    lf = lab.constants["L_F"]
    lam_m = lab.limit_problem.lambda_m
    a = lab.limit_problem.alpha

    rate_fast = (4.0 + (kappa + 2.0) * theta) * lf * lam_m**a + (theta + 1.0) * lam_m \
        + 3.0 * theta
    rate_slow = 4.0 * lf * lam_m**a + lam_m

    if t_final is None:
        t_final = 2.0 / lam_m
    h = 0.05 / max(slow_flow_rate(limit.problem, limit.F),
                   slow_flow_rate(member.problem, member.F))
    base = lab.solve_settings
    settings = SolveSettings(
        t_horizon=t_final,
        h=h,
        tol_fp=base.tol_fp,
        max_iter=base.max_iter,
        grid_nodes=base.grid_nodes,
        box_factor=base.box_factor,
        box_half_widths=base.box_half_widths,
        overflow_guard=base.overflow_guard,
    )

    graph = limit.graph
    half = np.array([ax[-1] for ax in graph.axes])
    m = lab.limit_problem.m
    z = rng.uniform(-0.5 * half, 0.5 * half, size=(xi_samples, m))

    s0, th0 = integrate_Theta(limit.problem, limit.F, graph, limit.field, z, settings)
    e_mat = np.asarray(member.pair.E, dtype=float)
    w = (_lift_full(graph, z) @ e_mat.T)[:, :m]
    se, the = integrate_Theta(
        member.problem, member.F, member.graph, member.field, w, settings
    )
    if s0.shape != se.shape or not np.allclose(s0, se):
        raise ConfigError("mismatched trajectory grids in theta comparison")

    # coordinate iso between slow blocks; identity extensions give B = I
    b_mat = e_mat[:m, :m]
    w0 = lab.limit_problem.alpha_weights[:m]
    we = member.problem.alpha_weights[:m]
    mism = b_mat[None, None] @ th0 - the @ b_mat[None, None]
    scaled = mism * we[None, None, :, None] / w0[None, None, None, :]
    measured = np.linalg.svd(scaled, compute_uv=False)[..., 0]

    t = -s0
    w_theta = sizes["beta"] + (sizes["tau_log"] + sizes["rho"]) ** theta
    envelope = w_theta * np.exp(rate_fast * t) \
        + 0.5 * sizes["d_c1_deriv"] * np.exp(rate_slow * t)
    ratios = measured / envelope[None, :]
    fitted = float(ratios.max())
    violations = int((measured > fitted * envelope[None, :] * _PASS_SLACK).sum())
    return ThetaComparison(
        times=t, measured=measured, envelope=envelope, fitted_C=fitted,
        violations=violations,
    )


# ---------------------------------------------------------------------------
# Rate study


@dataclass(eq=False)
class DistanceRow:
    eps: float
    tau: float
    rho: float
    beta: float
    d_sup: float
    d_c1: float
    holder_diff: float
    d_c1theta: float
    bound_sup: float
    bound_c1theta: float
    d_c1_deriv: float = 0.0
    seminorm_star: float = 0.0
    pair_point_sup: float = 0.0
    interpolation_bound: float = 0.0
    iterations_graph: int = 0
    iterations_field: int = 0


_CSV_COLUMNS = (
    "eps", "tau", "rho", "beta", "d_sup", "d_c1", "holder_diff", "d_c1theta",
    "bound_sup", "bound_c1theta", "fitted_C_sup", "fitted_C_c1theta",
    "pass_sup", "pass_c1theta",
)


@dataclass(eq=False)
class DistanceReport:
    lab: Laboratory
    rows: list
    fitted_C_sup: float
    fitted_C_c1theta: float
    passes_sup: list
    passes_c1theta: list
    fits: dict
    delta_norm_equiv: float
    runtime_seconds: float

    @property
    def all_pass(self) -> bool:
        return all(self.passes_sup) and all(self.passes_c1theta)

    @property
    def interpolation_ok(self) -> bool:
        return all(
            r.holder_diff <= r.interpolation_bound * _PASS_SLACK for r in self.rows
        )

    def write_csv(self, path):
        lines = [",".join(_CSV_COLUMNS)]
        for row, ps, pc in zip(self.rows, self.passes_sup, self.passes_c1theta):
            vals = [
                row.eps, row.tau, row.rho, row.beta, row.d_sup, row.d_c1,
                row.holder_diff, row.d_c1theta, row.bound_sup, row.bound_c1theta,
                self.fitted_C_sup, self.fitted_C_c1theta,
            ]
            cells = [f"{v:.17g}" for v in vals] + [str(int(ps)), str(int(pc))]
            lines.append(",".join(cells))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def write_json(self, path):
        lab = self.lab
        payload = {
            "theta": lab.theta,
            "theta_star": lab.theta_star,
            "theta_tilde": lab.gap.theta_tilde,
            "kappa": lab.kappa,
            "constants": lab.constants,
            "amplitude": lab.amplitude,
            "delta_norm_equivalence": self.delta_norm_equiv,
            "gap_report": json.loads(lab.gap.to_json()),
            "fitted_C_sup": self.fitted_C_sup,
            "fitted_C_c1theta": self.fitted_C_c1theta,
            "least_squares_fits": self.fits,
            "all_pass": self.all_pass,
            "interpolation_ok": self.interpolation_ok,
            "runtime_seconds": self.runtime_seconds,
            "rows": [
                {
                    "eps": r.eps,
                    "tau": r.tau,
                    "rho": r.rho,
                    "beta": r.beta,
                    "d_sup": r.d_sup,
                    "d_c1": r.d_c1,
                    "holder_diff": r.holder_diff,
                    "d_c1theta": r.d_c1theta,
                    "bound_sup": r.bound_sup,
                    "bound_c1theta": r.bound_c1theta,
                    "seminorm_at_theta_star": r.seminorm_star,
                    "pair_point_sup": r.pair_point_sup,
                    "interpolation_bound": r.interpolation_bound,
                    "iterations_graph": r.iterations_graph,
                    "iterations_field": r.iterations_field,
                }
                for r in self.rows
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _log_fit(x, y):
    """Least-squares fit log y = log C + s log x; returns (C, slope)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan"), float("nan")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    slope, logc = np.polyfit(lx, ly, 1)
    return float(np.exp(logc)), float(slope)


def _tau_log(tau: float) -> float:
    return tau * abs(np.log(tau)) if tau > 0 else 0.0


def rate_study(lab: Laboratory, eps_grid=None, rng=None) -> DistanceReport:
    """Full distance study across the epsilon grid.

    The limit member is solved once and reused; each epsilon gets its own
    manifold and derivative solves, the distance estimators, and the two
    theoretical envelopes. The envelope constants are the largest measured
    ratios, so a pass records that one finite constant covers every row
    rather than that a regression happens to fit. Rows whose envelope is
    exactly zero (epsilon zero) pass only if the measured distance sits at
    the fixed-point tolerance floor.
    """
    start = time.perf_counter()
    eps_grid = lab.eps_grid if eps_grid is None else tuple(eps_grid)
    if any(e < 0 for e in eps_grid):
        raise ConfigError("rate study needs nonnegative eps values")
    rng = lab.rng("study") if rng is None else rng

    limit = solve_member(lab, 0.0)
    theta, theta_star = lab.theta, lab.theta_star
    ratio = theta / theta_star
    rows = []
    floor = 10.0 * lab.solve_settings.tol_fp
    for eps in eps_grid:
        member = limit if eps == 0.0 else solve_member(lab, eps)
        pair = lab.extension_at(eps)
        tau = tau_eps(lab, eps)
        rho = rho_of(lab, eps, rng=rng)
        beta = beta_eps(lab, eps, limit.graph)
        d_sup = sup_distance(member.graph, limit.graph, pair)
        d_deriv_grid = c1_distance(member.field, limit.field, pair)
        seminorms, pair_sup = holder_seminorm_of_difference(
            member.field, limit.field, pair, (theta, theta_star), rng=rng
        )
        d_deriv = max(d_deriv_grid, pair_sup)
        d_c1 = d_sup + d_deriv
        holder_diff = seminorms[theta]
        interp = seminorms[theta_star] ** ratio * (2.0 * d_deriv) ** (1.0 - ratio)
        d_c1theta = d_c1 + holder_diff
        tl = _tau_log(tau)
        bound_sup = tl + rho
        bound_c1theta = (beta + (tl + rho) ** theta_star) ** (1.0 - ratio)
        rows.append(
            DistanceRow(
                eps=eps, tau=tau, rho=rho, beta=beta, d_sup=d_sup, d_c1=d_c1,
                holder_diff=holder_diff, d_c1theta=d_c1theta,
                bound_sup=bound_sup, bound_c1theta=bound_c1theta,
                d_c1_deriv=d_deriv, seminorm_star=seminorms[theta_star],
                pair_point_sup=pair_sup, interpolation_bound=interp,
                iterations_graph=member.manifold.iterations,
                iterations_field=member.derivative.iterations,
            )
        )

    def fitted(pairs):
        ratios = [m / b for m, b in pairs if b > 0]
        return max(ratios) if ratios else 0.0

    c_sup = fitted([(r.d_sup, r.bound_sup) for r in rows])
    c_c1t = fitted([(r.d_c1theta, r.bound_c1theta) for r in rows])
    passes_sup = [
        r.d_sup <= c_sup * r.bound_sup * _PASS_SLACK if r.bound_sup > 0
        else r.d_sup <= floor
        for r in rows
    ]
    passes_c1t = [
        r.d_c1theta <= c_c1t * r.bound_c1theta * _PASS_SLACK if r.bound_c1theta > 0
        else r.d_c1theta <= floor
        for r in rows
    ]

    fits = {
        "sup_vs_bound": dict(zip(("C", "slope"), _log_fit(
            [r.bound_sup for r in rows], [r.d_sup for r in rows]))),
        "sup_vs_eps": dict(zip(("C", "slope"), _log_fit(
            [r.eps for r in rows], [r.d_sup for r in rows]))),
        "sup_vs_tau_rho_nolog": dict(zip(("C", "slope"), _log_fit(
            [r.tau + r.rho for r in rows], [r.d_sup for r in rows]))),
        "c1theta_vs_bound": dict(zip(("C", "slope"), _log_fit(
            [r.bound_c1theta for r in rows], [r.d_c1theta for r in rows]))),
    }

    return DistanceReport(
        lab=lab,
        rows=rows,
        fitted_C_sup=c_sup,
        fitted_C_c1theta=c_c1t,
        passes_sup=passes_sup,
        passes_c1theta=passes_c1t,
        fits=fits,
        delta_norm_equiv=norm_equivalence_delta(
            lab.limit_problem, lab.problem_at(max(eps_grid))
        ),
        runtime_seconds=time.perf_counter() - start,
    )


PLOT_SCRIPT = '''\
"""Plot the distance study: measured distances against their envelopes."""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "report.csv"
rows = list(csv.DictReader(open(path)))
eps = [float(r["eps"]) for r in rows]
d_sup = [float(r["d_sup"]) for r in rows]
d_c1t = [float(r["d_c1theta"]) for r in rows]
b_sup = [float(r["fitted_C_sup"]) * float(r["bound_sup"]) for r in rows]
b_c1t = [float(r["fitted_C_c1theta"]) * float(r["bound_c1theta"]) for r in rows]

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.loglog(eps, d_sup, "o-", label="sup distance")
ax1.loglog(eps, b_sup, "k--", label="C (tau |log tau| + rho)")
ax1.set_xlabel("eps")
ax1.legend()
ax2.loglog(eps, d_c1t, "s-", label="C1,theta distance")
ax2.loglog(eps, b_c1t, "k--", label="envelope")
ax2.set_xlabel("eps")
ax2.legend()
fig.tight_layout()
fig.savefig("report.png", dpi=150)
print("wrote report.png")
'''


def write_plot_script(path):
    with open(path, "w") as fh:
        fh.write(PLOT_SCRIPT)
