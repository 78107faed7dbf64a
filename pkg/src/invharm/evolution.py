"""Trajectories of the reduced system, produced two ways.

``run_exact`` propagates the full two-mode Gaussian state with the exact
transition matrix and reduces, which involves no time-stepping error.
``run_me`` integrates the five moment ODEs of the master equation with
adaptive stepping; across windows where the determinant guard trips
(master-equation breakdown instants) it bridges with the exact
propagator and resumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .analysis import find_divergences
from .coefficients import EnvVariance, MECoefficients, coeffs_general
from .gaussian import (
    Diagnostics,
    GaussianState,
    SqueezeSpec,
    diagnostics,
    diagnostics_from_area,
    product_state,
    propagate,
    reduce_system,
    squeezed_pure,
)
from .modes import NormalModes, params_from_modes
from .propagator import cross_block, det_m1, dtilde, full_transition

__all__ = [
    "StepFailure",
    "GridMismatch",
    "IntegratorOptions",
    "Trajectory",
    "TrajectoryComparison",
    "run_exact",
    "run_me",
    "compare_trajectories",
    "env_state_from_variance",
]


class StepFailure(RuntimeError):
    """Adaptive integration could not meet its tolerances."""


class GridMismatch(ValueError):
    """Two trajectories do not share a common time grid."""


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    divergence_guard: float = 1e-3
    # which frequency multiplies the cross moment in the dp^2 equation:
    # "eff" (consistent with the drift matrix) or "bare"
    dp2_omega: str = "eff"

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dp2_omega not in ("eff", "bare"):
            raise ValueError("dp2_omega must be 'eff' or 'bare'")


MOMENT_NAMES = ("mean_x", "mean_p", "dx2", "dp2", "dxp")


@dataclass
class Trajectory:
    """Time series of system moments plus per-time diagnostics."""

    times: np.ndarray
    moments: np.ndarray  # shape (n, 5): mean_x, mean_p, dx2, dp2, dxp
    diags: list[Diagnostics]
    coeffs: list[MECoefficients] | None = None
    bridged: np.ndarray | None = None  # bool mask of exact-bridged samples
    meta: dict = field(default_factory=dict)

    def entropies(self) -> np.ndarray:
        return np.array([d.S for d in self.diags])

    def energies(self) -> np.ndarray:
        return np.array([d.E for d in self.diags])

    def areas(self) -> np.ndarray:
        return np.array([d.A for d in self.diags])


def env_state_from_variance(envvar: EnvVariance) -> GaussianState:
    """One-mode Gaussian state with the given cumulants and means."""
    return GaussianState(
        mean=np.array([envvar.mean_y, envvar.mean_q]),
        cov=envvar.matrix(),
    )


def _moments_of(state: GaussianState) -> np.ndarray:
    return np.array(
        [
            state.mean[0],
            state.mean[1],
            state.cov[0, 0],
            state.cov[1, 1],
            state.cov[0, 1],
        ]
    )


def _state_of(moments: np.ndarray) -> GaussianState:
    mx, mp, dx2, dp2, dxp = moments
    return GaussianState(
        mean=np.array([mx, mp]),
        cov=np.array([[dx2, dxp], [dxp, dp2]]),
    )


def _exact_reduced(modes: NormalModes, full0: GaussianState, t: float) -> GaussianState:
    return reduce_system(propagate(full0, full_transition(modes, t)))


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """A factor C with C C^T = cov (Cholesky, eigen fallback on the PSD
    boundary)."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        return vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))


def _reduced_area(
    modes: NormalModes, cov_s: np.ndarray, cov_e: np.ndarray, t: float
) -> float:
    """Scaled area of the reduced state of an initially uncorrelated
    two-mode state, evaluated without catastrophic cancellation.

    The reduced covariance is L L^T with L = [M0 Cs | M1 Ce] (Cs, Ce
    factors of the initial covariances), so by the Cauchy-Binet formula
    its determinant is the sum of squared 2-column minors of L:

        Dtilde^2 det(Vs) + det(M1)^2 det(Ve) + ||Cs^T X Ce||_F^2

    with X = M0^T J M1.  Every addend is a square, and the minors
    themselves come from :func:`dtilde` / :func:`det_m1` /
    :func:`cross_block` in analytically reduced form, so the result keeps
    relative accuracy even when the covariance entries dwarf the area.
    The determinant of the assembled reduced covariance, by contrast,
    loses all precision once the entries exceed the area by more than
    half the working precision.
    """
    det_a = dtilde(modes, t) ** 2 * float(np.linalg.det(cov_s))
    det_b = det_m1(modes, t) ** 2 * float(np.linalg.det(cov_e))
    cs = _psd_factor(np.asarray(cov_s, float))
    ce = _psd_factor(np.asarray(cov_e, float))
    minors = cs.T @ cross_block(modes, t) @ ce
    rad = det_a + det_b + float(np.sum(minors * minors))
    return math.sqrt(max(rad, 0.0)) / (modes.hbar / 2.0)


def run_exact(
    modes: NormalModes,
    sys_spec: SqueezeSpec,
    env_spec: SqueezeSpec | GaussianState,
    grid,
    sys_mean=(0.0, 0.0),
    env_mean=(0.0, 0.0),
    collect_coeffs: bool = False,
    envvar: EnvVariance | None = None,
) -> Trajectory:
    """Exact trajectory: each grid point evaluated independently."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    sys0 = squeezed_pure(sys_spec, modes.hbar)
    sys0 = GaussianState(mean=np.asarray(sys_mean, float), cov=sys0.cov)
    if isinstance(env_spec, GaussianState):
        env0 = env_spec
    else:
        env0 = squeezed_pure(env_spec, modes.hbar)
        env0 = GaussianState(mean=np.asarray(env_mean, float), cov=env0.cov)
    full0 = product_state(sys0, env0)

    if envvar is None:
        envvar = EnvVariance(
            dy2=float(env0.cov[0, 0]),
            dq2=float(env0.cov[1, 1]),
            dyq=float(env0.cov[0, 1]),
            mean_y=float(env0.mean[0]),
            mean_q=float(env0.mean[1]),
        )

    moments = np.empty((grid.size, 5))
    diags = []
    coeffs = [] if collect_coeffs else None
    for i, t in enumerate(grid):
        red = _exact_reduced(modes, full0, t)
        moments[i] = _moments_of(red)
        A = _reduced_area(modes, sys0.cov, env0.cov, t)
        diags.append(
            diagnostics_from_area(A, red, modes.m_s, modes.omega, modes.hbar)
        )
        if collect_coeffs:
            coeffs.append(coeffs_general(modes, envvar, t))
    return Trajectory(
        times=grid,
        moments=moments,
        diags=diags,
        coeffs=coeffs,
        bridged=np.zeros(grid.size, dtype=bool),
        meta={
            "method": "exact",
            "omega": modes.omega,
            "lambda_sq": modes.lambda_sq,
            "theta_c": modes.theta_c,
            "m_s": modes.m_s,
            "m_e": modes.m_e,
            "hbar": modes.hbar,
        },
    )


def _blocked_window(modes, root, guard, t_end):
    """Interval around a determinant root where |Dtilde| < guard."""
    from .propagator import dtilde

    def edge(direction):
        step = 0.01
        lo = root
        hi = root + direction * step
        while abs(dtilde(modes, hi)) < guard:
            lo = hi
            step *= 2.0
            hi = root + direction * step
            if direction > 0 and hi > t_end + 1.0:
                return t_end
            if direction < 0 and hi < 0.0:
                return 0.0
        # bisect |Dtilde| = guard between lo (inside) and hi (outside)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if abs(dtilde(modes, mid)) < guard:
                lo = mid
            else:
                hi = mid
        return hi

    return edge(-1.0), edge(+1.0)


def run_me(
    modes: NormalModes,
    envvar: EnvVariance,
    sys_spec: SqueezeSpec,
    grid,
    opts: IntegratorOptions = IntegratorOptions(),
) -> Trajectory:
    """Integrate the five moment ODEs of the master equation on a grid.

    Within blocked windows around determinant roots the trajectory is
    filled from the exact propagator and the integrator restarts from
    the exact state at the window's far edge.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] != 0.0:
        raise ValueError("grid must be nonempty and start at 0")

    m_s = modes.m_s
    hbar = modes.hbar
    bare = params_from_modes(
        modes.omega, modes.lambda_sq, modes.theta_c, m_s, modes.m_e, hbar
    )
    om2_bare = bare.omega_bare**2
    use_eff = opts.dp2_omega == "eff"

    def rhs(t, y):
        c = coeffs_general(modes, envvar, t, guard=opts.divergence_guard)
        om2 = c.omega_eff_sq
        om2_dp = om2 if use_eff else om2_bare
        gam = c.gamma_eff
        mx, mp, dx2, dp2, dxp = y
        return [
            mp / m_s,
            -m_s * om2 * mx - gam * mp + c.F,
            2.0 * dxp / m_s,
            -2.0 * m_s * om2_dp * dxp - 2.0 * gam * dp2 + 2.0 * hbar**2 * c.f1,
            -m_s * om2 * dx2 + dp2 / m_s - gam * dxp + hbar**2 * c.f2,
        ]

    sys0 = squeezed_pure(sys_spec, hbar)
    env0 = env_state_from_variance(envvar)
    full0 = product_state(sys0, env0)

    t_end = float(grid[-1])
    roots = find_divergences(modes, t_end) if t_end > 0 else []
    windows = [
        _blocked_window(modes, r, opts.divergence_guard, t_end) for r in roots
    ]
    # merge overlaps
    merged = []
    for a, b in sorted(windows):
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    windows = merged

    moments = np.full((grid.size, 5), np.nan)
    bridged = np.zeros(grid.size, dtype=bool)
    y = _moments_of(sys0)
    moments[0] = y
    t_cur = 0.0
    idx_done = 0  # grid[:idx_done + 1] filled

    segments = []
    for a, b in windows:
        segments.append((t_cur, a, False))
        segments.append((a, b, True))
        t_cur = b
    segments.append((t_cur, t_end, False))

    for a, b, blocked in segments:
        if b <= a:
            continue
        sel = np.where((grid > a + 1e-15) & (grid <= b + 1e-15))[0]
        if blocked:
            for i in sel:
                moments[i] = _moments_of(_exact_reduced(modes, full0, grid[i]))
                bridged[i] = True
            # restart from the exact state at the far edge
            y = _moments_of(_exact_reduced(modes, full0, b))
            continue
        t_eval = grid[sel]
        sol = solve_ivp(
            rhs,
            (a, b),
            y,
            method="DOP853",
            t_eval=t_eval if t_eval.size else None,
            rtol=opts.rel_tol,
            atol=opts.abs_tol,
            max_step=opts.max_step,
            dense_output=False,
        )
        if not sol.success:
            raise StepFailure(f"integrator failed on [{a}, {b}]: {sol.message}")
        if t_eval.size:
            moments[sel] = sol.y.T
        # advance the running state to the segment end
        if t_eval.size == 0 or not math.isclose(t_eval[-1], b, abs_tol=1e-12):
            sol_end = solve_ivp(
                rhs,
                (a, b),
                y,
                method="DOP853",
                rtol=opts.rel_tol,
                atol=opts.abs_tol,
                max_step=opts.max_step,
            )
            if not sol_end.success:
                raise StepFailure(
                    f"integrator failed on [{a}, {b}]: {sol_end.message}"
                )
            y = sol_end.y[:, -1]
        else:
            y = sol.y[:, -1]

    # The covariance determinant is a difference of near-equal large
    # numbers once the entries have grown several orders beyond the
    # area, so past the first breakdown the ME-derived area is noise-
    # limited; it is clamped to the purity floor there.  Use run_exact
    # for quantitative entropy at long times.
    diags = []
    for m in moments:
        state = _state_of(m)
        rad = float(np.linalg.det(state.cov))
        A = math.sqrt(max(rad, 0.0)) / (hbar / 2.0)
        diags.append(
            diagnostics_from_area(max(A, 1.0), state, m_s, modes.omega, hbar)
        )
    return Trajectory(
        times=grid,
        moments=moments,
        diags=diags,
        bridged=bridged,
        meta={
            "method": "master_equation",
            "omega": modes.omega,
            "lambda_sq": modes.lambda_sq,
            "theta_c": modes.theta_c,
            "m_s": m_s,
            "m_e": modes.m_e,
            "hbar": hbar,
            "dp2_omega": opts.dp2_omega,
            "bridges": windows,
            "first_bridge_time": windows[0][0] if windows else None,
        },
    )


@dataclass(frozen=True)
class TrajectoryComparison:
    """Per-moment deviations between two trajectories on a shared grid."""

    max_abs: dict
    max_rel: dict
    bridged_excluded: int

    @property
    def worst_rel(self) -> float:
        return max(self.max_rel.values())


def compare_trajectories(a: Trajectory, b: Trajectory) -> TrajectoryComparison:
    """Max absolute and scale-normalized deviations, excluding bridged samples.

    The relative deviation of a moment is its max absolute deviation over
    the (unbridged) grid divided by the moment's peak magnitude there, so
    moments that pass through zero do not produce spurious blowups.
    """
    if a.times.shape != b.times.shape or np.abs(a.times - b.times).max() > 1e-12:
        raise GridMismatch("trajectories use different grids")
    mask = np.ones(a.times.size, dtype=bool)
    for traj in (a, b):
        if traj.bridged is not None:
            mask &= ~traj.bridged
    max_abs = {}
    max_rel = {}
    for j, name in enumerate(MOMENT_NAMES):
        xa = a.moments[mask, j]
        xb = b.moments[mask, j]
        dev = np.abs(xa - xb).max() if mask.any() else 0.0
        scale = max(np.abs(xa).max(), np.abs(xb).max(), 1e-300) if mask.any() else 1.0
        max_abs[name] = float(dev)
        max_rel[name] = float(dev / scale)
    return TrajectoryComparison(
        max_abs=max_abs,
        max_rel=max_rel,
        bridged_excluded=int((~mask).sum()),
    )
