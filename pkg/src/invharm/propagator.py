"""Mode functions, the full transition matrix T(t), the partial-knowledge
matrix T_p(t) with its cofactor inverse, and the drift matrix Tdot_p T_p^-1.

Phase-space ordering is [x, p, y, q] throughout: system position/momentum
first, environment second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modes import NormalModes, gkernels

__all__ = [
    "SingularAtDivergence",
    "ModeFunctions",
    "PropagatorMatrices",
    "mode_functions",
    "full_transition",
    "tp_matrix",
    "dtilde",
    "det_m1",
    "mode_blocks",
    "cross_block",
    "tp_inverse",
    "drift_matrix",
    "propagator_matrices",
    "DELTA_SINGULAR",
    "SYMPLECTIC_FORM",
]

# default |Dtilde| below which T_p is treated as non-invertible
DELTA_SINGULAR = 1e-12

# canonical antisymmetric form for ordering [x, p, y, q]
SYMPLECTIC_FORM = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


class SingularAtDivergence(ArithmeticError):
    """Raised when |Dtilde| is below the singularity guard.

    At these instants the map from the current system state back to the
    initial one is non-invertible and no master equation exists.
    """


@dataclass(frozen=True)
class ModeFunctions:
    """phi_0, phi_1 and their first three time derivatives at one time."""

    phi0: float
    dphi0: float
    d2phi0: float
    d3phi0: float
    phi1: float
    dphi1: float
    d2phi1: float
    d3phi1: float


@dataclass(frozen=True)
class PropagatorMatrices:
    """Full transition matrix, partial-knowledge matrix, and determinant."""

    T: np.ndarray
    Tp: np.ndarray
    Dtilde: float
    t: float


def mode_functions(modes: NormalModes, t: float) -> ModeFunctions:
    """Evaluate the two mode functions and derivatives to third order.

    phi_0 mixes the kernels of the two normal modes with cos^2/sin^2
    weights; phi_1 carries the sin(2 theta)/2 cross weight.  Derivatives
    follow from s' = c, c' = k s for each kernel.
    """
    w2 = -(modes.omega**2)
    l2 = modes.lambda_sq
    c1, s1 = gkernels(w2, t)
    c2, s2 = gkernels(l2, t)
    cw = math.cos(modes.theta_c) ** 2
    sw = math.sin(modes.theta_c) ** 2
    x = 0.5 * math.sin(2.0 * modes.theta_c)
    return ModeFunctions(
        phi0=cw * s1 + sw * s2,
        dphi0=cw * c1 + sw * c2,
        d2phi0=cw * w2 * s1 + sw * l2 * s2,
        d3phi0=cw * w2 * c1 + sw * l2 * c2,
        phi1=x * (s1 - s2),
        dphi1=x * (c1 - c2),
        d2phi1=x * (w2 * s1 - l2 * s2),
        d3phi1=x * (w2 * c1 - l2 * c2),
    )


def _mode_blocks(mf: ModeFunctions, m_s: float, m_e: float):
    """The 2x2 blocks M_0, M_1 forming rows 1-2 of T and T_p."""
    m0 = np.array(
        [
            [mf.dphi0, mf.phi0 / m_s],
            [m_s * mf.d2phi0, mf.dphi0],
        ]
    )
    m1 = np.array(
        [
            [math.sqrt(m_e / m_s) * mf.dphi1, mf.phi1 / math.sqrt(m_s * m_e)],
            [math.sqrt(m_s * m_e) * mf.d2phi1, math.sqrt(m_s / m_e) * mf.dphi1],
        ]
    )
    return m0, m1


def full_transition(modes: NormalModes, t: float) -> np.ndarray:
    """Build the full 4x4 transition matrix for [x, p, y, q].

    Conjugation recipe: mass-scale each pair, rotate the two scaled pairs
    jointly by theta_c into normal coordinates, propagate each normal mode
    with its kernel, rotate and scale back.  The rotation angle is taken
    as theta_c itself (not its negative); the two choices differ only by
    the unobservable global sign of phi_1, and this one makes rows 1-2
    coincide with the M_0/M_1 block prescription.
    """
    c1, s1 = gkernels(-(modes.omega**2), t)
    c2, s2 = gkernels(modes.lambda_sq, t)
    block = np.zeros((4, 4))
    block[0, 0] = c1
    block[0, 1] = s1
    block[1, 0] = -(modes.omega**2) * s1
    block[1, 1] = c1
    block[2, 2] = c2
    block[2, 3] = s2
    block[3, 2] = modes.lambda_sq * s2
    block[3, 3] = c2

    ct = math.cos(modes.theta_c)
    st = math.sin(modes.theta_c)
    # joint rotation of the two scaled (position, momentum) pairs
    rot = np.array(
        [
            [ct, 0.0, -st, 0.0],
            [0.0, ct, 0.0, -st],
            [st, 0.0, ct, 0.0],
            [0.0, st, 0.0, ct],
        ]
    )
    rs = math.sqrt(modes.m_s)
    re = math.sqrt(modes.m_e)
    scale = np.diag([rs, 1.0 / rs, re, 1.0 / re])
    unscale = np.diag([1.0 / rs, rs, 1.0 / re, re])
    return unscale @ rot @ block @ rot.T @ scale


def tp_matrix(modes: NormalModes, t: float) -> np.ndarray:
    """Partial-knowledge matrix: rows 1-2 of T, identity rows below."""
    mf = mode_functions(modes, t)
    m0, m1 = _mode_blocks(mf, modes.m_s, modes.m_e)
    tp = np.eye(4)
    tp[0:2, 0:2] = m0
    tp[0:2, 2:4] = m1
    return tp


def dtilde(modes: NormalModes, t: float) -> float:
    """Determinant of the system block of T_p (dimensionless, 1 at t=0).

    Algebraically dphi0^2 - phi0 d2phi0, but evaluated via the kernel
    identity c^2 - k s^2 = 1 so that the exponentially large squares
    never appear: the naive form loses all precision once the unstable
    kernel dwarfs 1/eps.
    """
    c1, s1 = gkernels(-(modes.omega**2), t)
    c2, s2 = gkernels(modes.lambda_sq, t)
    cw = math.cos(modes.theta_c) ** 2
    sw = math.sin(modes.theta_c) ** 2
    ksum = modes.lambda_sq - modes.omega**2
    return cw * cw + sw * sw + cw * sw * (2.0 * c1 * c2 - ksum * s1 * s2)


def det_m1(modes: NormalModes, t: float) -> float:
    """Determinant of the cross block M_1 (dphi1^2 - phi1 d2phi1),
    evaluated in the same cancellation-free form as :func:`dtilde`."""
    c1, s1 = gkernels(-(modes.omega**2), t)
    c2, s2 = gkernels(modes.lambda_sq, t)
    x = 0.5 * math.sin(2.0 * modes.theta_c)
    ksum = modes.lambda_sq - modes.omega**2
    return x * x * (2.0 - 2.0 * c1 * c2 + ksum * s1 * s2)


def mode_blocks(modes: NormalModes, t: float) -> tuple[np.ndarray, np.ndarray]:
    """The 2x2 blocks (M_0, M_1) of rows 1-2 of the transition matrices."""
    mf = mode_functions(modes, t)
    return _mode_blocks(mf, modes.m_s, modes.m_e)


def cross_block(modes: NormalModes, t: float) -> np.ndarray:
    """The bilinear block X = M_0^T J M_1 (J the 2x2 antisymmetric form).

    Its entries are the Wronskian-like combinations of the two mode
    functions; each is expanded with the kernel identity c^2 - k s^2 = 1
    so that only terms at the scale of the result appear.  Together with
    :func:`dtilde` and :func:`det_m1` this gives every 2-column minor of
    [M_0 | M_1], and hence a cancellation-free reduced-state area.
    """
    c1, s1 = gkernels(-(modes.omega**2), t)
    c2, s2 = gkernels(modes.lambda_sq, t)
    cw = math.cos(modes.theta_c) ** 2
    sw = math.sin(modes.theta_c) ** 2
    x = 0.5 * math.sin(2.0 * modes.theta_c)
    w2 = -(modes.omega**2)
    l2 = modes.lambda_sq
    m_s, m_e = modes.m_s, modes.m_e
    # dphi0 d2phi1 - d2phi0 dphi1
    w_dd = x * (w2 * s1 * c2 - l2 * c1 * s2)
    # dphi0 dphi1 - d2phi0 phi1
    w_dc = x * (
        cw - sw + (sw - cw) * c1 * c2 + (cw * w2 - sw * l2) * s1 * s2
    )
    # phi0 d2phi1 - dphi0 dphi1
    w_cd = x * (
        sw - cw + (cw - sw) * c1 * c2 + (sw * w2 - cw * l2) * s1 * s2
    )
    # phi0 dphi1 - dphi0 phi1
    w_cc = x * (c1 * s2 - s1 * c2)
    return np.array(
        [
            [math.sqrt(m_s * m_e) * w_dd, math.sqrt(m_s / m_e) * w_dc],
            [math.sqrt(m_e / m_s) * w_cd, w_cc / math.sqrt(m_s * m_e)],
        ]
    )


def tp_inverse(tp: np.ndarray, delta_singular: float = DELTA_SINGULAR) -> np.ndarray:
    """Invert T_p via the 2x2 cofactor structure of its special form.

    Raises :class:`SingularAtDivergence` when the system-block determinant
    is within ``delta_singular`` of zero.
    """
    a, b, e, f = tp[0]
    c, d, g, h = tp[1]
    d12 = a * d - b * c
    if abs(d12) <= delta_singular:
        raise SingularAtDivergence(f"|Dtilde| = {abs(d12):.3e} below guard")
    d13 = a * g - e * c
    d14 = a * h - f * c
    d23 = b * g - e * d
    d24 = b * h - f * d
    inv = np.array(
        [
            [d, -b, d23, d24],
            [-c, a, -d13, -d14],
            [0.0, 0.0, d12, 0.0],
            [0.0, 0.0, 0.0, d12],
        ]
    )
    return inv / d12


def _tp_dot(modes: NormalModes, t: float) -> np.ndarray:
    mf = mode_functions(modes, t)
    m_s, m_e = modes.m_s, modes.m_e
    dot = np.zeros((4, 4))
    dot[0, 0] = mf.d2phi0
    dot[0, 1] = mf.dphi0 / m_s
    dot[1, 0] = m_s * mf.d3phi0
    dot[1, 1] = mf.d2phi0
    dot[0, 2] = math.sqrt(m_e / m_s) * mf.d2phi1
    dot[0, 3] = mf.dphi1 / math.sqrt(m_s * m_e)
    dot[1, 2] = math.sqrt(m_s * m_e) * mf.d3phi1
    dot[1, 3] = math.sqrt(m_s / m_e) * mf.d2phi1
    return dot


def drift_matrix(
    modes: NormalModes, t: float, delta_singular: float = DELTA_SINGULAR
) -> np.ndarray:
    """Tdot_p T_p^-1: the generator of the partial-knowledge flow.

    Rows 3-4 vanish identically; entry (0, 1) is 1/m_s exactly; entry
    (1, 0) is -m_s omega_eff^2, (1, 1) is -gamma_eff, and (1, 2), (1, 3)
    are the force couplings F_y, F_q.
    """
    tp = tp_matrix(modes, t)
    return _tp_dot(modes, t) @ tp_inverse(tp, delta_singular)


def propagator_matrices(modes: NormalModes, t: float) -> PropagatorMatrices:
    """Bundle T, T_p, and Dtilde at a single time."""
    return PropagatorMatrices(
        T=full_transition(modes, t),
        Tp=tp_matrix(modes, t),
        Dtilde=dtilde(modes, t),
        t=t,
    )
