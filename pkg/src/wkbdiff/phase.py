"""Eigenvector fields, geometric-phase differentials, and their integrals.

For a branch p of the complex momentum, the matrix M(z) has explicit
eigenvector fields

    r+-(z) = (M12(z), exp(+-ip(z)) - M11(z))^T
    l+-(z) = (exp(-+ip(z)) - M11(z), -M12(z))

and two meromorphic geometric-phase differentials Omega_+- = omega_+- dz
that correct the normalization of r+- in WKB asymptotics.  The density
omega is evaluated from a closed form (never by differentiating the
eigenvectors numerically), and all square roots and logarithms of
derived quantities are tracked by continuity along the active path.

Path integrals of p and omega_+- are computed together by one adaptive
Gauss-Legendre walker (:class:`PhaseState` / :func:`advance_state`)
that other modules reuse for actions and WKB candidates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BranchError, PoleProximityError, QuadratureError
from .matrices import FourierMatrix, Matrix, index_data
from .momentum import MomentumBranch, infinity_momentum

TWO_PI = 2.0 * math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


# -- eigenvector pairs ------------------------------------------------------


@dataclass(frozen=True)
class EigenPair:
    """Right and left eigenvector fields of M(z) at one point.

    Satisfies M r+- = exp(+-ip) r+-, l+- M = exp(+-ip) l+-,
    l+- r-+ = 0 and l+- r+- = +- det(r+ r-).
    """

    z: complex
    p: complex
    r_plus: np.ndarray
    r_minus: np.ndarray
    l_plus: np.ndarray
    l_minus: np.ndarray

    @property
    def det_r(self) -> complex:
        """det of the column matrix (r+ r-); equals -2i M12 sin p."""
        return complex(self.r_plus[0] * self.r_minus[1] - self.r_plus[1] * self.r_minus[0])


def eigen_pair_from_p(matrix: Matrix, z: complex, p: complex) -> EigenPair:
    """Eigenvector fields from the explicit formulas, given the momentum value."""
    m11 = matrix.entries[0].eval(z)
    m12 = matrix.entries[1].eval(z)
    eip = cmath.exp(1j * p)
    eim = cmath.exp(-1j * p)
    r_plus = np.array([m12, eip - m11], dtype=complex)
    r_minus = np.array([m12, eim - m11], dtype=complex)
    l_plus = np.array([eim - m11, -m12], dtype=complex)
    l_minus = np.array([eip - m11, -m12], dtype=complex)
    return EigenPair(z=complex(z), p=complex(p), r_plus=r_plus, r_minus=r_minus,
                     l_plus=l_plus, l_minus=l_minus)


def eigen_pair(branch: MomentumBranch, z: complex,
               path: Sequence[complex] | None = None) -> EigenPair:
    return eigen_pair_from_p(branch.matrix, z, branch.value_at(z, path))


# -- geometric-phase density ------------------------------------------------


def _omega_from_p(matrix: Matrix, z: complex, p: complex, sign: int) -> complex:
    """Density omega_sign(z) with Omega_sign = omega_sign dz, momentum given."""
    s = 1 if sign in (1, "+", "+1") else -1
    m11, m12 = matrix.entries[0], matrix.entries[1]
    m12_z = m12.eval(z)
    if m12_z == 0:
        raise PoleProximityError(f"M12 vanishes at z = {z:.6g}; omega has a pole there")
    sp = cmath.sin(p)
    if abs(sp) < 1e-12:
        raise PoleProximityError(f"turning point at z = {z:.6g}; omega is singular")
    t1 = matrix.trace.derivative().eval(z)
    pprime = -t1 / (2.0 * sp)
    eip = cmath.exp(1j * s * p)
    eim = cmath.exp(-1j * s * p)
    num = (eim - m11.eval(z)) * (m12.derivative().eval(z) / m12_z) \
        - (1j * s * pprime * eip - m11.derivative().eval(z))
    return -s * 0.5j * pprime + s * num / (2j * sp)


def omega_density(branch: MomentumBranch, z: complex, sign: int,
                  path: Sequence[complex] | None = None) -> complex:
    """Geometric-phase density on the continued branch at z."""
    p = branch.value_at(z, path)
    return _omega_from_p(branch.matrix, z, p, sign)


def omega_sum_check(branch: MomentumBranch, z: complex,
                    path: Sequence[complex] | None = None) -> complex:
    """Defect of the sum rule omega_+ + omega_- = -(log det(r+ r-))'.

    Returns omega_+ + omega_- + d/dz log(-2i M12 sin p); the magnitude
    should vanish to rounding at regular points with M12 != 0.
    """
    p = branch.value_at(z, path)
    m = branch.matrix
    wp = _omega_from_p(m, z, p, +1)
    wm = _omega_from_p(m, z, p, -1)
    m12 = m.entries[1]
    sp, cp = cmath.sin(p), cmath.cos(p)
    pprime = -m.trace.derivative().eval(z) / (2.0 * sp)
    dlog = m12.derivative().eval(z) / m12.eval(z) + pprime * cp / sp
    return wp + wm + dlog


# -- joint path integration of p and omega ----------------------------------


@dataclass(frozen=True)
class PhaseState:
    """Accumulated integrals of p and omega_+- along a working path.

    ``theta`` is int p dz, ``phase_plus``/``phase_minus`` are
    int omega_+- dz, all from the path anchor to ``z`` on the continued
    branch with momentum value ``p``.
    """

    z: complex
    p: complex
    theta: complex
    phase_plus: complex
    phase_minus: complex
    error: float


def start_state(branch: MomentumBranch, z0: complex,
                path: Sequence[complex] | None = None) -> PhaseState:
    p0 = branch.value_at(z0, path)
    return PhaseState(z=complex(z0), p=p0, theta=0j, phase_plus=0j, phase_minus=0j, error=0.0)


def _gl_panel(branch: MomentumBranch, a: complex, p_a: complex, b: complex):
    """Gauss-Legendre estimates of (int p, int w+, int w-) over [a, b]."""
    half = 0.5 * (b - a)
    zs = a + half * (_GL_X + 1.0)
    m = branch.matrix
    ps = np.empty(len(zs), dtype=complex)
    z_cur, p_cur = a, p_a
    for i, zn in enumerate(zs):
        p_cur = branch.step(z_cur, p_cur, complex(zn))
        z_cur = complex(zn)
        ps[i] = p_cur
    p_b = branch.step(z_cur, p_cur, b)
    wp = np.array([_omega_from_p(m, complex(zs[i]), complex(ps[i]), +1) for i in range(len(zs))])
    wm = np.array([_omega_from_p(m, complex(zs[i]), complex(ps[i]), -1) for i in range(len(zs))])
    ith = half * np.sum(_GL_W * ps)
    iwp = half * np.sum(_GL_W * wp)
    iwm = half * np.sum(_GL_W * wm)
    return np.array([ith, iwp, iwm]), p_b


def _advance_segment(branch, a, p_a, b, tol, depth=28):
    whole, _ = _gl_panel(branch, a, p_a, b)
    mid = 0.5 * (a + b)
    left, p_mid = _gl_panel(branch, a, p_a, mid)
    right, p_b = _gl_panel(branch, mid, p_mid, b)
    err = float(np.max(np.abs(whole - (left + right))))
    if err <= tol or abs(b - a) < 1e-13:
        return left + right, p_b, err
    if depth <= 0:
        raise QuadratureError(f"path quadrature did not converge near z = {mid:.6g}")
    l_vals, _, l_err = _advance_segment(branch, a, p_a, mid, 0.5 * tol, depth - 1)
    r_vals, p_b, r_err = _advance_segment(branch, mid, p_mid, b, 0.5 * tol, depth - 1)
    return l_vals + r_vals, p_b, l_err + r_err


def advance_state(branch: MomentumBranch, state: PhaseState, z1: complex,
                  tol: float = 1e-10) -> PhaseState:
    """Extend the accumulated integrals along the straight segment to z1."""
    z1 = complex(z1)
    if z1 == state.z:
        return state
    vals, p1, err = _advance_segment(branch, state.z, state.p, z1, tol)
    return PhaseState(z=z1, p=p1,
                      theta=state.theta + vals[0],
                      phase_plus=state.phase_plus + vals[1],
                      phase_minus=state.phase_minus + vals[2],
                      error=state.error + err)


def walk_path(branch: MomentumBranch, path: Sequence[complex],
              tol: float = 1e-10) -> list[PhaseState]:
    """States at every node of a polyline, anchored at path[0]."""
    nodes = [complex(w) for w in path]
    st = start_state(branch, nodes[0])
    out = [st]
    for b in nodes[1:]:
        st = advance_state(branch, st, b, tol)
        out.append(st)
    return out


# -- phase integrals and normalized eigenvectors -----------------------------


@dataclass(frozen=True)
class PhaseIntegral:
    sign: int
    path: tuple[complex, ...]
    value: complex
    error_estimate: float


def phase_integral(branch: MomentumBranch, path: Sequence[complex], sign: int,
                   tol: float = 1e-10) -> PhaseIntegral:
    """Integral of Omega_sign along a polyline, with adaptive quadrature."""
    s = 1 if sign in (1, "+", "+1") else -1
    states = walk_path(branch, path, tol)
    val = states[-1].phase_plus if s > 0 else states[-1].phase_minus
    return PhaseIntegral(sign=s, path=tuple(complex(w) for w in path),
                         value=val, error_estimate=states[-1].error)


def normalized_eigenvector(branch: MomentumBranch, z0: complex, z: complex, sign: int,
                           path: Sequence[complex] | None = None,
                           tol: float = 1e-10) -> np.ndarray:
    """Analytic nonvanishing eigenvector V_sign(z) = exp(int Omega_sign) r_sign(z).

    Normalized at z0 (V_sign(z0) = r_sign(z0), which must be nonzero);
    independent of the path within its homotopy class in the pole-free
    region.
    """
    s = 1 if sign in (1, "+", "+1") else -1
    nodes = [complex(z0)] + ([complex(w) for w in path] if path else []) + [complex(z)]
    ep0 = eigen_pair(branch, z0)
    r0 = ep0.r_plus if s > 0 else ep0.r_minus
    if np.max(np.abs(r0)) < 1e-13:
        raise ValueError("r_sign vanishes at the normalization point z0")
    states = walk_path(branch, nodes, tol)
    st = states[-1]
    ep = eigen_pair_from_p(branch.matrix, st.z, st.p)
    r = ep.r_plus if s > 0 else ep.r_minus
    return cmath.exp(st.phase_plus if s > 0 else st.phase_minus) * r


# -- residues ----------------------------------------------------------------


@dataclass(frozen=True)
class ResidueResult:
    """Loop integral (1/2 pi i) of omega_sign around ``center``.

    ``turns`` is 2 at turning points, where the loop only closes after a
    double traversal on the two-sheeted momentum surface, and 1 at
    regular points.  ``closure_defect`` records |p_end - p_start| after
    the full traversal.  ``experimental`` marks residues at M12 zeros of
    order >= 2, where the expected value -(order) is an extrapolation.
    """

    center: complex
    sign: int
    loop_radius: float
    turns: int
    value: complex
    closure_defect: float
    m12_zero_order: int
    experimental: bool


def _loop_values(branch: MomentumBranch, center: complex, radius: float,
                 turns: int, n: int, p_start: complex):
    """omega values and M12 values at n ordered nodes along the loop."""
    angles = TWO_PI * turns * np.arange(n) / n
    zs = center + radius * np.exp(1j * angles)
    m = branch.matrix
    ps = np.empty(n, dtype=complex)
    z_cur, p_cur = complex(zs[0]), p_start
    ps[0] = p_cur
    for i in range(1, n):
        p_cur = branch.step(z_cur, p_cur, complex(zs[i]))
        z_cur = complex(zs[i])
        ps[i] = p_cur
    p_end = branch.step(z_cur, p_cur, complex(zs[0]))
    return zs, ps, p_end


def residue_at(branch: MomentumBranch, point: complex, sign: int,
               radius: float | None = None, turns: int | None = None,
               tol: float = 1e-8, max_doublings: int = 10) -> ResidueResult:
    """Residue-type loop integral of Omega_sign around ``point``.

    The requested center is snapped to the nearest singular point
    (turning point or M12 zero) within 1e-3, so approximately stated
    locations target the intended pole.  The loop is a circle traversed
    ``turns`` times with the momentum continued along it; the
    quadrature is the periodic trapezoid rule with node doubling until
    two successive estimates agree to ``tol``.  Around a simple turning
    point (turns=2) the value is -1/2 when M12(point) != 0 and -3/2
    when M12 vanishes there; around a regular zero of M12 of order q
    (turns=1) it is -q for the sign whose eigenvector vanishes and 0
    for the other.
    """
    s = 1 if sign in (1, "+", "+1") else -1
    point = complex(point)
    m = branch.matrix
    near = _singular_points_near(m, point, halfwidth=0.02)
    if near:
        snapped = min(near, key=lambda q: abs(q - point))
        if abs(snapped - point) < 1e-3:
            point = snapped
    t_at = m.trace.eval(point)
    is_tp = min(abs(t_at - 2.0), abs(t_at + 2.0)) < 1e-8
    if turns is None:
        turns = 2 if is_tp else 1
    if radius is None:
        radius = _default_loop_radius(m, point)

    # approach the circle radially from the base point, then walk the arc to
    # angle 0: that route never enters the disk, so it cannot cross the center
    start = point + radius
    rel = branch.z_ref - point
    if abs(rel) <= radius:
        # fine when the center is regular for p (e.g. a plain M12 zero):
        # continue straight outward; near a turning point this is ambiguous
        if is_tp:
            raise PoleProximityError(
                "branch base point lies inside a residue loop around a turning point")
        rel = rel if rel != 0 else complex(radius)
    approach = point + radius * rel / abs(rel)
    p_cur = branch.value_at(approach)
    phi = cmath.phase(rel)
    arc_n = max(2, int(abs(phi) * 32))
    z_cur = approach
    for phi_k in np.linspace(phi, 0.0, arc_n)[1:]:
        z_next = point + radius * cmath.exp(1j * phi_k)
        p_cur = branch.step(z_cur, p_cur, z_next)
        z_cur = z_next
    p_start = p_cur
    n = 64 * turns
    prev = None
    value = None
    for _ in range(max_doublings):
        zs, ps, p_end = _loop_values(branch, point, radius, turns, n, p_start)
        om = np.array([_omega_from_p(m, complex(zs[i]), complex(ps[i]), s)
                       for i in range(n)])
        dz = 1j * (zs - point) * (TWO_PI * turns / n)
        est = complex(np.sum(om * dz) / (2j * math.pi))
        if prev is not None and abs(est - prev) < tol:
            value = est
            break
        prev = est
        n *= 2
    if value is None:
        raise QuadratureError("residue quadrature did not converge")

    defect = abs(p_end - p_start)
    if turns == 2 and defect > 1e-6:
        raise QuadratureError("double loop did not close; turns parameter mismatch")
    if turns == 1 and defect > 1e-6 and not is_tp:
        raise QuadratureError("single loop did not close at a regular point")

    # order of the M12 zero at the center, from the winding of M12 on one turn
    m12_vals = m.entries[1].eval(point + radius * np.exp(1j * TWO_PI * np.arange(256) / 256))
    if np.min(np.abs(m12_vals)) == 0.0:
        order = -1
    else:
        order = round(float(np.sum(np.angle(m12_vals / np.roll(m12_vals, 1)))) / TWO_PI)
    return ResidueResult(center=point, sign=s, loop_radius=radius, turns=turns,
                         value=value, closure_defect=defect,
                         m12_zero_order=order, experimental=order >= 2)


def _singular_points_near(matrix: Matrix, point: complex,
                          halfwidth: float = 0.75) -> list[complex]:
    """Turning points and M12 zeros in a box around ``point``."""
    from .momentum import _roots_in_rectangle  # local import to avoid cycle at module load

    t = matrix.trace
    td = t.derivative()
    m12 = matrix.entries[1]
    region = (point.real - halfwidth, point.real + halfwidth,
              point.imag - halfwidth, point.imag + halfwidth)
    grid = (24, 24)
    found: list[complex] = []
    for sgn in (2.0, -2.0):
        f = lambda z, _s=sgn: t.eval(np.asarray(z, dtype=complex)) - _s
        try:
            for r, _ in _roots_in_rectangle(f, lambda z: td.eval(z), region, grid):
                found.append(r)
        except Exception:
            pass
    if not m12.is_zero:
        f12 = lambda z: m12.eval(np.asarray(z, dtype=complex))
        try:
            for r, _ in _roots_in_rectangle(f12, lambda z: m12.derivative().eval(z),
                                            region, grid):
                found.append(r)
        except Exception:
            pass
    return found


def _default_loop_radius(matrix: Matrix, point: complex) -> float:
    """min(0.1, half the distance to the nearest other pole or turning point)."""
    others = _singular_points_near(matrix, point)
    dists = [abs(q - point) for q in others if abs(q - point) > 1e-8]
    if not dists:
        return 0.1
    return min(0.1, 0.5 * min(dists))


# -- limits at infinity -------------------------------------------------------


@dataclass(frozen=True)
class OmegaLimitReport:
    side: str
    sign: int
    branch_s: int
    predicted: complex
    samples: tuple[tuple[float, complex], ...]
    decay_exponent: float
    value: complex


def omega_infinity_report(branch: MomentumBranch, side: str, sign: int,
                          ys: Sequence[float] = (3.0, 4.0, 5.0),
                          match_tol: float = 1e-6) -> OmegaLimitReport:
    """Measured limit of omega_sign on one side, with its predicted value.

    Predictions (for the branch normalized so that exp(ip) -> 0 on the
    given side):  side u: pi i n_u(t) for sign +, plus 2 pi i n_u(M12)
    for sign -; side d: -pi i n_d(M11) for sign +, minus 2 pi i
    n_d(M12) for sign -.  Branches with the opposite normalization are
    negated internally; ``sign`` always refers to the normalized
    branch.
    """
    m = branch.matrix
    if not isinstance(m, FourierMatrix):
        raise TypeError("infinity limits need a trigonometric-polynomial matrix")
    s = 1 if sign in (1, "+", "+1") else -1
    inf = infinity_momentum(m, side, branch, y_large=max(ys))
    work = branch if inf.s == 1 else branch.negated()

    m11, m12 = m.entries[0], m.entries[1]
    n12 = 0 if m12.is_zero else index_data(m12, side).n
    if side == "u":
        nt = index_data(m.trace, "u").n
        predicted = 1j * math.pi * nt if s > 0 else 1j * math.pi * nt + 2j * math.pi * n12
    else:
        n11 = index_data(m11, "d").n
        predicted = -1j * math.pi * n11 if s > 0 else -1j * math.pi * n11 - 2j * math.pi * n12

    sign_y = 1.0 if side == "u" else -1.0
    x0 = work.z_ref.real
    samples = []
    for y in sorted(ys):
        z = complex(x0, sign_y * y)
        samples.append((float(y), _omega_from_p(m, z, work.value_at(z), s)))
    resid = [abs(v - predicted) for _, v in samples]
    if resid[-1] > match_tol:
        raise BranchError(
            f"omega does not settle to the predicted limit (residual {resid[-1]:.3e}); "
            "insufficient Y")
    floor = 1e-13 * max(1.0, abs(predicted))
    if resid[0] > floor and resid[1] > floor:
        decay = (math.log(resid[0]) - math.log(resid[1])) / (samples[1][0] - samples[0][0])
    else:
        decay = float("inf")
    return OmegaLimitReport(side=side, sign=s, branch_s=inf.s, predicted=predicted,
                            samples=tuple(samples), decay_exponent=decay,
                            value=samples[-1][1])


def omega_infinity_limit(branch: MomentumBranch, side: str, sign: int,
                         ys: Sequence[float] = (3.0, 4.0, 5.0)) -> complex:
    """Measured limit of omega_sign as Im z -> +-oo (see omega_infinity_report)."""
    return omega_infinity_report(branch, side, sign, ys).value
