"""WKB candidate solutions and the diagnostics that certify their order.

The candidates are

    Psi0_+-(z) = exp(+- i theta(z) / h) V_+-(z),
    theta(z) = int_{z0}^{z} p dz,

built from the normalized analytic eigenvectors.  They are exact
eigenvectors of M(z) pointwise, and their one-step defect under
Psi(z+h) = M(z) Psi(z) is O(h).  The transfer diagnostics

    W(z) = V^{-1}(z+h) V(z),
    T(z) = Psi0^{-1}(z+h) M(z) Psi0(z)

have unit diagonals up to O(h^2) and off-diagonals O(h) after the
oscillatory factors exp(-+ 2 i theta / h) are stripped.  Everything
here is computed in overflow-safe form: the large exponentials are
only ever assembled on demand, and all fitted quantities are built
from ratios of moderate numbers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateInputError
from .geometry import VerticalCurve
from .matrices import Matrix
from .momentum import MomentumBranch
from .phase import PhaseState, advance_state, eigen_pair_from_p, walk_path


def default_h_grid() -> np.ndarray:
    """Geometric grid of 8 step sizes from 10^-1.5 down to 10^-3."""
    return np.geomspace(10.0 ** -1.5, 1e-3, 8)


@dataclass(frozen=True)
class WkbCandidate:
    """One WKB candidate Psi0_sign, normalized at z0.

    ``waypoints`` fix the homotopy class of the path used for theta and
    the phase integrals: evaluation at z walks z0 -> waypoints -> z
    along straight segments.
    """

    sign: int
    z0: complex
    branch: MomentumBranch
    waypoints: tuple[complex, ...] = ()

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def state_at(self, z: complex, tol: float = 1e-12) -> PhaseState:
        nodes = [complex(self.z0), *self.waypoints, complex(z)]
        dedup = [nodes[0]]
        for w in nodes[1:]:
            if w != dedup[-1]:
                dedup.append(w)
        return walk_path(self.branch, dedup, tol)[-1]


def _v_columns(matrix: Matrix, st: PhaseState) -> np.ndarray:
    """Normalized eigenvector matrix (V+ V-) at the walked state."""
    ep = eigen_pair_from_p(matrix, st.z, st.p)
    vp = cmath.exp(st.phase_plus) * ep.r_plus
    vm = cmath.exp(st.phase_minus) * ep.r_minus
    return np.column_stack([vp, vm])


def psi0_scaled(candidate: WkbCandidate, z: complex, h: float,
                tol: float = 1e-12) -> tuple[np.ndarray, complex]:
    """Overflow-safe candidate value as (vector, log_scale).

    The candidate equals ``vector * exp(log_scale)``; the vector part is
    the normalized eigenvector V_sign(z), of moderate magnitude.
    """
    st = candidate.state_at(z, tol)
    v = _v_columns(candidate.branch.matrix, st)
    col = v[:, 0] if candidate.sign > 0 else v[:, 1]
    return col, 1j * candidate.sign * st.theta / h


def psi0(candidate: WkbCandidate, z: complex, h: float, tol: float = 1e-12) -> np.ndarray:
    """Raw candidate vector; may overflow for large |Im theta| / h.

    Use :func:`psi0_scaled` when the exponential scale is extreme.
    """
    col, log_scale = psi0_scaled(candidate, z, h, tol)
    return col * cmath.exp(log_scale)


def _step_factors(branch: MomentumBranch, st: PhaseState, h: float,
                  tol: float = 1e-12) -> tuple[PhaseState, complex, complex]:
    """State at z+h plus the per-step mean momentum Delta and p(z)."""
    st2 = advance_state(branch, st, st.z + h, tol)
    delta = (st2.theta - st.theta) / h
    return st2, delta, st.p


def relative_residual(candidate: WkbCandidate, z: complex, h: float,
                      tol: float = 1e-12) -> float:
    """One-step defect |Psi0(z+h) - M(z) Psi0(z)| / |M(z) Psi0(z)|.

    Computed after factoring out exp(+- i theta(z+h)/h), so the value
    is meaningful even where the raw candidate would overflow.
    """
    br = candidate.branch
    st = candidate.state_at(z, tol)
    st2, delta, p = _step_factors(br, st, h, tol)
    s = candidate.sign
    v1 = _v_columns(br.matrix, st)[:, 0 if s > 0 else 1]
    v2 = _v_columns(br.matrix, st2)[:, 0 if s > 0 else 1]
    factor = cmath.exp(-1j * s * (delta - p))
    ref = factor * v1
    return float(np.linalg.norm(v2 - ref) / np.linalg.norm(ref))


def w_matrix(branch: MomentumBranch, z: complex, h: float, z0: complex,
             tol: float = 1e-12) -> np.ndarray:
    """Transfer matrix W(z) = V^{-1}(z+h) V(z) of the normalized frame."""
    cand = WkbCandidate(sign=1, z0=complex(z0), branch=branch)
    st = cand.state_at(z, tol)
    st2 = advance_state(branch, st, st.z + h, tol)
    v1 = _v_columns(branch.matrix, st)
    v2 = _v_columns(branch.matrix, st2)
    return np.linalg.solve(v2, v1)


def t_matrix(branch: MomentumBranch, z: complex, h: float, z0: complex,
             tol: float = 1e-12) -> np.ndarray:
    """Transfer matrix T(z) = Psi0^{-1}(z+h) M(z) Psi0(z).

    Assembled from the stripped parts; the off-diagonal entries carry
    the raw oscillatory factors exp(-+ 2 i theta(z)/h) and can overflow
    for extreme Im theta / h (use :func:`order_diagnostics` for the
    overflow-safe stripped magnitudes).
    """
    parts = _t_parts(branch, z, h, z0, tol)
    osc = cmath.exp(-2j * parts["theta"] / h)
    return np.array([[parts["t11"], parts["t12_stripped"] * osc],
                     [parts["t21_stripped"] / osc, parts["t22"]]], dtype=complex)


def _t_parts(branch: MomentumBranch, z: complex, h: float, z0: complex,
             tol: float = 1e-12) -> dict:
    cand = WkbCandidate(sign=1, z0=complex(z0), branch=branch)
    st = cand.state_at(z, tol)
    st2, delta, p = _step_factors(branch, st, h, tol)
    v1 = _v_columns(branch.matrix, st)
    v2 = _v_columns(branch.matrix, st2)
    w = np.linalg.solve(v2, v1)
    e_diag = cmath.exp(-1j * (delta - p))
    e_off = cmath.exp(-1j * (delta + p))
    return {
        "w": w,
        "theta": st.theta,
        "p": p,
        "delta": delta,
        "t11": w[0, 0] * e_diag,
        "t22": w[1, 1] / e_diag,
        "t12_stripped": w[0, 1] * e_off,
        "t21_stripped": w[1, 0] / e_off,
        "state": st,
    }


def order_diagnostics(branch: MomentumBranch, z: complex, h: float, z0: complex,
                      tol: float = 1e-12) -> dict:
    """Overflow-safe magnitudes whose h-scaling certifies the WKB orders.

    Diagonal defects scale like h^2, stripped off-diagonals and the
    candidate residuals like h.
    """
    parts = _t_parts(branch, z, h, z0, tol)
    st = parts["state"]
    sp = cmath.sin(st.p)
    pprime = -branch.matrix.trace.derivative().eval(st.z) / (2.0 * sp)
    w = parts["w"]
    half = cmath.exp(-0.5j * h * pprime)
    cand_p = WkbCandidate(sign=1, z0=complex(z0), branch=branch)
    cand_m = WkbCandidate(sign=-1, z0=complex(z0), branch=branch)
    return {
        "w11_defect": abs(w[0, 0] * half - 1.0),
        "w22_defect": abs(w[1, 1] / half - 1.0),
        "w12": abs(w[0, 1]),
        "w21": abs(w[1, 0]),
        "t11_defect": abs(parts["t11"] - 1.0),
        "t22_defect": abs(parts["t22"] - 1.0),
        "t12_stripped": abs(parts["t12_stripped"]),
        "t21_stripped": abs(parts["t21_stripped"]),
        "residual_plus": relative_residual(cand_p, z, h, tol),
        "residual_minus": relative_residual(cand_m, z, h, tol),
    }


@dataclass(frozen=True)
class ScalingReport:
    """Log-log fit of a measured magnitude against the step size."""

    h_grid: tuple[float, ...]
    values: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float

    def __post_init__(self):
        if len(self.h_grid) < 4:
            raise ValueError("need at least 4 step sizes")
        if any(b >= a for a, b in zip(self.h_grid[:-1], self.h_grid[1:])):
            raise ValueError("h grid must be strictly decreasing")


def scaling_fit(measure: Callable[[complex, float], float], z: complex,
                h_grid: Sequence[float] | None = None,
                underflow: float = 1e-14) -> ScalingReport:
    """Least-squares slope of log|measure(z, h)| against log h.

    Points whose measured value drops below ``underflow`` are discarded;
    at least four must survive.
    """
    hs = np.asarray(default_h_grid() if h_grid is None else h_grid, dtype=float)
    pairs = []
    for h in hs:
        val = float(measure(z, float(h)))
        if val > underflow:
            pairs.append((float(h), val))
    if len(pairs) < 4:
        raise DegenerateInputError("fewer than 4 usable points survive underflow filtering")
    hh = np.array([p[0] for p in pairs])
    vv = np.array([p[1] for p in pairs])
    lx, ly = np.log(hh), np.log(vv)
    slope, intercept = np.polyfit(lx, ly, 1)
    fit = slope * lx + intercept
    ss_res = float(np.sum((ly - fit) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingReport(h_grid=tuple(hh), values=tuple(vv),
                         slope=float(slope), intercept=float(intercept),
                         r_squared=float(r2))


def global_residual_profile(candidate: WkbCandidate, curve: VerticalCurve, h: float,
                            samples_per_unit: int = 10,
                            tol: float = 1e-12) -> list[tuple[float, float]]:
    """Relative one-step residual of the candidate sampled along a curve.

    The walk accumulates theta and the phase integrals incrementally
    along the curve; at each sample the probe point z+h is reached by a
    short horizontal segment, which must stay inside the regular
    region (the curve should lie in an admissible subdomain).
    """
    zs, _ = curve.sample_points(samples_per_unit)
    br = candidate.branch
    s = candidate.sign
    st = candidate.state_at(complex(zs[0]), tol)
    out: list[tuple[float, float]] = []
    for z in zs:
        st = advance_state(br, st, complex(z), tol)
        st2, delta, p = _step_factors(br, st, h, tol)
        v1 = _v_columns(br.matrix, st)[:, 0 if s > 0 else 1]
        v2 = _v_columns(br.matrix, st2)[:, 0 if s > 0 else 1]
        ref = cmath.exp(-1j * s * (delta - p)) * v1
        res = float(np.linalg.norm(v2 - ref) / np.linalg.norm(ref))
        out.append((float(z.imag), res))
    return out
