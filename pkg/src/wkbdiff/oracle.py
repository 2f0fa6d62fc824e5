"""Independent brute-force references used to validate the asymptotic machinery.

Nothing here knows about momentum branches or phase integrals: lattice
propagation multiplies matrices step by step (with per-step
renormalization and a separate log-magnitude ledger, since solutions
grow like exp(|Im theta|/h)), the scalar three-term recurrence iterates
literally, the closed-form eigensolver is the quadratic formula, and
the contour integrator is the periodic trapezoid rule with node
doubling.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateInputError, QuadratureError
from .matrices import Matrix

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LatticeTrajectory:
    """Renormalized lattice orbit of Psi(z+h) = M(z) Psi(z).

    ``directions[n]`` is the unit vector at ``start + n*h`` (or
    ``start - n*h`` when propagated backward) and ``logmags[n]`` the
    accumulated natural log of the magnitude, so the raw solution is
    ``directions[n] * exp(logmags[n])``.
    """

    start: complex
    h: float
    steps: int
    directions: np.ndarray
    logmags: np.ndarray

    def value(self, n: int) -> np.ndarray:
        """Raw vector at step n; may overflow for large |logmags|."""
        return self.directions[n] * math.exp(self.logmags[n])

    def point(self, n: int) -> complex:
        sgn = 1.0 if self.steps >= 0 else -1.0
        return self.start + sgn * n * self.h


def propagate(matrix: Matrix, start: complex, init: Sequence[complex],
              h: float, steps: int) -> LatticeTrajectory:
    """Step-by-step lattice propagation with per-step renormalization.

    Negative ``steps`` propagates backward using the exact unimodular
    inverse [[m22, -m12], [-m21, m11]].
    """
    if h <= 0:
        raise ValueError("h must be positive")
    u = np.asarray(init, dtype=complex)
    if u.shape != (2,):
        raise ValueError("init must be a complex 2-vector")
    norm = float(np.linalg.norm(u))
    if norm == 0:
        raise DegenerateInputError("initial vector must be nonzero")
    n_steps = abs(int(steps))
    directions = np.empty((n_steps + 1, 2), dtype=complex)
    logmags = np.empty(n_steps + 1, dtype=float)
    directions[0] = u / norm
    logmags[0] = math.log(norm)
    z = complex(start)
    forward = steps >= 0
    for n in range(n_steps):
        if forward:
            m = matrix.eval(z)
        else:
            a = matrix.eval(z - h)
            m = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]], dtype=complex)
        w = m @ directions[n]
        norm = float(np.linalg.norm(w))
        directions[n + 1] = w / norm
        logmags[n + 1] = logmags[n] + math.log(norm)
        z = z + h if forward else z - h
    return LatticeTrajectory(start=complex(start), h=float(h), steps=int(steps),
                             directions=directions, logmags=logmags)


def scalar_recurrence(v, z_start: complex, psi0: complex, psi_minus1: complex,
                      h: float, steps: int) -> list[complex]:
    """Iterate psi(z+h) = -psi(z-h) - v(z) psi(z) from two seed values.

    Returns psi at z_start + n*h for n = 0..steps.  Agrees with
    :func:`propagate` applied to the companion matrix [[-v, -1], [1, 0]]
    via Psi(z) = (psi(z), psi(z-h)).
    """
    out = [complex(psi0)]
    prev, cur = complex(psi_minus1), complex(psi0)
    z = complex(z_start)
    for _ in range(int(steps)):
        nxt = -prev - v.eval(z) * cur
        prev, cur = cur, nxt
        z += h
        out.append(cur)
    return out


def eigen_closed_form(m: Sequence[Sequence[complex]]):
    """Eigenvalues and eigenvectors of a unimodular 2x2 matrix, quadratic formula.

    Returns two (eigenvalue, eigenvector) pairs; the eigenvalue product
    is 1.  Raises :class:`DegenerateInputError` on defective matrices
    (trace = +-2).
    """
    a = np.asarray(m, dtype=complex)
    tr = a[0, 0] + a[1, 1]
    disc = cmath.sqrt(tr * tr - 4.0)
    if abs(disc) < 1e-12:
        raise DegenerateInputError("matrix is defective (trace = +-2)")
    lam1 = (tr + disc) / 2.0
    lam2 = (tr - disc) / 2.0
    pairs = []
    for lam in (lam1, lam2):
        vec = np.array([a[0, 1], lam - a[0, 0]], dtype=complex)
        if np.max(np.abs(vec)) < 1e-14 * max(1.0, abs(lam)):
            vec = np.array([lam - a[1, 1], a[1, 0]], dtype=complex)
        pairs.append((lam, vec))
    return pairs


def _eval_on_contour(f: Callable, zs: np.ndarray) -> np.ndarray:
    """Evaluate f on ordered contour nodes, vectorized when possible."""
    try:
        vals = np.asarray(f(zs), dtype=complex)
        if vals.shape == zs.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([f(complex(z)) for z in zs], dtype=complex)


def contour_integral_estimates(f: Callable, center: complex, radius: float,
                               turns: int = 1, max_doublings: int = 12,
                               n0: int = 16) -> list[complex]:
    """Successive trapezoid estimates of (1/2 pi i) times the loop integral.

    Nodes are equidistant in the loop parameter covering ``turns`` full
    circles; each refinement doubles the node count.  ``f`` receives the
    ordered array of contour points (so branch-tracked integrands can
    continue themselves along it) or, failing that, one point at a time.
    """
    ests = []
    n = n0 * max(1, turns)
    for _ in range(max_doublings):
        phis = TWO_PI * turns * np.arange(n) / n
        zs = center + radius * np.exp(1j * phis)
        vals = _eval_on_contour(f, zs)
        dz = 1j * (zs - center) * (TWO_PI * turns / n)
        ests.append(complex(np.sum(vals * dz) / (2j * math.pi)))
        n *= 2
    return ests


def contour_integral(f: Callable, center: complex, radius: float,
                     turns: int = 1, tol: float = 1e-10,
                     max_doublings: int = 12) -> complex:
    """Loop integral (1/2 pi i) oint f dz by trapezoid with node doubling.

    For ``turns > 1`` the integrand must continue itself consistently
    across the cut when called on the ordered node array.
    """
    ests = contour_integral_estimates(f, center, radius, turns, max_doublings)
    for a, b in zip(ests[:-1], ests[1:]):
        if abs(b - a) < tol:
            return b
    raise QuadratureError("contour integral did not converge within the doubling budget")


def projective_distance(u: Sequence[complex], v: Sequence[complex]) -> float:
    """Sine of the angle between complex lines spanned by u and v."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    cross = abs(u[0] * v[1] - u[1] * v[0])
    return float(cross / (np.linalg.norm(u) * np.linalg.norm(v)))
