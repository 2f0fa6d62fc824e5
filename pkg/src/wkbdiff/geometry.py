"""Vertical curves, action integrals, and canonicity verification.

A vertical curve is one along which Re z is a piecewise-C1 function of
Im z; here curves are polylines with strictly increasing imaginary
part.  A curve is canonical with respect to a momentum branch p when,
along it, Im of the action int p dz strictly increases with y while
Im of int (p - pi) dz strictly decreases.  Both derivatives reduce to
pointwise margins

    m1(y) = Im(p(z(y)) z'(y)),      m2(y) = -Im((p(z(y)) - pi) z'(y)),

so no quadrature is needed for the check; corners are evaluated
one-sidedly on each adjacent segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BranchError, PoleProximityError
from .matrices import FourierMatrix
from .momentum import MomentumBranch, infinity_momentum
from .phase import PhaseState, advance_state, start_state, walk_path


@dataclass(frozen=True)
class VerticalCurve:
    """Piecewise-linear vertical curve given by nodes with increasing Im.

    ``infinite_up`` / ``infinite_down`` mark a vertical continuation at
    the x of the last / first node, for the unbounded regime.
    """

    nodes: tuple[complex, ...]
    infinite_up: bool = False
    infinite_down: bool = False

    def __init__(self, nodes: Sequence[complex], infinite_up: bool = False,
                 infinite_down: bool = False):
        ns = tuple(complex(w) for w in nodes)
        if len(ns) < 2:
            raise ValueError("a vertical curve needs at least two nodes")
        for a, b in zip(ns[:-1], ns[1:]):
            if not b.imag > a.imag:
                raise ValueError("node imaginary parts must be strictly increasing")
        object.__setattr__(self, "nodes", ns)
        object.__setattr__(self, "infinite_up", bool(infinite_up))
        object.__setattr__(self, "infinite_down", bool(infinite_down))

    @classmethod
    def vertical_line(cls, x: float, y_min: float, y_max: float, **kw) -> "VerticalCurve":
        return cls([complex(x, y_min), complex(x, y_max)], **kw)

    def sample_points(self, samples_per_unit: int) -> tuple[np.ndarray, np.ndarray]:
        """Sample points along the curve and dz/dy on each (one-sided at corners)."""
        zs: list[complex] = []
        dzdy: list[complex] = []
        for a, b in zip(self.nodes[:-1], self.nodes[1:]):
            dy = b.imag - a.imag
            n = max(2, int(math.ceil(samples_per_unit * dy)) + 1)
            ts = np.linspace(0.0, 1.0, n)
            seg = a + (b - a) * ts
            slope = (b - a) / dy
            zs.extend(seg.tolist())
            dzdy.extend([slope] * n)
        return np.array(zs, dtype=complex), np.array(dzdy, dtype=complex)


@dataclass(frozen=True)
class ActionSample:
    """theta(z) = int_{z0}^{z} p dz accumulated along the walked path."""

    z: complex
    theta: complex
    path_index: int


def action_theta(branch: MomentumBranch, z0: complex,
                 path: Sequence[complex], tol: float = 1e-10) -> list[ActionSample]:
    """Cumulative action along a polyline starting at z0.

    Nodes are the polyline vertices; ``path`` may start at z0 or it is
    prepended.  The derivative of the result matches the continued p at
    every node (adaptive quadrature of the continued branch).
    """
    nodes = [complex(w) for w in path]
    if abs(nodes[0] - complex(z0)) > 1e-14 * max(1.0, abs(z0)):
        nodes = [complex(z0)] + nodes
    states = walk_path(branch, nodes, tol)
    return [ActionSample(z=st.z, theta=st.theta, path_index=i)
            for i, st in enumerate(states)]


@dataclass(frozen=True)
class CanonicityReport:
    """Pointwise canonicity margins of a vertical curve for one branch.

    ``samples`` rows are (y, m1, m2).  ``canonical`` requires both
    margins positive at every sample including one-sided corner values;
    ``strictly`` additionally requires them >= ``strict_eps``.  For
    curves marked infinite the asymptotic margins (constant in y, from
    the linear momentum asymptote) are included in the verdict.
    """

    curve: VerticalCurve
    branch: MomentumBranch
    samples: np.ndarray
    min_margin: float
    canonical: bool
    strictly: bool
    strict_eps: float
    asymptotic_up: tuple[float, float] | None = None
    asymptotic_down: tuple[float, float] | None = None


def _margins(p: complex, slope: complex) -> tuple[float, float]:
    m1 = (p * slope).imag
    m2 = -((p - math.pi) * slope).imag
    return m1, m2


def canonicity_check(branch: MomentumBranch, curve: VerticalCurve,
                     samples_per_unit: int = 20, strict_eps: float = 1e-3,
                     tol: float = 1e-10) -> CanonicityReport:
    """Verify the canonicity inequalities along the curve by pointwise margins."""
    zs, slopes = curve.sample_points(samples_per_unit)
    ps = branch.values_on(zs)
    rows = np.empty((len(zs), 3), dtype=float)
    for i, (z, slope, p) in enumerate(zip(zs, slopes, ps)):
        m1, m2 = _margins(p, slope)
        rows[i] = (z.imag, m1, m2)
    min_margin = float(np.min(rows[:, 1:]))

    asym_up = asym_down = None
    if curve.infinite_up or curve.infinite_down:
        if not isinstance(branch.matrix, FourierMatrix):
            raise BranchError("infinite curves require a trigonometric-polynomial matrix")
        if curve.infinite_up:
            asym_up = _asymptotic_margins(branch, "u", curve.nodes[-1].real)
            min_margin = min(min_margin, *asym_up)
        if curve.infinite_down:
            asym_down = _asymptotic_margins(branch, "d", curve.nodes[0].real)
            min_margin = min(min_margin, *asym_down)

    return CanonicityReport(
        curve=curve, branch=branch, samples=rows,
        min_margin=min_margin,
        canonical=min_margin > 0.0,
        strictly=min_margin >= strict_eps,
        strict_eps=strict_eps,
        asymptotic_up=asym_up, asymptotic_down=asym_down,
    )


def _asymptotic_margins(branch: MomentumBranch, side: str, x: float) -> tuple[float, float]:
    """Margins of the vertical asymptote at Re z = x, from the momentum asymptote.

    On a vertical ray z'(y) = i, so m1 = Re p and m2 = pi - Re p, and the
    linear asymptote makes Re p constant up to exponentially small terms.
    """
    inf = infinity_momentum(branch.matrix, side, branch)
    slope = 2.0 * math.pi * inf.n_t * (1.0 if side == "u" else -1.0)
    re_p = inf.s * (slope * x + inf.log_leading.real)
    return re_p, math.pi - re_p


@dataclass(frozen=True)
class CanonicalInterval:
    x_min: float
    x_max: float
    min_margin: float


def find_canonical_vertical_lines(branch: MomentumBranch,
                                  x_range: tuple[float, float],
                                  y_range: tuple[float, float],
                                  nx: int = 51, samples_per_unit: int = 20,
                                  strict_eps: float = 1e-3) -> list[CanonicalInterval]:
    """Scan vertical lines over an x grid and merge canonical columns.

    Columns whose continuation or sampling hits a turning point are
    treated as failing.  Returns maximal x intervals of passing columns
    with the worst margin found inside each; the empty list is a valid
    result.
    """
    x0, x1 = x_range
    y0, y1 = y_range
    xs = np.linspace(x0, x1, nx)
    margins = np.full(nx, -np.inf)
    for i, x in enumerate(xs):
        curve = VerticalCurve.vertical_line(float(x), y0, y1)
        try:
            rep = canonicity_check(branch, curve, samples_per_unit, strict_eps)
        except (BranchError, PoleProximityError):
            continue
        if rep.strictly:
            margins[i] = rep.min_margin

    intervals: list[CanonicalInterval] = []
    i = 0
    while i < nx:
        if margins[i] == -np.inf:
            i += 1
            continue
        j = i
        worst = margins[i]
        while j + 1 < nx and margins[j + 1] != -np.inf:
            j += 1
            worst = min(worst, margins[j])
        intervals.append(CanonicalInterval(float(xs[i]), float(xs[j]), float(worst)))
        i = j + 1
    return intervals
