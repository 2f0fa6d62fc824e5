"""Complex momentum branches, turning points, and behaviour at infinity.

The complex momentum is the multivalued function p with
``2 cos p(z) = tr M(z)``; the eigenvalues of M(z) are ``exp(+-i p(z))``.
Branch points (turning points) sit where ``tr M(z) = +-2``.  A
:class:`MomentumBranch` pins one analytic branch by a base point and a
base value and continues it along polyline paths with adaptive
stepping: each accepted step picks the root of ``2 cos p = tr M``
nearest to the first-order prediction ``p + p' dz`` and is halved until
the increment |dp| stays below the step bound.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import BranchError, DegenerateInputError, SearchError
from .matrices import FourierMatrix, Matrix, index_data

TWO_PI = 2.0 * math.pi

# |sin p| below this means the continuation is effectively at a turning point
_SIN_GUARD = 1e-7
_MIN_STEP = 1e-12


def _nearest_momentum(w: complex, guess: complex) -> complex:
    """Root of cos p = w closest to guess."""
    q = cmath.acos(w)
    best = None
    for base in (q, -q):
        k = round((guess.real - base.real) / TWO_PI)
        for kk in (k - 1, k, k + 1):
            cand = base + TWO_PI * kk
            d = abs(cand - guess)
            if best is None or d < best[0]:
                best = (d, cand)
    return best[1]


def _alternative_distance(p: complex) -> float:
    """Distance from p to the nearest *other* root of cos q = cos p."""
    d_reflect = 2.0 * abs(p - math.pi * round(p.real / math.pi))
    return min(d_reflect, TWO_PI)


def principal_momentum(w: complex) -> complex:
    """Default branch value at a base point: Im p >= 0 and Re p in (-pi, pi].

    For real w in (-1, 1) both candidates are real; the one in [0, pi]
    is returned.
    """
    q = cmath.acos(complex(w))
    cands = [q, -q]
    for i, c in enumerate(cands):
        if c.real <= -math.pi:
            cands[i] = c + TWO_PI
    ups = [c for c in cands if c.imag > 1e-15]
    if ups:
        return ups[0]
    if all(abs(c.imag) <= 1e-15 for c in cands):
        return q if 0.0 <= q.real <= math.pi else -q
    # both strictly below the axis cannot happen (roots are p and -p)
    return max(cands, key=lambda c: c.imag)


@dataclass(frozen=True)
class MomentumBranch:
    """One analytic branch of the complex momentum of ``matrix``.

    ``z_ref`` must be a regular point and ``p_ref`` must satisfy
    ``2 cos p_ref = tr M(z_ref)``.  ``step_bound`` limits |dp| per
    accepted continuation step.
    """

    matrix: Matrix
    z_ref: complex
    p_ref: complex
    step_bound: float = 0.1

    def __post_init__(self):
        t = self.matrix.trace.eval(self.z_ref)
        if abs(2.0 * cmath.cos(self.p_ref) - t) > 1e-12 * max(1.0, abs(t)):
            raise ValueError("p_ref does not satisfy 2 cos p = tr M at z_ref")
        if min(abs(t - 2.0), abs(t + 2.0)) < 1e-8:
            raise ValueError("z_ref is a turning point; pick a regular base point")

    # -- continuation core ------------------------------------------------

    def _dp(self, z: complex, p: complex) -> complex:
        sp = cmath.sin(p)
        if abs(sp) < _SIN_GUARD:
            raise BranchError(f"turning point encountered near z = {z:.6g}")
        return -self.matrix.trace.derivative().eval(z) / (2.0 * sp)

    def _step(self, z0: complex, p0: complex, z1: complex) -> complex:
        """Continue from (z0, p0) to z1, bisecting the segment as needed."""
        stack = [(z0, z1)]
        z, p = z0, p0
        tr = self.matrix.trace
        while stack:
            a, b = stack.pop()
            if a != z:
                # stack discipline guarantees continuity
                raise BranchError("internal continuation ordering error")
            pred = p + self._dp(a, p) * (b - a)
            w = tr.eval(b) / 2.0
            cand = _nearest_momentum(w, pred)
            ok = (abs(cand - p) <= self.step_bound
                  and abs(cand - pred) <= max(1e-8, 0.25 * _alternative_distance(cand)))
            if ok:
                if abs(cmath.sin(cand)) < _SIN_GUARD:
                    raise BranchError(f"path passes within tolerance of a turning point near z = {b:.6g}")
                z, p = b, cand
            else:
                if abs(b - a) < _MIN_STEP * max(1.0, abs(a)):
                    raise BranchError(f"continuation step failed to converge near z = {a:.6g}")
                mid = 0.5 * (a + b)
                stack.append((mid, b))
                stack.append((a, mid))
        return p

    def step(self, z0: complex, p0: complex, z1: complex) -> complex:
        """Continue the value p0 held at z0 to z1 along the straight segment."""
        return self._step(complex(z0), complex(p0), complex(z1))

    def values_on(self, points: Sequence[complex], *, from_ref: bool = True) -> np.ndarray:
        """Continue the branch through an ordered sequence of points.

        When ``from_ref`` is true the continuation starts at the base
        point and reaches ``points[0]`` along a straight segment;
        otherwise ``points[0]`` must equal the base point.
        """
        pts = [complex(w) for w in points]
        if not pts:
            return np.empty(0, dtype=complex)
        out = np.empty(len(pts), dtype=complex)
        if from_ref:
            p = self._step(self.z_ref, self.p_ref, pts[0])
        else:
            if abs(pts[0] - self.z_ref) > 1e-14 * max(1.0, abs(self.z_ref)):
                raise ValueError("points[0] must equal z_ref when from_ref=False")
            p = self.p_ref
        out[0] = p
        z = pts[0]
        for i, target in enumerate(pts[1:], start=1):
            p = self._step(z, p, target)
            z = target
            out[i] = p
        return out

    def value_at(self, z: complex, path: Sequence[complex] | None = None) -> complex:
        """Analytic continuation of the branch to z.

        ``path`` is a polyline of waypoints from the base point to z;
        by default the straight segment is used.
        """
        if path is None:
            waypoints = [complex(z)]
        else:
            waypoints = [complex(w) for w in path]
            if abs(waypoints[-1] - complex(z)) > 1e-14 * max(1.0, abs(z)):
                waypoints.append(complex(z))
        return complex(self.values_on(waypoints)[-1])

    def rebased(self, z: complex, path: Sequence[complex] | None = None) -> "MomentumBranch":
        """Same branch, with the base point moved to z along ``path``."""
        return replace(self, z_ref=complex(z), p_ref=self.value_at(z, path))

    def negated(self) -> "MomentumBranch":
        """The complementary branch -p (cos is even)."""
        return replace(self, p_ref=-self.p_ref)

    def derivative_at(self, z: complex, path: Sequence[complex] | None = None) -> complex:
        return momentum_derivative(self, z, path)


def default_branch(matrix: Matrix, z_ref: complex, step_bound: float = 0.1) -> MomentumBranch:
    """Branch with the documented default value at the base point."""
    w = matrix.trace.eval(z_ref) / 2.0
    return MomentumBranch(matrix, complex(z_ref), principal_momentum(w), step_bound)


def momentum_at(branch: MomentumBranch, z: complex,
                path: Sequence[complex] | None = None) -> complex:
    return branch.value_at(z, path)


def momentum_derivative(branch: MomentumBranch, z: complex,
                        path: Sequence[complex] | None = None) -> complex:
    """p'(z) = -(tr M)'(z) / (2 sin p(z)) on the continued branch."""
    p = branch.value_at(z, path)
    sp = cmath.sin(p)
    if abs(sp) < _SIN_GUARD:
        raise BranchError(f"momentum derivative is singular at the turning point near z = {z:.6g}")
    return -branch.matrix.trace.derivative().eval(z) / (2.0 * sp)


def momentum_second_derivative(branch: MomentumBranch, z: complex,
                               path: Sequence[complex] | None = None) -> complex:
    """p''(z) from differentiating 2 cos p = tr M twice."""
    p = branch.value_at(z, path)
    sp, cp = cmath.sin(p), cmath.cos(p)
    if abs(sp) < _SIN_GUARD:
        raise BranchError("second derivative singular at a turning point")
    t = branch.matrix.trace
    t1 = t.derivative()
    t2 = t1.derivative()
    p1 = -t1.eval(z) / (2.0 * sp)
    return -t2.eval(z) / (2.0 * sp) - p1 * p1 * cp / sp


# -- turning points --------------------------------------------------------


@dataclass(frozen=True)
class TurningPoint:
    """A root of tr M(z) -+ 2 with its local classification.

    ``p1`` is the leading coefficient of the momentum in the local
    chart tau = sqrt(z - z0): p = p0 + p1 tau + o(tau).  It is defined
    up to sign and set only for simple points.
    """

    location: complex
    trace_sign: float
    simple: bool
    p1: complex | None

    @property
    def multiplicity_hint(self) -> int:
        return 1 if self.simple else 2


def _winding_rectangle(f, x0, x1, y0, y1, max_depth: int = 14) -> int:
    """Winding number of f along the rectangle boundary, by phase tracking."""
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    n = 32
    for _ in range(max_depth):
        pts = []
        for a, b in zip(corners[:-1], corners[1:]):
            ts = np.linspace(0.0, 1.0, n, endpoint=False)
            pts.append(a + (b - a) * ts)
        zs = np.concatenate(pts)
        vals = f(zs)
        if np.any(np.abs(vals) < 1e-300):
            n *= 2
            continue
        rot = vals / np.roll(vals, 1)
        ang = np.angle(rot)
        if np.max(np.abs(ang)) < 1.5:
            total = float(np.sum(ang)) / TWO_PI
            w = round(total)
            if abs(total - w) < 1e-3:
                return w
        n *= 2
    raise SearchError("argument-principle winding did not stabilize (root on or near the boundary?)")


def _newton(f, df, z0: complex, iters: int = 80) -> complex | None:
    z = complex(z0)
    for _ in range(iters):
        fz = f(z)
        dz = df(z)
        if dz == 0:
            return None
        step = fz / dz
        z -= step
        if abs(step) < 1e-14 * max(1.0, abs(z)):
            return z
    return z if abs(f(z)) < 1e-9 else None


def _roots_in_rectangle(f, df, region, grid, margin: float = 0.0) -> list[tuple[complex, int]]:
    """All roots of analytic f in an axis-aligned rectangle, with multiplicities.

    ``margin`` expands the outer winding contour so roots sitting exactly on
    the stated boundary are counted deterministically (closed region).
    """
    x0, x1, y0, y1 = region
    if margin:
        x0, x1, y0, y1 = x0 - margin, x1 + margin, y0 - margin, y1 + margin
    nx, ny = grid
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    zz = xs[None, :] + 1j * ys[:, None]
    vals = np.abs(f(zz.ravel())).reshape(zz.shape)

    seeds = []
    for i in range(ny + 1):
        for j in range(nx + 1):
            v = vals[i, j]
            nb = vals[max(0, i - 1):i + 2, max(0, j - 1):j + 2]
            if v <= nb.min() + 1e-300:
                seeds.append(zz[i, j])

    roots: list[complex] = []
    for s in seeds:
        r = _newton(f, df, s)
        if r is None:
            continue
        if not (x0 - 1e-12 <= r.real <= x1 + 1e-12 and y0 - 1e-12 <= r.imag <= y1 + 1e-12):
            continue
        if abs(f(np.array([r]))[0]) > 1e-9:
            continue
        if all(abs(r - q) > 1e-7 for q in roots):
            roots.append(r)

    def count(xa, xb, ya, yb):
        return _winding_rectangle(f, xa, xb, ya, yb)

    total = count(x0, x1, y0, y1)
    mult = []
    for r in roots:
        sep = min([abs(r - q) for q in roots if q is not r] or [1.0])
        rad = min(1e-3, 0.25 * sep, 0.5 * (x1 - x0), 0.5 * (y1 - y0))
        ts = np.linspace(0.0, 1.0, 256, endpoint=False)
        circle = r + rad * np.exp(2j * math.pi * ts)
        vals_c = f(circle)
        ang = np.angle(vals_c / np.roll(vals_c, 1))
        mult.append(round(float(np.sum(ang)) / TWO_PI))

    if sum(mult) != total:
        # missed roots: re-scan quadrants (midpoints nudged off simple fractions
        # so subdivision lines do not land on symmetric root constellations)
        if min(x1 - x0, y1 - y0) < 1e-6:
            raise SearchError("root count mismatch between argument principle and refined roots")
        xm = x0 + 0.5137 * (x1 - x0)
        ym = y0 + 0.4863 * (y1 - y0)
        found: list[tuple[complex, int]] = []
        for (xa, xb) in ((x0, xm), (xm, x1)):
            for (ya, yb) in ((y0, ym), (ym, y1)):
                sub = _roots_in_rectangle(f, df, (xa, xb, ya, yb),
                                          (max(4, nx // 2), max(4, ny // 2)))
                for r, m in sub:
                    if all(abs(r - q) > 1e-7 for q, _ in found):
                        found.append((r, m))
        if sum(m for _, m in found) != total:
            raise SearchError("root count mismatch between argument principle and refined roots")
        return found
    return list(zip(roots, mult))


def find_turning_points(matrix: Matrix, region: tuple[float, float, float, float],
                        grid: tuple[int, int] = (50, 50)) -> list[TurningPoint]:
    """All turning points (roots of tr M -+ 2) in the rectangle ``region``.

    ``region`` is (x_min, x_max, y_min, y_max), treated as closed: roots
    within about 1e-4 of the boundary (relative to the region size) are
    included.  Roots are located by a grid scan seeding Newton
    refinement and cross-checked against the argument-principle count;
    a mismatch raises :class:`SearchError`.
    """
    t = matrix.trace
    td = t.derivative()
    x0, x1, y0, y1 = region
    margin = 1e-4 * max(1.0, x1 - x0, y1 - y0)
    out: list[TurningPoint] = []
    for s in (2.0, -2.0):
        f = lambda z: t.eval(np.asarray(z, dtype=complex)) - s
        df = lambda z: td.eval(z)
        for r, mult in _roots_in_rectangle(f, df, region, grid, margin=margin):
            d1 = td.eval(r)
            simple = abs(d1) > 1e-8 and mult == 1
            p1 = cmath.sqrt(-2.0 * d1 / s) if simple else None
            out.append(TurningPoint(location=r, trace_sign=s, simple=simple, p1=p1))
    out.sort(key=lambda tp: (tp.location.real, tp.location.imag))
    return out


# -- behaviour at infinity --------------------------------------------------


@dataclass(frozen=True)
class InfinityMomentumData:
    """Linear asymptote of a momentum branch in one half-plane.

    On side "u" the branch satisfies p(z) ~ s*(2 pi n_t z + log_leading)
    as Im z -> +oo; on side "d" p(z) ~ s*(-2 pi n_t z + log_leading).
    ``log_leading`` is the branch of i*log(leading trace coefficient)
    realised by the continuation.
    """

    side: str
    s: int
    n_t: int
    log_leading: complex


def infinity_momentum(matrix: FourierMatrix, side: str, branch: MomentumBranch,
                      y_large: float = 4.0) -> InfinityMomentumData:
    """Determine s and the asymptote constant by fitting p at large |Im z|.

    The measured constant is snapped to an exact branch of
    i*log(t_side) and the residual is required to be small; otherwise
    the half-plane was not reached and a :class:`BranchError` is raised.
    """
    if not isinstance(matrix, FourierMatrix):
        raise DegenerateInputError("infinity analysis needs a trigonometric-polynomial matrix")
    if side not in ("u", "d"):
        raise ValueError("side must be 'u' or 'd'")
    idx = index_data(matrix.trace, side)
    n = idx.n
    if n <= 0:
        raise DegenerateInputError("trace has no growth on this side; assumptions fail")
    sign_y = 1.0 if side == "u" else -1.0
    x0 = branch.z_ref.real
    z1 = complex(x0, sign_y * y_large)
    z2 = complex(x0, sign_y * (y_large + 1.0))
    p1 = branch.value_at(z1)
    p2 = branch.value_at(z2, path=[z1, z2])
    slope = 1.0 if side == "u" else -1.0
    delta = (p2 - p1) / (1j * sign_y)
    s = 1 if (delta / (slope * TWO_PI * n)).real > 0 else -1
    expect = s * slope * TWO_PI * n * (z2 - z1)
    if abs((p2 - p1) - expect) > 0.1:
        raise BranchError("momentum does not follow a linear asymptote; increase y_large")
    c_meas = p2 / s - slope * TWO_PI * n * z2
    # snap to an exact branch of i log(t_side)
    c0 = 1j * cmath.log(idx.leading)
    k = round((c_meas.real - c0.real) / TWO_PI)
    c_true = c0 + TWO_PI * k
    if abs(c_meas - c_true) > 1e-3:
        raise BranchError("asymptote constant does not match i log of the leading coefficient")
    return InfinityMomentumData(side=side, s=s, n_t=n, log_leading=c_true)
