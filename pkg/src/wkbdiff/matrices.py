"""Unimodular 2x2 coefficient matrices for the difference equation Psi(z+h) = M(z) Psi(z).

Two representations are supported:

* :class:`FourierMatrix` -- M(z) is a matrix trigonometric polynomial,
  a finite sum of harmonics ``M_j exp(2 pi i j z)``.  This is the
  representation used for analysis on the whole plane, including the
  behaviour as ``|Im z| -> oo``.
* :class:`PolynomialMatrix` -- entries are ordinary polynomials in z,
  the bounded-domain representation.

Both carry exact entry-wise derivatives, so downstream code never
differentiates numerically.  The classes are immutable and all
evaluators are pure functions of their arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DegenerateInputError, EvaluationRangeError

TWO_PI = 2.0 * math.pi

# exp() overflows just above 709; keep a little headroom
_EXP_LIMIT = 700.0


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    return complex(value)


@dataclass(frozen=True)
class TrigPolynomial:
    """Finite sum ``sum_j c_j exp(2 pi i j z)`` over integer harmonics j."""

    coeffs: tuple[tuple[int, complex], ...]

    def __init__(self, coeffs: Mapping[int, complex] | Iterable[tuple[int, complex]]):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        cleaned = {}
        for j, c in items:
            c = complex(c)
            if c != 0:
                cleaned[int(j)] = cleaned.get(int(j), 0.0) + c
        object.__setattr__(
            self, "coeffs", tuple(sorted((j, c) for j, c in cleaned.items() if c != 0))
        )

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.coeffs)

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Exact harmonic sum; raises EvaluationRangeError if any term overflows."""
        z = np.asarray(z, dtype=complex)
        if self.coeffs:
            max_y = float(np.max(np.abs(z.imag)))
            max_j = max(abs(j) for j, _ in self.coeffs)
            if TWO_PI * max_j * max_y > _EXP_LIMIT:
                raise EvaluationRangeError(
                    f"harmonic exp(2 pi {max_j} Im z) overflows at |Im z| = {max_y:g}"
                )
        out = np.zeros_like(z)
        for j, c in self.coeffs:
            out = out + c * np.exp(2j * math.pi * j * z)
        if out.ndim == 0:
            return complex(out)
        return out

    def derivative(self) -> "TrigPolynomial":
        return TrigPolynomial({j: 2j * math.pi * j * c for j, c in self.coeffs})

    def conjugate_coeffs(self) -> "TrigPolynomial":
        """Coefficients of z -> conj(P(conj(z)))."""
        return TrigPolynomial({-j: c.conjugate() for j, c in self.coeffs})

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        merged = dict(self.coeffs)
        for j, c in other.coeffs:
            merged[j] = merged.get(j, 0.0) + c
        return TrigPolynomial(merged)

    def __neg__(self) -> "TrigPolynomial":
        return TrigPolynomial({j: -c for j, c in self.coeffs})


@dataclass(frozen=True)
class PolynomialFunction:
    """Polynomial in z with coefficients in ascending powers."""

    coeffs: tuple[complex, ...]

    def __init__(self, coeffs: Iterable[complex]):
        cs = [complex(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [0j]
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.polynomial.polynomial.polyval(z, np.array(self.coeffs))
        if np.ndim(out) == 0:
            return complex(out)
        return out

    def derivative(self) -> "PolynomialFunction":
        if len(self.coeffs) == 1:
            return PolynomialFunction([0j])
        return PolynomialFunction([k * c for k, c in enumerate(self.coeffs)][1:])


def _poly_mul(a: PolynomialFunction, b: PolynomialFunction) -> np.ndarray:
    return np.convolve(np.array(a.coeffs), np.array(b.coeffs))


@dataclass(frozen=True)
class FourierMatrix:
    """Matrix trigonometric polynomial ``M(z) = sum_j M_j exp(2 pi i j z)``.

    ``entries`` holds the four scalar trigonometric polynomials in
    row-major order (M11, M12, M21, M22).  Unimodularity (det M = 1) is
    checked on a sample grid at construction time; the grid size and
    tolerance mirror the defaults used by :func:`validate_assumptions`.
    """

    entries: tuple[TrigPolynomial, TrigPolynomial, TrigPolynomial, TrigPolynomial]

    periodic = True

    def __init__(self, harmonics: Mapping[int, object] | None = None, *,
                 entries: Iterable[TrigPolynomial] | None = None,
                 check_unimodular: bool = True):
        if entries is not None:
            e = tuple(entries)
            if len(e) != 4:
                raise ValueError("need exactly four entry polynomials")
        else:
            if harmonics is None:
                raise ValueError("provide either harmonics or entries")
            per_entry: list[dict[int, complex]] = [{}, {}, {}, {}]
            for j, m in harmonics.items():
                m = np.asarray(m, dtype=complex)
                if m.shape != (2, 2):
                    raise ValueError(f"harmonic {j} is not a 2x2 matrix")
                for idx, (r, c) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
                    if m[r, c] != 0:
                        per_entry[idx][int(j)] = complex(m[r, c])
            e = tuple(TrigPolynomial(d) for d in per_entry)
        object.__setattr__(self, "entries", e)
        if all(p.is_zero for p in e):
            raise DegenerateInputError("all harmonics are zero")
        if check_unimodular:
            defect = self.unimodularity_defect()
            if defect > 1e-10:
                raise ValueError(f"det M deviates from 1 by {defect:.2e} on the sample grid")

    @property
    def harmonics(self) -> dict[int, np.ndarray]:
        out: dict[int, np.ndarray] = {}
        for idx, (r, c) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            for j, v in self.entries[idx].coeffs:
                out.setdefault(j, np.zeros((2, 2), dtype=complex))[r, c] = v
        return dict(sorted(out.items()))

    @property
    def k(self) -> int:
        """Largest negative-harmonic depth: harmonics span [-k, l]."""
        js = [j for p in self.entries for j, _ in p.coeffs]
        return max(0, -min(js)) if js else 0

    @property
    def l(self) -> int:
        js = [j for p in self.entries for j, _ in p.coeffs]
        return max(0, max(js)) if js else 0

    @property
    def trace(self) -> TrigPolynomial:
        return self.entries[0] + self.entries[3]

    def eval(self, z) -> np.ndarray:
        m11, m12, m21, m22 = (p.eval(z) for p in self.entries)
        return np.array([[m11, m12], [m21, m22]], dtype=complex)

    def deriv(self, z) -> np.ndarray:
        m = [p.derivative().eval(z) for p in self.entries]
        return np.array([[m[0], m[1]], [m[2], m[3]]], dtype=complex)

    def unimodularity_defect(self, samples: int = 100, imag_bound: float = 2.0) -> float:
        """Max |det M(z) - 1| over a deterministic grid with |Im z| <= imag_bound."""
        nx = max(1, int(round(math.sqrt(samples))))
        ny = max(1, samples // nx)
        xs = np.linspace(0.0, 1.0, nx, endpoint=False)
        ys = np.linspace(-imag_bound, imag_bound, ny)
        zz = (xs[:, None] + 1j * ys[None, :]).ravel()
        m11, m12, m21, m22 = (p.eval(zz) for p in self.entries)
        det = m11 * m22 - m12 * m21
        return float(np.max(np.abs(det - 1.0)))


@dataclass(frozen=True)
class PolynomialMatrix:
    """2x2 matrix with polynomial entries and det M identically 1.

    The determinant condition is enforced exactly on the coefficient
    level at construction (up to 1e-12 per coefficient, to absorb float
    input noise).
    """

    entries: tuple[PolynomialFunction, ...]

    periodic = False

    def __init__(self, entries):
        e = []
        for row in entries:
            for p in row:
                if not isinstance(p, PolynomialFunction):
                    p = PolynomialFunction(p)
                e.append(p)
        if len(e) != 4:
            raise ValueError("entries must be a 2x2 nest of coefficient lists")
        det = _poly_mul(e[0], e[3])
        off = _poly_mul(e[1], e[2])
        n = max(len(det), len(off))
        det = np.pad(det, (0, n - len(det))) - np.pad(off, (0, n - len(off)))
        det[0] -= 1.0
        if np.max(np.abs(det)) > 1e-12:
            raise ValueError("det M is not identically 1 as a polynomial")
        object.__setattr__(self, "entries", tuple(e))

    @property
    def trace(self) -> PolynomialFunction:
        a = np.array(self.entries[0].coeffs)
        d = np.array(self.entries[3].coeffs)
        n = max(len(a), len(d))
        return PolynomialFunction(np.pad(a, (0, n - len(a))) + np.pad(d, (0, n - len(d))))

    def eval(self, z) -> np.ndarray:
        m = [p.eval(z) for p in self.entries]
        return np.array([[m[0], m[1]], [m[2], m[3]]], dtype=complex)

    def deriv(self, z) -> np.ndarray:
        m = [p.derivative().eval(z) for p in self.entries]
        return np.array([[m[0], m[1]], [m[2], m[3]]], dtype=complex)


Matrix = FourierMatrix | PolynomialMatrix


@dataclass(frozen=True)
class IndexData:
    """Extreme-harmonic data of a trigonometric polynomial on one side.

    ``side`` is "u" (Im z -> +oo) or "d" (Im z -> -oo).  ``n`` is the
    growth index and ``leading`` the coefficient of the extreme
    harmonic, so that ``P(z) ~ leading * exp(-2 pi i n z)`` upward and
    ``P(z) ~ leading * exp(2 pi i n z)`` downward.
    """

    side: str
    n: int
    leading: complex

    def __post_init__(self):
        if self.side not in ("u", "d"):
            raise ValueError("side must be 'u' or 'd'")
        if self.leading == 0:
            raise DegenerateInputError("leading coefficient must be nonzero")


def index_data(p: TrigPolynomial, side: str) -> IndexData:
    """Growth index and leading coefficient of ``p`` as Im z -> +-oo."""
    if p.is_zero:
        raise DegenerateInputError("index data of the zero polynomial is undefined")
    if side == "u":
        j = min(p.support)
        return IndexData("u", -j, dict(p.coeffs)[j])
    if side == "d":
        j = max(p.support)
        return IndexData("d", j, dict(p.coeffs)[j])
    raise ValueError("side must be 'u' or 'd'")


def _n_or_none(p: TrigPolynomial, side: str):
    return None if p.is_zero else index_data(p, side).n


@dataclass(frozen=True)
class AssumptionReport:
    """Pure-data report of the standing assumptions on a FourierMatrix.

    No flag raises; callers decide what a failed assumption means.  The
    index table records n_s for every entry and for the trace; ``None``
    marks identically-zero entries (which pass the inequality chain
    trivially).
    """

    k: int
    l: int
    k_positive: bool
    l_positive: bool
    extreme_traces_nonzero: bool
    offdiag_not_identically_zero: bool
    bounded_ratio_at_infinity: bool
    index_table: dict
    chain_holds: dict
    unimodular_defect: float
    unimodular: bool

    @property
    def all_hold(self) -> bool:
        return (self.k_positive and self.l_positive and self.extreme_traces_nonzero
                and self.offdiag_not_identically_zero and self.bounded_ratio_at_infinity
                and self.chain_holds["u"] and self.chain_holds["d"] and self.unimodular)


def validate_assumptions(m: FourierMatrix) -> AssumptionReport:
    """Check the standing hypotheses for the unbounded (trig polynomial) regime.

    Verifies that the harmonic range is genuinely two-sided, that the
    extreme harmonics of the trace are nonzero, that M12*M21 is not
    identically zero, that M22/M11 stays bounded at infinity, and the
    per-side inequality chain
    ``n_s(M12), n_s(M21), n_s(M22) <= n_s(M11) = n_s(trace) > 0``.
    """
    m11, m12, m21, m22 = m.entries
    t = m.trace
    harm = m.harmonics
    k, l = m.k, m.l
    tr_lo = complex(np.trace(harm.get(-k, np.zeros((2, 2))))) if harm else 0j
    tr_hi = complex(np.trace(harm.get(l, np.zeros((2, 2))))) if harm else 0j

    table = {}
    chain = {}
    for side in ("u", "d"):
        ns = {
            "M11": _n_or_none(m11, side),
            "M12": _n_or_none(m12, side),
            "M21": _n_or_none(m21, side),
            "M22": _n_or_none(m22, side),
            "t": _n_or_none(t, side),
        }
        table[side] = ns
        n11 = ns["M11"]
        ok = n11 is not None and ns["t"] == n11 and n11 > 0
        for key in ("M12", "M21", "M22"):
            v = ns[key]
            if v is not None and (n11 is None or v > n11):
                ok = False
        chain[side] = ok

    bounded = True
    for side in ("u", "d"):
        n22, n11 = table[side]["M22"], table[side]["M11"]
        if n22 is not None and (n11 is None or n22 > n11):
            bounded = False

    defect = m.unimodularity_defect()
    return AssumptionReport(
        k=k,
        l=l,
        k_positive=k > 0,
        l_positive=l > 0,
        extreme_traces_nonzero=tr_lo != 0 and tr_hi != 0,
        offdiag_not_identically_zero=not (m12.is_zero or m21.is_zero),
        bounded_ratio_at_infinity=bounded,
        index_table=table,
        chain_holds=chain,
        unimodular_defect=defect,
        unimodular=defect < 1e-10,
    )


def companion_from_scalar(v) -> Matrix:
    """Companion matrix [[-v, -1], [1, 0]] of the scalar equation
    psi(z+h) + psi(z-h) + v(z) psi(z) = 0.  Unimodular by construction."""
    if isinstance(v, TrigPolynomial):
        return FourierMatrix(entries=(
            -v, TrigPolynomial({0: -1.0}), TrigPolynomial({0: 1.0}), TrigPolynomial({}),
        ), check_unimodular=False)
    if isinstance(v, PolynomialFunction):
        return PolynomialMatrix([
            [PolynomialFunction([-c for c in v.coeffs]), PolynomialFunction([-1.0])],
            [PolynomialFunction([1.0]), PolynomialFunction([0.0])],
        ])
    raise TypeError("v must be a TrigPolynomial or PolynomialFunction")


def harper_companion(lam: float = 0.5, mu: float = 0.0) -> FourierMatrix:
    """Companion matrix of the Harper-type potential v(z) = 2 lam cos(2 pi z) + mu."""
    v = TrigPolynomial({1: lam, -1: lam, 0: mu})
    return companion_from_scalar(v)


def matrix_from_json(desc: Mapping) -> Matrix:
    """Build a matrix from its JSON description.

    Supported forms::

        {"type": "fourier", "harmonics": [{"j": -1, "m": [[re, im], ... 4 pairs row-major]}, ...]}
        {"type": "companion_harper", "lambda": 0.5, "mu": 0.0}
        {"type": "polynomial", "entries": [[p11, p12], [p21, p22]]}   # coeff lists, ascending

    Polynomial coefficients and harmonic entries accept plain numbers or
    [re, im] pairs.
    """
    kind = desc.get("type")
    if kind == "fourier":
        harmonics = {}
        for item in desc["harmonics"]:
            vals = [_as_complex(x) for x in item["m"]]
            if len(vals) != 4:
                raise ValueError("each harmonic needs 4 row-major entries")
            harmonics[int(item["j"])] = np.array(vals, dtype=complex).reshape(2, 2)
        return FourierMatrix(harmonics)
    if kind == "companion_harper":
        return harper_companion(float(desc.get("lambda", 0.5)), float(desc.get("mu", 0.0)))
    if kind == "polynomial":
        entries = [[PolynomialFunction([_as_complex(c) for c in p]) for p in row]
                   for row in desc["entries"]]
        return PolynomialMatrix(entries)
    raise ValueError(f"unknown matrix type {kind!r}")


def matrix_to_json(m: Matrix) -> dict:
    if isinstance(m, FourierMatrix):
        return {
            "type": "fourier",
            "harmonics": [
                {"j": j, "m": [[v.real, v.imag] for v in mat.ravel()]}
                for j, mat in m.harmonics.items()
            ],
        }
    if isinstance(m, PolynomialMatrix):
        return {
            "type": "polynomial",
            "entries": [
                [[[c.real, c.imag] for c in m.entries[0].coeffs],
                 [[c.real, c.imag] for c in m.entries[1].coeffs]],
                [[[c.real, c.imag] for c in m.entries[2].coeffs],
                 [[c.real, c.imag] for c in m.entries[3].coeffs]],
            ],
        }
    raise TypeError(f"cannot serialize {type(m).__name__}")
