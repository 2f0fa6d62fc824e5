import cmath
import math

import numpy as np
import pytest

import wkbdiff as wd
from wkbdiff.errors import DegenerateInputError, EvaluationRangeError

from conftest import HARPER_BOX, POLY1_BOX, regular_points


def test_constant_matrix_eval(const_matrix):
    for z in (0.0, 1.3 - 0.7j, 100.0):
        np.testing.assert_allclose(const_matrix.eval(z), [[2, 1], [1, 1]])


def test_harper_trace_closed_form(harper):
    # oracle: tr M = -cos(2 pi z) for lam=1/2, mu=0, evaluated with cmath
    assert abs(harper.trace.eval(0.25) - 0.0) < 1e-14
    z = 0.25 + 0.5j
    assert abs(harper.trace.eval(z) - (-cmath.cos(2 * math.pi * z))) < 1e-12
    assert abs(harper.trace.eval(z) - 1j * math.sinh(math.pi)) < 1e-12


def test_eval_range_error(harper):
    with pytest.raises(EvaluationRangeError):
        harper.eval(200.0j)


def test_deriv_constant_is_zero(const_matrix):
    np.testing.assert_allclose(const_matrix.deriv(0.4 + 0.1j), np.zeros((2, 2)))


def test_harper_trace_derivative(harper):
    # term-wise derivative against the closed form 2 pi sin(2 pi z)
    t1 = harper.trace.derivative()
    for z in (0.1, 0.3 + 0.4j, -0.2 - 0.1j):
        assert abs(t1.eval(z) - 2 * math.pi * cmath.sin(2 * math.pi * z)) < 1e-12


def test_polynomial_deriv_linear(poly2):
    np.testing.assert_allclose(poly2.deriv(0.0), [[1, 1], [1, 1]])


@pytest.mark.parametrize("which", ["harper", "poly1"])
def test_deriv_matches_finite_differences(which, harper, poly1):
    m = harper if which == "harper" else poly1
    box = HARPER_BOX if which == "harper" else POLY1_BOX
    step = 1e-5
    for z in regular_points(m, 10, box, seed=7):
        fd = (m.eval(z + step) - m.eval(z - step)) / (2 * step)
        d = m.deriv(z)
        assert np.max(np.abs(d - fd)) < 1e-6 * max(1.0, np.max(np.abs(d)))


def test_index_data_examples(harper):
    t = harper.trace  # -e^{2 pi i z}/2 - e^{-2 pi i z}/2
    up = wd.index_data(t, "u")
    assert up.n == 1 and abs(up.leading + 0.5) < 1e-15
    down = wd.index_data(t, "d")
    assert down.n == 1 and abs(down.leading + 0.5) < 1e-15

    m12 = harper.entries[1]  # identically -1
    assert wd.index_data(m12, "u").n == 0
    assert wd.index_data(m12, "u").leading == -1

    single = wd.TrigPolynomial({2: 3.0})  # 3 e^{4 pi i z}
    d = wd.index_data(single, "d")
    assert d.n == 2 and d.leading == 3.0
    u = wd.index_data(single, "u")
    assert u.n == -2 and u.leading == 3.0


def test_index_data_zero_polynomial_raises():
    with pytest.raises(DegenerateInputError):
        wd.index_data(wd.TrigPolynomial({}), "u")


def test_index_roundtrip_asymptotics(harper):
    # P(z) ~ leading * exp(-2 pi i n z) upward, exp(+2 pi i n z) downward
    t = harper.trace
    for y in (3.0, 4.0):
        up = wd.index_data(t, "u")
        z = 0.3 + 1j * y
        lead = up.leading * cmath.exp(-2j * math.pi * up.n * z)
        assert abs(t.eval(z) - lead) / abs(lead) < math.exp(-2 * math.pi * y)
        down = wd.index_data(t, "d")
        z = 0.3 - 1j * y
        lead = down.leading * cmath.exp(2j * math.pi * down.n * z)
        assert abs(t.eval(z) - lead) / abs(lead) < math.exp(-2 * math.pi * y)


def test_validate_harper_all_hold(harper):
    rep = wd.validate_assumptions(harper)
    assert rep.all_hold
    assert rep.index_table["u"]["t"] == 1 and rep.index_table["d"]["t"] == 1
    assert rep.k == 1 and rep.l == 1


def test_validate_m12_identically_zero_flagged():
    m = wd.FourierMatrix(entries=(
        wd.TrigPolynomial({1: 1.0}), wd.TrigPolynomial({}),
        wd.TrigPolynomial({0: 1.0}), wd.TrigPolynomial({-1: 1.0}),
    ))
    rep = wd.validate_assumptions(m)
    assert not rep.offdiag_not_identically_zero
    assert not rep.all_hold


def test_validate_constant_matrix_bounded_mode(const_matrix):
    rep = wd.validate_assumptions(const_matrix)  # pure data, no exception
    assert rep.k == 0 and rep.l == 0
    assert not rep.k_positive and not rep.l_positive
    assert not rep.all_hold
    assert rep.unimodular


def test_companion_zero_potential():
    m = wd.companion_from_scalar(wd.TrigPolynomial({}))
    np.testing.assert_allclose(m.eval(0.7), [[0, -1], [1, 0]])


def test_companion_harper_harmonics(harper):
    h = harper.harmonics
    assert abs(h[1][0, 0] + 0.5) < 1e-15 and abs(h[-1][0, 0] + 0.5) < 1e-15
    assert h[0][0, 1] == -1 and h[0][1, 0] == 1 and h[0][1, 1] == 0


def test_companion_trace_is_minus_v():
    rng = np.random.default_rng(3)
    v = wd.TrigPolynomial({1: 0.5, -1: 0.5, 0: 0.2})
    m = wd.companion_from_scalar(v)
    for _ in range(10):
        z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        assert abs(m.trace.eval(z) + v.eval(z)) < 1e-12


@pytest.mark.parametrize("which", ["harper", "poly1"])
def test_unimodularity_random_sample(which, harper, poly1):
    m = harper if which == "harper" else poly1
    rng = np.random.default_rng(11)
    for _ in range(100):
        z = complex(rng.uniform(-1, 2), rng.uniform(-2, 2))
        mm = m.eval(z)
        assert abs(mm[0, 0] * mm[1, 1] - mm[0, 1] * mm[1, 0] - 1.0) < 1e-10


def test_non_unimodular_rejected():
    with pytest.raises(ValueError):
        wd.FourierMatrix({0: [[1, 1], [1, 1]]})
    with pytest.raises(ValueError):
        wd.PolynomialMatrix([[[1, 1], [0]], [[0], [1]]])


def test_json_roundtrip_all_types(harper, poly2):
    for m in (harper, poly2):
        again = wd.matrix_from_json(wd.matrix_to_json(m))
        for z in (0.3, 0.1 - 0.2j):
            np.testing.assert_allclose(again.eval(z), m.eval(z), atol=1e-14)
    h = wd.matrix_from_json({"type": "companion_harper", "lambda": 0.5, "mu": 0.0})
    np.testing.assert_allclose(h.eval(0.2), harper.eval(0.2), atol=1e-15)


def test_json_fourier_form():
    desc = {"type": "fourier",
            "harmonics": [{"j": 0, "m": [[2, 0], [1, 0], [1, 0], [1, 0]]}]}
    m = wd.matrix_from_json(desc)
    np.testing.assert_allclose(m.eval(0.0), [[2, 1], [1, 1]])


def test_json_unknown_type_rejected():
    with pytest.raises(ValueError):
        wd.matrix_from_json({"type": "nope"})
