import cmath
import math

import numpy as np
import pytest

import wkbdiff as wd
from wkbdiff.errors import BranchError, PoleProximityError

from conftest import HARPER_BOX, POLY1_BOX, regular_points

TWO_PI = 2 * math.pi


def continued_log(values):
    """Continuous branch of log along an ordered sequence of nonzero values."""
    out = [cmath.log(values[0])]
    for a, b in zip(values[:-1], values[1:]):
        out.append(out[-1] + cmath.log(b / a))
    return out


def test_eigen_pair_constant(const_matrix):
    br = wd.default_branch(const_matrix, 0.0)
    ep = wd.eigen_pair(br, 0.0)
    lam = (3 - math.sqrt(5)) / 2  # decaying eigenvalue, quadratic formula
    np.testing.assert_allclose(ep.r_plus, [1.0, lam - 2.0], atol=1e-12)


def test_eigen_identities(harper, poly1):
    for m, box in ((harper, HARPER_BOX), (poly1, POLY1_BOX)):
        for z in regular_points(m, 25, box, seed=42):
            p = wd.principal_momentum(m.trace.eval(z) / 2)
            ep = wd.eigen_pair_from_p(m, z, p)
            mm = m.eval(z)
            scale = np.max(np.abs(mm)) + abs(cmath.exp(1j * p))
            assert np.max(np.abs(mm @ ep.r_plus - cmath.exp(1j * p) * ep.r_plus)) \
                < 1e-10 * scale * max(1, np.max(np.abs(ep.r_plus)))
            assert np.max(np.abs(ep.l_minus @ mm - cmath.exp(-1j * p) * ep.l_minus)) \
                < 1e-10 * scale * max(1, np.max(np.abs(ep.l_minus)))
            det = ep.det_r
            assert abs(ep.l_plus @ ep.r_plus - det) < 1e-10 * max(1, abs(det))
            assert abs(ep.l_minus @ ep.r_minus + det) < 1e-10 * max(1, abs(det))
            assert abs(ep.l_plus @ ep.r_minus) < 1e-10 * max(1, abs(det))
            # det(r+ r-) = -2i M12 sin p
            assert abs(det + 2j * mm[0, 1] * cmath.sin(p)) < 1e-10 * max(1, abs(det))


def test_harper_eigenvector_form(harper, harper_branch):
    z = 0.3 + 0.4j
    ep = wd.eigen_pair(harper_branch, z)
    v = -harper.trace.eval(z)  # potential value: M11 = -v
    np.testing.assert_allclose(ep.r_plus, [-1.0, cmath.exp(1j * ep.p) + v], atol=1e-12)
    np.testing.assert_allclose(ep.r_minus, [-1.0, cmath.exp(-1j * ep.p) + v], atol=1e-12)


def test_poly2_vanishing_eigenvector(poly2):
    br = wd.MomentumBranch(poly2, 0.0, -1j * math.log(2))  # e^{ip(0)} = 2
    ep = wd.eigen_pair(br, 0.0)
    np.testing.assert_allclose(ep.r_plus, [0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(ep.r_minus, [0.0, -1.5], atol=1e-14)


def test_omega_constant_zero(const_matrix):
    br = wd.default_branch(const_matrix, 0.0)
    assert abs(wd.omega_density(br, 0.7 + 0.2j, +1)) < 1e-14
    assert abs(wd.omega_density(br, 0.7 + 0.2j, -1)) < 1e-14


def test_omega_harper_closed_form(harper, harper_branch):
    # for the scalar-equation companion both densities reduce to
    # -p' cos p / (2 sin p), the derivative of -log sqrt(sin p)
    for z in regular_points(harper, 10, HARPER_BOX, seed=3):
        p = wd.momentum_at(harper_branch, z)
        pp = wd.momentum_derivative(harper_branch, z)
        expect = -pp * cmath.cos(p) / (2 * cmath.sin(p))
        assert abs(wd.omega_density(harper_branch, z, +1) - expect) < 1e-10 * max(1, abs(expect))
        assert abs(wd.omega_density(harper_branch, z, -1) - expect) < 1e-10 * max(1, abs(expect))


@pytest.mark.parametrize("sign", [+1, -1])
def test_omega_matches_defining_formula(harper, harper_branch, sign):
    # oracle: omega = -+ (i/2) p' - (l dr/dz)/(l r) with dr/dz by central
    # differences of the explicit eigenvector on the continued branch
    eps = 1e-6
    for z in regular_points(harper, 6, HARPER_BOX, seed=9):
        pz = wd.momentum_at(harper_branch, z)
        pp = wd.momentum_derivative(harper_branch, z)
        ep = wd.eigen_pair_from_p(harper, z, pz)
        p_plus = harper_branch.step(z, pz, z + eps)
        p_minus = harper_branch.step(z, pz, z - eps)
        ep_p = wd.eigen_pair_from_p(harper, z + eps, p_plus)
        ep_m = wd.eigen_pair_from_p(harper, z - eps, p_minus)
        if sign > 0:
            dr = (ep_p.r_plus - ep_m.r_plus) / (2 * eps)
            val = -0.5j * pp - (ep.l_plus @ dr) / (ep.l_plus @ ep.r_plus)
        else:
            dr = (ep_p.r_minus - ep_m.r_minus) / (2 * eps)
            val = 0.5j * pp - (ep.l_minus @ dr) / (ep.l_minus @ ep.r_minus)
        assert abs(wd.omega_density(harper_branch, z, sign) - val) < 1e-6


def test_omega_pole_proximity_error(poly2):
    br = wd.default_branch(poly2, 0.3)
    with pytest.raises(PoleProximityError):
        wd.omega_density(br, 0.0, +1)


def test_omega_pointwise_limit_value(harper):
    up = wd.MomentumBranch(harper, 0.25, -math.pi / 2)  # exp(ip) -> 0 upward
    w = wd.omega_density(up, 0.3 + 4j, +1)
    assert abs(w - 1j * math.pi) < 1e-9


def test_phase_integral_contractible_loop(harper, harper_branch):
    loop = [0.3, 0.4, 0.4 + 0.1j, 0.3 + 0.1j, 0.3]
    res = wd.phase_integral(harper_branch, loop, +1, 1e-12)
    assert abs(res.value) < 1e-10
    assert res.error_estimate < 1e-10


def test_phase_integral_constant_matrix(const_matrix):
    br = wd.default_branch(const_matrix, 0.0)
    res = wd.phase_integral(br, [0.0, 1.0 + 0.5j], +1, 1e-12)
    assert abs(res.value) < 1e-12


def test_sqrt_sin_bridge(harper, harper_branch):
    # exp(int Omega+) = sqrt(sin p(z0)) / sqrt(sin p(z)) with the log of
    # sin p tracked continuously along a densely sampled path (oracle)
    path = [0.25, 0.3 + 0.15j, 0.45 + 0.3j, 0.3 + 0.5j]
    res = wd.phase_integral(harper_branch, path, +1, 1e-12)
    dense = []
    for a, b in zip(path[:-1], path[1:]):
        dense.extend((a + (b - a) * t) for t in np.linspace(0, 1, 200, endpoint=False))
    dense.append(path[-1])
    ps = harper_branch.values_on(np.array(dense), from_ref=False)
    logs = continued_log([cmath.sin(p) for p in ps])
    expect = cmath.exp(-0.5 * (logs[-1] - logs[0]))
    assert abs(cmath.exp(res.value) - expect) < 1e-8


def test_phase_integral_path_independence(harper, harper_branch):
    tol = 1e-10
    a = wd.phase_integral(harper_branch, [0.3, 0.3 + 0.1j, 0.4 + 0.1j], +1, tol)
    b = wd.phase_integral(harper_branch, [0.3, 0.4, 0.4 + 0.1j], +1, tol)
    assert abs(a.value - b.value) < 2 * tol


def test_normalized_eigenvector_at_anchor(harper, harper_branch):
    v = wd.normalized_eigenvector(harper_branch, 0.3, 0.3, +1)
    ep = wd.eigen_pair(harper_branch, 0.3)
    np.testing.assert_allclose(v, ep.r_plus, atol=1e-12)


def test_normalized_eigenvector_det_invariant(harper, harper_branch):
    # det(V+ V-) stays equal to det(r+(z0) r-(z0)) along a path
    z0 = 0.25
    d0 = wd.eigen_pair(harper_branch, z0).det_r
    nodes = [z0 + 0.02 * k + 0.04j * k for k in range(20)]
    states = wd.walk_path(harper_branch, [z0] + nodes, 1e-12)
    for st in states:
        ep = wd.eigen_pair_from_p(harper_branch.matrix, st.z, st.p)
        det_v = cmath.exp(st.phase_plus + st.phase_minus) * ep.det_r
        assert abs(det_v - d0) < 1e-8 * abs(d0)


def test_harper_normalized_vector_formula(harper, harper_branch):
    # V+(z) = -sqrt(sin p(z0)) / sqrt(sin p(z)) * (1, exp(-ip(z)))
    z0, z = 0.25, 0.4 + 0.3j
    v = wd.normalized_eigenvector(harper_branch, z0, z, +1, tol=1e-12)
    dense = [z0 + (z - z0) * t for t in np.linspace(0, 1, 300)]
    ps = harper_branch.values_on(np.array(dense), from_ref=False)
    logs = continued_log([cmath.sin(p) for p in ps])
    scale = -cmath.exp(0.5 * logs[0]) * cmath.exp(-0.5 * logs[-1])
    expect = scale * np.array([1.0, cmath.exp(-1j * ps[-1])])
    np.testing.assert_allclose(v, expect, atol=1e-8)


def test_normalized_eigenvector_invalid_anchor(poly2):
    br = wd.MomentumBranch(poly2, 0.0, -1j * math.log(2))
    with pytest.raises(ValueError):
        wd.normalized_eigenvector(br, 0.0, 0.5, +1)


def test_residue_harper_turning_point(harper_branch):
    tp = 1j * math.acosh(2) / TWO_PI
    for sign in (+1, -1):
        res = wd.residue_at(harper_branch, tp, sign)
        assert res.turns == 2
        assert abs(res.value + 0.5) < 1e-6
        assert res.closure_defect < 1e-8
        assert not res.experimental


def test_residue_poly1_turning_points(poly1):
    br = wd.default_branch(poly1, -0.5)
    res0 = wd.residue_at(br, 0.0, +1)
    assert res0.turns == 2 and abs(res0.value + 1.5) < 1e-6
    res1 = wd.residue_at(br, -1.0, +1)
    assert res1.turns == 2 and abs(res1.value + 0.5) < 1e-6


def test_residue_poly2_regular_zero(poly2):
    br = wd.MomentumBranch(poly2, 0.0, -1j * math.log(2))
    rp = wd.residue_at(br, 0.0, +1)
    rm = wd.residue_at(br, 0.0, -1)
    assert rp.turns == 1 and rm.turns == 1
    assert abs(rp.value + 1.0) < 1e-6
    assert abs(rm.value) < 1e-6
    assert rp.m12_zero_order == 1 and not rp.experimental
    # the default branch has exp(ip(0)) = 1/2, swapping the vanishing sign
    brd = wd.default_branch(poly2, 0.0)
    assert abs(wd.residue_at(brd, 0.0, -1).value + 1.0) < 1e-6
    assert abs(wd.residue_at(brd, 0.0, +1).value) < 1e-6


def test_residue_regular_point_zero(harper_branch):
    res = wd.residue_at(harper_branch, 0.25 + 0.05j, +1, radius=0.02)
    assert res.turns == 1 and abs(res.value) < 1e-8


def test_residue_closure_defect_property(harper_branch):
    # a single loop around a turning point changes sheet; a double loop closes
    tp = 1j * math.acosh(2) / TWO_PI
    tol = 1e-8
    single = wd.residue_at(harper_branch, tp, +1, turns=1)
    double = wd.residue_at(harper_branch, tp, +1, turns=2)
    assert single.closure_defect > 10 * tol
    assert double.closure_defect < tol


def test_omega_sum_rule(harper, poly1):
    for m, box, base in ((harper, HARPER_BOX, 0.25), (poly1, POLY1_BOX, -0.5)):
        br = wd.default_branch(m, base)
        for z in regular_points(m, 10, box, seed=17):
            assert abs(wd.omega_sum_check(br, z)) < 1e-9


def test_omega_periodicity_at_height(harper, harper_branch):
    for y in (3.0, -3.0, 4.0):
        z = 0.17 + 1j * y
        p0 = wd.momentum_at(harper_branch, z)
        p1 = harper_branch.step(z, p0, z + 1)
        from wkbdiff.phase import _omega_from_p
        for sign in (+1, -1):
            w0 = _omega_from_p(harper, z, p0, sign)
            w1 = _omega_from_p(harper, z + 1, p1, sign)
            assert abs(w1 - w0) < 1e-8


def test_omega_infinity_limits_harper(harper):
    br = wd.default_branch(harper, 0.25)
    # n_u(t)=1, n_u(M12)=0, n_d(M11)=1, n_d(M12)=0
    assert abs(wd.omega_infinity_limit(br, "u", +1) - 1j * math.pi) < 1e-6
    assert abs(wd.omega_infinity_limit(br, "u", -1) - 1j * math.pi) < 1e-6
    assert abs(wd.omega_infinity_limit(br, "d", +1) + 1j * math.pi) < 1e-6
    assert abs(wd.omega_infinity_limit(br, "d", -1) + 1j * math.pi) < 1e-6


def test_omega_infinity_decay_exponent(harper_mu):
    # with a j=0 harmonic in the trace the correction decays exactly
    # like exp(-2 pi y)
    br = wd.default_branch(harper_mu, 0.25)
    for side in ("u", "d"):
        for sign in (+1, -1):
            rep = wd.omega_infinity_report(br, side, sign)
            assert abs(rep.decay_exponent - TWO_PI) < 0.1 * TWO_PI


def test_omega_infinity_insufficient_height(harper_mu):
    br = wd.default_branch(harper_mu, 0.25)
    with pytest.raises(BranchError):
        wd.omega_infinity_report(br, "u", +1, ys=(0.4, 0.7, 1.0))
