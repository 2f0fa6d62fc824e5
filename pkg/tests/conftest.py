import numpy as np
import pytest

import wkbdiff as wd


@pytest.fixture(scope="session")
def harper():
    return wd.harper_companion(0.5, 0.0)


@pytest.fixture(scope="session")
def harper_mu():
    """Harper-type matrix with a nonzero mean, so the trace has a j=0 harmonic."""
    return wd.harper_companion(0.5, 0.3)


@pytest.fixture(scope="session")
def const_matrix():
    return wd.FourierMatrix({0: [[2, 1], [1, 1]]})


@pytest.fixture(scope="session")
def poly1():
    """[[1+z+z^2, z], [1+z, 1]]: trace 2+z+z^2, turning points at 0 and -1."""
    return wd.PolynomialMatrix([[[1, 1, 1], [0, 1]], [[1, 1], [1]]])


@pytest.fixture(scope="session")
def poly2():
    """[[2+z, z], [5/2+z, 1/2+z]]: M12 has a simple zero at the regular point 0."""
    return wd.PolynomialMatrix([[[2, 1], [0, 1]], [[2.5, 1], [0.5, 1]]])


@pytest.fixture(scope="session")
def harper_branch(harper):
    """Branch with p(0.25) = pi/2; Re p is pi/2 on the whole line x = 0.25."""
    return wd.default_branch(harper, 0.25)


def regular_points(matrix, n, box, avoid=(), min_dist=0.12, seed=1234):
    """Random points in box staying away from turning points and M12 zeros."""
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = box
    out = []
    while len(out) < n:
        z = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
        t = matrix.trace.eval(z)
        if min(abs(t - 2.0), abs(t + 2.0)) < 0.15:
            continue
        if abs(matrix.entries[1].eval(z)) < 0.15:
            continue
        if any(abs(z - a) < min_dist for a in avoid):
            continue
        out.append(z)
    return out


HARPER_BOX = (0.0, 1.0, -1.2, 1.2)
POLY1_BOX = (-2.0, 1.0, -0.9, 0.9)
