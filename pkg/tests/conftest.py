import numpy as np
import pytest

from pdflow import problems


@pytest.fixture(scope="session")
def interval():
    """1-d demo problem with saddle (1, 4)."""
    return problems.interval_qp()


@pytest.fixture(scope="session")
def halfplane():
    """2-d problem with one linear constraint; saddle ((5/3, 4/3), 4/3)."""
    return problems.halfplane_qp()


@pytest.fixture(scope="session")
def disc():
    """2-d problem with disc + half-plane constraints; saddle ((2, 0), (1, 0))."""
    return problems.disc_halfplane_qp()


@pytest.fixture(scope="session")
def all_problems(interval, halfplane, disc):
    return [interval, halfplane, disc]


def central_diff_grad(f, x, eps=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        hi = x.copy()
        lo = x.copy()
        hi[i] += eps
        lo[i] -= eps
        out[i] = (f(hi) - f(lo)) / (2.0 * eps)
    return out


def central_diff_jac(g, x, m, eps=1e-6):
    """Central finite-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    out = np.empty((m, x.shape[0]))
    for i in range(x.shape[0]):
        hi = x.copy()
        lo = x.copy()
        hi[i] += eps
        lo[i] -= eps
        out[:, i] = (np.asarray(g(hi)) - np.asarray(g(lo))) / (2.0 * eps)
    return out


def rel_err(approx, exact):
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = max(1.0, float(np.linalg.norm(exact)))
    return float(np.linalg.norm(approx - exact)) / scale
