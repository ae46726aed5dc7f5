import numpy as np
import pytest

from liftlab.h2 import MatPoly, eval_circle_grid


def random_matpoly(rng, out_dim, in_dim, degree):
    c = rng.standard_normal((degree + 1, out_dim, in_dim)) + 1j * rng.standard_normal(
        (degree + 1, out_dim, in_dim)
    )
    return MatPoly(c)


def contractive_matpoly(rng, out_dim, in_dim, degree, norm=0.95, probe_grid=None):
    """Random matrix polynomial scaled so its grid sup-norm is `norm`."""
    p = random_matpoly(rng, out_dim, in_dim, degree)
    grid = probe_grid or max(64, 2 * degree + 1)
    vals = eval_circle_grid(p, 1.0, grid)
    sup = max(np.linalg.norm(v, 2) for v in vals)
    return MatPoly(p.coeffs * (norm / sup))


def random_contraction(rng, rows, cols, norm=1.0):
    m = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    s = np.linalg.norm(m, 2)
    return m * (norm / s) if s > 0 else m


def random_unitary(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(rng, rows, cols):
    assert rows >= cols
    return random_unitary(rng, rows)[:, :cols]


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
