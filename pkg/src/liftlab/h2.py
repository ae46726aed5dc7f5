"""Truncated Taylor series on the unit disc and their circle-grid numerics.

A ``MatPoly`` is a matrix-valued polynomial sum(P_k z^k) standing in for
an analytic operator function; a ``VecPoly`` is the vector-valued
analogue.  Degrees and grid sizes are explicit everywhere: limits
toward the boundary are replaced by evaluations on rho-circles, and a
K-point uniform grid integrates trigonometric polynomials of degree
< K exactly, so every Parseval-type statement below is exact once
K >= 2*degree + 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg

log = logging.getLogger(__name__)

DEFAULT_DEGREE = 256
DEFAULT_GRID = 2048
LOG_FLOOR = 1e-12


class H2Error(ValueError):
    pass


class GridTooCoarse(H2Error):
    pass


class NotSquare(H2Error):
    pass


class AllZeroModulus(H2Error):
    pass


@dataclass(frozen=True)
class MatPoly:
    """Matrix-valued polynomial; coeffs[k] is the degree-k coefficient."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3:
            raise H2Error("coeffs must have shape (degree+1, out_dim, in_dim)")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def out_dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def in_dim(self) -> int:
        return self.coeffs.shape[2]

    def __call__(self, z: complex) -> np.ndarray:
        """Horner evaluation at a point of the closed disc."""
        acc = np.zeros((self.out_dim, self.in_dim), dtype=complex)
        for k in range(self.degree, -1, -1):
            acc = acc * z + self.coeffs[k]
        return acc

    def circle_values(self, rho: float, grid: int) -> np.ndarray:
        """Values on the rho-circle grid, shape (grid, out_dim, in_dim)."""
        return eval_circle_grid(self, rho, grid)

    def adjoint_coeffs(self) -> "MatPoly":
        """Coefficientwise adjoint, representing z -> P(conj(z))*."""
        return MatPoly(np.conj(np.swapaxes(self.coeffs, 1, 2)))

    def block_rows(self, split: int) -> tuple["MatPoly", "MatPoly"]:
        return MatPoly(self.coeffs[:, :split, :]), MatPoly(self.coeffs[:, split:, :])

    @staticmethod
    def constant(matrix) -> "MatPoly":
        m = linalg.as_matrix(matrix)
        return MatPoly(m[np.newaxis, :, :])

    @staticmethod
    def identity(dim: int) -> "MatPoly":
        return MatPoly.constant(np.eye(dim, dtype=complex))

    @staticmethod
    def zero(out_dim: int, in_dim: int, degree: int = 0) -> "MatPoly":
        return MatPoly(np.zeros((degree + 1, out_dim, in_dim), dtype=complex))

    @staticmethod
    def from_scalar_coeffs(seq) -> "MatPoly":
        c = np.asarray(seq, dtype=complex)
        return MatPoly(c.reshape(-1, 1, 1))


@dataclass(frozen=True)
class VecPoly:
    """Vector-valued polynomial; coeffs[k] is the degree-k coefficient."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2:
            raise H2Error("coeffs must have shape (degree+1, dim)")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, z: complex) -> np.ndarray:
        acc = np.zeros(self.dim, dtype=complex)
        for k in range(self.degree, -1, -1):
            acc = acc * z + self.coeffs[k]
        return acc


def eval_circle_grid(p: MatPoly, rho: float, grid: int) -> np.ndarray:
    """Evaluate P at the nodes rho*exp(2*pi*i*k/grid), k = 0..grid-1.

    The trapezoid mean over this grid integrates trigonometric
    polynomials of degree < grid exactly; grid must cover twice the
    polynomial degree for quadratic quantities, hence the guard.
    """
    if not (0.0 < rho <= 1.0):
        raise H2Error("rho must lie in (0, 1]")
    if grid < 2 * p.degree + 1:
        raise GridTooCoarse(f"grid {grid} < 2*degree+1 = {2 * p.degree + 1}")
    weighted = p.coeffs * (rho ** np.arange(p.degree + 1))[:, None, None]
    padded = np.zeros((grid,) + p.coeffs.shape[1:], dtype=complex)
    padded[: p.degree + 1] = weighted
    return np.fft.ifft(padded, axis=0) * grid


def circle_nodes(rho: float, grid: int) -> np.ndarray:
    return rho * np.exp(2j * np.pi * np.arange(grid) / grid)


def pad_coeffs(p: MatPoly, degree: int) -> MatPoly:
    if p.degree >= degree:
        return MatPoly(p.coeffs[: degree + 1])
    shape = (degree + 1 - p.coeffs.shape[0],) + p.coeffs.shape[1:]
    return MatPoly(np.concatenate([p.coeffs, np.zeros(shape, dtype=complex)], axis=0))


def vstack_polys(top: MatPoly, bottom: MatPoly) -> MatPoly:
    deg = max(top.degree, bottom.degree)
    t = pad_coeffs(top, deg)
    b = pad_coeffs(bottom, deg)
    return MatPoly(np.concatenate([t.coeffs, b.coeffs], axis=1))


def polymul(p: MatPoly, q: MatPoly, degree: int | None = None) -> MatPoly:
    """Product of matrix polynomials, truncated to the requested degree."""
    if p.in_dim != q.out_dim:
        raise H2Error("inner dimensions do not match")
    full = p.degree + q.degree
    deg = full if degree is None else min(degree, full)
    out = np.zeros((deg + 1, p.out_dim, q.in_dim), dtype=complex)
    for k in range(min(p.degree, deg) + 1):
        hi = min(q.degree, deg - k)
        out[k : k + hi + 1] += np.einsum("ij,njk->nik", p.coeffs[k], q.coeffs[: hi + 1])
    return MatPoly(out)


def apply_to_vector(p: MatPoly, d) -> VecPoly:
    """The vector polynomial z -> P(z) d for a constant vector d."""
    d = np.asarray(d, dtype=complex).reshape(-1)
    if d.shape[0] != p.in_dim:
        raise H2Error("vector dimension does not match")
    return VecPoly(np.einsum("nij,j->ni", p.coeffs, d))


def neumann_inverse(a: MatPoly, degree: int) -> MatPoly:
    """Expansion of (I - z*A(z))^(-1) through the requested degree.

    The output J satisfies J_0 = I and (I - z A(z)) J(z) = I up to
    O(z^(degree+1)), via the convolution recursion
    J_n = sum_{k=1..n} A_{k-1} J_{n-k}.
    """
    if a.out_dim != a.in_dim:
        raise NotSquare("A(z) must be square")
    dim = a.in_dim
    out = np.zeros((degree + 1, dim, dim), dtype=complex)
    out[0] = np.eye(dim)
    for n in range(1, degree + 1):
        acc = np.zeros((dim, dim), dtype=complex)
        for k in range(1, min(n, a.degree + 1) + 1):
            acc += a.coeffs[k - 1] @ out[n - k]
        out[n] = acc
    return MatPoly(out)


def gamma_from_W(w: MatPoly, degree: int) -> MatPoly:
    """B(z) (I - z A(z))^(-1) for W = [A; B] with the square A block on top."""
    split = w.in_dim
    if w.out_dim < split:
        raise NotSquare("W has fewer rows than its square top block needs")
    a, b = w.block_rows(split)
    j = neumann_inverse(a, degree)
    return polymul(b, j, degree)


def hardy_norm_sq(v: VecPoly) -> float:
    """Squared H^2 norm: the sum of squared coefficient norms."""
    return float(np.sum(np.abs(v.coeffs) ** 2))


def resolvent_apply_grid(a: MatPoly, d, rho: float, grid: int) -> np.ndarray:
    """Values (I - z A(z))^(-1) d on the rho-circle, shape (grid, dim).

    Solves one linear system per node instead of summing a truncated
    Neumann series; reliable even when the series coefficients do not
    decay, e.g. near a singular boundary point.
    """
    if a.out_dim != a.in_dim:
        raise NotSquare("A(z) must be square")
    d = np.asarray(d, dtype=complex).reshape(-1)
    vals = eval_circle_grid(a, rho, grid)
    z = circle_nodes(rho, grid)
    systems = np.eye(a.in_dim) - z[:, None, None] * vals
    rhs = np.broadcast_to(d, (grid, a.in_dim))
    return np.linalg.solve(systems, rhs[..., None])[..., 0]


def radial_mean_norm_sq(f: MatPoly, d, rho: float, grid: int, defect_of: MatPoly | None = None) -> float:
    """Grid mean of ||F(z) d||^2 over the rho-circle.

    With ``defect_of=G``, the pointwise defect of G's grid value is
    applied first: the mean of ||D_{G(z)} F(z) d||^2.  F(z) d must then
    live in the domain of G(z).
    """
    values = np.einsum("nij,j->ni", eval_circle_grid(f, rho, grid), np.asarray(d, dtype=complex))
    if defect_of is not None:
        if defect_of.in_dim != f.out_dim:
            raise H2Error("defect_of domain does not match F's range")
        defs = linalg.defect_batch(eval_circle_grid(defect_of, rho, grid))
        values = np.einsum("nij,nj->ni", defs, values)
    return float(np.mean(np.sum(np.abs(values) ** 2, axis=1)))


@dataclass(frozen=True)
class CircleMeasure:
    """Positive measure on the unit circle: piecewise-constant density
    pieces (theta_start, theta_end, value) against dtheta/(2*pi), plus
    point masses (theta, mass)."""

    density_pieces: tuple = ()
    point_masses: tuple = ()

    def __post_init__(self):
        pieces = tuple((float(a), float(b), float(v)) for a, b, v in self.density_pieces)
        masses = tuple((float(t), float(m)) for t, m in self.point_masses)
        for a, b, v in pieces:
            if not (0.0 <= a < b <= 2.0 * np.pi):
                raise H2Error("density piece must satisfy 0 <= start < end <= 2*pi")
            if v < 0:
                raise H2Error("density value must be nonnegative")
        for (a1, b1, _), (a2, b2, _) in zip(pieces, pieces[1:]):
            if b1 > a2 + 1e-15:
                raise H2Error("density pieces overlap")
        for _, m in masses:
            if m < 0:
                raise H2Error("point mass must be nonnegative")
        object.__setattr__(self, "density_pieces", pieces)
        object.__setattr__(self, "point_masses", masses)

    def total_mass(self) -> float:
        dens = sum(v * (b - a) for a, b, v in self.density_pieces) / (2.0 * np.pi)
        return dens + sum(m for _, m in self.point_masses)

    def moment(self, n: int) -> complex:
        """Integral of conj(zeta)^n against the measure."""
        if n == 0:
            return complex(self.total_mass())
        acc = 0.0 + 0.0j
        for a, b, v in self.density_pieces:
            acc += v * (np.exp(-1j * n * b) - np.exp(-1j * n * a)) / (-2j * np.pi * n)
        for t, m in self.point_masses:
            acc += m * np.exp(-1j * n * t)
        return complex(acc)

    def singular_points(self) -> list:
        """Angles where boundary statements should not be sampled:
        density jump locations and atom positions."""
        pts = []
        for a, b, _ in self.density_pieces:
            pts.extend([a, b % (2.0 * np.pi)])
        pts.extend(t for t, _ in self.point_masses)
        return sorted(set(float(p) % (2.0 * np.pi) for p in pts))


def herglotz_from_measure(mu: CircleMeasure, degree: int) -> MatPoly:
    """Taylor expansion of the circle average of (zeta+z)/(zeta-z).

    Normalized so that Lebesgue density 1 gives the constant 1; the
    coefficients are mu's total mass followed by twice its moments.
    """
    coeffs = np.zeros(degree + 1, dtype=complex)
    coeffs[0] = mu.total_mass()
    for n in range(1, degree + 1):
        coeffs[n] = 2.0 * mu.moment(n)
    return MatPoly.from_scalar_coeffs(coeffs)


def herglotz_from_A(a: MatPoly, degree: int) -> MatPoly:
    """Expansion of (I + z A(z))(I - z A(z))^(-1); real part is PSD on the disc."""
    j = neumann_inverse(a, degree)
    coeffs = 2.0 * j.coeffs.copy()
    coeffs[0] -= np.eye(a.in_dim)
    return MatPoly(coeffs)


def herglotz_to_symbol(f: MatPoly, degree: int) -> MatPoly:
    """Invert the resolvent transform: the A with (I+zA)(I-zA)^(-1) = F.

    Requires F(0) = I (so the quotient vanishes at the origin and the
    division by z is exact).  Inverse of herglotz_from_A up to
    truncation.  The output degree is capped at f.degree - 1: the
    division shifts degrees down by one, so the coefficient at
    f.degree would need data beyond the input's truncation.
    """
    dim = f.in_dim
    if f.out_dim != dim:
        raise NotSquare("Herglotz data must be square")
    if np.linalg.norm(f.coeffs[0] - np.eye(dim), 2) > 1e-10:
        raise H2Error("transform inversion needs F(0) = I")
    eff = min(degree, max(f.degree - 1, 0))
    num = MatPoly(f.coeffs - (np.arange(f.degree + 1) == 0)[:, None, None] * np.eye(dim))
    den = MatPoly(f.coeffs + (np.arange(f.degree + 1) == 0)[:, None, None] * np.eye(dim))
    za = polymul(series_inverse(den, eff + 1), num, eff + 1)
    return MatPoly(za.coeffs[1:])


def series_inverse(p: MatPoly, degree: int) -> MatPoly:
    """Multiplicative inverse of a square polynomial with invertible P_0."""
    if p.out_dim != p.in_dim:
        raise NotSquare("series inverse needs a square polynomial")
    dim = p.in_dim
    q0 = np.linalg.inv(p.coeffs[0])
    out = np.zeros((degree + 1, dim, dim), dtype=complex)
    out[0] = q0
    for n in range(1, degree + 1):
        acc = np.zeros((dim, dim), dtype=complex)
        for k in range(1, min(n, p.degree) + 1):
            acc += p.coeffs[k] @ out[n - k]
        out[n] = -q0 @ acc
    return MatPoly(out)


def series_exp_scalar(coeffs, degree: int) -> np.ndarray:
    """exp of a scalar power series, via n*b_n = sum k*l_k*b_{n-k}."""
    l = np.zeros(degree + 1, dtype=complex)
    src = np.asarray(coeffs, dtype=complex).reshape(-1)
    l[: min(len(src), degree + 1)] = src[: degree + 1]
    b = np.zeros(degree + 1, dtype=complex)
    b[0] = np.exp(l[0])
    for n in range(1, degree + 1):
        b[n] = np.sum(np.arange(1, n + 1) * l[1 : n + 1] * b[n - 1 :: -1][: n]) / n
    return b


def unit_circle_values(coeffs, grid: int) -> np.ndarray:
    """Exact values of a scalar polynomial at the K-th roots of unity.

    Coefficients are folded modulo the grid size (z^n = z^(n mod K)
    there), so arbitrarily high degrees evaluate exactly on the nodes.
    """
    c = np.asarray(coeffs, dtype=complex).reshape(-1)
    folded = np.zeros(grid, dtype=complex)
    for start in range(0, len(c), grid):
        chunk = c[start : start + grid]
        folded[: len(chunk)] += chunk
    return np.fft.ifft(folded) * grid


@dataclass(frozen=True)
class OuterResult:
    """Outer function reconstruction plus its diagnostics.

    poly is the Taylor truncation of exp(log_series); log_coeffs holds
    the log-series coefficients, whose exact node values give the outer
    function's boundary values without exp-truncation error.
    """

    poly: MatPoly
    clamped: int
    max_modulus_error: float
    log_coeffs: np.ndarray = field(default=None, repr=False)


def outer_from_boundary_modulus(samples, degree: int, floor: float = LOG_FLOOR) -> OuterResult:
    """Outer function b with |b| matching the given boundary samples.

    samples are nonnegative values of the target modulus on the uniform
    K-point grid.  Values below ``floor`` are clamped (and counted) so
    the log stays integrable.  b(0) = exp(mean log m) > 0, and with
    degree >= K/2 the grid moduli are reproduced to rounding.
    """
    m = np.asarray(samples, dtype=float).reshape(-1)
    if np.any(m < 0):
        raise H2Error("boundary modulus samples must be nonnegative")
    grid = m.shape[0]
    clamped = int(np.sum(m < floor))
    if clamped == grid:
        raise AllZeroModulus("every sample is below the clamping floor")
    m = np.maximum(m, floor)
    hat = np.fft.fft(np.log(m)) / grid
    half = grid // 2
    l = np.zeros(degree + 1, dtype=complex)
    l[0] = hat[0].real
    top = min(degree, grid - 1, half)
    for n in range(1, top + 1):
        l[n] = 2.0 * hat[n]
    if grid % 2 == 0 and half <= degree:
        l[half] = hat[half]
    series = series_exp_scalar(l, degree)
    b = MatPoly.from_scalar_coeffs(series)
    vals = unit_circle_values(series, grid)
    err = float(np.max(np.abs(np.abs(vals) - m)))
    return OuterResult(b, clamped, err, l)


def is_outer(p: MatPoly, grid: int, tol: float = 1e-8) -> bool:
    """Szegő test on det P: outer iff the log of |det| at 0 meets the
    boundary mean of log |det|.  A singular value at the origin counts
    as not outer."""
    if p.out_dim != p.in_dim:
        raise NotSquare("outerness test needs a square polynomial")
    det0 = np.linalg.det(p(0.0))
    if abs(det0) < 1e-300:
        log.info("determinant vanishes at the origin; reporting not outer")
        return False
    if grid < 2 * p.degree + 1:
        raise GridTooCoarse(f"grid {grid} < 2*degree+1 = {2 * p.degree + 1}")
    vals = eval_circle_grid(p, 1.0, grid)
    dets = np.abs(np.linalg.det(vals))
    mean_log = float(np.mean(np.log(np.maximum(dets, 1e-300))))
    return bool(np.log(abs(det0)) >= mean_log - tol)
