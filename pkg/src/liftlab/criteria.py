"""Isometry diagnostics with numerical traces and threshold verdicts.

Every check returns a CriterionReport carrying the raw radial ladder
and Taylor-coefficient traces alongside the verdict, because the
underlying statements are limits: a verdict is a reproducible threshold
decision, never an extrapolation.  The rules are

* a radial ladder passes when it decreases monotonically (within
  slack) and its final value is below its threshold; a monotone ladder
  stuck above threshold fails; a non-monotone ladder is inconclusive;
* a Taylor trace passes when it stays below its threshold from the
  half-way index on, fails when the tail has not decayed to within a
  factor 0.1 of the head, and is inconclusive in between;
* boundary-mass statements compare against the probe norm at the
  largest radius.

Statements quantified over a whole space are probed on a basis plus a
seeded batch of random unit vectors; the probe count and seed are part
of the recorded tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import h2, linalg
from .clt import LiftingData, assemble_schur_W
from .h2 import MatPoly

DEFAULT_LADDER = (0.9, 0.99, 0.999)
TOL_INT = 1e-3
TOL_TAYLOR = 1e-6
TOL_MASS = 1e-2
TOL_REMAINDER = 1e-2
TOL_INNER = 0.05
N_PROBES = 4
PROBE_SEED = 1


class CriteriaError(ValueError):
    pass


class Z0NotAZero(CriteriaError):
    pass


class NotIsometricR0(CriteriaError):
    pass


class BoundaryAssumptionMissing(CriteriaError):
    pass


class SequenceViolatesRecursion(CriteriaError):
    pass


@dataclass
class CriterionReport:
    criterion_id: str
    verdict: str
    rho_ladder: list = field(default_factory=list)
    taylor_trace: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    notes: str = ""
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "criterion_id": self.criterion_id,
            "verdict": self.verdict,
            "rho_ladder": [[float(r), float(v)] for r, v in self.rho_ladder],
            "taylor_trace": [[int(n), float(v)] for n, v in self.taylor_trace],
            "tolerances": self.tolerances,
            "notes": self.notes,
            "extras": self.extras,
        }

    def rho_csv(self) -> str:
        lines = ["rho,value"]
        lines += [f"{r:.17g},{v:.17g}" for r, v in self.rho_ladder]
        return "\n".join(lines) + "\n"

    def taylor_csv(self) -> str:
        lines = ["n,value"]
        lines += [f"{n},{v:.17g}" for n, v in self.taylor_trace]
        return "\n".join(lines) + "\n"


def ladder_verdict(values, tol: float, slack: float = 1e-9) -> str:
    """Final rung below threshold plus monotone decrease is a pass; a
    final rung at or above threshold is a fail (whatever the shape); a
    non-monotone ladder that still ends below threshold is inconclusive."""
    vals = [float(v) for v in values]
    if not vals:
        return "pass"
    if vals[-1] >= tol:
        return "fail"
    mono = all(b <= a + slack * max(1.0, abs(a)) for a, b in zip(vals, vals[1:]))
    return "pass" if mono else "inconclusive"


def taylor_verdict(values, tol: float) -> str:
    vals = [float(v) for v in values]
    if not vals:
        return "pass"
    half = len(vals) // 2
    tail = vals[half:] if vals[half:] else vals[-1:]
    head = vals[:half] if vals[:half] else vals
    if max(tail) < tol:
        return "pass"
    if max(tail) > 0.1 * max(head):
        return "fail"
    return "inconclusive"


def combine_verdicts(*verdicts: str) -> str:
    if any(v == "fail" for v in verdicts):
        return "fail"
    if all(v == "pass" for v in verdicts):
        return "pass"
    return "inconclusive"


def probe_matrix(dim: int, basis=None, n_probes: int = N_PROBES, seed: int = PROBE_SEED) -> np.ndarray:
    """Columns to quantify 'for all d' statements over: a basis plus
    seeded random unit vectors."""
    if dim == 0:
        return np.zeros((0, 0), dtype=complex)
    cols = []
    if basis is None:
        cols.extend(np.eye(dim, dtype=complex).T)
    else:
        cols.extend(np.asarray(b, dtype=complex).reshape(-1) for b in basis)
    rng = np.random.default_rng(seed)
    for _ in range(n_probes):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        cols.append(v / np.linalg.norm(v))
    return np.stack(cols, axis=1) if cols else np.zeros((dim, 0), dtype=complex)


def _split_symbol(w: MatPoly) -> tuple[MatPoly, MatPoly]:
    if w.out_dim < w.in_dim:
        raise CriteriaError("symbol needs at least as many rows as columns")
    return w.block_rows(w.in_dim)


def _resolvent_probes(a: MatPoly, probes: np.ndarray, rho: float, grid: int) -> np.ndarray:
    """(I - z A(z))^(-1) applied to every probe column, shape (grid, dim, m)."""
    vals = h2.eval_circle_grid(a, rho, grid)
    z = h2.circle_nodes(rho, grid)
    systems = np.eye(a.in_dim) - z[:, None, None] * vals
    rhs = np.broadcast_to(probes, (grid,) + probes.shape)
    return np.linalg.solve(systems, rhs)


def _norms_sq(values: np.ndarray) -> np.ndarray:
    """Squared column norms of a (grid, dim, m) stack -> (grid, m)."""
    return np.sum(np.abs(values) ** 2, axis=1)


def included_nodes(grid: int, rho: float, exclusions=()) -> np.ndarray:
    """Boolean mask of grid nodes kept for boundary a.e. statements.

    Each exclusion is (theta, kind): declared jump discontinuities are
    cut within one grid spacing; singular atoms within the wider
    max(spacing, 2*sqrt(1-rho)) because their radial bumps carry heavy
    tails at scale sqrt(1-rho).
    """
    theta = 2.0 * np.pi * np.arange(grid) / grid
    mask = np.ones(grid, dtype=bool)
    spacing = 2.0 * np.pi / grid
    for point, kind in exclusions:
        width = spacing if kind == "jump" else max(spacing, 2.0 * np.sqrt(max(1.0 - rho, 0.0)))
        delta = np.abs((theta - float(point) + np.pi) % (2.0 * np.pi) - np.pi)
        mask &= delta > width
    return mask


def radial_isometry_check(
    w: MatPoly,
    basis=None,
    degree: int = h2.DEFAULT_DEGREE,
    ladder=DEFAULT_LADDER,
    grid: int = h2.DEFAULT_GRID,
    tol_int: float = TOL_INT,
    tol_taylor: float = TOL_TAYLOR,
    n_probes: int = N_PROBES,
    seed: int = PROBE_SEED,
) -> CriterionReport:
    """Full radial test of whether the Schur-class symbol generates an
    isometric coefficient map.

    Evaluates the defect integral ladder, the weighted resolvent ladder
    and its defect-of-A twin (two equivalent formulations), and the
    Taylor decay of the resolvent coefficients.  Pass requires the
    defect ladder to sink below tol_int and the Taylor trace below
    tol_taylor by the half-way degree.
    """
    a, _ = _split_symbol(w)
    probes = probe_matrix(a.in_dim, basis, n_probes, seed)
    nd2 = np.sum(np.abs(probes) ** 2, axis=0)
    defect_ladder, weighted_ladder, a_defect_dev = [], [], []
    for rho in ladder:
        d_vals = _resolvent_probes(a, probes, rho, grid)
        w_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(w, rho, grid), d_vals)
        a_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(a, rho, grid), d_vals)
        dn2 = _norms_sq(d_vals)
        defect_ladder.append(float(np.max(np.mean(dn2 - _norms_sq(w_vals), axis=0))))
        weighted_ladder.append(float((1.0 - rho) * np.max(np.mean(dn2, axis=0))))
        a_def = np.mean(dn2 - _norms_sq(a_vals), axis=0)
        a_defect_dev.append(float(np.max(np.abs(a_def - nd2))))
    j = h2.neumann_inverse(a, degree)
    taylor = np.linalg.norm(np.einsum("nij,jm->nim", j.coeffs, probes), axis=1)
    taylor_max = np.max(taylor, axis=1)
    v_ladder = ladder_verdict(defect_ladder, tol_int)
    v_taylor = taylor_verdict(taylor_max, tol_taylor)
    verdict = combine_verdicts(v_ladder, v_taylor)
    return CriterionReport(
        criterion_id="radial_isometry",
        verdict=verdict,
        rho_ladder=list(zip(ladder, defect_ladder)),
        taylor_trace=list(enumerate(taylor_max)),
        tolerances={
            "tol_int": tol_int,
            "tol_taylor": tol_taylor,
            "degree": degree,
            "grid": grid,
            "n_probes": n_probes,
            "seed": seed,
        },
        notes=f"defect ladder: {v_ladder}; taylor decay: {v_taylor}",
        extras={
            # the weighted resolvent ladder has an intrinsic (1-rho)||d||^2
            # floor, so it is judged at the coarser mass threshold, like
            # its equivalent defect-of-A deviation form
            "weighted_ladder": list(zip(ladder, weighted_ladder)),
            "a_defect_deviation": list(zip(ladder, a_defect_dev)),
            "weighted_verdict": ladder_verdict(weighted_ladder, TOL_MASS),
            "a_defect_verdict": "pass" if a_defect_dev[-1] < TOL_MASS else "fail",
        },
    )


def vanishing_point_check(
    w: MatPoly,
    z0: complex,
    basis=None,
    ladder=DEFAULT_LADDER,
    grid: int = h2.DEFAULT_GRID,
    tol_int: float = TOL_INT,
    tol: float = 1e-8,
    n_probes: int = N_PROBES,
    seed: int = PROBE_SEED,
) -> CriterionReport:
    """Isometry test when the symbol vanishes at an interior point:
    the defect-integral ladder alone decides."""
    if linalg.operator_norm(w(z0)) > tol:
        raise Z0NotAZero(f"symbol does not vanish at z0={z0}")
    a, _ = _split_symbol(w)
    probes = probe_matrix(a.in_dim, basis, n_probes, seed)
    defect_ladder = []
    for rho in ladder:
        d_vals = _resolvent_probes(a, probes, rho, grid)
        w_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(w, rho, grid), d_vals)
        defect_ladder.append(float(np.max(np.mean(_norms_sq(d_vals) - _norms_sq(w_vals), axis=0))))
    verdict = ladder_verdict(defect_ladder, tol_int)
    notes = ""
    if np.max(np.abs(w.coeffs)) <= tol:
        notes = "symbol is identically zero: the coefficient map is zero, not isometric"
        verdict = "fail"
    return CriterionReport(
        criterion_id="vanishing_point",
        verdict=verdict,
        rho_ladder=list(zip(ladder, defect_ladder)),
        tolerances={"tol_int": tol_int, "grid": grid, "n_probes": n_probes, "seed": seed},
        notes=notes,
    )


def constant_symbol_check(w0, tol: float = linalg.CLASSIFY_TOL, trace_len: int = 64) -> CriterionReport:
    """Constant-symbol special case: pass iff the block column is an
    isometry and its square top block has spectral radius below one."""
    m = linalg.as_matrix(w0)
    a0 = m[: m.shape[1], :]
    classes = linalg.classify(m, tol)
    rho_a = linalg.spectral_radius(a0)
    iso = "isometry" in classes
    stable = rho_a < 1.0 - tol
    powers = []
    p = np.eye(a0.shape[0], dtype=complex)
    for n in range(trace_len):
        powers.append((n, float(np.linalg.norm(p, 2))))
        p = p @ a0
    parts = []
    if not iso:
        parts.append("symbol is not an isometry")
    if not stable:
        parts.append(f"top block has spectral radius {rho_a:.6g}")
    return CriterionReport(
        criterion_id="constant_symbol",
        verdict="pass" if iso and stable else "fail",
        taylor_trace=powers,
        tolerances={"tol": tol},
        notes="; ".join(parts),
        extras={"spectral_radius": rho_a, "isometry": iso},
    )


def boundary_measure_check(
    w: MatPoly,
    basis=None,
    ladder=DEFAULT_LADDER,
    grid: int = h2.DEFAULT_GRID,
    degree: int = h2.DEFAULT_DEGREE,
    tol_mass: float = TOL_MASS,
    tol_remainder: float = TOL_REMAINDER,
    exclusions=(),
    n_probes: int = N_PROBES,
    seed: int = PROBE_SEED,
) -> CriterionReport:
    """Boundary-measure test: absolute continuity via the recovered
    boundary mass, plus vanishing of the radial remainder.

    The mass ladder averages the defect-of-A integrand over included
    nodes (its radial limit recovers the absolutely continuous part of
    the representing measure; a deficit against ||d||^2 is escaped
    singular mass).  The remainder k combines the resolvent growth and
    symbol defect and must sink to zero for an isometry; its values
    carry an intrinsic O(1-rho) floor, hence the looser threshold.
    """
    a, _ = _split_symbol(w)
    probes = probe_matrix(a.in_dim, basis, n_probes, seed)
    nd2 = np.sum(np.abs(probes) ** 2, axis=0)
    mass_ladder, mass_dev, k_ladder = [], [], []
    for rho in ladder:
        mask = included_nodes(grid, rho, exclusions)
        d_vals = _resolvent_probes(a, probes, rho, grid)
        w_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(w, rho, grid), d_vals)
        a_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(a, rho, grid), d_vals)
        dn2 = _norms_sq(d_vals)
        mass = np.mean((dn2 - _norms_sq(a_vals))[mask], axis=0)
        k_vals = ((1.0 - rho**2) / rho**2) * dn2 + (dn2 - _norms_sq(w_vals)) / rho**2
        mass_ladder.append(float(np.max(mass)))
        mass_dev.append(float(np.max(np.abs(mass - nd2))))
        k_ladder.append(float(np.max(np.mean(k_vals[mask], axis=0))))
    v_mass = "pass" if mass_dev[-1] <= tol_mass else "fail"
    v_k = ladder_verdict(k_ladder, tol_remainder)
    verdict = combine_verdicts(v_mass, v_k)
    return CriterionReport(
        criterion_id="boundary_measure",
        verdict=verdict,
        rho_ladder=list(zip(ladder, k_ladder)),
        tolerances={
            "tol_mass": tol_mass,
            "tol_remainder": tol_remainder,
            "grid": grid,
            "degree": degree,
            "n_probes": n_probes,
            "seed": seed,
        },
        notes=f"boundary mass: {v_mass} (deviation {mass_dev[-1]:.3e}); remainder: {v_k}",
        extras={
            "mass_ladder": list(zip(ladder, mass_ladder)),
            "mass_deviation": list(zip(ladder, mass_dev)),
            "mass_verdict": v_mass,
            "remainder_verdict": v_k,
        },
    )


def inner_boundary_check(
    w: MatPoly,
    basis=None,
    ladder=DEFAULT_LADDER,
    grid: int = h2.DEFAULT_GRID,
    tol_inner: float = TOL_INNER,
    tol_mass: float = TOL_MASS,
    boundary_invertibility_asserted: bool = False,
    exclusions=(),
    n_probes: int = N_PROBES,
    seed: int = PROBE_SEED,
) -> CriterionReport:
    """Innerness of the symbol plus the boundary defect-of-A integral.

    Valid only under the caller-asserted boundary invertibility of
    I - zA(z); the flag is a hypothesis, not something this check
    verifies.  tol_inner allows the sqrt(1-rho^2) defect a genuinely
    inner nonconstant symbol still shows at the last rung.
    """
    if not boundary_invertibility_asserted:
        raise BoundaryAssumptionMissing(
            "caller must assert boundary invertibility of I - zA(z)"
        )
    a, _ = _split_symbol(w)
    probes = probe_matrix(a.in_dim, basis, n_probes, seed)
    nd2 = np.sum(np.abs(probes) ** 2, axis=0)
    inner_ladder, mass_dev = [], []
    for rho in ladder:
        mask = included_nodes(grid, rho, exclusions)
        w_grid = h2.eval_circle_grid(w, rho, grid)
        gram = np.einsum("nji,njk->nik", w_grid.conj(), w_grid)
        lam_min = np.min(np.linalg.eigvalsh(gram), axis=1)
        inner_ladder.append(float(np.sqrt(np.max(np.clip(1.0 - lam_min[mask], 0.0, None)))))
        d_vals = _resolvent_probes(a, probes, rho, grid)
        a_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(a, rho, grid), d_vals)
        mass = np.mean((_norms_sq(d_vals) - _norms_sq(a_vals))[mask], axis=0)
        mass_dev.append(float(np.max(np.abs(mass - nd2))))
    v_inner = ladder_verdict(inner_ladder, tol_inner)
    v_mass = "pass" if mass_dev[-1] <= tol_mass else "fail"
    return CriterionReport(
        criterion_id="inner_boundary",
        verdict=combine_verdicts(v_inner, v_mass),
        rho_ladder=list(zip(ladder, inner_ladder)),
        tolerances={
            "tol_inner": tol_inner,
            "tol_mass": tol_mass,
            "grid": grid,
            "n_probes": n_probes,
            "seed": seed,
        },
        notes=f"innerness: {v_inner}; boundary integral: {v_mass} (deviation {mass_dev[-1]:.3e})",
        extras={"mass_deviation": list(zip(ladder, mass_dev)), "mass_verdict": v_mass},
    )


def lifting_isometry_check(
    ld: LiftingData,
    r: MatPoly | None,
    basis=None,
    ladder=DEFAULT_LADDER,
    degree: int = h2.DEFAULT_DEGREE,
    grid: int = h2.DEFAULT_GRID,
    tol_int: float = TOL_INT,
    tol_taylor: float = TOL_TAYLOR,
    n_probes: int = N_PROBES,
    seed: int = PROBE_SEED,
) -> CriterionReport:
    """Isometry test for the lifting generated by a free parameter.

    Assembles the Schur symbol, then checks the free-parameter defect
    integral over the kernel component of the resolvent (vacuous for a
    trivial kernel) and the Taylor decay of the resolvent coefficients.
    The three equivalent forms of the pointwise defect identity are
    cross-checked on every node and the worst residual reported.
    """
    w = assemble_schur_W(ld, r)
    if r is None:
        r = MatPoly.zero(ld.ker_omega_star.dim, ld.ker_omega.dim)
    a = MatPoly(np.einsum("ij,njk->nik", ld.pi, w.coeffs))
    probes = probe_matrix(ld.defect_dim, basis, n_probes, seed)
    kker = ld.ker_omega.columns
    defect_ladder, chain_residual = [], 0.0
    for rho in ladder:
        d_vals = _resolvent_probes(a, probes, rho, grid)
        u_vals = np.einsum("ji,njm->nim", kker.conj(), d_vals)
        r_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(r, rho, grid), u_vals) if kker.size else np.zeros_like(u_vals)
        term = _norms_sq(u_vals) - _norms_sq(r_vals)
        defect_ladder.append(float(np.max(np.mean(term, axis=0))) if term.size else 0.0)
        w_vals = np.einsum("nij,njm->nim", h2.eval_circle_grid(w, rho, grid), d_vals)
        om_vals = np.einsum("ij,njm->nim", ld.omega_bar, d_vals)
        e1 = _norms_sq(d_vals) - _norms_sq(w_vals)
        e2 = _norms_sq(d_vals) - _norms_sq(om_vals) - _norms_sq(r_vals)
        e3 = term
        worst = max(float(np.max(np.abs(e1 - e2))), float(np.max(np.abs(e2 - e3)))) if e1.size else 0.0
        chain_residual = max(chain_residual, worst)
    j = h2.neumann_inverse(a, degree)
    taylor = np.linalg.norm(np.einsum("nij,jm->nim", j.coeffs, probes), axis=1)
    taylor_max = np.max(taylor, axis=1) if taylor.size else np.zeros(degree + 1)
    v_ladder = ladder_verdict(defect_ladder, tol_int)
    v_taylor = taylor_verdict(taylor_max, tol_taylor)
    notes = f"parameter defect ladder: {v_ladder}; taylor decay: {v_taylor}"
    if ld.ker_omega.dim == 0:
        notes += "; kernel is trivial, the ladder condition is vacuous"
    return CriterionReport(
        criterion_id="lifting_isometry",
        verdict=combine_verdicts(v_ladder, v_taylor),
        rho_ladder=list(zip(ladder, defect_ladder)),
        taylor_trace=list(enumerate(taylor_max)),
        tolerances={
            "tol_int": tol_int,
            "tol_taylor": tol_taylor,
            "degree": degree,
            "grid": grid,
            "n_probes": n_probes,
            "seed": seed,
        },
        notes=notes,
        extras={"defect_chain_residual": chain_residual},
    )


def obstruction_search(
    ld: LiftingData,
    r0,
    n_max: int = 64,
    tol: float = linalg.CLASSIFY_TOL,
) -> CriterionReport:
    """Search for a bounded backward orbit obstructing isometric lifting.

    For a constant isometric parameter, the adjoint of the assembled
    symbol's top block admits a bounded nonzero backward orbit exactly
    when it has a unimodular eigenvalue; such an orbit rules out an
    isometric lifting, so a found witness is a fail verdict and an
    empty search is a pass.
    """
    r0 = linalg.as_matrix(r0)
    if r0.size and "isometry" not in linalg.classify(r0, max(tol, 1e-8)):
        raise NotIsometricR0("the constant free parameter must be isometric")
    if (r0.shape[0], r0.shape[1]) != (ld.ker_omega_star.dim, ld.ker_omega.dim):
        raise NotIsometricR0("free parameter does not match the kernel shapes")
    w0 = ld.omega_bar + ld.ker_omega_star.columns @ r0 @ ld.ker_omega.columns.conj().T
    a0 = ld.pi @ w0
    v = a0.conj().T
    witness = linalg.find_non_c0dot_witness(v, tol)
    if witness is None:
        trace = []
        p = np.eye(v.shape[0], dtype=complex)
        for n in range(n_max):
            trace.append((n, float(np.linalg.norm(p, 2))))
            p = v @ p
        return CriterionReport(
            criterion_id="obstruction",
            verdict="pass",
            taylor_trace=trace,
            tolerances={"tol": tol, "n_max": n_max},
            notes="no unimodular eigenvalue: every bounded backward orbit is trivial",
            extras={"spectral_radius": linalg.spectral_radius(v)},
        )
    lam, h = witness
    seq = [h * lam ** (-n) for n in range(n_max + 1)]
    rec = max(
        float(np.linalg.norm(w0.conj().T @ ld.pi.conj().T @ seq[n + 1] - seq[n]))
        for n in range(n_max)
    )
    coupled = max(
        float(
            np.linalg.norm(
                ld.omega_bar @ ld.omega_bar.conj().T @ ld.pi.conj().T @ seq[n + 1]
                - ld.omega_bar @ seq[n]
            )
        )
        for n in range(n_max)
    )
    norms = [float(np.linalg.norm(d)) for d in seq]
    monotone = all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))
    return CriterionReport(
        criterion_id="obstruction",
        verdict="fail",
        taylor_trace=list(enumerate(norms)),
        tolerances={"tol": tol, "n_max": n_max},
        notes=(
            f"unimodular eigenvalue {lam:.12g} gives a bounded nonzero backward orbit; "
            "no isometric lifting for this parameter"
        ),
        extras={
            "lambda": [lam.real, lam.imag],
            "recursion_residual": rec,
            "coupled_recursion_residual": coupled,
            "norms_nondecreasing": monotone,
        },
    )


def orbit_consistency_check(
    seq,
    ld: LiftingData,
    n_back: int = 8,
    r0=None,
    tol: float = 1e-8,
) -> CriterionReport:
    """Realizability conditions for a candidate backward orbit.

    Validates the coupled recursion and norm monotonicity, extends the
    orbit backward (minimal-norm extension unless a constant parameter
    is supplied), fits the connecting contraction by least squares, and
    checks the kernel dimension inequality including the fitted
    contraction's adjoint defect.
    """
    seq = [np.asarray(d, dtype=complex).reshape(-1) for d in seq]
    if not seq:
        raise SequenceViolatesRecursion("empty sequence")
    om = ld.omega_bar
    pi_star = ld.pi.conj().T
    norms = [float(np.linalg.norm(d)) for d in seq]
    scale = max(norms + [1.0])
    if any(b < a - tol * scale for a, b in zip(norms, norms[1:])):
        raise SequenceViolatesRecursion("norms decrease along the orbit")
    rec = max(
        (
            float(np.linalg.norm(om @ om.conj().T @ pi_star @ seq[n + 1] - om @ seq[n]))
            for n in range(len(seq) - 1)
        ),
        default=0.0,
    )
    if rec > tol * scale:
        raise SequenceViolatesRecursion(f"coupled recursion residual {rec:.3e}")
    degenerate = max(norms) <= tol
    if r0 is not None:
        r0 = linalg.as_matrix(r0)
        w0 = om + ld.ker_omega_star.columns @ r0 @ ld.ker_omega.columns.conj().T
        back_map = w0.conj().T @ pi_star
    else:
        back_map = om.conj().T @ pi_star
    extended = list(seq)
    for _ in range(n_back):
        extended.insert(0, back_map @ extended[0])
    p_ker = np.eye(ld.defect_dim) - om.conj().T @ om
    p_ker_star = np.eye(ld.codomain_dim) - om @ om.conj().T
    u_cols = np.stack([p_ker_star @ pi_star @ d for d in extended[1:]], axis=1)
    v_cols = np.stack([p_ker @ d for d in extended[:-1]], axis=1)
    full_rec = max(
        float(np.linalg.norm(om @ om.conj().T @ pi_star @ extended[n + 1] - om @ extended[n]))
        for n in range(len(extended) - 1)
    )
    bu = linalg.range_basis(u_cols, 1e-9)
    bv = linalg.range_basis(v_cols, 1e-9)
    if bu.dim:
        c_coords = (bv.columns.conj().T @ v_cols) @ np.linalg.pinv(bu.columns.conj().T @ u_cols, rcond=1e-10)
    else:
        c_coords = np.zeros((bv.dim, 0), dtype=complex)
    c_norm = linalg.operator_norm(c_coords)
    contractive = c_norm <= 1.0 + tol
    if contractive and c_coords.size:
        rank_dcstar = linalg.range_basis(linalg.defect_adjoint(c_coords, 1e-6), 1e-6).dim
    else:
        rank_dcstar = c_coords.shape[0]
    dims_ok = ld.ker_omega_star.dim >= ld.ker_omega.dim + rank_dcstar
    extension_ok = full_rec <= max(tol, 10 * tol * scale)
    verdict = "pass" if (extension_ok and contractive and dims_ok) else "fail"
    notes = []
    if degenerate:
        notes.append("degenerate: the orbit is numerically zero")
    if not extension_ok:
        notes.append(f"backward extension breaks the coupled recursion ({full_rec:.3e})")
    if not contractive:
        notes.append(f"fitted connecting map has norm {c_norm:.6g}")
    if not dims_ok:
        notes.append("kernel dimension inequality fails")
    return CriterionReport(
        criterion_id="orbit_consistency",
        verdict=verdict,
        taylor_trace=list(enumerate(float(np.linalg.norm(d)) for d in extended)),
        tolerances={"tol": tol, "n_back": n_back},
        notes="; ".join(notes),
        extras={
            "connecting_norm": float(c_norm),
            "rank_adjoint_defect": int(rank_dcstar),
            "recursion_residual": float(full_rec),
            "dims": [ld.ker_omega.dim, ld.ker_omega_star.dim],
        },
    )
