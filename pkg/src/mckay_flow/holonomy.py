"""Holonomy of the flat connection d + alpha dz1 + beta dz2 over S^3/Z_n.

The holonomy assigns to gamma_m the matrix R(gamma_m) exp(E_m) with

    E_m = omega (omega^-m - 1) v1 A  +  omega (omega^m - 1) v2 B,

the unique exponent family that (i) makes m -> holonomy a genuine
representation for every flat point, (ii) reduces to the naive chord-endpoint
exponent at the generator and for n = 2, and (iii) is globally conjugate to
the regular representation by exp(omega (v1 A + v2 B)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .group_rep import CyclicGroupContext, GroupElement, make_group, regular_rep
from .quiver import QuiverPoint, embed_matrices, flatness_residual


class NotFlatError(ValueError):
    """Holonomy requested at a point where [A, B] does not vanish."""


class MagnitudeError(OverflowError):
    """Exponent too large for a raw matrix exponential; renormalize first."""


class DegenerateChordError(ValueError):
    """The chord to the translated base point passes through the origin."""


class ShapeError(ValueError):
    """Matrix is not a single-direction weighted cyclic shift."""


class IntegratorError(RuntimeError):
    """Parallel transport integration became unstable."""


FLATNESS_TOL = 1e-8


@dataclass(frozen=True)
class BasePoint:
    """Unit base point (v1, v2) on the three-sphere."""

    v1: complex
    v2: complex

    def __post_init__(self):
        if abs(abs(self.v1) ** 2 + abs(self.v2) ** 2 - 1.0) > 1e-12:
            raise ValueError("base point must lie on the unit sphere")

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2], dtype=complex)


def group_loop(base: BasePoint, gamma: GroupElement, samples: int) -> np.ndarray:
    """Sampled loop on S^3: the chord from base to gamma.base, projected.

    Returns an array of shape (samples+1, 2).
    """
    t = np.linspace(0.0, 1.0, samples + 1)
    u, v = gamma.u, gamma.v
    v1, v2 = base.v1, base.v2
    z1 = (1 - t + t * u) * v1 - t * np.conj(v) * v2
    z2 = t * v * v1 + (1 - t + t * np.conj(u)) * v2
    norms = np.sqrt(np.abs(z1) ** 2 + np.abs(z2) ** 2)
    if np.any(norms < 1e-9):
        raise DegenerateChordError(
            "chord passes through the origin; pick a generic base point"
        )
    return np.stack([z1 / norms, z2 / norms], axis=1)


def _exponent_coefficients(omega: complex, m: int, base: BasePoint) -> tuple[complex, complex]:
    ca = omega * (omega ** (-m) - 1.0) * base.v1
    cb = omega * (omega**m - 1.0) * base.v2
    return ca, cb


def holonomy_exponent(q: QuiverPoint, base: BasePoint, gamma: GroupElement) -> np.ndarray:
    """Exponent matrix E_m of the holonomy at gamma_m.

    Agrees with the chord-endpoint expression v1 (1-u) A + v2 (1-conj(u)) B
    at the generator (m = 1) and identically for n = 2.
    """
    n = q.n
    omega = np.exp(2j * np.pi / n)
    A, B = embed_matrices(q)
    ca, cb = _exponent_coefficients(omega, gamma.m % n, base)
    return ca * A + cb * B


def _shift_offset(M: np.ndarray) -> int:
    """Return +1 if M lives on the lower cyclic diagonal, -1 for upper.

    Zero matrices count as lower.  Raises ShapeError otherwise.
    """
    n = M.shape[0]
    idx = np.arange(n)
    lower = np.zeros_like(M)
    lower[(idx + 1) % n, idx] = M[(idx + 1) % n, idx]
    upper = np.zeros_like(M)
    upper[idx, (idx + 1) % n] = M[idx, (idx + 1) % n]
    if np.array_equal(lower, M):
        return 1
    if np.array_equal(upper, M):
        return -1
    raise ShapeError("matrix is not supported on a single cyclic diagonal")


def cyclic_matrix_exp(M: np.ndarray, root_index: int = 0) -> np.ndarray:
    """Exponential of a weighted cyclic shift via the root-of-unity filter.

    M^n = s I for such matrices; with eta an n-th root of s,

        exp(M) = sum_k g_k(eta) M^k / eta^k,
        g_k(eta) = (1/n) sum_m omega^(-m k) exp(omega^m eta),

    independent of which root eta is chosen.  Nilpotent case (s = 0) falls
    back to the truncated power series.
    """
    n = M.shape[0]
    if M.shape != (n, n):
        raise ShapeError("square matrix required")
    offset = _shift_offset(M)
    if offset == 1:
        idx = np.arange(n)
        entries = M[(idx + 1) % n, idx]
    else:
        idx = np.arange(n)
        entries = M[idx, (idx + 1) % n]
    s = np.prod(entries)
    powers = [np.eye(n, dtype=complex)]
    for _ in range(n - 1):
        powers.append(powers[-1] @ M)
    if s == 0:
        out = np.zeros_like(M, dtype=complex)
        fact = 1.0
        for k in range(n):
            out += powers[k] / fact
            fact *= k + 1
        return out
    omega = np.exp(2j * np.pi / n)
    eta = s ** (1.0 / n) * omega**root_index
    roots = omega ** np.arange(n) * eta
    if np.max(roots.real) > 700.0:
        raise MagnitudeError("shift exponential would overflow; renormalize first")
    exps = np.exp(roots)
    out = np.zeros_like(M, dtype=complex)
    for k in range(n):
        gk = np.sum(omega ** (-np.arange(n) * k) * exps) / n
        out += (gk / eta**k) * powers[k]
    return out


def dense_matrix_exp(M: np.ndarray) -> np.ndarray:
    """Dense matrix exponential (scaling-and-squaring Pade), with overflow guard."""
    if np.linalg.norm(M, 2) > 700.0:
        raise MagnitudeError("matrix norm exceeds 700; renormalize first")
    return scipy.linalg.expm(np.asarray(M, dtype=complex))


def holonomy(q: QuiverPoint, base: BasePoint, gamma: GroupElement) -> np.ndarray:
    """Holonomy matrix R(gamma) exp(E) at a flat point."""
    res = flatness_residual(q)
    scale = max(1.0, q.norm_squared())
    if res > FLATNESS_TOL * scale:
        raise NotFlatError(f"point is not flat: |[A,B]| = {res:.3e}")
    n = q.n
    ctx = make_group(n)
    E = holonomy_exponent(q, base, gamma)
    try:
        expE = cyclic_matrix_exp(E)
    except ShapeError:
        expE = dense_matrix_exp(E)
    return regular_rep(ctx, gamma.m % n) @ expE


@dataclass
class HolonomyRep:
    """Holonomy matrices for every group element, m = 0..n-1."""

    matrices: list

    @property
    def n(self) -> int:
        return len(self.matrices)

    def __getitem__(self, m: int) -> np.ndarray:
        return self.matrices[m % self.n]

    def composition_residual(self) -> float:
        """Max relative defect of rho(g_m) rho(g_k) = rho(g_{m+k})."""
        n = self.n
        worst = 0.0
        for m in range(n):
            for k in range(n):
                lhs = self.matrices[m] @ self.matrices[k]
                rhs = self.matrices[(m + k) % n]
                scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1.0)
                worst = max(worst, np.linalg.norm(lhs - rhs) / scale)
        return worst


def holonomy_rep(q: QuiverPoint, base: BasePoint) -> HolonomyRep:
    ctx = make_group(q.n)
    return HolonomyRep([holonomy(q, base, ctx.element(m)) for m in range(q.n)])


def transport_path(base: BasePoint, gamma: GroupElement, samples: int) -> np.ndarray:
    """Loop samples for parallel transport; detours around a degenerate chord."""
    try:
        return group_loop(base, gamma, samples)
    except DegenerateChordError:
        start = base.as_array()
        end = np.array([gamma.u * base.v1 - np.conj(gamma.v) * base.v2,
                        gamma.v * base.v1 + np.conj(gamma.u) * base.v2])
        # waypoint orthogonal to the start direction avoids the origin
        way = np.array([-np.conj(start[1]), np.conj(start[0])])
        half = samples // 2
        t1 = np.linspace(0.0, 1.0, half + 1)[:, None]
        leg1 = (1 - t1) * start + t1 * way
        t2 = np.linspace(0.0, 1.0, samples - half + 1)[1:, None]
        leg2 = (1 - t2) * way + t2 * end
        pts = np.vstack([leg1, leg2])
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms < 1e-9):
            raise
        return pts / norms[:, None]


def parallel_transport_ode(q: QuiverPoint, path: np.ndarray) -> np.ndarray:
    """Frame transport along a sampled path: integrate dX = -(A dz1 + B dz2) X.

    Classical fourth-order Runge-Kutta with the path taken linear on each
    segment; returns X at the path end with X = I at the start.
    """
    A, B = embed_matrices(q)
    n = q.n
    X = np.eye(n, dtype=complex)
    path = np.asarray(path, dtype=complex)
    for k in range(len(path) - 1):
        dz = path[k + 1] - path[k]
        G = -(A * dz[0] + B * dz[1])
        K1 = G @ X
        K2 = G @ (X + 0.5 * K1)
        K3 = G @ (X + 0.5 * K2)
        K4 = G @ (X + K3)
        X = X + (K1 + 2 * K2 + 2 * K3 + K4) / 6.0
        if not np.all(np.isfinite(X)):
            raise IntegratorError("transport integration overflowed")
    return X


def _multiset_deviation(values: np.ndarray, targets: np.ndarray) -> float:
    """Greedy nearest matching of two complex multisets; max matched distance."""
    values = list(values)
    worst = 0.0
    for t in targets:
        k = int(np.argmin([abs(v - t) for v in values]))
        worst = max(worst, abs(values.pop(k) - t))
    return float(worst)


def spectrum_check(q: QuiverPoint, base: BasePoint,
                   eig_tol: float = 1e-6, trace_tol: float = 1e-8):
    """Check that every holonomy matrix has the regular-representation spectrum.

    Eigenvalue multisets are compared after sorting by angle; characters are
    compared relative to the matrix scale.  Returns (ok, report).
    """
    n = q.n
    ctx = make_group(n)
    report = {"ok": True, "elements": []}
    for m in range(n):
        rho = holonomy(q, base, ctx.element(m))
        R = regular_rep(ctx, m)
        eig_dev = _multiset_deviation(np.linalg.eigvals(rho), np.diag(R))
        scale = max(1.0, float(np.linalg.norm(rho)))
        tr_dev = float(abs(np.trace(rho) - np.trace(R))) / scale
        ok = eig_dev <= eig_tol and tr_dev <= trace_tol
        report["elements"].append(
            {"m": m, "eig_deviation": eig_dev, "trace_deviation": tr_dev, "ok": ok}
        )
        if not ok:
            report["ok"] = False
            report["offender"] = m
    return report["ok"], report
