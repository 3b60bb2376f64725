"""Points of the cyclic quiver variety and their moment-map machinery.

A point is a pair of length-n complex edge vectors (alpha, beta).  Edge
alpha_j maps vertex j-1 to vertex j and embeds at matrix entry
(j mod n, j-1); beta_j runs the other way and embeds at (j-1, j mod n).
Arrays are stored in the printed tuple order: ``alpha[i]`` is the edge
alpha_{i+1}.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np


class SingularGaugeError(ValueError):
    """Raised when a gauge factor has a vanishing diagonal entry."""


class DegenerateZetaWarning(UserWarning):
    """A contiguous partial sum of the level vanishes (non-generic level)."""


@dataclass(frozen=True)
class QuiverPoint:
    """Edge coordinates (alpha, beta) of a point of the quiver variety."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=complex)
        beta = np.asarray(self.beta, dtype=complex)
        if alpha.shape != beta.shape or alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.alpha) ** 2 + np.abs(self.beta) ** 2))

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "alpha": [[float(z.real), float(z.imag)] for z in self.alpha],
                "beta": [[float(z.real), float(z.imag)] for z in self.beta],
            }
        )

    @staticmethod
    def from_json(text: str) -> "QuiverPoint":
        data = json.loads(text)
        alpha = np.array([complex(re, im) for re, im in data["alpha"]])
        beta = np.array([complex(re, im) for re, im in data["beta"]])
        if len(alpha) != data["n"] or len(beta) != data["n"]:
            raise ValueError("edge vectors do not match declared n")
        return QuiverPoint(alpha=alpha, beta=beta)


@dataclass(frozen=True)
class ZetaLevel:
    """Real level vector for the moment-map equation; entries sum to zero."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if abs(values.sum()) > 1e-12 * max(1.0, np.abs(values).max()):
            raise ValueError("level entries must sum to zero")
        object.__setattr__(self, "values", values)
        if self.degenerate_partial_sums():
            warnings.warn(
                "level has a vanishing contiguous partial sum; fixed points "
                "may be degenerate",
                DegenerateZetaWarning,
                stacklevel=2,
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def cumulative(self) -> np.ndarray:
        """Q[j] = sum of entries 0..j; Q[n-1] = 0."""
        return np.cumsum(self.values)

    def degenerate_partial_sums(self, tol: float = 1e-12) -> list:
        """Contiguous cyclic partial sums that vanish (excluding the full cycle).

        These are exactly the pairwise differences of the cumulative sums.
        """
        q = self.cumulative()
        scale = max(1.0, np.abs(self.values).max())
        bad = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if abs(q[j] - q[i]) <= tol * scale:
                    bad.append((i + 1, j))
        return bad


def default_zeta(n: int) -> ZetaLevel:
    """Generic level (1, 2, ..., n-1, -n(n-1)/2) scaled to sup-norm 1."""
    head = np.arange(1, n, dtype=float)
    values = np.concatenate([head, [-head.sum()]])
    return ZetaLevel(values / np.abs(values).max())


def zeta_from_params(n: int, a: float | None = None, b: float | None = None) -> ZetaLevel:
    """Levels in the two-parameter form: n=2 gives (a^2, -a^2); n=3 gives
    (a^2, b^2, -a^2-b^2)."""
    if n == 2:
        if a is None:
            raise ValueError("n=2 level needs parameter a")
        return ZetaLevel(np.array([a**2, -(a**2)]))
    if n == 3:
        if a is None or b is None:
            raise ValueError("n=3 level needs parameters a and b")
        return ZetaLevel(np.array([a**2, b**2, -(a**2) - b**2]))
    raise ValueError("parameter form only defined for n in {2, 3}; pass an explicit vector")


@dataclass(frozen=True)
class GaugeElement:
    """Traceless real diagonal gauge direction (entries xi_j, sum 0)."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if abs(xi.sum()) > 1e-12 * max(1.0, np.abs(xi).max()):
            raise ValueError("gauge entries must sum to zero")
        object.__setattr__(self, "xi", xi)


def embed_matrices(q: QuiverPoint) -> tuple[np.ndarray, np.ndarray]:
    """Matrix embeddings: A[(i+1)%n, i] = alpha[i], B[i, (i+1)%n] = beta[i]."""
    n = q.n
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    A[(idx + 1) % n, idx] = q.alpha
    B[idx, (idx + 1) % n] = q.beta
    return A, B


def moment_map_real(q: QuiverPoint) -> np.ndarray:
    """Real moment map, component j = |a_{j+1}|^2 - |b_{j+1}|^2 + |b_j|^2 - |a_j|^2.

    Equals the (real) diagonal of [A^dagger, A] + [B^dagger, B] for the cyclic
    edge embedding; all off-diagonal entries of that commutator sum vanish.
    """
    s = np.abs(q.alpha) ** 2 - np.abs(q.beta) ** 2
    return s - np.roll(s, 1)


def moment_map_complex(q: QuiverPoint) -> np.ndarray:
    """Complex moment map: diagonal of [A, B], component j = p_j - p_{j+1}
    with p the cyclic edge products alpha_j * beta_j."""
    p = q.alpha * q.beta
    return np.roll(p, 1) - p


def flatness_residual(q: QuiverPoint) -> float:
    """Frobenius norm of [A, B]; zero exactly on flat points."""
    A, B = embed_matrices(q)
    return float(np.linalg.norm(A @ B - B @ A))


def morse_value(q: QuiverPoint) -> float:
    """Height function: total squared edge norm."""
    return q.norm_squared()


def gauge_act(q: QuiverPoint, f: np.ndarray) -> QuiverPoint:
    """Diagonal gauge action: alpha_j -> (f_j / f_{j-1}) alpha_j and
    beta_j -> (f_{j-1} / f_j) beta_j."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (q.n,):
        raise ValueError("gauge factor must have one entry per vertex")
    if np.any(np.abs(f) == 0):
        raise SingularGaugeError("gauge factor has a zero diagonal entry")
    # edge i connects vertex i to vertex i+1
    ratio = np.roll(f, -1) / f
    return QuiverPoint(alpha=q.alpha * ratio, beta=q.beta / ratio)


def circle_act(q: QuiverPoint, phi: float) -> QuiverPoint:
    """Scaling circle action: multiply every edge by exp(i*phi)."""
    z = np.exp(1j * phi)
    return QuiverPoint(alpha=q.alpha * z, beta=q.beta * z)


def j_action(q: QuiverPoint) -> QuiverPoint:
    """Quaternionic J: matrixwise (A, B) -> (-B^dagger, A^dagger)."""
    return QuiverPoint(alpha=-np.conj(q.beta), beta=np.conj(q.alpha))


def full_moment_maps(q: QuiverPoint) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense hyperkähler moment maps (mu_1, mu_2, mu_3) with the i/2 factors.

    The first bracket is oriented so that mu_1 = (i/2) diag(moment_map_real)
    on cyclic points; the flow and fixed-point code uses the real-valued
    moment_map_real throughout, these exist for cross-checks only.
    """
    A, B = embed_matrices(q)
    comm1 = (A.conj().T @ A - A @ A.conj().T) + (B.conj().T @ B - B @ B.conj().T)
    commAB = A @ B - B @ A
    commAdBd = A.conj().T @ B.conj().T - B.conj().T @ A.conj().T
    mu1 = 0.5j * comm1
    mu2 = 0.5 * (commAB + commAdBd)
    mu3 = 0.5j * (-commAB + commAdBd)
    return mu1, mu2, mu3
