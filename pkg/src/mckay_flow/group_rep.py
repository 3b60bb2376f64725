"""Cyclic subgroups of SU(2): elements, regular representation, characters.

The group Z_n sits inside SU(2) as the diagonal matrices diag(u, conj(u))
with u an n-th root of unity.  Everything downstream (quiver points, flows,
holonomy) is expressed in the character basis, where the regular
representation is diagonal with entries omega^(j*m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidOrderError(ValueError):
    """Raised when a group order below 2 is requested."""


@dataclass(frozen=True)
class GroupElement:
    """Element gamma_m = diag(u, conj(u)) of a cyclic subgroup of SU(2)."""

    m: int
    u: complex
    v: complex = 0.0j

    def su2_matrix(self) -> np.ndarray:
        return np.array([[self.u, self.v], [-np.conj(self.v), np.conj(self.u)]])


@dataclass(frozen=True)
class CyclicGroupContext:
    """The cyclic group Z_n with its primitive root of unity."""

    n: int
    omega: complex

    def element(self, m: int) -> GroupElement:
        m = self._check_index(m)
        return GroupElement(m=m, u=self.omega**m)

    def elements(self):
        return [self.element(m) for m in range(self.n)]

    def _check_index(self, m: int) -> int:
        if not 0 <= m < self.n:
            raise IndexError(f"element index {m} out of range for Z_{self.n}")
        return int(m)


def make_group(n: int) -> CyclicGroupContext:
    """Build the Z_n context with omega = exp(2*pi*i/n)."""
    if n < 2:
        raise InvalidOrderError(f"cyclic group order must be >= 2, got {n}")
    return CyclicGroupContext(n=int(n), omega=np.exp(2j * np.pi / n))


def regular_rep(ctx: CyclicGroupContext, m: int) -> np.ndarray:
    """Regular representation of gamma_m in the character basis.

    Diagonal n x n matrix with entry (j, j) = omega^(j*m).
    """
    m = ctx._check_index(m)
    j = np.arange(ctx.n)
    return np.diag(ctx.omega ** (j * m))


def irrep_vector(ctx: CyclicGroupContext, j: int) -> np.ndarray:
    """Character vector v_j with components omega^(j*k), k = 0..n-1."""
    j = ctx._check_index(j)
    k = np.arange(ctx.n)
    return ctx.omega ** (j * k)


def character_projector(ctx: CyclicGroupContext, j: int) -> np.ndarray:
    """Unnormalized rank-1 projector v_j v_j^dagger onto the j-th character.

    Entries are omega^(j*(a-b)); trace n.  Kept unnormalized so the diagonal
    carries 1's, matching the renormalized limit matrices it is compared to.
    """
    v = irrep_vector(ctx, j)
    return np.outer(v, np.conj(v))
