"""Enumeration and classification of circle-fixed points on the level set.

At a fixed point each edge slot carries at most one of (alpha, beta), so a
configuration is described by the signed squared magnitudes
s[i] = |alpha_i|^2 - |beta_i|^2.  The real moment-map equation telescopes to
s[i] = c + Q[i] with Q the cumulative sums of the level and c a single real
parameter, which reduces the whole census to the geometry of the n
"intercepts" -Q[i]:

* odd n: each intercept gives one isolated fixed point (the cut slot is the
  vanishing edge); the middle intercept in sorted order is the global
  minimum.
* even n: the interval between the two middle intercepts carries a sphere of
  fixed points with n/2 alpha-edges and n/2 beta-edges (the index-0 family,
  whose poles are the two adjacent single-cut configurations); the remaining
  n-2 intercepts give isolated index-2 points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .group_rep import CyclicGroupContext
from .quiver import QuiverPoint, ZetaLevel


class EdgeTag(Enum):
    ALPHA = "alpha"
    BETA = "beta"
    ZERO = "zero"


class DegenerateZetaError(ValueError):
    """A partial sum of the level vanishes where a magnitude must not."""


class CapacityError(ValueError):
    """Brute-force search requested beyond the supported order."""


class AmbiguousClassificationError(ValueError):
    """Two isolated points tie for the minimal height (non-generic level)."""


class NoWeightAssignmentError(ValueError):
    """No consistent integer weight vector exists for the pattern."""


@dataclass
class FixedPointRecord:
    pattern: tuple
    point: QuiverPoint
    weights: np.ndarray
    morse_index: int | None = None
    cut_slot: int | None = None
    c_value: float | None = None
    family_param: float | None = None
    family_interval: tuple | None = None
    cumulative: np.ndarray | None = None

    @property
    def is_family(self) -> bool:
        return self.family_interval is not None

    def morse_value(self) -> float:
        return self.point.norm_squared()


def _point_from_s(s: np.ndarray, zero_tol: float) -> tuple[np.ndarray, np.ndarray, tuple]:
    n = len(s)
    alpha = np.zeros(n, dtype=complex)
    beta = np.zeros(n, dtype=complex)
    tags = []
    for i, val in enumerate(s):
        if val > zero_tol:
            alpha[i] = np.sqrt(val)
            tags.append(EdgeTag.ALPHA)
        elif val < -zero_tol:
            beta[i] = np.sqrt(-val)
            tags.append(EdgeTag.BETA)
        else:
            tags.append(EdgeTag.ZERO)
    return alpha, beta, tuple(tags)


def weight_vector(pattern: tuple) -> np.ndarray:
    """Integer vertex weights for the circle action matching a pattern.

    Nonzero alpha at slot i forces w[i+1] - w[i] = 1, nonzero beta forces
    w[i] - w[i+1] = 1; zero slots decouple the cycle.  Normalized so the
    minimum weight is 0.
    """
    n = len(pattern)
    if all(t == EdgeTag.ZERO for t in pattern):
        raise NoWeightAssignmentError("pattern has no edges")
    diffs = {EdgeTag.ALPHA: 1, EdgeTag.BETA: -1}
    zeros = [i for i, t in enumerate(pattern) if t == EdgeTag.ZERO]
    w = np.zeros(n, dtype=int)
    if not zeros:
        total = sum(diffs[t] for t in pattern)
        if total != 0:
            raise NoWeightAssignmentError(
                "cycle closure fails: unequal alpha and beta edge counts"
            )
        for i in range(n - 1):
            w[i + 1] = w[i] + diffs[pattern[i]]
    else:
        # walk each arc between cuts; arcs are independent
        start = (zeros[0] + 1) % n
        w[start] = 0
        for k in range(n - 1):
            i = (start + k) % n  # edge i: vertex i -> i+1
            j = (i + 1) % n
            w[j] = w[i] + diffs.get(pattern[i], 0)
    return w - w.min()


def _make_record(s, zero_tol, cut_slot=None, c_value=None, family_interval=None,
                 family_param=None, cumulative=None) -> FixedPointRecord:
    alpha, beta, tags = _point_from_s(s, zero_tol)
    point = QuiverPoint(alpha=alpha, beta=beta)
    return FixedPointRecord(
        pattern=tags,
        point=point,
        weights=weight_vector(tags),
        cut_slot=cut_slot,
        c_value=c_value,
        family_param=family_param,
        family_interval=family_interval,
        cumulative=cumulative,
    )


def family_point(record: FixedPointRecord, u: float) -> QuiverPoint:
    """Sample the index-0 sphere family at parameter u in [0, 1].

    u parametrizes the quarter circle r = sqrt(C) cos(u*pi/2),
    s = sqrt(C) sin(u*pi/2) on the constrained edge pair; u=0 and u=1 are
    the degenerate single-cut poles.
    """
    if not record.is_family:
        raise ValueError("record does not describe a family")
    if not 0.0 <= u <= 1.0:
        raise ValueError("family parameter must lie in [0, 1]")
    c_lo, c_hi = record.family_interval
    c = c_lo + (c_hi - c_lo) * np.cos(u * np.pi / 2) ** 2
    s = c + record.cumulative
    alpha, beta, _ = _point_from_s(s, zero_tol=0.0)
    return QuiverPoint(alpha=alpha, beta=beta)


def classify_index(records: list) -> list:
    """Assign Morse index 0 to the record(s) of minimal height, 2 to the rest."""
    if not records:
        return records
    values = [r.morse_value() for r in records]
    vmin = min(values)
    scale = max(1.0, vmin)
    minimal = [i for i, v in enumerate(values) if v - vmin <= 1e-9 * scale]
    isolated_minimal = [i for i in minimal if not records[i].is_family]
    if len(minimal) > 1 and len(isolated_minimal) > 0:
        raise AmbiguousClassificationError(
            f"height tie at {vmin} among fixed points (non-generic level)"
        )
    for i, r in enumerate(records):
        r.morse_index = 0 if i in minimal else 2
    return records


def enumerate_fixed_points(ctx: CyclicGroupContext, zeta: ZetaLevel,
                           zero_tol: float = 1e-12) -> list:
    """Fast census of circle-fixed points from the sorted intercept picture."""
    n = ctx.n
    if zeta.n != n:
        raise ValueError("level length does not match group order")
    q = zeta.cumulative()
    scale = max(1.0, float(np.abs(zeta.values).max()))
    tol = zero_tol * scale
    intercepts = -q  # cut at slot i  <=>  c = -q[i]
    records = []
    if n % 2 == 1:
        for slot in range(n):
            s = q - q[slot]
            for i in range(n):
                if i != slot and abs(s[i]) <= tol:
                    raise DegenerateZetaError(
                        f"partial sum of level entries {slot + 1}..{i} vanishes; "
                        f"fixed point at cut {slot} is degenerate"
                    )
            records.append(
                _make_record(s, tol, cut_slot=slot, c_value=float(-q[slot]),
                             cumulative=q)
            )
    else:
        order = np.argsort(intercepts)
        c_sorted = intercepts[order]
        gaps = np.diff(c_sorted)
        if np.any(gaps <= tol):
            raise DegenerateZetaError(
                "two intercepts coincide (vanishing contiguous partial sum); "
                "census is degenerate"
            )
        lo_rank, hi_rank = n // 2 - 1, n // 2
        c_lo, c_hi = float(c_sorted[lo_rank]), float(c_sorted[hi_rank])
        for rank in range(n):
            if rank in (lo_rank, hi_rank):
                continue
            slot = int(order[rank])
            s = q - q[slot]
            records.append(
                _make_record(s, tol, cut_slot=slot, c_value=float(-q[slot]),
                             cumulative=q)
            )
        u_rep = 0.5
        c_rep = c_lo + (c_hi - c_lo) * np.cos(u_rep * np.pi / 2) ** 2
        records.append(
            _make_record(c_rep + q, tol, family_param=u_rep,
                         family_interval=(c_lo, c_hi), cumulative=q)
        )
    return classify_index(records)


def brute_force_fixed_points(ctx: CyclicGroupContext, zeta: ZetaLevel,
                             zero_tol: float = 1e-10) -> list:
    """Exhaustive 3^n pattern search; the independent census oracle.

    For each assignment of {alpha, beta, zero} tags the moment-map telescoping
    plus sign feasibility is solved directly; single-cut solutions adjacent to
    a no-cut family interval are absorbed into that family component.
    """
    n = ctx.n
    if n > 12:
        raise CapacityError("brute force limited to n <= 12")
    if zeta.n != n:
        raise ValueError("level length does not match group order")
    q = zeta.cumulative()
    scale = max(1.0, float(np.abs(zeta.values).max()))
    tol = zero_tol * scale

    families = []
    isolated = []
    for pattern in itertools.product((EdgeTag.ALPHA, EdgeTag.BETA, EdgeTag.ZERO), repeat=n):
        zeros = [i for i, t in enumerate(pattern) if t == EdgeTag.ZERO]
        if len(zeros) == n:
            continue
        if not zeros:
            n_a = sum(1 for t in pattern if t == EdgeTag.ALPHA)
            if 2 * n_a != n:
                continue  # no consistent circle weights
            lows = [-q[i] for i, t in enumerate(pattern) if t == EdgeTag.ALPHA]
            highs = [-q[i] for i, t in enumerate(pattern) if t == EdgeTag.BETA]
            c_lo, c_hi = max(lows), min(highs)
            if c_hi - c_lo <= tol:
                continue
            u_rep = 0.5
            c_rep = c_lo + (c_hi - c_lo) * np.cos(u_rep * np.pi / 2) ** 2
            families.append(
                _make_record(c_rep + q, tol, family_param=u_rep,
                             family_interval=(float(c_lo), float(c_hi)),
                             cumulative=q)
            )
            continue
        c_candidates = [-q[i] for i in zeros]
        c = c_candidates[0]
        if any(abs(ci - c) > tol for ci in c_candidates[1:]):
            continue
        s = c + q
        ok = True
        for i, t in enumerate(pattern):
            if t == EdgeTag.ALPHA and not s[i] > tol:
                ok = False
            elif t == EdgeTag.BETA and not s[i] < -tol:
                ok = False
            elif t == EdgeTag.ZERO and not abs(s[i]) <= tol:
                ok = False
            if not ok:
                break
        if ok:
            isolated.append(
                _make_record(s, tol, cut_slot=zeros[0] if len(zeros) == 1 else None,
                             c_value=float(c), cumulative=q)
            )

    # family poles are limits of the sphere component, not isolated points
    endpoints = [c for fam in families for c in fam.family_interval]
    isolated = [
        rec for rec in isolated
        if not any(abs(rec.c_value - c) <= tol for c in endpoints)
    ]
    return classify_index(isolated + families)


def records_equivalent(recs_a: list, recs_b: list, tol: float = 1e-9) -> bool:
    """Gauge-level equality of two censuses (patterns and magnitudes)."""
    if len(recs_a) != len(recs_b):
        return False

    def key(r):
        return (r.is_family, round(r.morse_value(), 8),
                -1 if r.cut_slot is None else r.cut_slot)

    for ra, rb in zip(sorted(recs_a, key=key), sorted(recs_b, key=key)):
        if ra.pattern != rb.pattern or ra.is_family != rb.is_family:
            return False
        if ra.is_family:
            if not np.allclose(ra.family_interval, rb.family_interval, atol=tol):
                return False
        if not (np.allclose(np.abs(ra.point.alpha), np.abs(rb.point.alpha), atol=tol)
                and np.allclose(np.abs(ra.point.beta), np.abs(rb.point.beta), atol=tol)):
            return False
    return True
