"""Gradient-flow trajectories of the height function on the level set.

The upward flow is d(alpha)/dt = 2 alpha + [xi, alpha] (and likewise for
beta) with xi a traceless real diagonal chosen at every instant so that the
real moment map stays pinned at the level.  Closed forms cover the n = 2 and
n = 3 trajectories; a projected fourth-order integrator covers every n.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .fixed_points import EdgeTag, FixedPointRecord, family_point
from .group_rep import CyclicGroupContext
from .quiver import QuiverPoint, ZetaLevel, moment_map_complex, moment_map_real


class InconsistentParametersError(ValueError):
    """Closed-form parameters violate their defining relation."""


class ProjectionFailureError(RuntimeError):
    """Newton correction onto the level set did not converge."""


class FlowDirectionError(RuntimeError):
    """The height decreased along what should be an ascending flow."""


@dataclass(frozen=True)
class ClosedFormZ2:
    a: float
    r: float
    s: float
    c0: float


@dataclass(frozen=True)
class ClosedFormZ3:
    a: float
    b: float
    c0: float
    branch: str


@dataclass(frozen=True)
class NumericForm:
    eps: float
    step: float


@dataclass
class FlowTrajectory:
    times: np.ndarray
    points: list
    xis: list
    source: FixedPointRecord | None
    form: object
    stalled: bool = False

    def morse_values(self) -> np.ndarray:
        return np.array([p.norm_squared() for p in self.points])


def flow_vector(q: QuiverPoint, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edge-wise upward gradient: rate 2 + xi_head - xi_tail per edge."""
    xi = np.asarray(xi, dtype=float)
    delta = np.roll(xi, -1) - xi  # delta_i = xi_{i+1} - xi_i for edge i
    return (2.0 + delta) * q.alpha, (2.0 - delta) * q.beta


def solve_xi(q: QuiverPoint) -> np.ndarray:
    """Traceless diagonal making the real moment map stationary under the flow.

    Minimal-norm least-squares solution of d/dt moment_map_real = 0; the
    system can be rank-deficient at degenerate points.
    """
    n = q.n
    a = np.abs(q.alpha) ** 2
    b = np.abs(q.beta) ** 2
    s = a - b
    w = 2.0 * (a + b)
    rows = np.zeros((n + 1, n))
    rhs = np.zeros(n + 1)
    for j in range(n):
        jm = (j - 1) % n
        # d/dt (s_j - s_{j-1}) = 4(s_j - s_{j-1}) + w_j delta_j - w_{jm} delta_{jm}
        rows[j, (j + 1) % n] += w[j]
        rows[j, j] -= w[j]
        rows[j, j] -= w[jm]
        rows[j, jm] += w[jm]
        rhs[j] = -4.0 * (s[j] - s[jm])
    rows[n, :] = 1.0
    xi, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    return xi


def project_to_level(q: QuiverPoint, zeta: ZetaLevel, tol: float = 1e-10,
                     max_iter: int = 20) -> QuiverPoint:
    """Restore moment_map_real = zeta with a positive diagonal gauge factor.

    Newton iteration in the log-gauge increments d_i (alpha_i -> e^{d_i}
    alpha_i, beta_i -> e^{-d_i} beta_i, sum d_i = 0); edge products, hence
    the complex moment map, are untouched.
    """
    n = q.n
    alpha = q.alpha.copy()
    beta = q.beta.copy()
    scale = max(1.0, float(np.abs(zeta.values).max()))
    for _ in range(max_iter):
        a = np.abs(alpha) ** 2
        b = np.abs(beta) ** 2
        s = a - b
        res = (s - np.roll(s, 1)) - zeta.values
        # the achievable residual is bounded below by roundoff in the
        # squared magnitudes once the point grows large
        floor = 20.0 * np.finfo(float).eps * float(np.sum(a + b))
        if np.max(np.abs(res)) <= max(tol * scale, floor):
            return QuiverPoint(alpha=alpha, beta=beta)
        w = 2.0 * (a + b)
        rows = np.zeros((n + 1, n))
        rhs = np.zeros(n + 1)
        for j in range(n):
            jm = (j - 1) % n
            rows[j, j] += w[j]
            rows[j, jm] -= w[jm]
            rhs[j] = -res[j]
        rows[n, :] = 1.0
        d, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        d = np.clip(d, -1.0, 1.0)
        alpha = alpha * np.exp(d)
        beta = beta * np.exp(-d)
    raise ProjectionFailureError(
        f"level projection did not reach {tol:g} in {max_iter} iterations"
    )


def _stable_s_of_t(a: float, c0: float, t: np.ndarray) -> np.ndarray:
    """S(t) = (-a^2 + sqrt(a^4 + 4 c0 e^{8t}))/2, cancellation-free."""
    e8t = np.exp(8.0 * t)
    return 2.0 * c0 * e8t / (a**2 + np.sqrt(a**4 + 4.0 * c0 * e8t))


def z2_closed_form_flow(a: float, r: float, s: float, c0: float,
                        times: np.ndarray) -> FlowTrajectory:
    """Closed-form n = 2 trajectory leaving the fixed sphere at (r, s).

    Degenerate poles r = 0 or s = 0 are covered by the same arithmetic
    (the corresponding edge pair stays identically zero).
    """
    if a <= 0 or c0 <= 0:
        raise InconsistentParametersError("need a > 0 and c0 > 0")
    if r < 0 or s < 0 or abs(r**2 + s**2 - a**2) > 1e-10 * max(1.0, a**2):
        raise InconsistentParametersError(
            f"(r, s) = ({r}, {s}) does not satisfy r^2 + s^2 = a^2 with a = {a}"
        )
    times = np.asarray(times, dtype=float)
    S = _stable_s_of_t(a, c0, times)
    points = []
    xis = []
    for Sk in S:
        e1 = Sk * r**2 / a**2
        e2 = Sk * s**2 / a**2
        alpha = np.array([np.sqrt(e1 + r**2), np.sqrt(e1)], dtype=complex)
        beta = np.array([np.sqrt(e2), np.sqrt(e2 + s**2)], dtype=complex)
        points.append(QuiverPoint(alpha=alpha, beta=beta))
        u = 4.0 * Sk / (2.0 * Sk + a**2)
        xis.append(np.array([(2.0 - u) / 2.0, (u - 2.0) / 2.0]))
    return FlowTrajectory(times=times, points=points, xis=xis, source=None,
                          form=ClosedFormZ2(a=a, r=r, s=s, c0=c0))


def _z3_levels(a: float, b: float, branch: str) -> tuple[float, float]:
    if branch == "x1":
        return a**2, a**2 + b**2
    if branch == "x2":
        return b**2, a**2 + b**2
    raise ValueError("branch must be 'x1' or 'x2'")


def z3_implicit_residual(c: np.ndarray, t: np.ndarray, a: float, b: float,
                         c0: float, branch: str) -> np.ndarray:
    """Residual of 12 t + c0 = c + ln(e^c + k1) + ln(e^c + k2)."""
    k1, k2 = _z3_levels(a, b, branch)
    return (c + np.logaddexp(c, np.log(k1)) + np.logaddexp(c, np.log(k2))
            - 12.0 * t - c0)


def solve_z3_c(t: float, a: float, b: float, c0: float, branch: str) -> float:
    """Monotone root solve of the implicit time relation, polished by Newton."""
    k1, k2 = _z3_levels(a, b, branch)
    K = 12.0 * t + c0

    def g(c):
        return float(z3_implicit_residual(np.array(c), np.array(t), a, b, c0, branch))

    lo = K - np.log(k1) - np.log(k2) - 5.0
    hi = K / 3.0 + 5.0
    while g(lo) > 0:
        lo -= 20.0
    while g(hi) < 0:
        hi += 20.0
    try:
        c = brentq(g, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
    except RuntimeError as exc:
        raise RuntimeError(
            f"root bracketing failed on [{lo}, {hi}] for t={t}: {exc}"
        ) from exc
    for _ in range(3):
        ec = np.exp(c)
        deriv = 1.0 + ec / (ec + k1) + ec / (ec + k2)
        c = c - g(c) / deriv
    return float(c)


def z3_closed_form_flow(a: float, b: float, c0: float, branch: str,
                        times: np.ndarray) -> FlowTrajectory:
    """Closed-form n = 3 trajectory from x1 (alpha chain) or x2 (beta chain)."""
    if a <= 0 or b <= 0:
        raise InconsistentParametersError("need a, b > 0")
    if abs(abs(a) - abs(b)) < 1e-12:
        raise InconsistentParametersError("|a| = |b| is a degenerate level")
    k1, k2 = _z3_levels(a, b, branch)
    times = np.asarray(times, dtype=float)
    points = []
    xis = []
    for t in times:
        c = solve_z3_c(t, a, b, c0, branch)
        ec = np.exp(c)
        cdot = 12.0 / (1.0 + 1.0 / (1.0 + k1 / ec) + 1.0 / (1.0 + k2 / ec))
        if cdot <= 0:
            raise RuntimeError("implicit solve produced a non-increasing c(t)")
        if branch == "x1":
            alpha = np.array([np.sqrt(ec + k1), np.sqrt(ec + k2), np.sqrt(ec)],
                             dtype=complex)
            beta = np.zeros(3, dtype=complex)
            r1 = cdot * ec / (2.0 * (ec + k1)) - 2.0   # xi[1] - xi[0]
            r2 = cdot * ec / (2.0 * (ec + k2)) - 2.0   # xi[2] - xi[1]
            xi = np.array([-(2.0 * r1 + r2) / 3.0, (r1 - r2) / 3.0,
                           (r1 + 2.0 * r2) / 3.0])
        else:
            alpha = np.zeros(3, dtype=complex)
            beta = np.array([np.sqrt(ec + k1), np.sqrt(ec), np.sqrt(ec + k2)],
                            dtype=complex)
            d1 = cdot * ec / (2.0 * (ec + k1)) - 2.0   # xi[0] - xi[1]
            d2 = cdot / 2.0 - 2.0                       # xi[1] - xi[2]
            xi = np.array([(2.0 * d1 + d2) / 3.0, (d2 - d1) / 3.0,
                           (-d1 - 2.0 * d2) / 3.0])
        points.append(QuiverPoint(alpha=alpha, beta=beta))
        xis.append(xi)
    return FlowTrajectory(times=times, points=points, xis=xis, source=None,
                          form=ClosedFormZ3(a=a, b=b, c0=c0, branch=branch))


def _seed_point(source: FixedPointRecord, eps: float,
                family_u: float | None) -> QuiverPoint:
    """Kick a fixed point along its ascending directions.

    Isolated points get the majority edge type at the cut slot (the unique
    positive normal direction); interior family points switch on the opposite
    edge in every slot with equal products, the direction the n = 2 closed
    form exhibits.
    """
    if source.is_family:
        u = source.family_param if family_u is None else family_u
        base = family_point(source, u)
        alpha = base.alpha.copy()
        beta = base.beta.copy()
        zero_slots = [i for i in range(base.n)
                      if abs(alpha[i]) < 1e-14 and abs(beta[i]) < 1e-14]
        if zero_slots:
            # family pole: a single-cut configuration; continue with the
            # type carried by the adjacent family interior
            n_a = int(np.sum(np.abs(alpha) > 1e-14))
            n_b = int(np.sum(np.abs(beta) > 1e-14))
            slot = zero_slots[0]
            if n_a >= n_b:
                alpha[slot] = eps
            else:
                beta[slot] = eps
            return QuiverPoint(alpha=alpha, beta=beta)
        mags = np.where(np.abs(alpha) > 1e-14, np.abs(alpha), np.abs(beta))
        p = eps * float(mags.min())
        for i in range(base.n):
            if abs(alpha[i]) > 1e-14:
                beta[i] = p / alpha[i]
            else:
                alpha[i] = p / beta[i]
        return QuiverPoint(alpha=alpha, beta=beta)

    if source.cut_slot is None:
        raise ValueError("isolated source must carry a cut slot")
    n_a = sum(1 for t in source.pattern if t == EdgeTag.ALPHA)
    n_b = sum(1 for t in source.pattern if t == EdgeTag.BETA)
    alpha = source.point.alpha.copy()
    beta = source.point.beta.copy()
    if n_a > n_b:
        alpha[source.cut_slot] = eps
    else:
        beta[source.cut_slot] = eps
    return QuiverPoint(alpha=alpha, beta=beta)


def numeric_flow(ctx: CyclicGroupContext, zeta: ZetaLevel,
                 source: FixedPointRecord, eps: float = 1e-4,
                 h: float = 1e-3, t_max: float | None = None,
                 morse_target: float | None = None,
                 family_u: float | None = None,
                 store_stride: int = 1) -> FlowTrajectory:
    """Projected RK4 integration of the ascending flow from a fixed point.

    Every accepted step is Newton-projected back onto the level set.  The run
    stops at t_max, at the height target, or when the height plateaus (a
    trajectory captured by another critical point); the last case is flagged
    on the returned trajectory.
    """
    if not 0 < eps <= 1e-3:
        raise ValueError("eps must lie in (0, 1e-3]")
    if h <= 0:
        raise ValueError("step must be positive")
    if morse_target is None:
        morse_target = 1e6 * float(np.abs(zeta.values).max())
    if t_max is None:
        t_max = 60.0

    q = project_to_level(_seed_point(source, eps, family_u), zeta)

    def field(point):
        xi = solve_xi(point)
        da, db = flow_vector(point, xi)
        return da, db, xi

    times = [0.0]
    points = [q]
    xis = [solve_xi(q)]
    morse_prev = q.norm_squared()
    stalled = False
    flat_streak = 0
    t = 0.0
    step_index = 0
    while t < t_max and morse_prev < morse_target:
        a0, b0 = q.alpha, q.beta
        k1a, k1b, _ = field(q)
        q2 = QuiverPoint(alpha=a0 + 0.5 * h * k1a, beta=b0 + 0.5 * h * k1b)
        k2a, k2b, _ = field(q2)
        q3 = QuiverPoint(alpha=a0 + 0.5 * h * k2a, beta=b0 + 0.5 * h * k2b)
        k3a, k3b, _ = field(q3)
        q4 = QuiverPoint(alpha=a0 + h * k3a, beta=b0 + h * k3b)
        k4a, k4b, _ = field(q4)
        alpha = a0 + (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        beta = b0 + (h / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
        q = project_to_level(QuiverPoint(alpha=alpha, beta=beta), zeta)
        t += h
        step_index += 1
        morse = q.norm_squared()
        if morse < morse_prev - 1e-12 * max(1.0, morse_prev):
            raise FlowDirectionError(
                f"height decreased at t = {t}: {morse_prev} -> {morse}"
            )
        # a long run of vanishing height increments means the trajectory is
        # captured by another critical point (ascending manifolds of interior
        # points end on their neighbors, not at infinity)
        if morse - morse_prev < 1e-12 * max(1.0, morse):
            flat_streak += 1
        else:
            flat_streak = 0
        if flat_streak >= 10:
            stalled = True
        if step_index % store_stride == 0:
            times.append(t)
            points.append(q)
            xis.append(solve_xi(q))
        if stalled:
            break
        morse_prev = morse
    if times[-1] < t:
        times.append(t)
        points.append(q)
        xis.append(solve_xi(q))
    return FlowTrajectory(times=np.array(times), points=points, xis=xis,
                          source=source, form=NumericForm(eps=eps, step=h),
                          stalled=stalled)


def phase_rotate_trajectory(traj: FlowTrajectory, phi: float) -> FlowTrajectory:
    """Rotate every sample by the scaling circle; still a flow line."""
    z = np.exp(1j * phi)
    points = [QuiverPoint(alpha=p.alpha * z, beta=p.beta * z) for p in traj.points]
    return FlowTrajectory(times=traj.times.copy(), points=points,
                          xis=[x.copy() for x in traj.xis], source=traj.source,
                          form=traj.form, stalled=traj.stalled)


def trajectory_residuals(traj: FlowTrajectory, zeta: ZetaLevel) -> dict:
    """Worst constraint residuals and height monotonicity over the samples."""
    real_res = 0.0
    complex_res = 0.0
    for p in traj.points:
        real_res = max(real_res, float(np.max(np.abs(moment_map_real(p) - zeta.values))))
        complex_res = max(complex_res, float(np.max(np.abs(moment_map_complex(p)))))
    morse = traj.morse_values()
    diffs = np.diff(morse)
    # increments smaller than one ulp of the height register as exact zeros
    monotone = bool(np.all(diffs >= 0) and (len(morse) < 2 or morse[-1] > morse[0]))
    return {
        "max_real_residual": real_res,
        "max_complex_residual": complex_res,
        "morse_monotone": monotone,
    }


def sample_at_morse(traj: FlowTrajectory, target: float) -> QuiverPoint | None:
    """Interpolate the trajectory at a prescribed height (cubic Hermite).

    Heights are strictly increasing along a trajectory, so this fixes the
    time-translation ambiguity when comparing flows.  Returns None when the
    target lies outside the sampled range.
    """
    morse = traj.morse_values()
    if target < morse[0] or target > morse[-1]:
        return None
    k = int(np.searchsorted(morse, target)) - 1
    k = max(0, min(k, len(morse) - 2))
    t0, t1 = traj.times[k], traj.times[k + 1]
    p0, p1 = traj.points[k], traj.points[k + 1]
    d0a, d0b = flow_vector(p0, traj.xis[k])
    d1a, d1b = flow_vector(p1, traj.xis[k + 1])

    # Newton on the interpolated height to land exactly at the target
    def hermite(tau):
        hseg = t1 - t0
        x = tau
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        alpha = (h00 * p0.alpha + h10 * hseg * d0a + h01 * p1.alpha + h11 * hseg * d1a)
        beta = (h00 * p0.beta + h10 * hseg * d0b + h01 * p1.beta + h11 * hseg * d1b)
        return QuiverPoint(alpha=alpha, beta=beta)

    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if hermite(mid).norm_squared() < target:
            lo = mid
        else:
            hi = mid
    return hermite(0.5 * (lo + hi))


def write_trajectory_csv(traj: FlowTrajectory, zeta: ZetaLevel, fh: io.TextIOBase) -> None:
    """Dense CSV dump: time, edge components, gauge, height, residual norms."""
    n = traj.points[0].n
    cols = ["t"]
    for i in range(n):
        cols += [f"alpha{i + 1}_re", f"alpha{i + 1}_im"]
    for i in range(n):
        cols += [f"beta{i + 1}_re", f"beta{i + 1}_im"]
    cols += [f"xi{i + 1}" for i in range(n)]
    cols += ["morse_value", "residual_real", "residual_complex"]
    fh.write(",".join(cols) + "\n")
    for t, p, xi in zip(traj.times, traj.points, traj.xis):
        row = [f"{t:.12g}"]
        for z in p.alpha:
            row += [f"{z.real:.15g}", f"{z.imag:.15g}"]
        for z in p.beta:
            row += [f"{z.real:.15g}", f"{z.imag:.15g}"]
        row += [f"{x:.15g}" for x in xi]
        rr = float(np.max(np.abs(moment_map_real(p) - zeta.values)))
        rc = float(np.max(np.abs(moment_map_complex(p))))
        row += [f"{p.norm_squared():.15g}", f"{rr:.3e}", f"{rc:.3e}"]
        fh.write(",".join(row) + "\n")
