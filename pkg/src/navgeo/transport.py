"""Parallel transport along curves: linear (metric) and natural (nonlinear).

Curves are maps of [0, 1] into the chart. Transport integrates with a fixed
step classical RK4; all per-point field quantities along a curve are
evaluated once, for every curve in a batch, before stepping. That keeps the
inner loop to a handful of einsum contractions, which is what makes the
acceptance sweeps (hundreds of transports at dt = 1e-3) affordable.

The natural transport comes in two interchangeable flavors:

  definitional  shift by the wind at the start, transport linearly, shift
                back at the end, scale by the starting norm;
  ode           integrate dv^k/dt + Gamma^k_i(c, v) cdot^i = 0 directly.

They agree to integrator accuracy; keeping both honest and separate is the
point of the two-route tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import exprlang as xl
from .errors import (CurveLeftDomain, DegenerateNorm, NonFiniteState,
                     ZeroVector)
from .geometry import (Chart, MetricField, NavigationData, christoffel,
                       randers_value, wind_covariant_jacobian)


# ---------------------------------------------------------------------------
# curves


class Curve:
    """Base interface: point(t) and velocity(t), vectorized over t arrays."""

    dim: int

    def point(self, t):
        raise NotImplementedError

    def velocity(self, t):
        raise NotImplementedError

    def reversed(self) -> "Curve":
        raise NotImplementedError

    def is_closed(self, tol: float = 1e-12) -> bool:
        a = self.point(0.0)
        b = self.point(1.0)
        return bool(np.linalg.norm(a - b) <= tol)


class AnalyticCurve(Curve):
    """Curve with one expression per coordinate in the parameter t."""

    def __init__(self, components: Sequence[xl.Expression]):
        self.components = tuple(components)
        self.dim = len(self.components)

    @classmethod
    def from_strings(cls, exprs: Sequence[str]) -> "AnalyticCurve":
        return cls([xl.parse_with_names(s, ("t",)) for s in exprs])

    def point(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim,))
        for k, comp in enumerate(self.components):
            out[..., k] = xl.evaluate(comp, t[..., None])
        return out

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dim,))
        for k, comp in enumerate(self.components):
            _, out[..., k] = xl.evaluate_dual(comp, t[..., None], [1.0])
        return out

    def reversed(self) -> "AnalyticCurve":
        flipped = [xl.Expression(_reverse_param(c.root), c.var_names)
                   for c in self.components]
        return AnalyticCurve(flipped)


def _reverse_param(node):
    """Substitute t -> 1 - t in an AST."""
    if isinstance(node, xl.Var):
        return xl.Binary("-", xl.Num(1.0), xl.Var(node.index))
    if isinstance(node, xl.Num):
        return node
    if isinstance(node, xl.Neg):
        return xl.Neg(_reverse_param(node.arg))
    if isinstance(node, xl.Binary):
        return xl.Binary(node.op, _reverse_param(node.lhs), _reverse_param(node.rhs))
    return xl.Call(node.fn, _reverse_param(node.arg))


class PolylineCurve(Curve):
    """Piecewise-linear curve through sample points, uniform in parameter."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError("polyline needs at least two points")
        self.points = pts
        self.dim = pts.shape[1]

    def point(self, t):
        t = np.asarray(t, dtype=float)
        m = len(self.points) - 1
        s = np.clip(t, 0.0, 1.0) * m
        idx = np.minimum(s.astype(int), m - 1)
        frac = s - idx
        return self.points[idx] + frac[..., None] * (self.points[idx + 1] - self.points[idx])

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        m = len(self.points) - 1
        idx = np.minimum((np.clip(t, 0.0, 1.0) * m).astype(int), m - 1)
        return m * (self.points[idx + 1] - self.points[idx])

    def reversed(self) -> "PolylineCurve":
        return PolylineCurve(self.points[::-1])


# ---------------------------------------------------------------------------
# results


@dataclass
class TransportResult:
    mode: str
    v_end: np.ndarray
    steps: int
    dt: float
    start: np.ndarray
    end: np.ndarray
    ts: Optional[np.ndarray] = None
    xs: Optional[np.ndarray] = None
    vs: Optional[np.ndarray] = None


def trajectory_csv(result: TransportResult, nav: NavigationData, stream) -> None:
    """Write the recorded trajectory as CSV rows t, x*, v*, F(x, v)."""
    if result.xs is None:
        raise ValueError("transport was run without keep_trajectory")
    n = result.xs.shape[1]
    header = (["t"] + [f"x{i + 1}" for i in range(n)]
              + [f"v{i + 1}" for i in range(n)] + ["F"])
    stream.write(",".join(header) + "\n")
    fvals = randers_value(nav, result.xs, result.vs)
    for j in range(len(result.ts)):
        row = ([result.ts[j]] + list(result.xs[j]) + list(result.vs[j])
               + [float(fvals[j])])
        stream.write(",".join(f"{v:.17g}" for v in row) + "\n")


# ---------------------------------------------------------------------------
# batched engines


def _steps_from_dt(dt: float) -> int:
    if dt <= 0 or dt > 1:
        raise ValueError("dt must lie in (0, 1]")
    return max(1, int(round(1.0 / dt)))


def _sample_tables(curves: Sequence[Curve], steps: int,
                   chart: Optional[Chart]) -> tuple[np.ndarray, np.ndarray]:
    """Positions and velocities of each curve on the half-step grid."""
    ts = np.linspace(0.0, 1.0, 2 * steps + 1)
    # identical curve objects share their samples
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    pos = np.empty((len(curves), len(ts), curves[0].dim))
    vel = np.empty_like(pos)
    for b, c in enumerate(curves):
        key = id(c)
        if key not in cache:
            cache[key] = (c.point(ts), c.velocity(ts))
        pos[b], vel[b] = cache[key]
    if chart is not None:
        inside = chart.contains(pos)
        if not np.all(inside):
            b, j = np.argwhere(~inside)[0]
            raise CurveLeftDomain(
                f"curve sample at t={ts[j]:.6f} lies outside the chart domain "
                f"(point {pos[b, j].tolist()})")
    return pos, vel


def _linear_rhs_tables(metric: MetricField, pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    """ac[b, s, k, l] = A^k_il(c) cdot^i per half-step sample."""
    bsz, ns, n = pos.shape
    a = christoffel(metric, pos.reshape(-1, n)).reshape(bsz, ns, n, n, n)
    return np.einsum("bskil,bsi->bskl", a, vel)


def _run_linear(ac: np.ndarray, v0: np.ndarray, dt: float,
                keep: bool) -> tuple[np.ndarray, Optional[np.ndarray]]:
    steps = (ac.shape[1] - 1) // 2
    v = np.array(v0, dtype=float)
    traj = np.empty((v.shape[0], steps + 1, v.shape[1])) if keep else None
    if keep:
        traj[:, 0] = v
    for j in range(steps):
        a0, am, a1 = ac[:, 2 * j], ac[:, 2 * j + 1], ac[:, 2 * j + 2]
        k1 = -np.einsum("bkl,bl->bk", a0, v)
        k2 = -np.einsum("bkl,bl->bk", am, v + 0.5 * dt * k1)
        k3 = -np.einsum("bkl,bl->bk", am, v + 0.5 * dt * k2)
        k4 = -np.einsum("bkl,bl->bk", a1, v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if keep:
            traj[:, j + 1] = v
    if not np.all(np.isfinite(v)):
        raise NonFiniteState("linear transport state became non-finite")
    return v, traj


def riemann_transport_many(metric: MetricField, curves: Sequence[Curve],
                           v0s: np.ndarray, dt: float = 1e-3,
                           chart: Optional[Chart] = None) -> np.ndarray:
    """Endpoint values of the metric parallel transport for a batch of
    (curve, start vector) pairs."""
    steps = _steps_from_dt(dt)
    pos, vel = _sample_tables(curves, steps, chart)
    ac = _linear_rhs_tables(metric, pos, vel)
    v, _ = _run_linear(ac, np.atleast_2d(v0s), dt, keep=False)
    return v


def riemann_transport(metric: MetricField, curve: Curve, v0,
                      dt: float = 1e-3, chart: Optional[Chart] = None,
                      keep_trajectory: bool = False) -> TransportResult:
    """Parallel transport of v0 along the curve for the metric connection."""
    steps = _steps_from_dt(dt)
    pos, vel = _sample_tables([curve], steps, chart)
    ac = _linear_rhs_tables(metric, pos, vel)
    v, traj = _run_linear(ac, np.atleast_2d(np.asarray(v0, dtype=float)), dt,
                          keep=keep_trajectory)
    res = TransportResult("riemann", v[0], steps, dt,
                          start=pos[0, 0], end=pos[0, -1])
    if keep_trajectory:
        res.ts = np.linspace(0.0, 1.0, steps + 1)
        res.xs = pos[0, ::2]
        res.vs = traj[0]
    return res


def riemann_transport_matrix(metric: MetricField, curve: Curve,
                             dt: float = 1e-3,
                             chart: Optional[Chart] = None) -> np.ndarray:
    """Matrix of the (linear) metric transport along the curve, columns =
    transported basis vectors."""
    n = curve.dim
    basis = np.eye(n)
    cols = riemann_transport_many(metric, [curve] * n, basis, dt, chart)
    return cols.T


def _natural_tables(nav: NavigationData, pos: np.ndarray, vel: np.ndarray):
    bsz, ns, n = pos.shape
    flat = pos.reshape(-1, n)
    a = christoffel(nav.metric, flat).reshape(bsz, ns, n, n, n)
    m = wind_covariant_jacobian(nav, flat).reshape(bsz, ns, n, n)
    h = nav.metric.value(flat).reshape(bsz, ns, n, n)
    w = nav.wind.value(flat).reshape(bsz, ns, n)
    hw = np.einsum("bsij,bsj->bsi", h, w)
    lam = 1.0 - np.einsum("bsi,bsi->bs", w, hw)
    ac = np.einsum("bskil,bsi->bskl", a, vel)   # A^k_il cdot^i
    mc = np.einsum("bski,bsi->bsk", m, vel)     # M^k_i cdot^i
    return ac, mc, h, hw, lam


def _norm_batch(h, hw, lam, v):
    wy = np.einsum("bi,bi->b", v, hw)
    yy = np.einsum("bij,bi,bj->b", h, v, v)
    return (np.sqrt(wy * wy + lam * yy) - wy) / lam


def _run_natural(tables, v0: np.ndarray, dt: float,
                 keep: bool) -> tuple[np.ndarray, Optional[np.ndarray]]:
    ac, mc, h, hw, lam = tables
    steps = (ac.shape[1] - 1) // 2
    v = np.array(v0, dtype=float)
    traj = np.empty((v.shape[0], steps + 1, v.shape[1])) if keep else None
    if keep:
        traj[:, 0] = v

    def rhs(idx, vv):
        f = _norm_batch(h[:, idx], hw[:, idx], lam[:, idx], vv)
        return -np.einsum("bkl,bl->bk", ac[:, idx], vv) + f[:, None] * mc[:, idx]

    for j in range(steps):
        i0, im, i1 = 2 * j, 2 * j + 1, 2 * j + 2
        k1 = rhs(i0, v)
        k2 = rhs(im, v + 0.5 * dt * k1)
        k3 = rhs(im, v + 0.5 * dt * k2)
        k4 = rhs(i1, v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if keep:
            traj[:, j + 1] = v
    if not np.all(np.isfinite(v)):
        raise NonFiniteState("natural transport state became non-finite")
    return v, traj


def natural_transport_many(nav: NavigationData, curves: Sequence[Curve],
                           v0s: np.ndarray, method: str = "definitional",
                           dt: float = 1e-3) -> np.ndarray:
    """Endpoint values of the natural transport for a batch of pairs."""
    v0s = np.atleast_2d(np.asarray(v0s, dtype=float))
    if not np.all(np.any(v0s != 0.0, axis=1)):
        raise ZeroVector("natural transport starts from a nonzero vector")
    steps = _steps_from_dt(dt)
    pos, vel = _sample_tables(curves, steps, nav.chart)
    if method == "ode":
        v, _ = _run_natural(_natural_tables(nav, pos, vel), v0s, dt, keep=False)
        return v
    if method != "definitional":
        raise ValueError("method must be 'definitional' or 'ode'")
    p, q = pos[:, 0], pos[:, -1]
    f0 = randers_value(nav, p, v0s)
    u0 = v0s / f0[:, None] - nav.wind.value(p)
    ac = _linear_rhs_tables(nav.metric, pos, vel)
    u1, _ = _run_linear(ac, u0, dt, keep=False)
    return f0[:, None] * (u1 + nav.wind.value(q))


def natural_transport(nav: NavigationData, curve: Curve, v0,
                      method: str = "definitional", dt: float = 1e-3,
                      keep_trajectory: bool = False) -> TransportResult:
    """Natural (wind-aware, nonlinear) parallel transport of v0.

    Preserves the navigation norm along the way; positively homogeneous in
    v0 but not additive.
    """
    v0 = np.asarray(v0, dtype=float)
    if not np.any(v0):
        raise ZeroVector("natural transport starts from a nonzero vector")
    steps = _steps_from_dt(dt)
    pos, vel = _sample_tables([curve], steps, nav.chart)
    if method == "ode":
        v, traj = _run_natural(_natural_tables(nav, pos, vel), v0[None, :], dt,
                               keep=keep_trajectory)
        v_end = v[0]
    elif method == "definitional":
        p, q = pos[0, 0], pos[0, -1]
        f0 = float(randers_value(nav, p, v0))
        u0 = v0 / f0 - nav.wind.value(p)
        ac = _linear_rhs_tables(nav.metric, pos, vel)
        u1, utraj = _run_linear(ac, u0[None, :], dt, keep=keep_trajectory)
        v_end = f0 * (u1[0] + nav.wind.value(q))
        traj = None
        if keep_trajectory:
            winds = nav.wind.value(pos[0, ::2])
            traj = (f0 * (utraj[0] + winds))[None, :]
    else:
        raise ValueError("method must be 'definitional' or 'ode'")
    res = TransportResult(f"natural_{method}", v_end, steps, dt,
                          start=pos[0, 0], end=pos[0, -1])
    if keep_trajectory:
        res.ts = np.linspace(0.0, 1.0, steps + 1)
        res.xs = pos[0, ::2]
        res.vs = traj[0]
    return res


def corrected_transport(norm: Callable, base: Callable, curve: Curve,
                        v0) -> TransportResult:
    """Norm-corrected transport: run `base`, then rescale the endpoint so the
    given norm is preserved exactly.

    norm(x, v) evaluates the Finsler norm; base(curve, v0) returns either a
    TransportResult or a bare endpoint vector.
    """
    v0 = np.asarray(v0, dtype=float)
    f_start = float(norm(curve.point(0.0), v0))
    if f_start == 0.0:
        raise ZeroVector("corrected transport starts from a norm-zero vector")
    raw = base(curve, v0)
    v_base = raw.v_end if isinstance(raw, TransportResult) else np.asarray(raw, dtype=float)
    q = curve.point(1.0)
    f_end = float(norm(q, v_base))
    if f_end <= 0.0:
        raise DegenerateNorm("base transport produced a norm-nonpositive vector")
    scale = f_start / f_end
    steps = raw.steps if isinstance(raw, TransportResult) else 0
    dt = raw.dt if isinstance(raw, TransportResult) else float("nan")
    return TransportResult("corrected", scale * v_base, steps, dt,
                           start=curve.point(0.0), end=q)
