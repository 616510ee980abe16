"""Geodesic sprays of navigation data and their comparison.

Three sprays live here, all as coefficient functions G^k(x, y) with the
geodesic equation xdd^k = -2 G^k(x, xd):

  riemann   G^k = A^k_ij y^i y^j / 2 for the metric alone;
  natural   the spray of the nonlinear wind connection,
            G^k = (A^k_ij y^i y^j - F y^i A^k_ij W^j - F y^i dW^k/dx^i) / 2,
            which also equals y^i Gamma^k_i / 2 identically;
  randers   the full variational spray of the induced norm, assembled from
            the symmetric/antisymmetric parts of the lowered wind derivative.

Convention pinned throughout (and guarded by the variational residual test):
the lowered wind derivative is D_ij = h_ik (nabla_j W)^k with the derivative
slot SECOND; R = sym D, S = antisym D; contractions with the wind hit the
FIRST slot (T_j = W^i T_ij) and contractions with y follow the displayed
index (T_0 = y^i T_i, T^i_0 = y^j T^i_j, T_00 = y^i y^j T_ij).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import numkernel as nk
from .connection import _gamma_generic
from .errors import ZeroVector, ZeroVelocity
from .geometry import (MetricField, NavigationData, TangentSample,
                       christoffel, indicatrix_points, randers_grad_x,
                       randers_value, randers_value_and_grad,
                       wind_covariant_jacobian)


@dataclass(frozen=True)
class SprayEval:
    kind: str
    at: TangentSample
    coefficients: np.ndarray


@dataclass
class GeodesicPath:
    kind: str
    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    dt: float
    left_domain: bool = False


@dataclass(frozen=True)
class RSTensors:
    """Symmetric/antisymmetric split of the lowered wind derivative at a
    point, with the pieces needed to assemble the variational spray."""

    x: np.ndarray
    metric: nk.SymMatrix
    wind: np.ndarray
    R: nk.SymMatrix
    S: np.ndarray  # antisymmetric


# ---------------------------------------------------------------------------
# spray coefficient fields (batched over leading axes)


def natural_spray_values(nav: NavigationData, x, y) -> np.ndarray:
    """Natural-connection spray coefficients G^k(x, y), batched."""
    y = np.asarray(y, dtype=float)
    a = christoffel(nav.metric, x)
    m = wind_covariant_jacobian(nav, x)
    f = randers_value(nav, x, y)
    ayy = np.einsum("...kij,...i,...j->...k", a, y, y)
    my = np.einsum("...ki,...i->...k", m, y)
    return 0.5 * (ayy - f[..., None] * my)


def riemann_spray_values(metric: MetricField, x, y) -> np.ndarray:
    """Metric spray coefficients, quadratic in y."""
    y = np.asarray(y, dtype=float)
    a = christoffel(metric, x)
    return 0.5 * np.einsum("...kij,...i,...j->...k", a, y, y)


def _rs_arrays(nav: NavigationData, x):
    """h, h_inv, W, A, and the R/S split of the lowered wind derivative."""
    h = nav.metric.value(x)
    hinv = nk.spd_inverse(h)
    w = nav.wind.value(x)
    a = christoffel(nav.metric, x)
    m = nav.wind.jacobian(x) + np.einsum("...kis,...s->...ki", a, w)
    dp = np.einsum("...ik,...kj->...ij", h, m)  # derivative slot second
    dpt = np.einsum("...ij->...ji", dp)
    return h, hinv, w, a, 0.5 * (dp + dpt), 0.5 * (dp - dpt)


def rs_tensors(nav: NavigationData, x) -> RSTensors:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("rs_tensors expects a single point")
    h, _, w, _, r, s = _rs_arrays(nav, x)
    return RSTensors(x=x, metric=nk.SymMatrix(h), wind=w,
                     R=nk.SymMatrix(r), S=s)


def randers_spray_values(nav: NavigationData, x, y) -> np.ndarray:
    """Variational spray of the induced norm (zero fibers not allowed)."""
    y = np.asarray(y, dtype=float)
    h, hinv, w, a, r, s = _rs_arrays(nav, x)
    f = randers_value(nav, x, y)

    def pieces(t):
        t_j = np.einsum("...i,...ij->...j", w, t)
        t_scalar = np.einsum("...j,...j->...", w, t_j)
        t_up = np.einsum("...ij,...j->...i", hinv, t_j)
        t_0 = np.einsum("...i,...i->...", y, t_j)
        t_i0 = np.einsum("...il,...lj,...j->...i", hinv, t, y)
        t_00 = np.einsum("...i,...ij,...j->...", y, t, y)
        return t_j, t_scalar, t_up, t_0, t_i0, t_00

    r_j, r_sc, r_up, r_0, r_i0, r_00 = pieces(r)
    s_j, s_sc, s_up, s_0, s_i0, s_00 = pieces(s)
    ayy = np.einsum("...kij,...i,...j->...k", a, y, y)
    fcol = f[..., None]
    return (0.5 * ayy
            + r_0[..., None] * y
            + 0.5 * r_00[..., None] * w
            - 0.5 * fcol * fcol * (s_up + r_up - r_sc[..., None] * w)
            - fcol * (s_i0 + 0.5 * r_sc[..., None] * y + r_0[..., None] * w)
            - (r_00 / (2.0 * f))[..., None] * y)


def natural_spray(nav: NavigationData, s: TangentSample) -> SprayEval:
    if not np.any(s.y):
        raise ZeroVector("spray coefficients need a nonzero fiber vector")
    return SprayEval("natural", s, natural_spray_values(nav, s.x, s.y))


def riemann_spray(metric: MetricField, s: TangentSample) -> SprayEval:
    return SprayEval("riemann", s, riemann_spray_values(metric, s.x, s.y))


def randers_spray(nav: NavigationData, s: TangentSample) -> SprayEval:
    if not np.any(s.y):
        raise ZeroVector("spray coefficients need a nonzero fiber vector")
    return SprayEval("randers", s, randers_spray_values(nav, s.x, s.y))


def natural_spray_field(nav: NavigationData) -> Callable:
    return lambda x, y: natural_spray_values(nav, x, y)


def riemann_spray_field(metric: MetricField) -> Callable:
    return lambda x, y: riemann_spray_values(metric, x, y)


def randers_spray_field(nav: NavigationData) -> Callable:
    return lambda x, y: randers_spray_values(nav, x, y)


def spray_connection_matrix(nav: NavigationData, x, y) -> np.ndarray:
    """Coefficients dG^k/dy^i of the symmetric connection induced by the
    natural spray, by a dual sweep through the full spray evaluation.

    Equals the nonlinear connection matrix exactly when torsion vanishes;
    on a rotating wind the two differ measurably.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = christoffel(nav.metric, x)
    m = wind_covariant_jacobian(nav, x)
    h = nav.metric.value(x)
    w = nav.wind.value(x)
    lam = 1.0 - np.einsum("...ij,...i,...j->...", h, w, w)
    n = nav.dim
    lead = np.broadcast_shapes(x.shape, y.shape)[:-1]
    out = np.empty(lead + (n, n))
    for j in range(n):
        y_dual = [nk.Dual(y[..., i] + np.zeros(lead), 1.0 if i == j else 0.0)
                  for i in range(n)]
        rows = _gamma_generic(a, m, h, w, lam, y_dual)
        for k in range(n):
            g_k = sum(y_dual[i] * rows[k][i] for i in range(n)) * 0.5
            out[..., k, j] = g_k.dot
    return out


# ---------------------------------------------------------------------------
# geodesic integration


def integrate_geodesic(spray: Callable, x0, y0, time_span: float,
                       dt: float = 1e-3, chart=None,
                       kind: str = "geodesic") -> GeodesicPath:
    """Integrate xdd = -2 G(x, xd) from (x0, y0) over [0, time_span].

    Halts early (with left_domain=True) as soon as a step would leave the
    chart domain; the returned path contains only interior samples.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if not np.any(y0):
        raise ZeroVector("geodesics need a nonzero initial velocity")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = x0.shape[-1]
    steps = max(1, int(round(time_span / dt)))

    def f(t, state):
        x, y = state[..., :n], state[..., n:]
        return np.concatenate([y, -2.0 * spray(x, y)], axis=-1)

    xs = np.empty((steps + 1, n))
    ys = np.empty((steps + 1, n))
    xs[0], ys[0] = x0, y0
    state = np.concatenate([x0, y0])
    left = False
    last = steps
    for j in range(steps):
        state = nk.rk4_step(f, state, j * dt, dt)
        if chart is not None and not chart.contains(state[:n]):
            last = j
            left = True
            break
        xs[j + 1], ys[j + 1] = state[:n], state[n:]
    ts = dt * np.arange(last + 1)
    return GeodesicPath(kind, ts, xs[:last + 1], ys[:last + 1], dt, left)


def integrate_geodesics_many(spray: Callable, x0s, y0s, time_span: float,
                             dt: float = 1e-3, kind: str = "geodesic") -> list[GeodesicPath]:
    """Batched geodesic integration without boundary halting; callers pick
    spans that stay inside the chart (assert with chart.contains)."""
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    y0s = np.atleast_2d(np.asarray(y0s, dtype=float))
    bsz, n = x0s.shape
    steps = max(1, int(round(time_span / dt)))

    def f(t, state):
        x, y = state[..., :n], state[..., n:]
        return np.concatenate([y, -2.0 * spray(x, y)], axis=-1)

    xs = np.empty((bsz, steps + 1, n))
    ys = np.empty((bsz, steps + 1, n))
    xs[:, 0], ys[:, 0] = x0s, y0s
    state = np.concatenate([x0s, y0s], axis=-1)
    for j in range(steps):
        state = nk.rk4_step(f, state, j * dt, dt)
        xs[:, j + 1], ys[:, j + 1] = state[..., :n], state[..., n:]
    ts = dt * np.arange(steps + 1)
    return [GeodesicPath(kind, ts, xs[b], ys[b], dt) for b in range(bsz)]


def geodesic_csv(path: GeodesicPath, nav: NavigationData, stream) -> None:
    """CSV rows t, x*, y*, F(x, y) along an integrated path."""
    n = path.xs.shape[1]
    header = (["t"] + [f"x{i + 1}" for i in range(n)]
              + [f"y{i + 1}" for i in range(n)] + ["F"])
    stream.write(",".join(header) + "\n")
    fvals = randers_value(nav, path.xs, path.ys)
    for j in range(len(path.ts)):
        row = [path.ts[j]] + list(path.xs[j]) + list(path.ys[j]) + [float(fvals[j])]
        stream.write(",".join(f"{v:.17g}" for v in row) + "\n")


# ---------------------------------------------------------------------------
# variational (Euler-Lagrange) residual


def el_residual(nav: NavigationData, path: GeodesicPath) -> float:
    """Max Euler-Lagrange residual |d/dt dE/dy - dE/dx| over interior samples
    of a path, with energy E = F^2 / 2.

    The time derivative is a five-point central difference on the uniform
    sample grid; the endpoints (two on each side) are skipped. Small for
    variational geodesics, order-one for paths of a non-variational spray.
    """
    if len(path.ts) < 5:
        raise ValueError("path too short for the five-point stencil")
    if np.any(np.all(path.ys == 0.0, axis=-1)):
        raise ZeroVelocity("path has a zero-velocity sample")
    f, fy = randers_value_and_grad(nav, path.xs, path.ys)
    ey = f[:, None] * fy
    fx = randers_grad_x(nav, path.xs, path.ys)
    ex = f[:, None] * fx
    dey = nk.central_time_derivative(ey, path.dt)
    resid = dey - ex[2:-2]
    return float(np.linalg.norm(resid, axis=1).max())


def autoparallel_residual(nav: NavigationData, path: GeodesicPath) -> float:
    """Max norm of the along-path covariant derivative of the velocity,
    D v^k/dt = dv^k/dt + Gamma^k_i(c, v) cdot^i with v = cdot, computed from
    the sampled path by the five-point stencil."""
    from .connection import gamma_matrix
    dv = nk.central_time_derivative(path.ys, path.dt)
    g = gamma_matrix(nav, path.xs[2:-2], path.ys[2:-2])
    corr = np.einsum("tki,ti->tk", g, path.ys[2:-2])
    return float(np.linalg.norm(dv + corr, axis=1).max())


# ---------------------------------------------------------------------------
# spray comparison over a grid


@dataclass
class ComparisonReport:
    n_points: int
    n_dirs: int
    sup_natural_vs_randers: float
    phi_min: float
    phi_max: float
    phi_mean: float
    phi_spread_max: float
    projective_residual: float
    sprays_coincide: bool
    projectively_riemannian: bool
    tol_coincide: float
    tol_projective: float
    points: Optional[np.ndarray] = None
    phi_hat: Optional[np.ndarray] = None

    def as_dict(self) -> dict:
        return {
            "n_points": int(self.n_points),
            "n_dirs": int(self.n_dirs),
            "sup_natural_vs_randers": float(self.sup_natural_vs_randers),
            "phi_min": float(self.phi_min),
            "phi_max": float(self.phi_max),
            "phi_mean": float(self.phi_mean),
            "phi_spread_max": float(self.phi_spread_max),
            "projective_residual": float(self.projective_residual),
            "sprays_coincide": bool(self.sprays_coincide),
            "projectively_riemannian": bool(self.projectively_riemannian),
            "tol_coincide": float(self.tol_coincide),
            "tol_projective": float(self.tol_projective),
        }


def compare_sprays(nav: NavigationData, points: Optional[np.ndarray] = None,
                   per_axis: int = 20, n_dirs: int = 16,
                   tol_coincide: float = 1e-8,
                   tol_projective: float = 1e-6,
                   margin: float = 0.05) -> ComparisonReport:
    """Compare the natural spray against the variational one over a grid of
    base points and norm-unit fiber directions.

    Verdicts: sprays_coincide when the sup difference stays below
    tol_coincide; projectively_riemannian when (natural - riemann) fits
    -phi(x) F y / 2 with a per-point factor that is consistent across the
    fiber directions (spread below 1e-6) and residual below tol_projective.
    """
    if points is None:
        points = nav.chart.grid(per_axis, margin)
    points = np.asarray(points, dtype=float)
    npts = len(points)
    ys = np.stack([indicatrix_points(nav, p, n_dirs) for p in points])  # (P, D, n)
    xs = np.broadcast_to(points[:, None, :], ys.shape)

    g_nat = natural_spray_values(nav, xs, ys)
    g_ran = randers_spray_values(nav, xs, ys)
    g_rie = riemann_spray_values(nav.metric, xs, ys)
    sup_nr = float(np.abs(g_nat - g_ran).max())

    d = g_nat - g_rie
    f = randers_value(nav, xs, ys)  # unit by construction, kept explicit
    denom = f * np.einsum("pdi,pdi->pd", ys, ys)
    phi = -2.0 * np.einsum("pdi,pdi->pd", d, ys) / denom
    phi_hat = phi.mean(axis=1)
    spread = np.abs(phi - phi_hat[:, None]).max(axis=1)
    resid = d + 0.5 * phi_hat[:, None, None] * f[..., None] * ys
    resid_max = float(np.linalg.norm(resid, axis=2).max())

    coincide = sup_nr < tol_coincide
    projective = bool(spread.max() < 1e-6 and resid_max < tol_projective)
    return ComparisonReport(
        n_points=npts, n_dirs=n_dirs,
        sup_natural_vs_randers=sup_nr,
        phi_min=float(phi_hat.min()), phi_max=float(phi_hat.max()),
        phi_mean=float(phi_hat.mean()), phi_spread_max=float(spread.max()),
        projective_residual=resid_max,
        sprays_coincide=bool(coincide),
        projectively_riemannian=projective,
        tol_coincide=tol_coincide, tol_projective=tol_projective,
        points=points, phi_hat=phi_hat,
    )
