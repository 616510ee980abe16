"""The nonlinear connection induced by navigation data.

The coefficients have one lower index, Gamma[k, i], and are positively
1-homogeneous in the fiber variable but not linear:

    Gamma^k_i(x, y) = A^k_is y^s - F(x, y) (A^k_is W^s + dW^k/dx^i)

where A are the Levi-Civita coefficients of the metric. They are kept
strictly separate from the two-lower-index Christoffel symbols; conflating
the two is the classic way to get silently wrong transports.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkernel as nk
from .errors import ZeroVector
from .geometry import (MetricField, NavigationData, TangentSample, VectorField,
                       christoffel, randers_value, randers_value_and_grad,
                       wind_covariant_jacobian, _norm_from_parts)


@dataclass(frozen=True)
class ConnectionEval:
    at: TangentSample
    matrix: np.ndarray  # Gamma[k, i]


@dataclass(frozen=True)
class TorsionEval:
    at: TangentSample
    components: np.ndarray  # t[k, i, j], antisymmetric in (i, j)

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.components).max())


# ---------------------------------------------------------------------------
# vectorized cores


def gamma_matrix(nav: NavigationData, x, y) -> np.ndarray:
    """Gamma[..., k, i] at a batch of tangent samples (zero fibers allowed,
    where the value is zero by homogeneity)."""
    a = christoffel(nav.metric, x)
    m = wind_covariant_jacobian(nav, x)
    f = randers_value(nav, x, y)
    ay = np.einsum("...kis,...s->...ki", a, np.asarray(y, dtype=float))
    return ay - f[..., None, None] * m


def gamma(nav: NavigationData, s: TangentSample) -> ConnectionEval:
    """Connection coefficients at one tangent sample with nonzero fiber."""
    if not np.any(s.y):
        raise ZeroVector("connection coefficients need a nonzero fiber vector")
    return ConnectionEval(s, gamma_matrix(nav, s.x, s.y))


def _gamma_generic(a, m, h, w, lam, y_comps):
    """Gamma with the fiber given as a list of generic scalars (floats,
    arrays, or duals); every contraction is spelled out so dual slots ride
    through untouched. Returns a nested list [k][i]."""
    n = len(y_comps)
    hw = np.einsum("...ij,...j->...i", h, w)
    wy = sum(y_comps[i] * hw[..., i] for i in range(n))
    yy = sum(y_comps[i] * y_comps[j] * h[..., i, j]
             for i in range(n) for j in range(n))
    f = _norm_from_parts(wy, yy, lam)
    out = []
    for k in range(n):
        row = []
        for i in range(n):
            ay = sum(a[..., k, i, s] * y_comps[s] for s in range(n))
            row.append(ay - f * m[..., k, i])
        out.append(row)
    return out


def gamma_fiber_jacobian(nav: NavigationData, x, y) -> np.ndarray:
    """dGamma[..., j, k, i] = d(Gamma^k_i)/d(y^j), by pushing a dual number
    through the full coefficient evaluation (no closed-form shortcut)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = christoffel(nav.metric, x)
    m = wind_covariant_jacobian(nav, x)
    h = nav.metric.value(x)
    w = nav.wind.value(x)
    lam = 1.0 - np.einsum("...ij,...i,...j->...", h, w, w)
    n = nav.dim
    lead = np.broadcast_shapes(x.shape, y.shape)[:-1]
    out = np.empty(lead + (n, n, n))
    for j in range(n):
        y_dual = [nk.Dual(y[..., i] + np.zeros(lead),
                          1.0 if i == j else 0.0) for i in range(n)]
        rows = _gamma_generic(a, m, h, w, lam, y_dual)
        for k in range(n):
            for i in range(n):
                out[..., j, k, i] = rows[k][i].dot
    return out


# ---------------------------------------------------------------------------
# torsion


def torsion_components(nav: NavigationData, x, y) -> np.ndarray:
    """t[..., k, i, j] from the closed-form expansion

        t^k_ij = F_{y^j} (nabla_i W)^k - F_{y^i} (nabla_j W)^k,

    (nabla the metric's covariant derivative). Antisymmetric in (i, j) and
    identically zero exactly when the wind is parallel.
    """
    _, fy = randers_value_and_grad(nav, x, y)
    m = wind_covariant_jacobian(nav, x)
    # t[..., k, i, j] = fy_j m_ki - fy_i m_kj
    return (fy[..., None, None, :] * m[..., :, :, None]
            - fy[..., None, :, None] * m[..., :, None, :])


def torsion_from_duals(nav: NavigationData, x, y) -> np.ndarray:
    """t[..., k, i, j] = dGamma^k_j/dy^i - dGamma^k_i/dy^j via dual sweeps;
    the independent route used to cross-check torsion_components."""
    dg = gamma_fiber_jacobian(nav, x, y)  # axes [..., deriv dir, k, lower]
    term1 = np.einsum("...ikj->...kij", dg)  # dGamma^k_j / dy^i
    term2 = np.einsum("...jki->...kij", dg)  # dGamma^k_i / dy^j
    return term1 - term2


def torsion(nav: NavigationData, s: TangentSample) -> TorsionEval:
    if not np.any(s.y):
        raise ZeroVector("torsion needs a nonzero fiber vector")
    return TorsionEval(s, torsion_components(nav, s.x, s.y))


# ---------------------------------------------------------------------------
# horizontal lifts


def horizontal_lift(nav: NavigationData, s: TangentSample, vec) -> np.ndarray:
    """Horizontal lift of a base vector at a tangent sample, as the 2n
    components (vec, -Gamma(x, y) . vec)."""
    vec = np.asarray(vec, dtype=float)
    g = gamma_matrix(nav, s.x, s.y)
    vert = -np.einsum("ki,i->k", g, vec)
    return np.concatenate([vec, vert])


def riemann_horizontal_lift(metric: MetricField, s: TangentSample, vec) -> np.ndarray:
    """Linear-connection lift: vertical part -A^k_is y^s vec^i."""
    vec = np.asarray(vec, dtype=float)
    a = christoffel(metric, s.x)
    vert = -np.einsum("kis,s,i->k", a, s.y, vec)
    return np.concatenate([vec, vert])


# ---------------------------------------------------------------------------
# covariant derivatives of vector fields


def riemann_covariant_derivative(metric: MetricField, xfield: VectorField,
                                 yfield: VectorField, x) -> np.ndarray:
    """(nabla_X Y)^k = X^i (dY^k/dx^i + A^k_is Y^s) for the metric connection."""
    x = np.asarray(x, dtype=float)
    a = christoffel(metric, x)
    xv = xfield.value(x)
    yv = yfield.value(x)
    jy = yfield.jacobian(x)
    return np.einsum("...ki,...i->...k", jy, xv) \
        + np.einsum("...kis,...s,...i->...k", a, yv, xv)


def covariant_derivative(nav: NavigationData, xfield: VectorField,
                         yfield: VectorField, x) -> np.ndarray:
    """Covariant derivative for the nonlinear connection:

        nabla_X Y = nabla^h_X Y - F(Y) nabla^h_X W.

    Well defined also where Y vanishes (F(0) = 0 kills the correction).
    """
    x = np.asarray(x, dtype=float)
    base = riemann_covariant_derivative(nav.metric, xfield, yfield, x)
    wind_term = riemann_covariant_derivative(nav.metric, xfield, nav.wind, x)
    f = randers_value(nav, x, yfield.value(x))
    return base - f[..., None] * wind_term


def covariant_derivative_via_connection(nav: NavigationData, xfield: VectorField,
                                        yfield: VectorField, x) -> np.ndarray:
    """Same derivative assembled from the connection coefficients,
    X^i (dY^k/dx^i + Gamma^k_i(x, Y)); used as a consistency route."""
    x = np.asarray(x, dtype=float)
    xv = xfield.value(x)
    yv = yfield.value(x)
    jy = yfield.jacobian(x)
    g = gamma_matrix(nav, x, yv)
    return np.einsum("...ki,...i->...k", jy, xv) \
        + np.einsum("...ki,...i->...k", g, xv)
