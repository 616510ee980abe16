"""Charts, metric and wind fields, Randers norms, and validation.

Everything here is vectorized over leading batch axes: a point argument may
be a single (n,) vector or any (..., n) stack, and results keep the leading
shape. That convention is what makes transports and grid sweeps cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import exprlang, numkernel as nk
from .errors import GradientAtZero

# ---------------------------------------------------------------------------
# chart domains


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if np.any(self.hi <= self.lo):
            raise ValueError("box needs lo < hi componentwise")


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("ball needs a positive radius")


@dataclass(frozen=True)
class Chart:
    """A single coordinate chart: dimension plus an open box or ball domain."""

    dim: int
    domain: Box | Ball

    def __post_init__(self):
        if not 2 <= self.dim <= 4:
            raise ValueError("supported dimensions are 2, 3, 4")

    def contains(self, x, margin: float = 0.0):
        """Strict interior test; margin shrinks the domain toward its center."""
        x = np.asarray(x, dtype=float)
        if isinstance(self.domain, Ball):
            r = np.linalg.norm(x - self.domain.center, axis=-1)
            return r < self.domain.radius * (1.0 - margin)
        half = 0.5 * (self.domain.hi - self.domain.lo) * (1.0 - margin)
        center = 0.5 * (self.domain.hi + self.domain.lo)
        return np.all(np.abs(x - center) < half, axis=-1)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(self.domain, Ball):
            return (self.domain.center - self.domain.radius,
                    self.domain.center + self.domain.radius)
        return self.domain.lo, self.domain.hi

    def sample_interior(self, count: int, margin: float = 0.0) -> np.ndarray:
        """Deterministic quasi-random interior points (Kronecker sequence)."""
        lo, hi = self.bounding_box()
        alpha = _kronecker_alphas(self.dim)
        points = np.empty((count, self.dim))
        have, k = 0, 0
        while have < count:
            block = max(count - have, 64)
            ks = np.arange(k, k + block)[:, None]
            u = np.mod(0.5 + ks * alpha[None, :], 1.0)
            cand = lo + u * (hi - lo)
            keep = cand[self.contains(cand, margin)]
            take = min(len(keep), count - have)
            points[have:have + take] = keep[:take]
            have += take
            k += block
        return points

    def grid(self, per_axis: int, margin: float = 0.02) -> np.ndarray:
        """Cartesian product grid clipped to the (shrunk) domain interior."""
        lo, hi = self.bounding_box()
        # endpoints sit strictly inside the shrunk open domain, not on it
        pad = (0.5 * margin + 1e-9) * (hi - lo)
        axes = [np.linspace(lo[i] + pad[i], hi[i] - pad[i], per_axis)
                for i in range(self.dim)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return mesh[self.contains(mesh, margin)]


def _kronecker_alphas(d: int) -> np.ndarray:
    # generalized golden-ratio lattice: phi solves phi^(d+1) = phi + 1
    phi = 2.0
    for _ in range(64):
        phi = (1.0 + phi) ** (1.0 / (d + 1))
    return np.array([phi ** -(j + 1) for j in range(d)])


# ---------------------------------------------------------------------------
# expression-backed fields


class VectorField:
    """A vector field with one expression per component.

    Serves winds, covariant-derivative arguments, and test fields alike.
    """

    def __init__(self, components: Sequence[exprlang.Expression]):
        self.components = tuple(components)
        self.dim = len(self.components)

    @classmethod
    def from_strings(cls, exprs: Sequence[str], n: int) -> "VectorField":
        return cls([exprlang.parse(s, n) for s in exprs])

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (self.dim,))
        for k, comp in enumerate(self.components):
            out[..., k] = exprlang.evaluate(comp, x)
        return out

    def jacobian(self, x) -> np.ndarray:
        """J[..., k, i] = d(component k)/d(x^i), via dual evaluation."""
        x = np.asarray(x, dtype=float)
        n = self.dim
        out = np.empty(x.shape[:-1] + (n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            for k, comp in enumerate(self.components):
                _, out[..., k, i] = exprlang.evaluate_dual(comp, x, e)
        return out

    def value_and_derivative(self, x, direction) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        val = np.empty(x.shape[:-1] + (self.dim,))
        der = np.empty_like(val)
        for k, comp in enumerate(self.components):
            val[..., k], der[..., k] = exprlang.evaluate_dual(comp, x, direction)
        return val, der


class MetricField:
    """Symmetric metric field h_ij(x) given by upper-triangle expressions."""

    def __init__(self, upper: Sequence[Sequence[exprlang.Expression]]):
        n = len(upper)
        for i, row in enumerate(upper):
            if len(row) != n - i:
                raise ValueError("upper triangle rows must shrink by one")
        self.dim = n
        self.upper = tuple(tuple(row) for row in upper)

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], n: int) -> "MetricField":
        return cls([[exprlang.parse(s, n) for s in row] for row in rows])

    def _pairs(self):
        for i in range(self.dim):
            for j in range(i, self.dim):
                yield i, j, self.upper[i][j - i]

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (self.dim, self.dim))
        for i, j, expr in self._pairs():
            v = exprlang.evaluate(expr, x)
            out[..., i, j] = v
            out[..., j, i] = v
        return out

    def derivatives(self, x) -> np.ndarray:
        """dh[..., k, i, j] = d(h_ij)/d(x^k), via dual evaluation."""
        x = np.asarray(x, dtype=float)
        n = self.dim
        out = np.empty(x.shape[:-1] + (n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            for i, j, expr in self._pairs():
                _, d = exprlang.evaluate_dual(expr, x, e)
                out[..., k, i, j] = d
                out[..., k, j, i] = d
        return out

    def value_and_derivative(self, x, direction) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        n = self.dim
        val = np.empty(x.shape[:-1] + (n, n))
        der = np.empty_like(val)
        for i, j, expr in self._pairs():
            v, d = exprlang.evaluate_dual(expr, x, direction)
            val[..., i, j] = val[..., j, i] = v
            der[..., i, j] = der[..., j, i] = d
        return val, der


@dataclass(frozen=True)
class TangentSample:
    """A base point with a fiber vector attached."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.x.ndim != 1 or self.x.shape != self.y.shape:
            raise ValueError("base point and fiber vector must be 1-d and equal length")


@dataclass(frozen=True)
class NavigationData:
    """A metric field plus a wind field on one chart; the wind must stay
    h-shorter than 1 for the induced norm to be positive (checked by
    validate(), not the constructor)."""

    chart: Chart
    metric: MetricField
    wind: VectorField

    @property
    def dim(self) -> int:
        return self.chart.dim

    def metric_value(self, x) -> np.ndarray:
        return self.metric.value(x)

    def wind_value(self, x) -> np.ndarray:
        return self.wind.value(x)

    def wind_norm(self, x) -> np.ndarray:
        h = self.metric.value(x)
        w = self.wind.value(x)
        return np.sqrt(np.einsum("...ij,...i,...j->...", h, w, w))

    def lambda_value(self, x) -> np.ndarray:
        h = self.metric.value(x)
        w = self.wind.value(x)
        return 1.0 - np.einsum("...ij,...i,...j->...", h, w, w)

    def inner(self, x, u, v) -> np.ndarray:
        h = self.metric.value(x)
        return np.einsum("...ij,...i,...j->...", h, np.asarray(u, float), np.asarray(v, float))

    def h_norm(self, x, v) -> np.ndarray:
        return np.sqrt(self.inner(x, v, v))


# ---------------------------------------------------------------------------
# Christoffel symbols and wind derivatives


def christoffel(metric: MetricField, x) -> np.ndarray:
    """Levi-Civita coefficients A[..., k, i, j] of the metric field.

    A^k_ij = h^kl (d_i h_jl + d_j h_il - d_l h_ij) / 2, symmetric in (i, j).
    """
    h = metric.value(x)
    hinv = nk.spd_inverse(h)
    dh = metric.derivatives(x)
    # T[..., l, i, j] = d_i h_jl + d_j h_il - d_l h_ij
    t = (np.einsum("...ijl->...lij", dh)
         + np.einsum("...jil->...lij", dh)
         - dh)
    return 0.5 * np.einsum("...kl,...lij->...kij", hinv, t)


def wind_covariant_jacobian(nav: NavigationData, x) -> np.ndarray:
    """M[..., k, i] = (covariant derivative of the wind along d/dx^i)^k."""
    a = christoffel(nav.metric, x)
    w = nav.wind.value(x)
    jw = nav.wind.jacobian(x)
    return jw + np.einsum("...kis,...s->...ki", a, w)


# ---------------------------------------------------------------------------
# the navigation (Randers-type) norm


def _norm_from_parts(wy, yy, lam):
    """F from the scalar pieces <y,W>_h, <y,y>_h, 1 - |W|_h^2.

    Generic over floats, arrays, and duals: this is the single code path for
    all derivatives of F.
    """
    q = wy * wy + lam * yy
    return (nk.sqrt(q) - wy) / lam


def _parts(nav: NavigationData, x, y):
    h = nav.metric.value(x)
    w = nav.wind.value(x)
    lam = 1.0 - np.einsum("...ij,...i,...j->...", h, w, w)
    hy = np.einsum("...ij,...j->...i", h, y)
    hw = np.einsum("...ij,...j->...i", h, w)
    wy = np.einsum("...i,...i->...", y, hw)
    yy = np.einsum("...i,...i->...", y, hy)
    return h, w, lam, hy, hw, wy, yy


def randers_value(nav: NavigationData, x, y) -> np.ndarray:
    """Norm F(x, y) of the navigation data; F(x, 0) = 0."""
    y = np.asarray(y, dtype=float)
    _, _, lam, _, _, wy, yy = _parts(nav, x, y)
    return np.asarray(_norm_from_parts(wy, yy, lam))


def randers_value_and_grad(nav: NavigationData, x, y) -> tuple[np.ndarray, np.ndarray]:
    """F and its fiber gradient dF/dy^i; undefined (raises) at y = 0."""
    y = np.asarray(y, dtype=float)
    if np.any(np.all(y == 0.0, axis=-1)):
        raise GradientAtZero("norm gradient requested at the zero vector")
    h, w, lam, hy, hw, wy, yy = _parts(nav, x, y)
    n = y.shape[-1]
    value = np.asarray(_norm_from_parts(wy, yy, lam))
    grad = np.empty_like(hy)
    for i in range(n):
        wy_d = nk.Dual(wy, hw[..., i])
        yy_d = nk.Dual(yy, 2.0 * hy[..., i])
        grad[..., i] = _norm_from_parts(wy_d, yy_d, lam).dot
    return value, grad


def randers_grad_x(nav: NavigationData, x, y) -> np.ndarray:
    """Base-point gradient dF/dx^i at fixed fiber vector y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    out = np.empty(np.broadcast_shapes(x.shape, y.shape)[:-1] + (n,))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        hv, hd = nav.metric.value_and_derivative(x, e)
        wv, wd = nav.wind.value_and_derivative(x, e)
        lam = nk.Dual(1.0 - np.einsum("...ij,...i,...j->...", hv, wv, wv),
                      -(np.einsum("...ij,...i,...j->...", hd, wv, wv)
                        + 2.0 * np.einsum("...ij,...i,...j->...", hv, wd, wv)))
        wy = nk.Dual(np.einsum("...ij,...i,...j->...", hv, y, wv),
                     np.einsum("...ij,...i,...j->...", hd, y, wv)
                     + np.einsum("...ij,...i,...j->...", hv, y, wd))
        yy = nk.Dual(np.einsum("...ij,...i,...j->...", hv, y, y),
                     np.einsum("...ij,...i,...j->...", hd, y, y))
        f_d = _norm_from_parts(wy, yy, lam)
        out[..., i] = f_d.dot
    return out


def randers_norm(nav: NavigationData, s: TangentSample, gradient: bool = False):
    """Pointwise norm evaluation; with gradient=True also returns dF/dy."""
    if gradient:
        f, g = randers_value_and_grad(nav, s.x, s.y)
        return float(f), g
    return float(randers_value(nav, s.x, s.y))


def randers_alpha_beta(nav: NavigationData, x) -> tuple[nk.SymMatrix, np.ndarray]:
    """Riemann-plus-one-form presentation of the same norm at a point.

    beta_i = -(hW)_i / lam, alpha_ij = h_ij / lam + beta_i beta_j, and then
    sqrt(alpha(y,y)) + beta(y) reproduces F(x, y).
    """
    x = np.asarray(x, dtype=float)
    h = nav.metric.value(x)
    w = nav.wind.value(x)
    lam = 1.0 - np.einsum("...ij,...i,...j->...", h, w, w)
    hw = np.einsum("...ij,...j->...i", h, w)
    beta = -hw / lam[..., None]
    alpha = h / lam[..., None, None] + beta[..., :, None] * beta[..., None, :]
    if x.ndim == 1:
        return nk.SymMatrix(alpha), beta
    return alpha, beta


def indicatrix_points(nav: NavigationData, x, count: int = 24,
                      rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """F-unit vectors at x: the h-unit sphere translated by the wind.

    In dimension 2 the directions are an even angle grid; otherwise they are
    drawn from rng (seeded by the caller) and h-normalized.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("indicatrix_points expects a single base point")
    n = nav.dim
    if n == 2:
        ang = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        rng = rng or np.random.default_rng(0)
        dirs = rng.normal(size=(count, n))
    h = nav.metric.value(x)
    norms = np.sqrt(np.einsum("ij,ki,kj->k", h, dirs, dirs))
    unit = dirs / norms[:, None]
    return unit + nav.wind.value(x)[None, :]


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    passed: bool
    n_points: int
    margin: float
    min_metric_eigenvalue: float
    max_wind_norm: float
    min_lambda: float
    failures: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "n_points": int(self.n_points),
            "margin": float(self.margin),
            "min_metric_eigenvalue": float(self.min_metric_eigenvalue),
            "max_wind_norm": float(self.max_wind_norm),
            "min_lambda": float(self.min_lambda),
            "failures": self.failures,
        }


def validate(nav: NavigationData, points: Optional[np.ndarray] = None,
             n_points: int = 10_000, margin: float = 1e-6) -> ValidationReport:
    """Sample the chart and check positivity of h and the wind bound.

    The wind must satisfy |W|_h < 1 - margin at every sampled point; the
    report carries witnesses for every violation kind found.
    """
    if points is None:
        points = nav.chart.sample_interior(n_points)
    points = np.asarray(points, dtype=float)
    h = nav.metric.value(points)
    eigs = np.linalg.eigvalsh(h)
    min_eig = float(eigs.min())
    w = nav.wind.value(points)
    wnorm2 = np.einsum("...ij,...i,...j->...", h, w, w)
    wnorm = np.sqrt(np.maximum(wnorm2, 0.0))
    failures = []
    bad_eig = np.nonzero(eigs.min(axis=-1) <= 0.0)[0]
    if bad_eig.size:
        i = int(bad_eig[0])
        failures.append({"kind": "metric_not_positive", "point": points[i].tolist(),
                         "value": float(eigs[i].min())})
    bad_wind = np.nonzero(wnorm >= 1.0 - margin)[0]
    if bad_wind.size:
        i = int(bad_wind[0])
        failures.append({"kind": "wind_too_strong", "point": points[i].tolist(),
                         "value": float(wnorm[i])})
    return ValidationReport(
        passed=not failures,
        n_points=len(points),
        margin=margin,
        min_metric_eigenvalue=min_eig,
        max_wind_norm=float(wnorm.max()),
        min_lambda=float((1.0 - wnorm2).min()),
        failures=failures,
    )
