"""Sampling-based classification of navigation data.

Each test certifies "numerically indistinguishable from" a special class on
an explicit grid with an explicit tolerance, never a symbolic fact:

  wind_parallel   sup |covariant wind derivative| < tol; equivalent to
                  vanishing torsion and to the transport being metric
                  (Berwald), so those three verdicts must agree;
  wagner          h-length of the wind constant across the grid;
  concircular     covariant wind derivative is a scalar multiple of the
                  identity pointwise; equivalent to the natural spray
                  coinciding with the variational one;
  isotropic_S     symmetric part of the lowered wind derivative is a scalar
                  multiple of the metric pointwise.

A decisive disagreement between equivalent verdicts raises
InconsistentVerdicts: the underlying equivalences are theorems, so a
violation means an implementation bug, not interesting geometry.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numkernel as nk
from .connection import torsion_components
from .errors import InconsistentVerdicts
from .geometry import NavigationData, wind_covariant_jacobian
from .sprays import ComparisonReport, _rs_arrays, compare_sprays


@dataclass
class Verdict:
    name: str
    passed: bool
    residual: float
    tol: float
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"passed": bool(self.passed), "residual": float(self.residual),
               "tol": float(self.tol)}
        out.update({k: float(v) for k, v in self.detail.items()})
        return out


def _default_grid(nav: NavigationData, grid, per_axis: int) -> np.ndarray:
    if grid is None:
        grid = nav.chart.grid(per_axis, margin=0.05)
    return np.asarray(grid, dtype=float)


def _fiber_directions(nav: NavigationData, n_dirs: int) -> np.ndarray:
    if nav.dim == 2:
        ang = np.linspace(0.0, 2.0 * np.pi, n_dirs, endpoint=False)
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    rng = np.random.default_rng(11)
    dirs = rng.normal(size=(n_dirs, nav.dim))
    return dirs / np.linalg.norm(dirs, axis=1)[:, None]


def wind_parallel_test(nav: NavigationData, grid=None, tol: float = 1e-8,
                       per_axis: int = 20) -> Verdict:
    """Sup of |entries| of the covariant wind derivative over the grid."""
    grid = _default_grid(nav, grid, per_axis)
    m = wind_covariant_jacobian(nav, grid)
    resid = float(np.abs(m).max())
    return Verdict("wind_parallel", resid < tol, resid, tol)


def torsion_vanishing_test(nav: NavigationData, grid=None, tol: float = 1e-8,
                           per_axis: int = 20, n_dirs: int = 8) -> Verdict:
    """Sup of |torsion components| over grid points and fiber directions."""
    grid = _default_grid(nav, grid, per_axis)
    dirs = _fiber_directions(nav, n_dirs)
    xs = np.broadcast_to(grid[:, None, :], grid.shape[:1] + dirs.shape)
    ys = np.broadcast_to(dirs[None, :, :], xs.shape)
    t = torsion_components(nav, xs, ys)
    resid = float(np.abs(t).max())
    return Verdict("torsion_vanishes", resid < tol, resid, tol)


def wagner_test(nav: NavigationData, grid=None, tol: float = 1e-8,
                per_axis: int = 20) -> Verdict:
    """Spread (max - min) of the h-length of the wind over the grid."""
    grid = _default_grid(nav, grid, per_axis)
    norms = nav.wind_norm(grid)
    resid = float(norms.max() - norms.min())
    return Verdict("wagner", resid < tol, resid, tol,
                   detail={"norm_min": norms.min(), "norm_max": norms.max()})


def concircular_test(nav: NavigationData, grid=None, tol: float = 1e-8,
                     per_axis: int = 20) -> Verdict:
    """Fit of the covariant wind derivative to a pointwise multiple of the
    identity; the factor estimate is trace/n, exact inside the class."""
    grid = _default_grid(nav, grid, per_axis)
    m = wind_covariant_jacobian(nav, grid)
    n = nav.dim
    phi = np.einsum("...kk->...", m) / n
    dev = m - phi[..., None, None] * np.eye(n)
    resid = float(np.abs(dev).max())
    return Verdict("concircular", resid < tol, resid, tol,
                   detail={"phi_min": phi.min(), "phi_max": phi.max(),
                           "phi_mean": phi.mean()})


def isotropic_s_test(nav: NavigationData, grid=None, tol: float = 1e-8,
                     per_axis: int = 20) -> Verdict:
    """Fit of the symmetric lowered wind derivative to a pointwise multiple
    of the metric."""
    grid = _default_grid(nav, grid, per_axis)
    h, hinv, _, _, r, _ = _rs_arrays(nav, grid)
    phi = np.einsum("...ij,...ij->...", hinv, r) / nav.dim
    dev = r - phi[..., None, None] * h
    resid = float(np.abs(dev).max())
    return Verdict("isotropic_S", resid < tol, resid, tol,
                   detail={"phi_min": phi.min(), "phi_max": phi.max(),
                           "phi_mean": phi.mean()})


def wind_integral_curve(nav: NavigationData, x0, time_span: float,
                        dt: float = 1e-3):
    """Integrate the wind flow xd = W(x); stops early at the chart edge.
    Returns (ts, xs) with xs sampled every step."""
    x = np.asarray(x0, dtype=float)
    if time_span <= 0 or dt <= 0:
        raise ValueError("wind flow needs positive time_span and dt")
    steps = max(1, int(round(time_span / dt)))
    xs = np.empty((steps + 1, x.shape[-1]))
    xs[0] = x
    last = steps
    for j in range(steps):
        x = nk.rk4_step(lambda t, s: nav.wind.value(s), x, j * dt, dt)
        if not nav.chart.contains(x):
            last = j
            break
        xs[j + 1] = x
    return dt * np.arange(last + 1), xs[:last + 1]


# ---------------------------------------------------------------------------
# aggregate report


@dataclass
class ClassificationReport:
    wind_parallel: Verdict
    torsion_vanishes: Verdict
    berwald: Verdict
    wagner: Verdict
    concircular: Verdict
    isotropic_S: Verdict
    comparison: ComparisonReport
    n_grid: int

    def as_dict(self) -> dict:
        return {
            "n_grid": int(self.n_grid),
            "wind_parallel": self.wind_parallel.as_dict(),
            "torsion_vanishes": self.torsion_vanishes.as_dict(),
            "berwald": self.berwald.as_dict(),
            "wagner": self.wagner.as_dict(),
            "concircular": self.concircular.as_dict(),
            "isotropic_S": self.isotropic_S.as_dict(),
            "sprays_coincide": bool(self.comparison.sprays_coincide),
            "projectively_riemannian":
                bool(self.comparison.projectively_riemannian),
            "spray_comparison": self.comparison.as_dict(),
        }

    def summary_lines(self) -> list:
        flags = [
            ("wind_parallel", self.wind_parallel),
            ("torsion_vanishes", self.torsion_vanishes),
            ("berwald (= wind_parallel)", self.berwald),
            ("wagner", self.wagner),
            ("concircular", self.concircular),
            ("isotropic_S", self.isotropic_S),
        ]
        lines = [f"classified on {self.n_grid} grid points "
                 "(verdicts mean: numerically indistinguishable from the "
                 "class at the stated tolerance)"]
        for label, v in flags:
            lines.append(f"  {label:28s} {str(v.passed):5s} "
                         f"residual {v.residual:.3e} (tol {v.tol:.1e})")
        lines.append(f"  {'sprays_coincide':28s} "
                     f"{str(self.comparison.sprays_coincide):5s} "
                     f"sup {self.comparison.sup_natural_vs_randers:.3e}")
        lines.append(f"  {'projectively_riemannian':28s} "
                     f"{str(self.comparison.projectively_riemannian):5s} "
                     f"residual {self.comparison.projective_residual:.3e}")
        return lines


def _decisively(verdict_residual: float, tol: float):
    """(clearly in class, clearly out of class) with a factor-10 slack band
    in between where no contradiction is declared."""
    return verdict_residual < 0.1 * tol, verdict_residual > 10.0 * tol


def classification_report(nav: NavigationData, grid=None, per_axis: int = 20,
                          tol: float = 1e-8, n_dirs: int = 8,
                          comparison: Optional[ComparisonReport] = None) -> ClassificationReport:
    """Run every class test plus the spray comparison and cross-check the
    equivalences the tests are supposed to observe."""
    grid = _default_grid(nav, grid, per_axis)
    wp = wind_parallel_test(nav, grid, tol)
    tv = torsion_vanishing_test(nav, grid, tol, n_dirs=n_dirs)
    wg = wagner_test(nav, grid, tol)
    cc = concircular_test(nav, grid, tol)
    iso = isotropic_s_test(nav, grid, tol)
    if comparison is None:
        comparison = compare_sprays(nav, points=grid)
    bw = Verdict("berwald", wp.passed, wp.residual, wp.tol,
                 detail=dict(wp.detail))

    wp_in, wp_out = _decisively(wp.residual, wp.tol)
    tv_in, tv_out = _decisively(tv.residual, tv.tol)
    if (wp_in and tv_out) or (tv_in and wp_out):
        raise InconsistentVerdicts(
            "torsion_vanishes and wind_parallel disagree decisively: "
            f"residuals {tv.residual:.3e} vs {wp.residual:.3e}")
    cc_in, cc_out = _decisively(cc.residual, cc.tol)
    sc_in, sc_out = _decisively(comparison.sup_natural_vs_randers,
                                comparison.tol_coincide)
    if (cc_in and sc_out) or (sc_in and cc_out):
        raise InconsistentVerdicts(
            "concircular and sprays_coincide disagree decisively: "
            f"residuals {cc.residual:.3e} vs "
            f"{comparison.sup_natural_vs_randers:.3e}")

    return ClassificationReport(wind_parallel=wp, torsion_vanishes=tv,
                                berwald=bw, wagner=wg, concircular=cc,
                                isotropic_S=iso, comparison=comparison,
                                n_grid=len(grid))
