"""Loop transport, the linear/nonlinear holonomy correspondence, and the
numeric rank of the spray's holonomy distribution.

The wind transport around a closed loop is a nonlinear, norm-preserving,
1-homogeneous map of the tangent space at the base point. It is conjugate
to the metric holonomy through wind translation of the unit ball: with H
the metric transport matrix of the loop and W the wind at the base,

    hol(V) = H V - F(V) (H W - W),

and composition of loops multiplies the matrices, so the nonlinear holonomy
inherits the group structure of the linear one.

The rank computation works with the horizontal distribution of the spray's
own nonlinear connection, dG^k/dy^i. The transport connection is of no use
here: its transport is conjugate to the metric one, so on a flat metric its
horizontal brackets vanish identically no matter the wind. The spray
connection picks up the torsion term and its iterated brackets can fill all
of TTM, which is the obstruction probed by the rank report.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import numkernel as nk
from .errors import DegenerateWind, NotClosed, ZeroVector
from .geometry import (NavigationData, TangentSample, indicatrix_points,
                       randers_value)
from .sprays import spray_connection_matrix
from .transport import (Curve, natural_transport_many, riemann_transport_many,
                        riemann_transport_matrix)


@dataclass
class HolonomyElement:
    """Loop transport sampled extensionally on probe vectors.

    The natural action has no finite parametrization (it is nonlinear), so
    the element stores probe/image pairs; norms holds the relevant invariant
    (navigation norm for natural mode, metric norm for riemann mode) before
    and after.
    """

    base: np.ndarray
    mode: str
    probes: np.ndarray
    transported: np.ndarray
    norms_in: np.ndarray
    norms_out: np.ndarray
    dt: float

    @property
    def norm_drift(self) -> float:
        return float(np.abs(self.norms_out - self.norms_in).max())

    def as_dict(self) -> dict:
        return {
            "base": [float(v) for v in self.base],
            "mode": self.mode,
            "dt": float(self.dt),
            "probes_in": self.probes.tolist(),
            "probes_out": self.transported.tolist(),
            "norms_in": self.norms_in.tolist(),
            "norms_out": self.norms_out.tolist(),
            "norm_drift": self.norm_drift,
        }


def _require_closed(loop: Curve) -> None:
    if not loop.is_closed():
        p, q = loop.point(0.0), loop.point(1.0)
        raise NotClosed(
            f"loop endpoints differ: {p.tolist()} vs {q.tolist()}")


def loop_holonomy(nav: NavigationData, loop: Curve,
                  probes: Optional[np.ndarray] = None, mode: str = "natural",
                  n_probes: int = 24, dt: float = 1e-3,
                  method: str = "ode") -> HolonomyElement:
    """Transport probe vectors around a closed loop.

    Default probes are norm-unit vectors at the base point. Natural mode
    keeps their navigation norms (up to integration error); riemann mode is
    linear and keeps metric norms.
    """
    _require_closed(loop)
    base = loop.point(0.0)
    if probes is None:
        probes = indicatrix_points(nav, base, n_probes)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if not np.all(np.any(probes != 0.0, axis=1)):
        raise ZeroVector("holonomy probes must be nonzero")
    loops = [loop] * len(probes)
    if mode == "natural":
        out = natural_transport_many(nav, loops, probes, method=method, dt=dt)
        nin = randers_value(nav, base, probes)
        nout = randers_value(nav, base, out)
    elif mode == "riemann":
        out = riemann_transport_many(nav.metric, loops, probes, dt, nav.chart)
        nin = nav.h_norm(base, probes)
        nout = nav.h_norm(base, out)
    else:
        raise ValueError("mode must be 'natural' or 'riemann'")
    return HolonomyElement(base=base, mode=mode, probes=probes,
                           transported=out, norms_in=nin, norms_out=nout,
                           dt=dt)


def riemann_holonomy_matrix(nav: NavigationData, loop: Curve,
                            dt: float = 1e-3) -> np.ndarray:
    """Matrix of the metric parallel transport around a closed loop."""
    _require_closed(loop)
    return riemann_transport_matrix(nav.metric, loop, dt, nav.chart)


def _wind_gap(nav: NavigationData, base: np.ndarray):
    w = nav.wind.value(base)
    fw = float(randers_value(nav, base, w)) if np.any(w) else 0.0
    if fw >= 1.0:
        raise DegenerateWind(
            f"navigation norm of the wind reaches 1 at {base.tolist()}")
    return w, fw


def correspondence(nav: NavigationData, matrix: np.ndarray, base,
                   vectors: np.ndarray) -> np.ndarray:
    """Nonlinear holonomy action predicted from a metric holonomy matrix:
    hol(V) = H V - F(V) (H W - W) with W the wind at the base point."""
    base = np.asarray(base, dtype=float)
    w, _ = _wind_gap(nav, base)
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    f = randers_value(nav, base, vectors)
    shift = matrix @ w - w
    return vectors @ matrix.T - f[:, None] * shift[None, :]


def correspondence_inverse(nav: NavigationData, base, action: Callable,
                           vectors: np.ndarray) -> np.ndarray:
    """Recover the linear holonomy action from the nonlinear one:

        H V = hol(V) + F(V) (hol(W) - W) / (1 - F(W)),

    where action maps a batch of vectors to their transported images."""
    base = np.asarray(base, dtype=float)
    w, fw = _wind_gap(nav, base)
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    f = randers_value(nav, base, vectors)
    shift = (np.asarray(action(w[None, :]))[0] - w) / (1.0 - fw)
    return np.asarray(action(vectors)) + f[:, None] * shift[None, :]


def rotation_angle(matrix: np.ndarray) -> float:
    """Signed rotation angle of a 2x2 transport matrix (its orthogonal
    polar factor), in (-pi, pi]."""
    if matrix.shape != (2, 2):
        raise ValueError("rotation_angle needs a 2x2 matrix")
    u, _, vt = np.linalg.svd(matrix)
    q = u @ vt
    return float(np.arctan2(q[1, 0], q[0, 0]))


# ---------------------------------------------------------------------------
# holonomy distribution rank


@dataclass
class RankReport:
    at: TangentSample
    generated_vectors: np.ndarray
    rank: int
    depth: int

    def as_dict(self) -> dict:
        return {"x": [float(v) for v in self.at.x],
                "y": [float(v) for v in self.at.y],
                "rank": int(self.rank),
                "depth": int(self.depth),
                "n_vectors": int(len(self.generated_vectors))}


def _spray_horizontal_fields(nav: NavigationData) -> list:
    """Coordinate horizontal fields of the spray connection,
    z = (x, y) -> e_i - (dG/dy)(x, y) e_i vertically."""
    n = nav.dim

    def make(i):
        def fld(z):
            g = spray_connection_matrix(nav, z[:n], z[n:])
            out = np.zeros(2 * n)
            out[i] = 1.0
            out[n:] = -g[:, i]
            return out
        return fld
    return [make(i) for i in range(n)]


def lie_bracket(xf: Callable, yf: Callable, step: float = 1e-4) -> Callable:
    """Lie bracket of two vector fields on R^m by central differences,
    [X, Y](z) = DY(z) X(z) - DX(z) Y(z); the step is scaled down for large
    direction vectors."""

    def fld(z):
        xv, yv = xf(z), yf(z)

        def ddir(f, u):
            s = step / max(1.0, float(np.linalg.norm(u)))
            return (f(z + s * u) - f(z - s * u)) / (2.0 * s)
        return ddir(yf, xv) - ddir(xf, yv)
    return fld


def holonomy_distribution_rank(nav: NavigationData, s: TangentSample,
                               depth: int = 3, step: float = 1e-4,
                               tol: float = 1e-7) -> RankReport:
    """Rank at (x, y) of the span of the spray-connection horizontal fields
    together with their iterated Lie brackets up to the given depth.

    Rank n means the brackets stay horizontal (integrable distribution);
    rank 2n means they fill the whole slit tangent bundle, which rules out
    any nonconstant function invariant under the loop transports.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not np.any(s.y):
        raise ZeroVector("the horizontal distribution lives over nonzero y")
    z = np.concatenate([s.x, s.y])
    base = _spray_horizontal_fields(nav)
    generations = [base]
    for _ in range(depth - 1):
        prev = generations[-1]
        nxt = []
        for i, hf in enumerate(base):
            for j, g in enumerate(prev):
                if prev is base and j <= i:
                    continue
                nxt.append(lie_bracket(hf, g, step))
        generations.append(nxt)
    vectors = np.stack([f(z) for gen in generations for f in gen])
    rank = nk.numeric_rank(vectors, tol)
    return RankReport(at=s, generated_vectors=vectors, rank=rank, depth=depth)


def distribution_rank_survey(nav: NavigationData, n_samples: int = 20,
                             depth: int = 3, step: float = 1e-4,
                             tol: float = 1e-7,
                             rng: Optional[np.random.Generator] = None) -> list:
    """Rank reports at a spread of interior points with h-unit directions."""
    n = nav.dim
    xs = nav.chart.sample_interior(n_samples, margin=0.1)
    rng = rng or np.random.default_rng(7)
    dirs = rng.normal(size=(n_samples, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return [holonomy_distribution_rank(nav, TangentSample(x, y), depth,
                                       step, tol)
            for x, y in zip(xs, dirs)]
