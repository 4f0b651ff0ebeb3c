"""Immersed charts: induced metrics, connection and intrinsic curvature.

A submanifold enters the engine as a chart map into an ambient model's
coordinates.  All differentiation happens through order-3 Taylor jets at a
single base point, from which the induced metric is exact to order 2, the
Christoffel symbols to order 1, and the curvature tensor at order 0 --
enough for every intrinsic quantity reported downstream.

A metric can also be handed over directly in chart coordinates
(`MetricChart`) when there is no ambient picture, e.g. model-space metrics
or conformally rescaled ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import spacetime, taylor
from .nullcone import NullconeSpec, require_on_cone
from .spacetime import AmbientModel
from .taylor import Series, SmoothMap

JET_ORDER = 3

# induced metrics must be Riemannian; eigenvalues below this are a signature defect
_EIG_FLOOR = -1e-12


class MetricSignatureError(ValueError):
    """The induced metric failed the positive-definite eigenvalue test."""


@dataclass(frozen=True)
class Immersion:
    """A chart-parametrized spacelike submanifold of an ambient model.

    `map` sends chart coordinates to ambient coordinates; its output arity
    must match the model.  `target_cone`, when set, declares that the image
    must lie on that null hypersurface, which is enforced whenever a chart
    point is evaluated.  `chart_domain` is a per-axis (low, high) box;
    defaults to the map's own declared domain.
    """

    map: SmoothMap
    model: AmbientModel
    target_cone: Optional[NullconeSpec] = None
    chart_domain: Optional[tuple] = None

    def __post_init__(self):
        if self.map.n_outputs != self.model.coord_count:
            raise ValueError(
                f"map has {self.map.n_outputs} outputs, model needs "
                f"{self.model.coord_count} coordinates"
            )
        if self.map.n_inputs != self.model.n:
            raise ValueError(
                f"chart dimension {self.map.n_inputs} != submanifold "
                f"dimension {self.model.n}"
            )
        if self.target_cone is not None and self.target_cone.model != self.model:
            raise ValueError("target cone lives in a different ambient model")
        if self.chart_domain is None:
            object.__setattr__(self, "chart_domain", self.map.domain)
        elif len(self.chart_domain) != self.map.n_inputs:
            raise ValueError("chart_domain arity mismatch")

    @property
    def dim(self) -> int:
        return self.map.n_inputs

    def contains(self, x) -> bool:
        if self.chart_domain is None:
            return True
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x, self.chart_domain))


@dataclass(frozen=True)
class MetricChart:
    """A Riemannian metric given directly in chart coordinates.

    `metric` receives the chart coordinates as a list of Series and returns
    an n-by-n nested sequence of scalars (Series or floats).
    """

    metric: Callable
    dim: int
    name: str = ""


@dataclass(frozen=True)
class IntrinsicState:
    """Pointwise metric data of a chart: metric, inverse, connection, jet."""

    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray  # [k, i, j] -> Gamma^k_ij
    jet: "ChartGeometry"


def _smat_mul(a, b):
    n = len(a)
    return [
        [sum(a[i][l] * b[l][j] for l in range(n)) for j in range(n)]
        for i in range(n)
    ]


class ChartGeometry:
    """Order-3 metric jet at one chart point and everything derived from it.

    Built either from an immersion (metric pulled back through the ambient
    inner product) or from a metric chart.  Quantities are computed lazily
    and cached; the object is the `jet` payload of `IntrinsicState` and the
    workhorse behind the intrinsic operators.
    """

    def __init__(self, x, g_series, psi=None, immersion=None, name=""):
        self.x = np.asarray(x, dtype=np.float64)
        self.g_series = g_series
        self.dim = len(g_series)
        self.ctx = g_series[0][0].ctx
        self.coords = [Series.variable(self.ctx, i, self.x[i]) for i in range(self.dim)]
        self.psi = psi
        self.immersion = immersion
        self.name = name
        g0 = np.array([[g_series[i][j].val for j in range(self.dim)] for i in range(self.dim)])
        g0 = 0.5 * (g0 + g0.T)
        eigs = np.linalg.eigvalsh(g0)
        if eigs[0] <= _EIG_FLOOR:
            raise MetricSignatureError(
                f"induced metric at {tuple(self.x)} is not positive definite "
                f"(min eigenvalue {eigs[0]:.3e})"
            )
        self.g0 = g0
        self.g_inv0 = np.linalg.inv(g0)

    # -- ambient side (immersions only) --------------------------------

    @cached_property
    def psi0(self) -> np.ndarray:
        return np.array([s.val for s in self.psi])

    @cached_property
    def tangents(self) -> np.ndarray:
        """Coordinate tangent vectors d_i psi, shape (dim, ambient)."""
        n, ctx = self.dim, self.ctx
        out = np.zeros((n, len(self.psi)))
        for i in range(n):
            e_i = tuple(1 if k == i else 0 for k in range(n))
            for a, s in enumerate(self.psi):
                out[i, a] = s.coefficient(e_i)
        return out

    @cached_property
    def psi_second_partials(self) -> np.ndarray:
        """d_i d_j psi values, shape (dim, dim, ambient)."""
        n = self.dim
        out = np.zeros((n, n, len(self.psi)))
        for i in range(n):
            for j in range(i, n):
                alpha = tuple(
                    (1 if k == i else 0) + (1 if k == j else 0) for k in range(n)
                )
                fac = 2.0 if i == j else 1.0
                for a, s in enumerate(self.psi):
                    out[i, j, a] = s.coefficient(alpha) * fac
                out[j, i] = out[i, j]
        return out

    # -- metric jet algebra ---------------------------------------------

    @cached_property
    def g_inv_series(self):
        # Neumann series around the point value: (I + A0inv E)^-1 A0inv
        n = self.dim
        a0inv = self.g_inv0
        e = [[self.g_series[i][j] - self.g0[i, j] for j in range(n)] for i in range(n)]
        m = [
            [sum(a0inv[i, l] * e[l][j] for l in range(n)) for j in range(n)]
            for i in range(n)
        ]
        m2 = _smat_mul(m, m)
        m3 = _smat_mul(m2, m)
        x = [
            [
                (1.0 if i == j else 0.0) - m[i][j] + m2[i][j] - m3[i][j]
                for j in range(n)
            ]
            for i in range(n)
        ]
        return [
            [sum(x[i][l] * a0inv[l, j] for l in range(n)) for j in range(n)]
            for i in range(n)
        ]

    @cached_property
    def christoffel_series(self):
        """Gamma^k_ij as Series, indexed [k][i][j]; exact to order 1."""
        n = self.dim
        dg = [
            [[self.g_series[i][j].derivative(k) for j in range(n)] for i in range(n)]
            for k in range(n)
        ]
        ginv = self.g_inv_series
        gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    acc = None
                    for l in range(n):
                        term = ginv[k][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j])
                        acc = term if acc is None else acc + term
                    s = 0.5 * acc
                    gamma[k][i][j] = s
                    gamma[k][j][i] = s
        return gamma

    @cached_property
    def christoffel(self) -> np.ndarray:
        n = self.dim
        out = np.zeros((n, n, n))
        gs = self.christoffel_series
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    out[k, i, j] = gs[k][i][j].val
        return out

    @cached_property
    def riemann(self) -> np.ndarray:
        """R^l_ijk = <chart components of R(d_i, d_j) d_k>, value only."""
        n = self.dim
        gs = self.christoffel_series
        gamma = self.christoffel
        dgamma = np.zeros((n, n, n, n))  # [i, l, j, k] = d_i Gamma^l_jk
        for i in range(n):
            for l in range(n):
                for j in range(n):
                    for k in range(j, n):
                        v = gs[l][j][k].derivative(i).val
                        dgamma[i, l, j, k] = v
                        dgamma[i, l, k, j] = v
        r = np.zeros((n, n, n, n))
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        v = dgamma[i, l, j, k] - dgamma[j, l, i, k]
                        v += np.dot(gamma[l, i, :], gamma[:, j, k])
                        v -= np.dot(gamma[l, j, :], gamma[:, i, k])
                        r[l, i, j, k] = v
        return r

    @cached_property
    def scal(self) -> float:
        # Ricci as the trace over the first slot; sign fixed by Scal(S^n) = +n(n-1)
        n = self.dim
        r = self.riemann
        ric = np.einsum("iijk->jk", r.reshape(n, n, n, n))
        return float(np.einsum("jk,jk->", self.g_inv0, ric))

    @cached_property
    def onf(self) -> np.ndarray:
        """Columns are g-orthonormal tangent frame vectors in chart components.

        Cholesky of the metric, i.e. Gram-Schmidt on the coordinate basis.
        """
        l = np.linalg.cholesky(self.g0)
        return np.linalg.solve(l, np.eye(self.dim)).T

    # -- scalar fields on the chart --------------------------------------

    def scalar_series(self, h) -> Series:
        fn = h.fn if isinstance(h, SmoothMap) else h
        out = fn(self.coords)
        if not isinstance(out, Series):
            out = Series.constant(self.ctx, float(out))
        return out

    def partials(self, s: Series) -> np.ndarray:
        n = self.dim
        out = np.zeros(n)
        for i in range(n):
            e_i = tuple(1 if k == i else 0 for k in range(n))
            out[i] = s.coefficient(e_i)
        return out

    def second_partials(self, s: Series) -> np.ndarray:
        n = self.dim
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                alpha = tuple(
                    (1 if k == i else 0) + (1 if k == j else 0) for k in range(n)
                )
                out[i, j] = out[j, i] = s.coefficient(alpha) * (2.0 if i == j else 1.0)
        return out

    def gradient(self, s: Series):
        """Contravariant gradient components and its squared norm."""
        dh = self.partials(s)
        comps = self.g_inv0 @ dh
        return comps, float(dh @ comps)

    def covariant_hessian(self, s: Series) -> np.ndarray:
        """Hess_ij = d_i d_j h - Gamma^k_ij d_k h, chart components."""
        dh = self.partials(s)
        return self.second_partials(s) - np.einsum("kij,k->ij", self.christoffel, dh)

    def laplacian(self, s: Series) -> float:
        return float(np.einsum("ij,ij->", self.g_inv0, self.covariant_hessian(s)))

    def state(self) -> IntrinsicState:
        return IntrinsicState(
            point=self.x.copy(),
            g=self.g0.copy(),
            g_inv=self.g_inv0.copy(),
            christoffel=self.christoffel.copy(),
            jet=self,
        )


def _geometry_from_immersion(im: Immersion, x, check_membership=True) -> ChartGeometry:
    x = np.asarray(x, dtype=np.float64)
    if not im.contains(x):
        raise ValueError(f"chart point {tuple(x)} outside the immersion's domain")
    psi = taylor.eval_series(im.map, x, JET_ORDER)
    if check_membership and im.target_cone is not None:
        require_on_cone(im.target_cone, np.array([s.val for s in psi]))
    n = im.dim
    dpsi = [[comp.derivative(i) for comp in psi] for i in range(n)]
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            s = spacetime.ambient_inner(im.model, psi, dpsi[i], dpsi[j])
            g[i][j] = s
            g[j][i] = s
    return ChartGeometry(x, g, psi=psi, immersion=im, name=im.map.name)


def _geometry_from_metric(chart: MetricChart, x) -> ChartGeometry:
    x = np.asarray(x, dtype=np.float64)
    ctx = taylor.get_context(chart.dim, JET_ORDER)
    coords = [Series.variable(ctx, i, x[i]) for i in range(chart.dim)]
    raw = chart.metric(coords)
    n = chart.dim
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            a, b = raw[i][j], raw[j][i]
            if not isinstance(a, Series):
                a = Series.constant(ctx, float(a))
            if not isinstance(b, Series):
                b = Series.constant(ctx, float(b))
            s = 0.5 * (a + b)
            g[i][j] = s
            g[j][i] = s
    return ChartGeometry(x, g, name=chart.name)


def chart_geometry(obj, x, check_membership=True) -> ChartGeometry:
    """Metric jet of an `Immersion` or a `MetricChart` at a chart point."""
    if isinstance(obj, Immersion):
        return _geometry_from_immersion(obj, x, check_membership=check_membership)
    if isinstance(obj, MetricChart):
        return _geometry_from_metric(obj, x)
    raise TypeError(f"expected Immersion or MetricChart, got {type(obj).__name__}")


def induced_metric(obj, x) -> IntrinsicState:
    """First-fundamental-form data at a chart point."""
    return chart_geometry(obj, x).state()


def intrinsic_gradient(obj, h, x):
    """Gradient of a chart scalar field: (contravariant components, |grad h|^2)."""
    geo = chart_geometry(obj, x)
    return geo.gradient(geo.scalar_series(h))


def hessian_laplacian(obj, h, x):
    """Covariant Hessian in the orthonormal tangent frame and the Laplacian."""
    geo = chart_geometry(obj, x)
    hess = geo.covariant_hessian(geo.scalar_series(h))
    b = geo.onf
    hess_onf = b.T @ hess @ b
    return hess_onf, float(np.trace(hess_onf))


def scalar_curvature_intrinsic(obj, x) -> float:
    """Scalar curvature g^{ik} g^{jl} R_ijkl of the induced metric."""
    return chart_geometry(obj, x).scal


def pullback_metric_chart(chart_map: SmoothMap, signs=None, name="") -> MetricChart:
    """Metric chart obtained by pulling a (pseudo)flat ambient metric back
    through `chart_map`; `signs` lists the ambient signature, default all +1."""
    if signs is not None and len(signs) != chart_map.n_outputs:
        raise ValueError("signature length must match the map's output arity")

    def metric(coords):
        ys = chart_map.fn(coords)
        if isinstance(ys, Series):
            ys = [ys]
        sg = signs if signs is not None else (1.0,) * len(ys)
        k = len(coords)
        d = [[comp.derivative(i) for comp in ys] for i in range(k)]
        return [
            [
                sum(s * a * b for s, a, b in zip(sg, d[i], d[j]))
                for j in range(k)
            ]
            for i in range(k)
        ]

    return MetricChart(metric=metric, dim=chart_map.n_inputs, name=name)
