"""Ambient Lorentzian models.

Every model fixes one global coordinate system: flat coordinates for
Minkowski space and for the embedding space of the de Sitter hyperquadric,
a time axis plus fiber embedding coordinates for the cosmological products.
The metric is then a signed diagonal form whose fiber block is scaled by
the squared warping profile.  Curved fibers (unit sphere, unit hyperboloid)
ride along as quadric constraints on the point rather than as chart data,
so vectors tangent to the quadric see exactly the induced fiber metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import taylor
from .taylor import Series, SmoothMap, compose_univariate, get_context

__all__ = [
    "WarpingFunction",
    "AmbientModel",
    "AmbientVector",
    "ambient_inner",
    "warped_connection_term",
    "time_axis",
    "desitter_embed",
    "fiber_radial",
    "fiber_radius_sq",
    "radial_tangential_factor",
    "fiber_base_point",
    "fiber_constraint",
    "fiber_chart",
    "hyperbolic_chart",
    "sphere_chart",
]

_WARPING_KINDS = ("constant", "exp", "cosh", "polynomial", "custom")
_MODEL_KINDS = ("minkowski", "product", "grw_euclidean", "desitter")
_FIBER_KINDS = ("euclidean", "hyperbolic", "sphere")


@lru_cache(maxsize=None)
def _compiled_profile(expr: str):
    return taylor.parse_expression(expr, ("t",))


@dataclass(frozen=True)
class WarpingFunction:
    """Positive profile f(t) on an open interval, differentiable to order 3.

    Named families keep the conformal-time integral of 1/f in closed form:

      constant c    (t - t0) / c
      exp           exp(-t0) - exp(-t)
      cosh          arctan(sinh t) - arctan(sinh t0)
      polynomial    adaptive quadrature over the coefficient profile
      custom        expression in t over the shared vocabulary, quadrature
    """

    kind: str
    params: tuple = ()
    domain: tuple = (-math.inf, math.inf)
    expr: str = None

    def __post_init__(self):
        if self.kind not in _WARPING_KINDS:
            raise ValueError(f"unknown warping kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        if not self.domain[0] < self.domain[1]:
            raise ValueError("warping domain is empty")
        if self.kind == "constant" and (len(self.params) != 1 or self.params[0] <= 0.0):
            raise ValueError("constant warping needs one positive parameter")
        if self.kind == "polynomial" and not self.params:
            raise ValueError("polynomial warping needs coefficients")
        if self.kind == "custom" and not self.expr:
            raise ValueError("custom warping needs an expression in t")

    def _check_domain(self, v: float):
        lo, hi = self.domain
        if not lo < v < hi:
            raise ValueError(f"time {v} outside warping domain ({lo}, {hi})")

    def _raw(self, t):
        if self.kind == "constant":
            if isinstance(t, Series):
                return Series.constant(t.ctx, self.params[0])
            return self.params[0]
        if self.kind == "exp":
            return taylor.exp(t)
        if self.kind == "cosh":
            return taylor.cosh(t)
        if self.kind == "polynomial":
            acc = self.params[-1]
            for c in reversed(self.params[:-1]):
                acc = acc * t + c
            return acc
        return _compiled_profile(self.expr)([t])

    def __call__(self, t):
        v = t.val if isinstance(t, Series) else float(t)
        self._check_domain(v)
        out = self._raw(t)
        val = out.val if isinstance(out, Series) else out
        if not val > 0.0:
            raise ValueError(f"warping function nonpositive at t={v}")
        return out

    def value(self, t: float) -> float:
        return float(self(float(t)))

    def derivatives(self, t: float, order: int = 2):
        """(f, f', ..., f^(order)) at t."""
        ctx = get_context(1, order)
        s = self(Series.variable(ctx, 0, float(t)))
        return tuple(s.c[k] * math.factorial(k) for k in range(order + 1))

    def slope(self, t: float) -> float:
        return self.derivatives(t, 1)[1]

    def conformal_time(self, t, t0: float):
        """Integral of ds/f(s) from t0 to t; accepts a Series argument."""
        self._check_domain(float(t0))
        if isinstance(t, Series):
            v = t.val
            f0, f1, f2 = self.derivatives(v, 2)
            table = (
                self.conformal_time(v, t0),
                1.0 / f0,
                -f1 / f0 ** 2,
                (2.0 * f1 ** 2 - f0 * f2) / f0 ** 3,
            )
            return compose_univariate(t, table[: t.ctx.order + 1])
        v = float(t)
        self._check_domain(v)
        if self.kind == "constant":
            return (v - t0) / self.params[0]
        if self.kind == "exp":
            return math.exp(-t0) - math.exp(-v)
        if self.kind == "cosh":
            return math.atan(math.sinh(v)) - math.atan(math.sinh(t0))
        val, err = quad(lambda s: 1.0 / self.value(s), t0, v,
                        epsabs=1e-12, epsrel=1e-12, limit=200)
        if not math.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
            raise ArithmeticError(f"quadrature of 1/f failed on [{t0}, {v}]")
        return val


@dataclass(frozen=True)
class AmbientModel:
    """One of the four ambient spacetimes.

    kind            minkowski | product | grw_euclidean | desitter
    n               dimension of the codimension-two submanifolds it hosts
    warping         profile f for the cosmological kinds
    t0              vertex time of the associated cones (not for desitter)
    fiber           euclidean | hyperbolic | sphere, product kind only
    """

    kind: str
    n: int
    warping: WarpingFunction = None
    t0: float = None
    fiber: str = None

    def __post_init__(self):
        if self.kind not in _MODEL_KINDS:
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("base dimension must be at least 2")
        if self.kind in ("minkowski", "desitter"):
            if self.warping is not None or self.fiber is not None:
                raise ValueError(f"{self.kind} model carries no warping or fiber")
        else:
            if self.warping is None:
                raise ValueError(f"{self.kind} model needs a warping function")
        if self.kind == "product":
            if self.fiber not in _FIBER_KINDS:
                raise ValueError("product model needs fiber euclidean | hyperbolic | sphere")
        if self.kind == "grw_euclidean" and self.fiber not in (None, "euclidean"):
            raise ValueError("grw_euclidean model has a euclidean fiber")
        if self.kind == "desitter":
            if self.t0 is not None:
                raise ValueError("desitter model has no vertex time")
        else:
            t0 = 0.0 if self.t0 is None else float(self.t0)
            object.__setattr__(self, "t0", t0)
            if self.warping is not None:
                lo, hi = self.warping.domain
                if not lo < t0 < hi:
                    raise ValueError("vertex time outside the warping domain")

    @property
    def fiber_kind(self) -> str:
        if self.kind in ("minkowski", "grw_euclidean"):
            return "euclidean"
        if self.kind == "product":
            return self.fiber
        raise ValueError("desitter model has no fiber")

    @property
    def coord_count(self) -> int:
        if self.kind == "desitter":
            return self.n + 3
        # time axis + fiber embedding coordinates
        return 1 + self.fiber_coord_count

    @property
    def fiber_coord_count(self) -> int:
        if self.kind == "desitter":
            raise ValueError("desitter model has no fiber")
        if self.fiber_kind == "euclidean":
            return self.n + 1
        return self.n + 2

    @property
    def fiber_signs(self) -> np.ndarray:
        signs = np.ones(self.fiber_coord_count)
        if self.fiber_kind == "hyperbolic":
            signs[0] = -1.0
        return signs

    @property
    def flat_signs(self) -> np.ndarray:
        """Signature of the flat form (minkowski and desitter kinds only)."""
        signs = np.ones(self.coord_count)
        signs[0] = -1.0
        return signs


@dataclass(frozen=True)
class AmbientVector:
    """A tangent vector in ambient coordinates, attached at a point."""

    components: np.ndarray
    base_point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))
        if self.components.shape != self.base_point.shape:
            raise ValueError("vector and base point dimensions differ")


def _components(v, p):
    if isinstance(v, AmbientVector):
        base = np.asarray(p, dtype=float)
        if v.base_point.shape != base.shape or not np.allclose(v.base_point, base, atol=1e-9):
            raise ValueError("vector is not attached at the evaluation point")
        return v.components
    return v


def _is_series_point(p) -> bool:
    return any(isinstance(x, Series) for x in p)


def ambient_inner(model: AmbientModel, p, v, w):
    """Lorentzian inner product of v and w attached at p.

    Components may be floats or Series.  For the product kinds the fiber
    block is scaled by f(t)^2; vectors are expected tangent to the spacetime
    (quadric-normal parts of curved fibers acquire no metric meaning here).
    """
    vc = _components(v, p)
    wc = _components(w, p)
    if len(vc) != model.coord_count or len(wc) != model.coord_count:
        raise ValueError("vector dimension does not match the model")
    if model.kind in ("minkowski", "desitter"):
        acc = -(vc[0] * wc[0])
        for a, b in zip(vc[1:], wc[1:]):
            acc = acc + a * b
        return acc
    t = p[0]
    if not isinstance(t, Series):
        model.warping._check_domain(float(t))
    f = model.warping(t)
    signs = model.fiber_signs
    acc = None
    for s, a, b in zip(signs, vc[1:], wc[1:]):
        term = a * b if s > 0 else -(a * b)
        acc = term if acc is None else acc + term
    return -(vc[0] * wc[0]) + f * f * acc


def warped_connection_term(model: AmbientModel, p, a, b) -> np.ndarray:
    """Ambient Christoffel correction Gamma(a, b) at p, float components.

    Zero for the flat kinds.  For the cosmological kinds this is the warped
    part of the connection; the curved-fiber quadric contributes only terms
    along the quadric normal, which are metrically orthogonal to every
    spacetime-tangent field and therefore omitted (tangential projections
    never see them).
    """
    a = np.asarray(_components(a, p), dtype=float)
    b = np.asarray(_components(b, p), dtype=float)
    if model.kind in ("minkowski", "desitter"):
        return np.zeros(model.coord_count)
    t = float(p[0])
    f, fp = model.warping.derivatives(t, 1)
    out = np.zeros(model.coord_count)
    flat = float(np.sum(model.fiber_signs * a[1:] * b[1:]))
    out[0] = f * fp * flat
    out[1:] = (fp / f) * (a[0] * b[1:] + b[0] * a[1:])
    return out


def time_axis(model: AmbientModel, p):
    """The future unit timelike reference field at p.

    Coordinate time axis for the flat and cosmological kinds; for the de
    Sitter quadric, the pushforward of the warped-product time axis.
    """
    if model.kind != "desitter":
        comps = [0.0] * model.coord_count
        comps[0] = 1.0
        if _is_series_point(p):
            return comps
        return AmbientVector(np.array(comps), np.asarray(p, dtype=float))
    x1 = p[0]
    ch = taylor.sqrt(1.0 + x1 * x1)
    scale = x1 / ch
    comps = [ch] + [scale * x for x in p[1:]]
    if _is_series_point(p):
        return comps
    return AmbientVector(np.array([float(c) for c in comps]), np.asarray(p, dtype=float))


def desitter_embed(t, q):
    """(t, q) on -R x_cosh S^{n+1} -> point of the unit hyperquadric."""
    if not _is_series_point(list(q) + [t]):
        qa = np.asarray(q, dtype=float)
        if abs(math.sqrt(float(np.dot(qa, qa))) - 1.0) > 1e-12:
            raise ValueError("q must be a unit vector")
        return np.concatenate(([math.sinh(float(t))], math.cosh(float(t)) * qa))
    ch = taylor.cosh(t)
    return [taylor.sinh(t)] + [ch * x for x in q]


def fiber_base_point(model: AmbientModel) -> np.ndarray:
    """Embedding coordinates of the fiber origin / pole."""
    x0 = np.zeros(model.fiber_coord_count)
    if model.fiber_kind != "euclidean":
        x0[0] = 1.0
    return x0


def fiber_constraint(model: AmbientModel, x):
    """Residual of the fiber quadric at x (identically 0 for euclidean)."""
    kind = model.fiber_kind
    if kind == "euclidean":
        return 0.0
    if kind == "sphere":
        return taylor.norm_sq(x) - 1.0
    # unit hyperboloid in its own flat Lorentz coordinates
    acc = -(x[0] * x[0])
    for a in x[1:]:
        acc = acc + a * a
    return acc + 1.0


def fiber_radius_sq(model: AmbientModel, x):
    """Squared distance from the fiber base point, in the fiber geometry."""
    kind = model.fiber_kind
    if kind == "euclidean":
        return taylor.norm_sq(x)
    c = x[0]
    if not isinstance(c, Series) and float(c) == 1.0:
        return 0.0
    r = taylor.arccos(c) if kind == "sphere" else taylor.arccosh(c)
    return r * r


def fiber_radial(model: AmbientModel, x):
    """(r, Dr): distance from the fiber base point and the unit radial field.

    Components follow the fiber embedding coordinates.  Raises the usual
    primitive domain errors at the base point, the antipode, and beyond.
    """
    kind = model.fiber_kind
    if kind == "euclidean":
        r = taylor.sqrt(taylor.norm_sq(x))
        rinv = 1.0 / r
        return r, [rinv * a for a in x]
    c = x[0]
    if kind == "sphere":
        r = taylor.arccos(c)
        s = taylor.sqrt(1.0 - c * c)
        ratio = c / s
        return r, [-s] + [ratio * a for a in x[1:]]
    r = taylor.arccosh(c)
    s = taylor.sqrt(c * c - 1.0)
    ratio = c / s
    return r, [s] + [ratio * a for a in x[1:]]


def radial_tangential_factor(model: AmbientModel, r):
    """r * c(r) with Hess r = c(r)(g - dr (x) dr) on the fiber space form."""
    kind = model.fiber_kind
    if kind == "euclidean":
        return Series.constant(r.ctx, 1.0) if isinstance(r, Series) else 1.0
    if kind == "sphere":
        return r * taylor.cos(r) / taylor.sin(r)
    return r / taylor.tanh(r)


def hyperbolic_chart(k: int) -> SmoothMap:
    """Global graph chart R^k -> unit hyperboloid in flat Lorentz coordinates."""

    def chart(y):
        return [taylor.sqrt(1.0 + taylor.norm_sq(y))] + list(y)

    return SmoothMap(chart, k, k + 1, name=f"hyperboloid graph chart ({k})")


def sphere_chart(k: int, antipodal: bool = False) -> SmoothMap:
    """Spherical-angle chart of the unit k-sphere, poles excluded.

    Angles th_1..th_{k-1} in (0, pi), th_k in (-pi, pi).  The antipodal
    variant negates the leading coordinate, covering the opposite pole.
    """

    def chart(th):
        coords = []
        scale = 1.0
        for i in range(k - 1):
            coords.append(scale * taylor.cos(th[i]))
            scale = scale * taylor.sin(th[i])
        coords.append(scale * taylor.cos(th[k - 1]))
        coords.append(scale * taylor.sin(th[k - 1]))
        if antipodal:
            coords[0] = -coords[0]
        return coords

    domain = ((0.0, math.pi),) * (k - 1) + ((-math.pi, math.pi),)
    tag = " (antipodal)" if antipodal else ""
    return SmoothMap(chart, k, k + 1, name=f"sphere angle chart ({k}){tag}", domain=domain)


def euclidean_chart(k: int) -> SmoothMap:
    def chart(y):
        return list(y)

    return SmoothMap(chart, k, k, name=f"euclidean identity chart ({k})")


def fiber_chart(model: AmbientModel, antipodal: bool = False) -> SmoothMap:
    """Chart of the model's fiber in its embedding coordinates."""
    k = model.n + 1
    kind = model.fiber_kind
    if kind == "euclidean":
        return euclidean_chart(k)
    if kind == "sphere":
        return sphere_chart(k, antipodal=antipodal)
    return hyperbolic_chart(k)
