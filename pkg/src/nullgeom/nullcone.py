"""Null hypersurfaces cut out by a scalar function F.

Four variants: the nullcone of a cosmological product (vanishing of the
squared conformal-time / fiber-distance difference), the flat light cone,
the light cone crossed with a line, and the plane sections of the de Sitter
quadric.  Each supplies F, its ambient gradient, and a membership test for
the future branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import taylor
from .taylor import PrimitiveDomainError, Series
from .spacetime import (
    AmbientModel,
    AmbientVector,
    fiber_constraint,
    fiber_radial,
    fiber_radius_sq,
)

__all__ = [
    "VERTEX_EPS",
    "MEMBERSHIP_TOL",
    "RejectionReason",
    "PointRejected",
    "NullconeSpec",
    "eval_F",
    "grad_F",
    "grad_F_components",
    "membership",
    "require_on_cone",
    "desitter_graph_height",
]

# conformal time below this is treated as the cone vertex; the normalized
# frame divides by its square
VERTEX_EPS = 1e-8
MEMBERSHIP_TOL = 1e-9

_VARIANTS = ("grw_cone", "minkowski_cone", "cylinder", "desitter_alpha")


class RejectionReason(Enum):
    VERTEX_EXCLUSION = "vertex_exclusion"
    DENOMINATOR_ZERO = "denominator_zero"
    OFF_CONE = "off_cone"
    CHART_SINGULARITY = "chart_singularity"


class PointRejected(Exception):
    """A sample point the engine refuses to evaluate, with the reason why."""

    def __init__(self, reason: RejectionReason, point=None, detail: str = ""):
        self.reason = reason
        self.point = None if point is None else np.asarray(point, dtype=float)
        self.detail = detail
        text = reason.value if not detail else f"{reason.value}: {detail}"
        super().__init__(text)


@dataclass(frozen=True)
class NullconeSpec:
    """Selects a null hypersurface inside an ambient model.

    component splits the 0 < alpha < 1 de Sitter planes at
    x1 = sqrt(1 - alpha^2)/alpha, where the radial scale R changes sign.
    """

    model: AmbientModel
    variant: str
    alpha: float = None
    branch: str = "future"
    component: str = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown nullcone variant {self.variant!r}")
        if self.branch != "future":
            raise ValueError("only the future branch is supported")
        kind = self.model.kind
        if self.variant == "grw_cone" and kind not in ("product", "grw_euclidean"):
            raise ValueError("grw_cone needs a product or grw_euclidean model")
        if self.variant == "minkowski_cone":
            if kind != "minkowski":
                raise ValueError("minkowski_cone needs a minkowski model")
            if self.model.t0 != 0.0:
                raise ValueError("the flat light cone has its vertex at time 0")
        if self.variant == "cylinder" and kind != "minkowski":
            raise ValueError("cylinder needs a minkowski model")
        if self.variant == "desitter_alpha":
            if kind != "desitter":
                raise ValueError("desitter_alpha needs a desitter model")
            if self.alpha is None or not 0.0 <= float(self.alpha) <= 1.0:
                raise ValueError("alpha must lie in [0, 1]")
            object.__setattr__(self, "alpha", float(self.alpha))
            if 0.0 < self.alpha < 1.0:
                if self.component not in ("minus", "plus"):
                    raise ValueError("0 < alpha < 1 needs component minus | plus")
            elif self.component is not None:
                raise ValueError("component only applies for 0 < alpha < 1")
        elif self.alpha is not None or self.component is not None:
            raise ValueError(f"{self.variant} takes no alpha or component")

    @property
    def split_radius(self) -> float:
        """The x1 value separating the two de Sitter components."""
        return math.sqrt(1.0 - self.alpha ** 2) / self.alpha


def eval_F(spec: NullconeSpec, p):
    """The defining function; zero (with the branch conditions) on the cone."""
    m = spec.model
    if len(p) != m.coord_count:
        raise ValueError("point dimension does not match the model")
    if spec.variant == "minkowski_cone":
        return -(p[0] * p[0]) + taylor.norm_sq(p[1:])
    if spec.variant == "cylinder":
        block = p[: m.n + 1]
        return -(p[0] * p[0]) + taylor.norm_sq(block[1:])
    if spec.variant == "desitter_alpha":
        a = spec.alpha
        return p[-1] - a - math.sqrt(1.0 - a * a) * p[0]
    phi = m.warping.conformal_time(p[0], m.t0)
    return -(phi * phi) + fiber_radius_sq(m, p[1:])


def _reject_radial(exc: PrimitiveDomainError, p) -> PointRejected:
    if exc.primitive == "arccos" and exc.value <= -1.0:
        return PointRejected(RejectionReason.CHART_SINGULARITY, p,
                             "fiber antipode: radial direction undefined")
    return PointRejected(RejectionReason.DENOMINATOR_ZERO, p,
                         "fiber base point: radial direction undefined")


def grad_F_components(spec: NullconeSpec, p):
    """Half the ambient gradient of F, as a component list (Series-capable)."""
    m = spec.model
    if len(p) != m.coord_count:
        raise ValueError("point dimension does not match the model")
    is_series = any(isinstance(x, Series) for x in p)
    if spec.variant == "minkowski_cone":
        return list(p)
    if spec.variant == "cylinder":
        zero = 0.0 * p[0] if is_series else 0.0
        return list(p[: m.n + 1]) + [zero]
    if spec.variant == "desitter_alpha":
        a = spec.alpha
        scale = eval_F(spec, p) + a
        comps = [-scale * x for x in p]
        comps[0] = comps[0] + math.sqrt(1.0 - a * a)
        comps[-1] = comps[-1] + 1.0
        return [0.5 * c for c in comps]
    t = p[0]
    phi = m.warping.conformal_time(t, m.t0)
    phi_val = phi.val if isinstance(phi, Series) else phi
    if phi_val < VERTEX_EPS:
        raise PointRejected(RejectionReason.VERTEX_EXCLUSION, None if is_series else p,
                            f"conformal time {phi_val:.3e} below {VERTEX_EPS:.0e}")
    f = m.warping(t)
    try:
        r, dr = fiber_radial(m, p[1:])
    except PrimitiveDomainError as exc:
        raise _reject_radial(exc, None if is_series else p) from exc
    scale = r / (f * f)
    return [phi / f] + [scale * d for d in dr]


def grad_F(spec: NullconeSpec, p) -> AmbientVector:
    comps = grad_F_components(spec, p)
    if any(isinstance(c, Series) for c in comps):
        raise TypeError("grad_F returns attached vectors for float points only; "
                        "use grad_F_components for Series")
    return AmbientVector(np.asarray(comps, dtype=float), np.asarray(p, dtype=float))


def membership(spec: NullconeSpec, p, tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether p lies on the future branch of the hypersurface, |F| <= tol."""
    try:
        require_on_cone(spec, p, tol)
    except PointRejected:
        return False
    return True


def require_on_cone(spec: NullconeSpec, p, tol: float = MEMBERSHIP_TOL):
    """Raise PointRejected unless p is an admissible point of the cone."""
    m = spec.model
    p = np.asarray(p, dtype=float)
    F = float(eval_F(spec, p))
    if abs(F) > tol:
        raise PointRejected(RejectionReason.OFF_CONE, p, f"|F| = {abs(F):.3e}")
    if spec.variant == "desitter_alpha":
        quad = -p[0] * p[0] + float(np.dot(p[1:], p[1:])) - 1.0
        if abs(quad) > tol:
            raise PointRejected(RejectionReason.OFF_CONE, p,
                                f"off the unit hyperquadric by {abs(quad):.3e}")
        if p[0] <= 0.0:
            raise PointRejected(RejectionReason.OFF_CONE, p, "past branch (x1 <= 0)")
        if 0.0 < spec.alpha < 1.0:
            split = spec.split_radius
            if spec.component == "minus" and not p[0] < split:
                raise PointRejected(RejectionReason.OFF_CONE, p,
                                    "beyond the component split radius")
            if spec.component == "plus" and not p[0] > split:
                raise PointRejected(RejectionReason.OFF_CONE, p,
                                    "below the component split radius")
        return
    if spec.variant == "cylinder":
        if p[0] <= 0.0:
            raise PointRejected(RejectionReason.OFF_CONE, p, "past branch (x1 <= 0)")
        return
    if spec.variant == "minkowski_cone":
        if p[0] <= 0.0:
            raise PointRejected(RejectionReason.OFF_CONE, p, "past branch (t <= 0)")
        if p[0] < VERTEX_EPS:
            raise PointRejected(RejectionReason.VERTEX_EXCLUSION, p,
                                f"time {p[0]:.3e} below {VERTEX_EPS:.0e}")
        return
    t = float(p[0])
    if t <= m.t0:
        raise PointRejected(RejectionReason.OFF_CONE, p, "past branch (t <= t0)")
    if m.kind == "product":
        resid = abs(float(fiber_constraint(m, p[1:])))
        if resid > tol:
            raise PointRejected(RejectionReason.OFF_CONE, p,
                                f"off the fiber quadric by {resid:.3e}")
    if m.warping.conformal_time(t, m.t0) < VERTEX_EPS:
        raise PointRejected(RejectionReason.VERTEX_EXCLUSION, p,
                            f"conformal time below {VERTEX_EPS:.0e}")


def desitter_graph_height(theta0: float, q) -> float:
    """Height t making the warped-product graph point land on the plane cut.

    The plane is the alpha = cos(theta0) member of the de Sitter family; q
    is a unit vector of the spatial sphere, measured against its last axis.
    """
    q = np.asarray(q, dtype=float)
    if abs(math.sqrt(float(np.dot(q, q))) - 1.0) > 1e-12:
        raise ValueError("q must be a unit vector")
    arg = theta0 - math.acos(float(np.clip(q[-1], -1.0, 1.0)))
    if not abs(arg) < math.pi / 2.0 - 1e-12:
        raise ValueError("graph is singular: signed distance reaches a quarter turn")
    return math.asinh(math.tan(arg))
