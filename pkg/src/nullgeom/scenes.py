"""Canonical immersions and the built-in scene catalog.

The builders return Immersion objects for the reference surfaces the engine
exercises end to end: graph embeddings over the hyperboloid and the sphere,
constant-time slices, warped-product cone graphs, and cylinder cross
sections.  builtin_scenes() packs ready-to-run configurations over these
surfaces, keyed by scene name, in the JSON-compatible shape the command
line consumes.
"""

from __future__ import annotations

import copy

import numpy as np

from . import spacetime as st
from . import taylor as tm
from .conformal import EmbeddingFamily, build_embedding
from .immersion import Immersion
from .nullcone import NullconeSpec
from .taylor import SmoothMap

__all__ = [
    "psi_f_minkowski",
    "slice_immersion",
    "psi_f_desitter",
    "cylinder_immersion",
    "hxr_immersion",
    "grw_graph",
    "marginal_height_profile",
    "builtin_scenes",
]


def psi_f_minkowski(n, f=None):
    """(f p, f) over the hyperboloid chart; lands on the Minkowski cone."""
    fv = 1.0 if f is None else f
    return build_embedding(EmbeddingFamily("psi_f_minkowski", f=fv, n=n))


def psi_f_desitter(n, alpha, f, component=None):
    """(f, R(f) q, alpha + sqrt(1-alpha^2) f) over the sphere chart."""
    return build_embedding(
        EmbeddingFamily(
            "psi_f_desitter_alpha", f=f, alpha=alpha, n=n, component=component
        )
    )


def cylinder_immersion(n, profile):
    """(f(t), f(t) q, t) over (t, sphere chart of S^{n-1})."""
    return build_embedding(EmbeddingFamily("cylinder_warped", f=profile, n=n))


def slice_immersion(n, c):
    """t = c sphere slice of the Minkowski cone."""
    model = st.AmbientModel("minkowski", n)
    cone = NullconeSpec(model, "minkowski_cone")
    chart = st.sphere_chart(n)

    def fn(qs):
        q = chart.fn(qs)
        return [c] + [c * qi for qi in q]

    return Immersion(
        SmoothMap(fn, n, n + 2, "slice", domain=chart.domain), model, cone
    )


def hxr_immersion(profile):
    """(V cosh y, V sinh y, V, s): a cylinder-cone surface with a spacelike
    coordinate bounded away from zero, used by the hyperbolic split map."""
    model = st.AmbientModel("minkowski", 2)
    cone = NullconeSpec(model, "cylinder")

    def fn(cs):
        s, y = cs
        v = profile(s)
        return [v * tm.cosh(y), v * tm.sinh(y), v, s]

    return Immersion(SmoothMap(fn, 2, 4, "hxr"), model, cone)


def grw_graph(model, height):
    """Graph over the sphere of radial directions, inside the GRW cone.

    `height` maps the direction-chart coordinates to the time value t; the
    fiber point sits at radius Phi(t) from the cone's base point.
    """
    n = model.n
    cone = NullconeSpec(model, "grw_cone")
    chart = st.sphere_chart(n)

    def fn(cs):
        t = height(cs)
        phi = model.warping.conformal_time(t, model.t0)
        om = chart.fn(cs)
        kind = model.fiber_kind
        if kind == "euclidean":
            x = [phi * o for o in om]
        elif kind == "sphere":
            x = [tm.cos(phi)] + [tm.sin(phi) * o for o in om]
        else:
            x = [tm.cosh(phi)] + [tm.sinh(phi) * o for o in om]
        return [t] + x

    return Immersion(
        SmoothMap(fn, n, model.coord_count, "grw_graph", domain=chart.domain),
        model,
        cone,
    )


def marginal_height_profile(ys):
    """f with (f p, f) inside the null hyperplane t + x_last = 2."""
    p0 = tm.sqrt(1.0 + tm.norm_sq(ys))
    return 2.0 / (1.0 + p0)


def _axis(lo, hi, count):
    return {"min": lo, "max": hi, "count": count}


def builtin_scenes():
    """Ready-to-run scene configurations, keyed by name.

    Every call builds fresh dictionaries, so callers may annotate or extend
    a configuration without touching the catalog.
    """
    square = [_axis(-1.2, 1.2, 12), _axis(-1.2, 1.2, 12)]
    # sphere-chart boxes stay clear of the polar edges; the slice grid also
    # keeps the last coordinate positive for the hyperbolic split map
    sphere_grid = [_axis(0.6, 2.5, 12), _axis(-2.5, 2.5, 12)]
    half_sphere_grid = [_axis(0.5, 2.6, 12), _axis(0.45, 2.7, 12)]
    scenes = {
        "mink-h2": {
            "name": "mink-h2",
            "spacetime": {"kind": "minkowski", "n": 2},
            "nullcone": {"variant": "minkowski_cone"},
            "immersion": {"family": "psi_f_minkowski", "f": "1"},
            "grid": [_axis(-1.5, 1.5, 20), _axis(-1.5, 1.5, 20)],
            "checks": ["all"],
            "expect": {
                "theta_xi": 1.0,
                "theta_eta": 0.5,
                "H_sq": -1.0,
                "scal_intrinsic": -2.0,
                "trapped_class": "past_trapped",
            },
        },
        "mink-bowl": {
            "name": "mink-bowl",
            "spacetime": {"kind": "minkowski", "n": 2},
            "nullcone": {"variant": "minkowski_cone"},
            "immersion": {"family": "psi_f_minkowski", "f": "1 + 0.3*x0**2"},
            "grid": square,
            "checks": ["all"],
            "expect": {"theta_xi": 1.0},
        },
        "mink-marginal": {
            "name": "mink-marginal",
            "spacetime": {"kind": "minkowski", "n": 2},
            "nullcone": {"variant": "minkowski_cone"},
            "immersion": {
                "family": "psi_f_minkowski",
                "f": "2/(1 + sqrt(1 + x0**2 + x1**2))",
            },
            "grid": square,
            "checks": ["all"],
            "expect": {
                "theta_xi": 1.0,
                "theta_eta": 0.0,
                "H_sq": 0.0,
                "scal_intrinsic": 0.0,
                "trapped_class": "past_marginally_trapped",
            },
        },
        "mink-slice": {
            "name": "mink-slice",
            "spacetime": {"kind": "minkowski", "n": 2},
            "nullcone": {"variant": "minkowski_cone"},
            "immersion": {"family": "sphere_slice", "c": 2.0},
            "grid": half_sphere_grid,
            "checks": ["all"],
            "expect": {
                "theta_xi": 1.0,
                "theta_eta": -0.125,
                "H_sq": 0.25,
                "scal_intrinsic": 0.5,
                "trapped_class": "untrapped",
            },
        },
        "grw-exp": {
            "name": "grw-exp",
            "spacetime": {
                "kind": "grw_euclidean",
                "n": 2,
                "warping": {"kind": "exp"},
            },
            "nullcone": {"variant": "grw_cone"},
            "immersion": {
                "family": "grw_graph",
                "height": "1.1 + 0.1*sin(x0)*cos(x1)",
            },
            "grid": sphere_grid,
            "checks": ["all"],
        },
        "grw-cosh": {
            "name": "grw-cosh",
            "spacetime": {
                "kind": "grw_euclidean",
                "n": 2,
                "warping": {"kind": "cosh"},
            },
            "nullcone": {"variant": "grw_cone"},
            "immersion": {"family": "grw_graph", "height": "1.2 + 0.1*cos(x0)"},
            "grid": sphere_grid,
            "checks": ["all"],
        },
        "cyl-arctan": {
            "name": "cyl-arctan",
            "spacetime": {"kind": "minkowski", "n": 2},
            "nullcone": {"variant": "cylinder"},
            "immersion": {"family": "cylinder_warped", "f": "x0**2 + 1"},
            "grid": [_axis(-1.2, 1.4, 12), _axis(0.5, 2.6, 12)],
            "checks": ["all"],
        },
        "ds-alpha0": {
            "name": "ds-alpha0",
            "spacetime": {"kind": "desitter", "n": 2},
            "nullcone": {"variant": "desitter_alpha", "alpha": 0.0},
            "immersion": {
                "family": "psi_f_desitter_alpha",
                "f": "1 + 0.3*cos(x0)**2",
            },
            "grid": sphere_grid,
            "checks": ["all"],
        },
        "ds-alpha05-minus": {
            "name": "ds-alpha05-minus",
            "spacetime": {"kind": "desitter", "n": 2},
            "nullcone": {
                "variant": "desitter_alpha",
                "alpha": 0.5,
                "component": "minus",
            },
            "immersion": {"family": "psi_f_desitter_alpha", "f": "sqrt(3)/2"},
            "grid": sphere_grid,
            "checks": ["all"],
        },
        "ds-alpha05-plus": {
            "name": "ds-alpha05-plus",
            "spacetime": {"kind": "desitter", "n": 2},
            "nullcone": {
                "variant": "desitter_alpha",
                "alpha": 0.5,
                "component": "plus",
            },
            "immersion": {
                "family": "psi_f_desitter_alpha",
                "f": "2 + 0.1*sin(x0)",
            },
            "grid": sphere_grid,
            "checks": ["all"],
        },
        "ds-alpha1": {
            "name": "ds-alpha1",
            "spacetime": {"kind": "desitter", "n": 2},
            "nullcone": {"variant": "desitter_alpha", "alpha": 1.0},
            "immersion": {
                "family": "psi_f_desitter_alpha",
                "f": "1 + 0.3*cos(x0)**2",
            },
            "grid": sphere_grid,
            "checks": ["all"],
        },
    }
    return copy.deepcopy(scenes)
