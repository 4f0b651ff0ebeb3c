"""Command-line front end: scene configuration, grid runs, check suites,
and deterministic report emission.

A scene configuration is a JSON object:

    {
      "name": "mink-h2",
      "spacetime": {"kind": "minkowski", "n": 2},
      "nullcone":  {"variant": "minkowski_cone"},
      "immersion": {"family": "psi_f_minkowski", "f": "1 + 0.3*x0**2"},
      "grid":      [{"min": -1.5, "max": 1.5, "count": 20}, ...],
      "checks":    ["all"],
      "tolerances": {"frame": 1e-9},            # optional overrides
      "expect":    {"theta_xi": 1.0},           # optional per-row pins
      "seed":      0,                           # optional, default 0
      "output":    {"path": "out.json", "format": "json"}   # optional
    }

Immersion families: psi_f_minkowski (f), psi_f_desitter_alpha (f),
cylinder_warped (f), sphere_slice (c), grw_graph (height), hxr (profile).
Scalar parameters are numbers or expression strings in x0..x{n-1} over the
jet vocabulary.  Alternatively "chart" gives one expression per ambient
coordinate, with an optional "domain" of per-axis bounds.

"checks" lists suite names (frame, shape, expansions, trapped, conformal,
appendix); "all" expands to every suite applicable to the scene's model and
cone, and requesting an inapplicable suite by name is a configuration
error.  Grid evaluation may be threaded; assembly is ordered by grid index
and a single writer emits the report, so identical configurations produce
byte-identical output.

Exit codes: 0 every requested suite passed, 1 a suite exceeded its
tolerance, 2 configuration error, 3 runtime degeneracy left a requested
suite with nothing to evaluate.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import conformal, scenes, taylor
from .conformal import ConformalMapSpec, DegeneracyError, EmbeddingRangeError, InverseError
from .extrinsic import (
    ExtrinsicPoint,
    FrameDegeneracyError,
    _euclidean_fiber,
    _is_unit_warping,
)
from .immersion import Immersion, MetricSignatureError
from .nullcone import NullconeSpec, PointRejected
from .spacetime import AmbientModel, WarpingFunction
from .taylor import MAX_ORDER, PrimitiveDomainError, SmoothMap, parse_expression

__all__ = [
    "ConfigError",
    "SuiteUnevaluable",
    "DEFAULT_TOLERANCES",
    "SUITE_NAMES",
    "parse_scene",
    "run",
    "emit_json",
    "emit_csv",
    "main",
]

EXIT_PASS = 0
EXIT_SUITE_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_DEGENERATE = 3

SUITE_NAMES = ("frame", "shape", "expansions", "trapped", "conformal", "appendix")

ROW_FIELDS = (
    "u",
    "grad_u_sq",
    "laplacian_u",
    "theta_xi",
    "theta_eta",
    "H_sq",
    "scal_formula",
    "scal_intrinsic",
)

TRAPPED_CLASSES = (
    "past_trapped",
    "past_marginally_trapped",
    "past_weakly_trapped",
    "untrapped",
    "unclassified",
)

DEFAULT_TOLERANCES = {
    "frame": 1e-9,
    "shape": 1e-6,
    "expansions": 1e-8,
    "gauss": 1e-5,
    "trapped_eps": 1e-7,
    "factor": 1e-8,
    "factorization": 1e-7,
    "exactness": 1e-8,
    "appendix": 1e-5,
    "expect": 1e-6,
}

_CONFIG_KEYS = frozenset(
    {
        "name",
        "spacetime",
        "nullcone",
        "immersion",
        "grid",
        "checks",
        "tolerances",
        "expect",
        "seed",
        "output",
    }
)

_IMMERSION_KEYS = frozenset(
    {"family", "f", "c", "height", "profile", "chart", "domain", "name"}
)

# at most this many evaluated grid points feed the conformal factor check;
# the factorization round trip runs on the first few of them
_CONFORMAL_SAMPLE_CAP = 40
_FACTORIZATION_SAMPLES = 6
_APPENDIX_SAMPLES = 5


class ConfigError(ValueError):
    """A scene configuration that cannot be run as requested."""


class SuiteUnevaluable(RuntimeError):
    """A requested suite had nothing left to evaluate at runtime."""


@dataclass
class Scene:
    """A parsed, validated scene ready to run."""

    name: str
    model: AmbientModel
    cone: NullconeSpec
    im: Immersion
    family: Optional[str]
    axes: list
    checks: tuple
    selectors: tuple
    gauss_shift: Optional[float]
    cspec: Optional[ConformalMapSpec]
    tolerances: dict
    expect: dict
    seed: int
    output_path: Optional[str]
    output_format: str
    echo: dict

    @property
    def dim(self) -> int:
        return len(self.axes)


# -- configuration parsing --------------------------------------------------


def _expect_mapping(doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    return doc


def _expect_number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(value)


def _parse_spacetime(doc) -> AmbientModel:
    doc = _expect_mapping(doc, "spacetime")
    kind = doc.get("kind")
    n = doc.get("n")
    if not isinstance(kind, str):
        raise ConfigError("spacetime.kind must be a string")
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigError("spacetime.n must be an integer")
    warping = None
    wdoc = doc.get("warping")
    if wdoc is not None:
        wdoc = _expect_mapping(wdoc, "spacetime.warping")
        kwargs = {}
        if "params" in wdoc:
            kwargs["params"] = tuple(wdoc["params"])
        if "domain" in wdoc:
            lo, hi = wdoc["domain"]
            kwargs["domain"] = (float(lo), float(hi))
        if "expr" in wdoc:
            kwargs["expr"] = wdoc["expr"]
        try:
            warping = WarpingFunction(wdoc.get("kind"), **kwargs)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"spacetime.warping: {err}") from None
    try:
        return AmbientModel(
            kind, n, warping=warping, t0=doc.get("t0"), fiber=doc.get("fiber")
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"spacetime: {err}") from None


def _parse_nullcone(model: AmbientModel, doc) -> NullconeSpec:
    doc = _expect_mapping(doc, "nullcone")
    variant = doc.get("variant")
    if not isinstance(variant, str):
        raise ConfigError("nullcone.variant must be a string")
    kwargs = {}
    if doc.get("alpha") is not None:
        kwargs["alpha"] = _expect_number(doc["alpha"], "nullcone.alpha")
    if doc.get("branch") is not None:
        kwargs["branch"] = doc["branch"]
    if doc.get("component") is not None:
        kwargs["component"] = doc["component"]
    try:
        return NullconeSpec(model, variant, **kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"nullcone: {err}") from None


def _scalar_param(doc, key, n_vars):
    """A family parameter: number, or expression string in x0..x{n_vars-1}."""
    if key not in doc:
        raise ConfigError(f"immersion family needs the parameter {key!r}")
    value = doc[key]
    if isinstance(value, bool):
        raise ConfigError(f"immersion.{key} must be a number or expression string")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        names = [f"x{i}" for i in range(n_vars)]
        try:
            return parse_expression(value, names)
        except ValueError as err:
            raise ConfigError(f"immersion.{key}: {err}") from None
    raise ConfigError(f"immersion.{key} must be a number or expression string")


def _build_immersion(model: AmbientModel, cone: NullconeSpec, doc):
    doc = _expect_mapping(doc, "immersion")
    unknown = set(doc) - _IMMERSION_KEYS
    if unknown:
        raise ConfigError(f"immersion has unknown keys {sorted(unknown)}")
    family = doc.get("family")
    if family is None and "chart" not in doc:
        raise ConfigError("immersion needs either a family or a chart")
    if family is not None:
        if family == "psi_f_minkowski":
            im = scenes.psi_f_minkowski(model.n, _scalar_param(doc, "f", model.n))
        elif family == "psi_f_desitter_alpha":
            if cone.variant != "desitter_alpha":
                raise ConfigError(
                    "psi_f_desitter_alpha needs the desitter_alpha nullcone"
                )
            im = scenes.psi_f_desitter(
                model.n, cone.alpha, _scalar_param(doc, "f", model.n), cone.component
            )
        elif family == "cylinder_warped":
            fn = _scalar_param(doc, "f", 1)
            profile = fn if isinstance(fn, float) else (lambda t, _fn=fn: _fn([t]))
            im = scenes.cylinder_immersion(model.n, profile)
        elif family == "sphere_slice":
            c = _expect_number(doc.get("c"), "immersion.c")
            im = scenes.slice_immersion(model.n, c)
        elif family == "grw_graph":
            height = _scalar_param(doc, "height", model.n)
            if isinstance(height, float):
                value = height
                height = lambda cs, _v=value: _v  # noqa: E731
            im = scenes.grw_graph(model, height)
        elif family == "hxr":
            fn = _scalar_param(doc, "profile", 1)
            if isinstance(fn, float):
                profile = lambda s, _v=fn: _v  # noqa: E731
            else:
                profile = lambda s, _fn=fn: _fn([s])  # noqa: E731
            im = scenes.hxr_immersion(profile)
        else:
            raise ConfigError(f"unknown immersion family {family!r}")
        if im.model != model:
            raise ConfigError(
                f"family {family!r} builds over a different spacetime "
                f"than the configured {model.kind!r}"
            )
        if im.target_cone != cone:
            raise ConfigError(
                f"family {family!r} lands on a different nullcone "
                f"than the configured {cone.variant!r}"
            )
        return im, family
    exprs = doc["chart"]
    if not isinstance(exprs, list) or not all(isinstance(s, str) for s in exprs):
        raise ConfigError("immersion.chart must be a list of expression strings")
    if len(exprs) != model.coord_count:
        raise ConfigError(
            f"immersion.chart needs {model.coord_count} component expressions"
        )
    names = [f"x{i}" for i in range(model.n)]
    try:
        fns = [parse_expression(s, names) for s in exprs]
    except ValueError as err:
        raise ConfigError(f"immersion.chart: {err}") from None
    domain = None
    if doc.get("domain") is not None:
        bounds = doc["domain"]
        if not isinstance(bounds, list) or len(bounds) != model.n:
            raise ConfigError(f"immersion.domain needs {model.n} [lo, hi] pairs")
        domain = tuple((float(lo), float(hi)) for lo, hi in bounds)

    def fn(xs, _fns=fns):
        return [f(xs) for f in _fns]

    map_fn = SmoothMap(
        fn, model.n, model.coord_count, doc.get("name", "chart"), domain=domain
    )
    return Immersion(map_fn, model, cone), None


def _parse_grid(doc, dim):
    if not isinstance(doc, list) or len(doc) != dim:
        raise ConfigError(f"grid needs one axis object per chart coordinate ({dim})")
    axes = []
    for i, axis in enumerate(doc):
        axis = _expect_mapping(axis, f"grid[{i}]")
        lo = _expect_number(axis.get("min"), f"grid[{i}].min")
        hi = _expect_number(axis.get("max"), f"grid[{i}].max")
        count = axis.get("count")
        if isinstance(count, bool) or not isinstance(count, int):
            raise ConfigError(f"grid[{i}].count must be an integer")
        if count < 2:
            raise ConfigError(f"grid[{i}].count must be at least 2")
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            raise ConfigError(f"grid[{i}] needs finite min < max")
        axes.append(np.linspace(lo, hi, count))
    return axes


def _applicable_suites(model: AmbientModel, cone: NullconeSpec):
    names = ["frame", "expansions"]
    if model.kind != "desitter":
        names.append("shape")
    if cone.variant == "minkowski_cone":
        names.append("trapped")
    if cone.variant in ("minkowski_cone", "cylinder", "desitter_alpha"):
        names.extend(["conformal", "appendix"])
    return tuple(s for s in SUITE_NAMES if s in names)


def _resolve_checks(requested, model, cone):
    if requested is None:
        requested = ["all"]
    if not isinstance(requested, list) or not all(
        isinstance(s, str) for s in requested
    ):
        raise ConfigError("checks must be a list of suite names")
    applicable = _applicable_suites(model, cone)
    chosen = set()
    for name in requested:
        if name == "all":
            chosen.update(applicable)
            continue
        if name not in SUITE_NAMES:
            raise ConfigError(f"unknown check suite {name!r}")
        if name not in applicable:
            raise ConfigError(
                f"suite {name!r} is not applicable to {model.kind}/{cone.variant}"
            )
        chosen.add(name)
    return tuple(s for s in SUITE_NAMES if s in chosen)


def _resolve_tolerances(doc, overrides):
    tols = dict(DEFAULT_TOLERANCES)
    for source, where in ((doc, "tolerances"), (overrides, "--tol")):
        if not source:
            continue
        mapping = _expect_mapping(source, where)
        for key, value in mapping.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {key!r}")
            value = _expect_number(value, f"{where}.{key}")
            if value <= 0.0:
                raise ConfigError(f"{where}.{key} must be positive")
            tols[key] = value
    return tols


def _parse_expect(doc):
    if doc is None:
        return {}
    doc = _expect_mapping(doc, "expect")
    expect = {}
    for key, value in doc.items():
        if key == "trapped_class":
            if value not in TRAPPED_CLASSES:
                raise ConfigError(f"expect.trapped_class {value!r} is not a class")
            expect[key] = value
        elif key in ROW_FIELDS:
            expect[key] = _expect_number(value, f"expect.{key}")
        else:
            raise ConfigError(f"unknown expect field {key!r}")
    return expect


def _closed_selectors(model: AmbientModel, cone: NullconeSpec):
    sels = []
    if model.kind != "desitter":
        sels.append("time_orthogonal")
    if cone.variant == "minkowski_cone":
        sels.extend(["minkowski_xi", "minkowski_eta"])
    if cone.variant in ("grw_cone", "minkowski_cone"):
        if _euclidean_fiber(model):
            sels.extend(["warped_xi", "warped_eta"])
        if _is_unit_warping(model):
            sels.extend(["product_xi", "product_eta"])
    return tuple(sels)


def _gauss_shift(model, cone) -> Optional[float]:
    """Constant offset in Scal = n(n-1)<H,H> + shift, where it is a theorem.

    The intrinsic scalar curvature of a cross section is pinned to its mean
    curvature only inside cones from a point: with no ambient curvature the
    offset vanishes, on the unit de Sitter quadric it is n(n-1).  Cylinders
    and generic warped cones carry no such identity, so no check applies.
    """
    if cone.variant == "minkowski_cone":
        return 0.0
    if cone.variant == "desitter_alpha":
        return float(model.n * (model.n - 1))
    return None


def _conformal_spec(model, cone, family, axes):
    if cone.variant == "minkowski_cone":
        return ConformalMapSpec(
            "lightcone_to_Hn", coordinate_index=model.coord_count - 1
        )
    if cone.variant == "desitter_alpha":
        return ConformalMapSpec("desitter_to_Sn")
    if cone.variant == "cylinder":
        base = tuple(float(0.5 * (ax[0] + ax[-1])) for ax in axes)
        variant = "cylinder_to_HxR" if family == "hxr" else "cylinder_to_SxR"
        return ConformalMapSpec(variant, base_point=base)
    return None


def parse_scene(doc, tol_overrides=None, seed=None, checks=None) -> Scene:
    """Validate a configuration document and build the runnable scene."""
    doc = _expect_mapping(doc, "config")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config has unknown keys {sorted(unknown)}")
    for key in ("spacetime", "nullcone", "immersion", "grid"):
        if key not in doc:
            raise ConfigError(f"config needs the key {key!r}")
    name = doc.get("name", "scene")
    if not isinstance(name, str):
        raise ConfigError("name must be a string")
    model = _parse_spacetime(doc["spacetime"])
    cone = _parse_nullcone(model, doc["nullcone"])
    im, family = _build_immersion(model, cone, doc["immersion"])
    axes = _parse_grid(doc["grid"], model.n)
    requested = doc.get("checks") if checks is None else checks
    resolved = _resolve_checks(requested, model, cone)
    tolerances = _resolve_tolerances(doc.get("tolerances"), tol_overrides)
    expect = _parse_expect(doc.get("expect"))
    if seed is None:
        seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    output_path = None
    output_format = "json"
    odoc = doc.get("output")
    if odoc is not None:
        odoc = _expect_mapping(odoc, "output")
        output_path = odoc.get("path")
        output_format = odoc.get("format", "json")
        if output_format not in ("json", "csv"):
            raise ConfigError("output.format must be json or csv")
    echo = {
        "name": name,
        "spacetime": doc["spacetime"],
        "nullcone": doc["nullcone"],
        "immersion": doc["immersion"],
        "grid": doc["grid"],
        "checks": list(resolved),
        "tolerances": {k: tolerances[k] for k in DEFAULT_TOLERANCES},
        "expect": {k: expect[k] for k in sorted(expect)},
        "seed": seed,
    }
    return Scene(
        name=name,
        model=model,
        cone=cone,
        im=im,
        family=family,
        axes=axes,
        checks=resolved,
        selectors=_closed_selectors(model, cone),
        gauss_shift=_gauss_shift(model, cone),
        cspec=_conformal_spec(model, cone, family, axes),
        tolerances=tolerances,
        expect=expect,
        seed=seed,
        output_path=output_path,
        output_format=output_format,
        echo=echo,
    )


# -- grid evaluation ---------------------------------------------------------


def _shape_residual(pt: ExtrinsicPoint, selectors) -> float:
    worst = 0.0
    numeric = {}
    for which in selectors:
        if which == "time_orthogonal":
            base = "time_orthogonal"
        elif which.endswith("_xi"):
            base = "xi"
        else:
            base = "eta"
        if base not in numeric:
            numeric[base] = pt.shape_numeric(base)
        diff = pt.shape_closed(which) - numeric[base]
        worst = max(worst, float(np.linalg.norm(diff)))
    return worst


def _expansion_residuals(pt: ExtrinsicPoint, rep, gauss_shift) -> dict:
    xi0 = pt.frame.xi.components
    eta0 = pt.frame.eta.components
    expected = -(rep.theta_xi * eta0 + rep.theta_eta * xi0)
    vec = float(np.max(np.abs(pt.mean_curvature_vector - expected)))
    sq = abs(rep.H_sq + 2.0 * rep.theta_xi * rep.theta_eta)
    out = {"identity": max(vec, sq)}
    if gauss_shift is not None:
        out["gauss"] = abs(rep.scal_intrinsic - rep.scal_formula - gauss_shift)
    return out


def _trapped_mismatch(pt: ExtrinsicPoint, rep, tolerances) -> float:
    """1.0 when the class contradicts the sign of the intrinsic curvature."""
    band = (pt.n - 1) * tolerances["trapped_eps"] / (rep.u * rep.u)
    band += tolerances["gauss"]
    s = rep.scal_intrinsic
    if rep.trapped_class == "past_trapped":
        ok = s < band
    elif rep.trapped_class == "untrapped":
        ok = s > -band
    else:
        ok = abs(s) <= band
    return 0.0 if ok else 1.0


def _evaluate_point(scene: Scene, x):
    point = [float(v) for v in x]
    try:
        pt = ExtrinsicPoint(scene.im, np.asarray(x, dtype=float))
        rep = pt.report(scene.tolerances["trapped_eps"])
        row = {"point": point}
        for key in ROW_FIELDS:
            row[key] = float(getattr(rep, key))
        row["trapped_class"] = rep.trapped_class
        diag = {}
        if "frame" in scene.checks:
            diag["frame"] = pt.frame_residual()
        if "shape" in scene.checks:
            diag["shape"] = _shape_residual(pt, scene.selectors)
        if "expansions" in scene.checks:
            diag["expansions"] = _expansion_residuals(pt, rep, scene.gauss_shift)
        if "trapped" in scene.checks:
            diag["trapped"] = _trapped_mismatch(pt, rep, scene.tolerances)
        return ("row", row, diag)
    except PointRejected as err:
        reason, detail = err.reason.value, err.detail
    except FrameDegeneracyError as err:
        reason, detail = "denominator_zero", str(err)
    except (MetricSignatureError, PrimitiveDomainError) as err:
        reason, detail = "chart_singularity", str(err)
    except EmbeddingRangeError as err:
        reason, detail = "off_cone", str(err)
    except ValueError as err:
        reason, detail = "chart_singularity", str(err)
    return ("rejected", {"point": point, "reason": reason, "detail": detail}, None)


def _evaluate_grid(scene: Scene, threads: int):
    points = list(itertools.product(*scene.axes))
    # warm the shared jet-context cache before any parallel evaluation
    for order in range(MAX_ORDER + 1):
        taylor.get_context(scene.dim, order)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda p: _evaluate_point(scene, p), points))
    else:
        outcomes = [_evaluate_point(scene, p) for p in points]
    rows, diags, rejections = [], [], []
    for kind, payload, diag in outcomes:
        if kind == "row":
            rows.append(payload)
            diags.append(diag)
        else:
            rejections.append(payload)
    return rows, diags, rejections


# -- suites -------------------------------------------------------------------


def _require_rows(rows, name):
    if not rows:
        raise SuiteUnevaluable(f"suite {name!r} has no evaluable grid points")


def _suite_frame(scene, rows, diags):
    _require_rows(rows, "frame")
    worst = max(d["frame"] for d in diags)
    return {
        "passed": worst < scene.tolerances["frame"],
        "residuals": {"frame": worst},
        "points": len(rows),
    }


def _suite_shape(scene, rows, diags):
    _require_rows(rows, "shape")
    worst = max(d["shape"] for d in diags)
    return {
        "passed": worst < scene.tolerances["shape"],
        "residuals": {"shape": worst, "branches": float(len(scene.selectors))},
        "points": len(rows),
    }


def _suite_expansions(scene, rows, diags):
    _require_rows(rows, "expansions")
    identity = max(d["expansions"]["identity"] for d in diags)
    residuals = {"identity": identity}
    passed = identity < scene.tolerances["expansions"]
    if scene.gauss_shift is not None:
        gauss = max(d["expansions"]["gauss"] for d in diags)
        residuals["gauss"] = gauss
        passed = passed and gauss < scene.tolerances["gauss"]
    if scene.expect:
        numeric = 0.0
        mismatches = 0
        for key, want in scene.expect.items():
            if key == "trapped_class":
                mismatches = sum(1 for r in rows if r["trapped_class"] != want)
            else:
                numeric = max(numeric, max(abs(r[key] - want) for r in rows))
        residuals["expect"] = numeric
        residuals["expect_class_mismatches"] = float(mismatches)
        passed = passed and numeric < scene.tolerances["expect"] and mismatches == 0
    return {"passed": passed, "residuals": residuals, "points": len(rows)}


def _suite_trapped(scene, rows, diags):
    _require_rows(rows, "trapped")
    mismatches = sum(d["trapped"] for d in diags)
    fraction = mismatches / len(rows)
    return {
        "passed": fraction == 0.0,
        "residuals": {"sign_mismatch_fraction": fraction},
        "points": len(rows),
    }


def _suite_conformal(scene, rows, diags):
    _require_rows(rows, "conformal")
    spec, im = scene.cspec, scene.im
    candidates = [np.asarray(r["point"]) for r in rows[:_CONFORMAL_SAMPLE_CAP]]
    evaluable = []
    for x in candidates:
        try:
            conformal.conformal_map(spec, im, x)
            evaluable.append(x)
        except (DegeneracyError, ArithmeticError):
            continue
    if not evaluable:
        raise SuiteUnevaluable("the split map is degenerate at every sampled point")
    tols = scene.tolerances
    residuals = {"factor": conformal.conformal_factor_check(spec, im, evaluable)}
    passed = residuals["factor"] < tols["factor"]
    spd_failures = sum(
        0.0 if conformal.pullback_is_spd(spec, im, x) else 1.0 for x in evaluable[:10]
    )
    residuals["pullback_spd_failures"] = spd_failures
    passed = passed and spd_failures == 0.0
    if scene.cone.variant == "desitter_alpha":
        try:
            conformal.desitter_r_sign(im, evaluable)
            residuals["scale_sign"] = 0.0
        except DegeneracyError:
            residuals["scale_sign"] = 1.0
            passed = False
    if scene.cone.variant in ("minkowski_cone", "desitter_alpha"):
        if len(evaluable) >= 2:
            try:
                residuals["factorization"] = conformal.factorization_check(
                    im, spec, evaluable[:_FACTORIZATION_SAMPLES]
                )
            except InverseError:
                residuals["factorization"] = math.inf
            passed = passed and residuals["factorization"] < tols["factorization"]
    if scene.cone.variant == "cylinder":
        bounds = []
        for ax in scene.axes[:2]:
            lo, hi = float(ax[0]), float(ax[-1])
            span = hi - lo
            bounds.append((lo + 0.25 * span, hi - 0.25 * span))
        try:
            residuals["exactness"] = conformal.exactness_residual(
                spec, im, (0, 1), tuple(bounds)
            )
        except ArithmeticError as err:
            raise SuiteUnevaluable(str(err)) from None
        passed = passed and residuals["exactness"] < tols["exactness"]
    return {"passed": passed, "residuals": residuals, "points": len(evaluable)}


def _suite_appendix(scene, rows, diags):
    _require_rows(rows, "appendix")
    lam = conformal.factor_field(scene.cspec, scene.im)
    rng = np.random.default_rng(scene.seed)
    box = [(float(ax[0]), float(ax[-1])) for ax in scene.axes]
    samples = [
        np.array([rng.uniform(lo, hi) for lo, hi in box])
        for _ in range(_APPENDIX_SAMPLES)
    ]
    try:
        residuals = conformal.conformal_curvature_check(scene.im, lam, samples)
    except (DegeneracyError, ArithmeticError) as err:
        raise SuiteUnevaluable(str(err)) from None
    worst = max(residuals.values())
    return {
        "passed": worst < scene.tolerances["appendix"],
        "residuals": dict(residuals),
        "points": len(samples),
    }


_SUITE_RUNNERS = {
    "frame": _suite_frame,
    "shape": _suite_shape,
    "expansions": _suite_expansions,
    "trapped": _suite_trapped,
    "conformal": _suite_conformal,
    "appendix": _suite_appendix,
}


# -- report assembly and emission ---------------------------------------------


def run(config, tol_overrides=None, seed=None, threads=1, checks=None) -> dict:
    """Run a scene configuration and return the full report dictionary.

    The report carries the normalized configuration echo, one row per
    evaluated grid point (grid order), the rejected points with reasons,
    the per-suite verdicts, and the process exit status.
    """
    scene = parse_scene(config, tol_overrides=tol_overrides, seed=seed, checks=checks)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        raise ConfigError("threads must be a positive integer")
    rows, diags, rejections = _evaluate_grid(scene, threads)
    suites = {}
    status = EXIT_PASS
    for name in scene.checks:
        try:
            result = _SUITE_RUNNERS[name](scene, rows, diags)
        except SuiteUnevaluable as err:
            suites[name] = {"passed": False, "unevaluable": str(err)}
            status = max(status, EXIT_DEGENERATE)
            continue
        suites[name] = result
        if not result["passed"]:
            status = max(status, EXIT_SUITE_FAILURE)
    if not scene.checks and not rows:
        status = max(status, EXIT_DEGENERATE)
    return {
        "config": scene.echo,
        "rows": rows,
        "rejections": rejections,
        "suites": suites,
        "exit_status": status,
    }


def _format_float(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return format(float(value), ".17g")


def _emit_json_value(obj, indent, out):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append("  " * (indent + 1))
            out.append(json.dumps(str(key)))
            out.append(": ")
            _emit_json_value(value, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(obj):
            out.append("  " * (indent + 1))
            _emit_json_value(value, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot emit {type(obj).__name__} into a report")


def emit_json(report: dict) -> str:
    """Serialize a report with 17-significant-digit floats, stable layout."""
    out = []
    _emit_json_value(report, 0, out)
    out.append("\n")
    return "".join(out)


def emit_csv(report: dict) -> str:
    """Rows only, fixed column order; floats carry 17 significant digits."""
    dim = len(report["config"]["grid"])
    header = [f"x{i}" for i in range(dim)] + list(ROW_FIELDS) + ["trapped_class"]
    lines = [",".join(header)]
    for row in report["rows"]:
        cells = [_format_float(v) for v in row["point"]]
        cells += [_format_float(row[key]) for key in ROW_FIELDS]
        cells.append(row["trapped_class"])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Inverse of emit_json."""
    return json.loads(text)


def _emit(report: dict, fmt: str) -> str:
    return emit_csv(report) if fmt == "csv" else emit_json(report)


# -- command line ---------------------------------------------------------------


def _add_common_flags(parser):
    parser.add_argument(
        "--tol",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override one tolerance",
    )
    parser.add_argument("--out", help="output path (a directory for `suite`)")
    parser.add_argument("--format", choices=("json", "csv"), help="output format")
    parser.add_argument("--seed", type=int, help="sampling seed (unsigned 64-bit)")
    parser.add_argument(
        "--threads", type=int, default=1, help="grid evaluation threads"
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="nullgeom",
        description="Null-hypersurface geometry checks over configured scenes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="run a scene's requested check suites")
    check.add_argument("--config", required=True, help="scene configuration file")
    _add_common_flags(check)
    classify = sub.add_parser(
        "classify", help="emit per-point extrinsic rows, no suites"
    )
    classify.add_argument("--config", required=True, help="scene configuration file")
    _add_common_flags(classify)
    suite = sub.add_parser("suite", help="run one built-in scene, or all of them")
    suite.add_argument("name", help="a built-in scene name, or `all`")
    _add_common_flags(suite)
    return parser


def _parse_tol_flags(flags):
    overrides = {}
    for flag in flags:
        key, sep, value = flag.partition("=")
        if not sep:
            raise ConfigError(f"--tol needs NAME=VALUE, got {flag!r}")
        try:
            overrides[key] = float(value)
        except ValueError:
            raise ConfigError(f"--tol {key}: {value!r} is not a number") from None
    return overrides


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"cannot parse {path}: {err}") from None


def _write_output(path: str, text: str):
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    except OSError as err:
        raise ConfigError(f"cannot write {path}: {err}") from None


def _cmd_check(args, classify: bool) -> int:
    config = _load_config(args.config)
    overrides = _parse_tol_flags(args.tol)
    report = run(
        config,
        tol_overrides=overrides,
        seed=args.seed,
        threads=args.threads,
        checks=[] if classify else None,
    )
    odoc = config.get("output") or {}
    fmt = args.format or odoc.get("format") or "json"
    out_path = args.out if args.out is not None else odoc.get("path")
    text = _emit(report, fmt)
    if out_path:
        _write_output(out_path, text)
    else:
        sys.stdout.write(text)
    name = report["config"]["name"]
    print(
        f"{name}: rows={len(report['rows'])} rejections={len(report['rejections'])}"
        f" exit={report['exit_status']}",
        file=sys.stderr,
    )
    return report["exit_status"]


def _cmd_suite(args) -> int:
    catalog = scenes.builtin_scenes()
    if args.name != "all" and args.name not in catalog:
        raise ConfigError(
            f"unknown scene {args.name!r}; built-ins: {', '.join(catalog)} or all"
        )
    names = list(catalog) if args.name == "all" else [args.name]
    overrides = _parse_tol_flags(args.tol)
    fmt = args.format or "json"
    worst = EXIT_PASS
    for name in names:
        report = run(
            catalog[name],
            tol_overrides=overrides,
            seed=args.seed,
            threads=args.threads,
        )
        status = report["exit_status"]
        worst = max(worst, status)
        if args.out:
            _write_output(str(Path(args.out) / f"{name}.{fmt}"), _emit(report, fmt))
        verdict = "PASS" if status == EXIT_PASS else "FAIL"
        print(f"{name}: {verdict} (exit {status})")
    return worst


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args, classify=False)
        if args.command == "classify":
            return _cmd_check(args, classify=True)
        return _cmd_suite(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
