"""Null frames, Weingarten maps, expansions and the trapped classifier."""

import numpy as np
import pytest

from nullgeom import extrinsic as ext
from nullgeom import immersion as imm
from nullgeom import spacetime as st
from nullgeom import taylor as tm
from nullgeom.extrinsic import ExtrinsicPoint

from _surfaces import (
    cylinder_immersion,
    grw_graph,
    marginal_height_profile,
    psi_f_desitter,
    psi_f_minkowski,
    sample_box,
    slice_immersion,
    sphere_box,
)

SQ3 = np.sqrt(3.0)


def perturbed_f(ys):
    return 1.0 + 0.3 * ys[0] * ys[0]


def exp_model(n=2):
    return st.AmbientModel("grw_euclidean", n, warping=st.WarpingFunction("exp"))


def cosh_model(n=2):
    return st.AmbientModel("grw_euclidean", n, warping=st.WarpingFunction("cosh"))


def product_model(fiber, n=2):
    return st.AmbientModel(
        "product", n, warping=st.WarpingFunction("constant", params=(1.0,)), fiber=fiber
    )


def wavy_height(cs):
    return 1.1 + 0.1 * tm.sin(cs[0]) * tm.cos(cs[1])


def scene_points(rng, im, count=12):
    if im.map.name in ("psi_f", "hxr"):
        return [rng.uniform(-0.8, 0.8, size=im.dim) for _ in range(count)]
    if im.map.name == "cylinder":
        return [
            np.array([rng.uniform(-1.2, 1.2), rng.uniform(-2.4, 2.4)])
            for _ in range(count)
        ]
    return sample_box(rng, sphere_box(im.dim), count)


def all_scenes():
    return [
        psi_f_minkowski(2),
        psi_f_minkowski(3),
        psi_f_minkowski(2, perturbed_f),
        psi_f_minkowski(2, marginal_height_profile),
        slice_immersion(2, 1.0),
        cylinder_immersion(2, lambda t: t * t + 1.0),
        grw_graph(exp_model(), wavy_height),
        grw_graph(cosh_model(), wavy_height),
        grw_graph(product_model("sphere"), wavy_height),
        grw_graph(product_model("hyperbolic"), wavy_height),
        grw_graph(product_model("euclidean"), wavy_height),
        psi_f_desitter(2, 0.0, lambda qs: 1.0 + 0.2 * tm.sin(qs[0]) * tm.cos(qs[1])),
        psi_f_desitter(2, 0.5, 0.5 * SQ3, component="minus"),
        psi_f_desitter(2, 0.5, lambda qs: 2.0 + 0.1 * tm.sin(qs[0]), component="plus"),
        psi_f_desitter(2, 1.0, lambda qs: 1.0 + 0.3 * tm.cos(qs[1]) ** 2),
    ]


def frame_inner(pt, v, w):
    return st.ambient_inner(pt.model, pt.geo.psi0, v, w)


# ---------------------------------------------------------------------------
# frames


def test_frame_identities_across_scenes():
    rng = np.random.default_rng(42)
    for im in all_scenes():
        for x in scene_points(rng, im, 8):
            pt = ExtrinsicPoint(im, x)
            fr = pt.frame
            xi, eta, nu = fr.xi.components, fr.eta.components, fr.nu.components
            assert abs(frame_inner(pt, xi, xi)) < 1e-10
            assert abs(frame_inner(pt, eta, eta)) < 1e-10
            assert abs(frame_inner(pt, xi, eta) + 1.0) < 1e-10
            assert abs(frame_inner(pt, nu, nu) + 1.0) < 1e-10
            t_axis = np.array([s.val for s in pt.time_axis_series])
            assert frame_inner(pt, xi, t_axis) < 0.0
            assert frame_inner(pt, eta, t_axis) < 0.0
            assert frame_inner(pt, nu, t_axis) < 0.0
            for i in range(pt.n):
                tan = pt.geo.tangents[i]
                assert abs(frame_inner(pt, xi, tan)) < 1e-9
                assert abs(frame_inner(pt, eta, tan)) < 1e-9
                assert abs(frame_inner(pt, nu, tan)) < 1e-9


def test_minkowski_xi_is_position_and_slice_pairing():
    im = psi_f_minkowski(2, perturbed_f)
    pt = ExtrinsicPoint(im, [0.4, -0.7])
    assert np.allclose(pt.frame.xi.components, pt.geo.psi0, atol=1e-14)
    c = 1.7
    pt = ExtrinsicPoint(slice_immersion(2, c), [1.2, 0.6])
    assert abs(pt.xi_dot_nu.val + c) < 1e-12
    assert np.allclose(pt.frame.nu.components, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_frame_requires_cone_and_guards_degeneracy():
    model = st.AmbientModel("minkowski", 2)
    chart = st.sphere_chart(2)
    free = imm.Immersion(
        tm.SmoothMap(
            lambda qs: [1.0] + [q for q in chart.fn(qs)], 2, 4, domain=chart.domain
        ),
        model,
    )
    with pytest.raises(ValueError):
        ExtrinsicPoint(free, [1.0, 0.5])
    pt = ExtrinsicPoint(psi_f_minkowski(2), [0.2, 0.1])
    pt.__dict__["xi_dot_nu"] = tm.Series.constant(pt.geo.ctx, 0.25)
    with pytest.raises(ext.FrameDegeneracyError):
        pt.eta_series
    with pytest.raises(ValueError):
        pt.normal_series("zeta")


# ---------------------------------------------------------------------------
# shape operators


def test_minkowski_xi_shape_is_identity():
    rng = np.random.default_rng(5)
    for f in (None, perturbed_f, marginal_height_profile):
        im = psi_f_minkowski(2, f)
        for x in scene_points(rng, im, 6):
            a = ext.shape_operator_numeric(im, x, "xi")
            assert np.max(np.abs(a - np.eye(2))) < 1e-8
            assert (
                np.max(np.abs(ext.shape_operator_closed_form(im, x, "minkowski_xi") - np.eye(2)))
                < 1e-12
            )


def test_closed_vs_numeric_all_branches():
    rng = np.random.default_rng(6)
    cases = [
        (psi_f_minkowski(2, perturbed_f), ("minkowski_xi", "xi"), ("minkowski_eta", "eta")),
        (grw_graph(exp_model(), wavy_height), ("warped_xi", "xi"), ("warped_eta", "eta")),
        (grw_graph(cosh_model(), wavy_height), ("warped_xi", "xi"), ("warped_eta", "eta")),
        (grw_graph(product_model("sphere"), wavy_height), ("product_xi", "xi"), ("product_eta", "eta")),
        (grw_graph(product_model("hyperbolic"), wavy_height), ("product_xi", "xi"), ("product_eta", "eta")),
        (grw_graph(product_model("euclidean"), wavy_height), ("product_xi", "xi"), ("product_eta", "eta")),
    ]
    for im, *pairs in cases:
        for x in scene_points(rng, im, 10):
            pt = ExtrinsicPoint(im, x)
            for which, name in pairs + [("time_orthogonal", "time_orthogonal")]:
                closed = pt.shape_closed(which)
                numeric = pt.shape_numeric(name)
                assert np.linalg.norm(closed - numeric) < 1e-6, (im.map.name, which)


def test_time_orthogonal_trace_formula():
    rng = np.random.default_rng(8)
    for im in (
        grw_graph(exp_model(), wavy_height),
        grw_graph(product_model("sphere"), wavy_height),
        psi_f_minkowski(2, perturbed_f),
    ):
        for x in scene_points(rng, im, 6):
            pt = ExtrinsicPoint(im, x)
            tr = float(np.trace(pt.shape_chart("time_orthogonal")))
            expected = pt.laplacian_u + pt.warping_ratio * (pt.n + pt.grad_u_sq)
            assert abs(tr - expected) < 1e-7


def test_product_euclidean_xi_is_identity():
    im = grw_graph(product_model("euclidean"), wavy_height)
    x = np.array([1.3, 0.4])
    assert np.max(np.abs(ext.shape_operator_closed_form(im, x, "product_xi") - np.eye(2))) < 1e-9
    assert np.max(np.abs(ext.shape_operator_numeric(im, x, "xi") - np.eye(2))) < 1e-8


def test_slice_eta_shape():
    c = 1.4
    im = slice_immersion(2, c)
    x = np.array([1.1, -0.4])
    expected = -np.eye(2) / (2.0 * c * c)
    assert np.max(np.abs(ext.shape_operator_numeric(im, x, "eta") - expected)) < 1e-9
    assert np.max(np.abs(ext.shape_operator_closed_form(im, x, "minkowski_eta") - expected)) < 1e-12


def test_shape_dispatch_errors():
    grw = grw_graph(exp_model(), wavy_height)
    x = np.array([1.3, 0.5])
    with pytest.raises(ext.ShapeDispatchError):
        ext.shape_operator_closed_form(grw, x, "product_xi")  # warping not unit
    with pytest.raises(ext.ShapeDispatchError):
        ext.shape_operator_closed_form(grw, x, "minkowski_eta")
    sphere = grw_graph(product_model("sphere"), wavy_height)
    with pytest.raises(ext.ShapeDispatchError):
        ext.shape_operator_closed_form(sphere, x, "warped_xi")  # fiber not Euclidean
    ds = psi_f_desitter(2, 0.5, 0.5 * SQ3, component="minus")
    with pytest.raises(ext.ShapeDispatchError):
        ext.shape_operator_closed_form(ds, x, "time_orthogonal")
    with pytest.raises(ValueError):
        ext.shape_operator_closed_form(grw, x, "bogus")


# ---------------------------------------------------------------------------
# expansions, mean curvature, scalar curvature


def test_expansions_on_reference_scenes():
    im = psi_f_minkowski(2)
    theta_xi, theta_eta = ext.null_expansions(im, [0.5, -0.3])
    assert abs(theta_xi - 1.0) < 1e-12
    assert abs(theta_eta - 0.5) < 1e-9
    im3 = psi_f_minkowski(3)
    theta_xi, theta_eta = ext.null_expansions(im3, [0.4, 0.2, -0.5])
    assert abs(theta_xi - 1.0) < 1e-12
    assert abs(theta_eta - 0.5) < 1e-9
    c = 1.4
    theta_xi, theta_eta = ext.null_expansions(slice_immersion(2, c), [1.0, 0.8])
    assert abs(theta_xi - 1.0) < 1e-12
    assert abs(theta_eta + 1.0 / (2.0 * c * c)) < 1e-10


def test_expansion_traces_match_closed_forms():
    rng = np.random.default_rng(12)
    im = grw_graph(exp_model(), wavy_height)
    for x in scene_points(rng, im, 8):
        pt = ExtrinsicPoint(im, x)
        closed_eta = float(np.trace(pt.shape_closed_chart("warped_eta"))) / pt.n
        closed_xi = float(np.trace(pt.shape_closed_chart("warped_xi"))) / pt.n
        assert abs(pt.theta_eta - closed_eta) < 1e-7
        assert abs(pt.theta_xi - closed_xi) < 1e-7
        # trace of the eta branch in closed form
        f0, f1 = im.model.warping.derivatives(pt.u, order=1)
        phi = im.model.warping.conformal_time(pt.u, im.model.t0)
        n, gsq = pt.n, pt.grad_u_sq
        theta = (-n * (1.0 + gsq) + 2.0 * f0 * phi * pt.laplacian_u) / (
            2.0 * n * phi * phi
        ) + f1 * (n - (n - 2.0) * gsq) / (2.0 * n * phi)
        assert abs(pt.theta_eta - theta) < 1e-7


def test_mean_curvature_identities():
    rng = np.random.default_rng(21)
    for im in all_scenes():
        for x in scene_points(rng, im, 4):
            pt = ExtrinsicPoint(im, x)
            h, h_sq = ext.mean_curvature(im, x)
            assert abs(h_sq + 2.0 * pt.theta_xi * pt.theta_eta) < 1e-9
            recon = (
                -pt.theta_xi * pt.frame.eta.components
                - pt.theta_eta * pt.frame.xi.components
            )
            assert np.max(np.abs(h.components - recon)) < 1e-8


def test_mean_curvature_reference_values():
    assert abs(ext.mean_curvature(psi_f_minkowski(2), [0.4, 0.1])[1] + 1.0) < 1e-10
    c = 1.3
    assert (
        abs(ext.mean_curvature(slice_immersion(2, c), [1.2, 0.4])[1] - 1.0 / c**2)
        < 1e-10
    )
    marg = psi_f_minkowski(2, marginal_height_profile)
    assert abs(ext.mean_curvature(marg, [0.5, -0.2])[1]) < 1e-9


def test_scalar_curvature_consistency_on_minkowski_cone():
    rng = np.random.default_rng(31)
    for f in (None, perturbed_f, marginal_height_profile):
        im = psi_f_minkowski(2, f)
        for x in scene_points(rng, im, 8):
            rep = ext.point_report(im, x)
            assert abs(rep.scal_intrinsic - rep.scal_formula) < 1e-5
            m = 2.0 * rep.u * rep.laplacian_u - 2.0 * (1.0 + rep.grad_u_sq)
            direct = -(1.0 / rep.u**2) * m
            assert abs(rep.scal_formula - direct) < 1e-9


def test_normal_connection_law():
    rng = np.random.default_rng(41)
    for im in (
        psi_f_minkowski(2, perturbed_f),
        grw_graph(exp_model(), wavy_height),
        grw_graph(cosh_model(), wavy_height),
        grw_graph(product_model("sphere"), wavy_height),
    ):
        for x in scene_points(rng, im, 5):
            assert ExtrinsicPoint(im, x).normal_connection_residual() < 1e-6


# ---------------------------------------------------------------------------
# trapped classification


def test_trapped_classes_on_reference_scenes():
    rng = np.random.default_rng(51)
    hyper = psi_f_minkowski(2)
    marg = psi_f_minkowski(2, marginal_height_profile)
    slice_im = slice_immersion(2, 1.0)
    for x in scene_points(rng, hyper, 10):
        assert ext.trapped_classify(hyper, x) == "past_trapped"
    for x in scene_points(rng, marg, 10):
        assert ext.trapped_classify(marg, x) == "past_marginally_trapped"
    for x in scene_points(rng, slice_im, 10):
        assert ext.trapped_classify(slice_im, x) == "untrapped"


def test_classification_matches_scalar_curvature_sign():
    rng = np.random.default_rng(61)
    for f in (None, perturbed_f, marginal_height_profile):
        im = psi_f_minkowski(2, f)
        for x in scene_points(rng, im, 10):
            rep = ext.point_report(im, x)
            if rep.trapped_class == "past_trapped":
                assert rep.scal_intrinsic < 0.0
            elif rep.trapped_class == "untrapped":
                assert rep.scal_intrinsic > 0.0
            else:
                assert abs(rep.scal_intrinsic) < 1e-5


def test_unclassified_outside_minkowski_cone():
    ds = psi_f_desitter(2, 0.5, 0.5 * SQ3, component="minus")
    assert ext.trapped_classify(ds, [1.2, 0.7]) == "unclassified"
    cyl = cylinder_immersion(2, lambda t: t * t + 1.0)
    assert ext.trapped_classify(cyl, [0.3, 1.1]) == "unclassified"
    grw = grw_graph(exp_model(), wavy_height)
    assert ext.trapped_classify(grw, [1.3, 0.4]) == "unclassified"


def test_classification_invariant_under_chart_diffeomorphism():
    rng = np.random.default_rng(71)
    for base in (
        psi_f_minkowski(2),
        psi_f_minkowski(2, marginal_height_profile),
        slice_immersion(2, 1.0),
    ):
        a = np.array([[1.2, 0.3], [-0.2, 0.9]])
        b = np.array([0.1, -0.2])

        def phi(cs):
            lin0 = a[0, 0] * cs[0] + a[0, 1] * cs[1] + b[0]
            lin1 = a[1, 0] * cs[0] + a[1, 1] * cs[1] + b[1]
            return [lin0 + 0.05 * tm.sin(cs[1]), lin1 + 0.05 * tm.cos(cs[0])]

        reparam = imm.Immersion(
            tm.SmoothMap(lambda cs: base.map.fn(phi(cs)), 2, base.map.n_outputs),
            base.model,
            base.target_cone,
        )
        for _ in range(6):
            x = rng.uniform(-0.4, 0.4, size=2)
            y = np.array([s.val for s in tm.eval_series(tm.SmoothMap(phi, 2, 2), x, 1)])
            if base.map.name == "slice" and not all(
                lo <= yi <= hi for yi, (lo, hi) in zip(y, base.chart_domain)
            ):
                continue
            assert ext.trapped_classify(base, y) == ext.trapped_classify(reparam, x)


def test_report_fields():
    im = psi_f_minkowski(2)
    rep = ext.point_report(im, [0.3, -0.4])
    assert rep.trapped_class in ext.TRAPPED_CLASSES
    assert rep.scal_formula == 2.0 * rep.H_sq
    assert abs(rep.scal_intrinsic + 2.0) < 1e-9
    assert abs(rep.theta_eta - 0.5) < 1e-9
    assert abs(rep.H_sq + 1.0) < 1e-9
    u = np.sqrt(1.0 + 0.3**2 + 0.4**2)
    assert abs(rep.u - u) < 1e-12
    assert abs(rep.grad_u_sq - (u * u - 1.0)) < 1e-10
