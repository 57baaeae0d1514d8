import numpy as np
import pytest
from hypothesis import given, strategies as st

from blab.data import gen_symmetric_layout
from blab.geometry import (GridBoundary, VectorProjectionInstance,
                           check_claim1_chain, check_claim2_product,
                           enumerate_square_xor_projections,
                           grid_boundary_projection, halfspace_projection,
                           ratio_bound)


def test_halfspace_projection_frozen():
    p = halfspace_projection([0.6, 0.8], 0.0, [4.0, 3.0])
    np.testing.assert_allclose(p, [1.12, -0.84], atol=1e-12)
    with pytest.raises(ValueError):
        halfspace_projection([0.0, 0.0], 1.0, [1.0, 1.0])


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.floats(-3, 3))
def test_halfspace_projection_properties(wv, xv, b):
    w = np.array(wv)
    x = np.array(xv)
    if np.linalg.norm(w) < 1e-3:
        return
    p = halfspace_projection(w, b, x)
    assert abs(float(w @ p) + b) < 1e-7          # lands on the plane
    resid = (x - p) - (float(w @ (x - p)) / float(w @ w)) * w
    assert np.linalg.norm(resid) < 1e-7          # displacement parallel to w


def test_grid_boundary_matches_analytic_line():
    w = np.array([1.0, 1.0])
    field = GridBoundary(lambda pts: pts @ w - 1.0, ((-2.0, 2.0), (-2.0, 2.0)), 1e-3)
    for x in ([0.0, 0.0], [1.5, -0.5], [-1.0, 1.2]):
        _, d = field.nearest(x)
        exact = np.linalg.norm(halfspace_projection(w, -1.0, x) - np.array(x))
        assert d == pytest.approx(exact, abs=2e-3)


def test_grid_boundary_rejects_empty_field_and_bad_query():
    with pytest.raises(ValueError):
        GridBoundary(lambda pts: np.ones(len(pts)), ((-1.0, 1.0), (-1.0, 1.0)), 0.1)
    with pytest.raises(ValueError):
        grid_boundary_projection(lambda pts: pts[:, 0], [5.0, 0.0],
                                 ((-1.0, 1.0), (-1.0, 1.0)), 0.1)


def test_ratio_bound_frozen_and_errors():
    assert ratio_bound(3.0, 4.0) == pytest.approx(25.0 / 12.0, rel=1e-12)
    assert ratio_bound(7.0, 7.0) == pytest.approx(2.0, rel=1e-15)
    for a, b in ((0.0, 1.0), (-1.0, 2.0), (1.0, 0.0)):
        with pytest.raises(ValueError):
            ratio_bound(a, b)


@given(st.floats(1e-8, 1e8), st.floats(1e-8, 1e8))
def test_ratio_bound_at_least_two(a, b):
    assert ratio_bound(a, b) >= 2.0 - 1e-12


def _orthogonal_instance(scale=0.2):
    pts = np.array([[0.0, 0.0, 0.0], [4.0, 0.0, 0.0]])
    labels = np.array([0, 1])
    f = scale * np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    g = scale * np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
    return VectorProjectionInstance(pts, labels, f, g)


def test_claim1_chain_passes_on_valid_orthogonal_instance():
    report = check_claim1_chain(_orthogonal_instance())
    assert report["passed"]
    assert report["orthogonal_everywhere"]
    assert report["pairs_checked"] == 1
    assert not report["violations"]


def test_claim1_chain_reports_precondition_violation():
    inst = _orthogonal_instance(scale=3.0)  # vector norms exceed the pair distance
    report = check_claim1_chain(inst)
    assert not report["precondition_ok"]
    assert report["precondition_violations"] == [[0, 1]]
    assert not report["passed"]


def test_claim1_chain_vacuous_without_orthogonality():
    inst = _orthogonal_instance()
    inst = VectorProjectionInstance(inst.points, inst.labels,
                                    inst.f_vectors, inst.f_vectors.copy())
    report = check_claim1_chain(inst)
    assert report["vacuous"]
    assert report["passed"]  # no orthogonal strictness claims to violate


def test_claim2_flags_orthogonal_equal_norm_counterexample():
    inst = _orthogonal_instance()
    report = check_claim2_product(inst)
    assert report["orthogonal_everywhere"]
    assert report["equal_products_premise"]
    assert not report["strict_product_inequality"]
    assert report["counterexample"]
    assert report["amgm_substep_ok"] and report["amgm_min"] >= 2.0 - 1e-12
    # |h| = |f| / sqrt(2) per sample for orthogonal equal norms
    assert report["prod_h"] == pytest.approx(report["prod_f"] / 2.0, rel=1e-12)


def test_claim2_accepts_collinear_equality():
    inst = _orthogonal_instance()
    coll = VectorProjectionInstance(inst.points, inst.labels,
                                    inst.f_vectors, inst.f_vectors.copy())
    report = check_claim2_product(coll)
    assert not report["counterexample"]
    assert report["prod_h"] == pytest.approx(report["prod_f"], rel=1e-12)


def test_claim2_rejects_zero_vectors():
    inst = _orthogonal_instance()
    zeroed = VectorProjectionInstance(inst.points, inst.labels,
                                      np.zeros_like(inst.f_vectors), inst.g_vectors)
    with pytest.raises(ValueError):
        check_claim2_product(zeroed)


def test_instance_json_roundtrip():
    inst = _orthogonal_instance()
    back = VectorProjectionInstance.from_jsonable(inst.to_jsonable())
    np.testing.assert_array_equal(back.points, inst.points)
    np.testing.assert_array_equal(back.g_vectors, inst.g_vectors)
    with pytest.raises(ValueError):
        VectorProjectionInstance(inst.points, inst.labels[:1],
                                 inst.f_vectors, inst.g_vectors)


def test_square_xor_admits_two_projection_sets():
    layout = gen_symmetric_layout("square_xor")
    assignments = enumerate_square_xor_projections(layout)
    assert len(assignments) == 2
    for feet in assignments:
        # every foot sits on one of the two diagonals
        on_diag = np.isclose(feet[:, 0], feet[:, 1]) | np.isclose(feet[:, 0], -feet[:, 1])
        assert on_diag.all()


def test_perturbed_square_xor_collapses_to_one():
    layout = gen_symmetric_layout("square_xor", perturb=0.4)
    assert len(enumerate_square_xor_projections(layout)) == 1
    with pytest.raises(ValueError):
        enumerate_square_xor_projections(gen_symmetric_layout("mirrored_pairs"))
