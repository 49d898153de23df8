import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SMOOTH, rng_points, small_specs
from dualnorm.exceptions import (
    DimensionMismatch,
    InvalidGroupStructure,
    NoClosedForm,
    NonDifferentiablePoint,
    UnsupportedNorm,
)
from dualnorm.norms import (
    GroupStructure,
    NormKind,
    NormSpec,
    analytic_dual,
    load_norm_spec,
    norm_gradient,
    norm_hessian,
    norm_majorizer,
    norm_spec_from_dict,
    norm_value,
    restrict_spec,
    validate_groups,
)
from fd import fd_gradient, fd_jacobian, rel_close

GROUP_W = NormSpec.group_l2(3, [[0, 1], [2]], [2.0, 1.0])
OVERLAP = NormSpec.overlap_group_l2(3, [[0, 1], [1, 2]])

seeds = st.integers(0, 2**32 - 1)


# ---------------------------------------------------------------- examples


def test_value_examples():
    assert norm_value(NormSpec.l2(2), [3, 4]) == pytest.approx(5.0, abs=1e-15)
    assert norm_value(GROUP_W, [3, 4, 2]) == pytest.approx(math.sqrt(2) * 5 + 2, abs=1e-12)
    assert norm_value(GROUP_W, [3, 4, 2]) == pytest.approx(9.0710678, abs=1e-7)
    assert norm_value(OVERLAP, [1, 1, 1]) == pytest.approx(2 * math.sqrt(1.25), abs=1e-12)
    assert norm_value(NormSpec.l1(3), [1, -2, 3]) == 6.0
    assert norm_value(NormSpec.linf(3), [1, -2, 3]) == 3.0


def test_overlap_weights():
    np.testing.assert_array_equal(OVERLAP.structure.tilde_weights, [1.0, 0.5, 1.0])
    cg = OVERLAP.structure.group_vectors()
    np.testing.assert_array_equal(cg[0], [1.0, 0.5])
    np.testing.assert_array_equal(cg[1], [0.5, 1.0])


def test_gradient_examples():
    np.testing.assert_allclose(norm_gradient(NormSpec.l2(2), [3, 4]), [0.6, 0.8], atol=1e-15)
    np.testing.assert_allclose(
        norm_gradient(OVERLAP, [1, 1, 1]), [0.8944272, 0.4472136, 0.8944272], atol=1e-7
    )
    g = norm_gradient(GROUP_W, [3, 4, 2])
    np.testing.assert_allclose(g, [math.sqrt(2) * 0.6, math.sqrt(2) * 0.8, 1.0], atol=1e-12)
    np.testing.assert_allclose(g, fd_gradient(lambda v: norm_value(GROUP_W, v), [3, 4, 2]), atol=1e-8)


def test_hessian_examples():
    np.testing.assert_allclose(norm_hessian(NormSpec.l2(2), [1, 0]), [[0, 0], [0, 1]], atol=1e-15)
    H = norm_hessian(NormSpec.l2(2), [3, 4])
    np.testing.assert_allclose(H, [[0.128, -0.096], [-0.096, 0.072]], atol=1e-12)
    x = np.ones(3)
    H = norm_hessian(OVERLAP, x)
    fd = fd_jacobian(lambda v: norm_gradient(OVERLAP, v), x)
    np.testing.assert_allclose(H, fd, atol=1e-5)
    # off-diagonal entries for coordinates sharing a group are negative
    assert H[0, 1] < 0 and H[1, 2] < 0 and H[0, 2] == 0.0


def test_analytic_dual_examples():
    assert analytic_dual(NormSpec.l1(3), [1, -2, 3]) == 3.0
    assert analytic_dual(NormSpec.l2(2), [3, 4]) == 5.0
    assert analytic_dual(NormSpec.linf(3), [1, -2, 3]) == 6.0
    assert analytic_dual(GROUP_W, [3, 4, 2]) == pytest.approx(5 / math.sqrt(2), abs=1e-12)
    with pytest.raises(NoClosedForm):
        analytic_dual(OVERLAP, [1, 2, 3])


def test_validate_groups_examples():
    r = validate_groups(GroupStructure(3, [[0, 1], [1, 2]]))
    assert r.valid_for_overlap and not r.valid_for_partition
    assert r.shared == (1,)
    r = validate_groups(GroupStructure(3, [[0], [2]]))
    assert not r.valid_for_overlap and r.uncovered == (1,)
    r = validate_groups(GroupStructure(3, [[0, 1, 2]]))
    assert r.valid_for_overlap and r.valid_for_partition


def test_validate_groups_other_problems():
    r = validate_groups(GroupStructure(3, [[0, 1, 2], [], [0, 0], [5]]))
    assert r.empty_groups == (1,)
    assert r.duplicated == (2,)
    assert r.out_of_range == (5,)
    assert len(r.problems()) >= 3
    r = validate_groups(GroupStructure(2, [[0, 1]], coordinate_weights=[0.5, 1.0]))
    assert not r.weights_consistent


def test_invalid_specs_rejected():
    with pytest.raises(InvalidGroupStructure):
        NormSpec.group_l2(3, [[0, 1], [1, 2]])
    with pytest.raises(InvalidGroupStructure):
        NormSpec.overlap_group_l2(3, [[0], [2]])
    with pytest.raises(InvalidGroupStructure):
        NormSpec.group_l2(3, [[0, 1], [2]], [1.0, -1.0])
    with pytest.raises(InvalidGroupStructure):
        NormSpec(NormKind.GROUP_L2, 3)
    with pytest.raises(InvalidGroupStructure):
        NormSpec(NormKind.L2, 3, GroupStructure(3, [[0, 1, 2]]))
    with pytest.raises(DimensionMismatch):
        NormSpec.l2(0)


def test_error_kinds():
    with pytest.raises(UnsupportedNorm):
        norm_gradient(NormSpec.l1(2), [1, 2])
    with pytest.raises(UnsupportedNorm):
        norm_hessian(NormSpec.linf(2), [1, 2])
    with pytest.raises(NonDifferentiablePoint):
        norm_gradient(NormSpec.l2(2), [0, 0])
    with pytest.raises(NonDifferentiablePoint):
        norm_gradient(GROUP_W, [0, 0, 1])
    with pytest.raises(DimensionMismatch):
        norm_value(NormSpec.l2(3), [1, 2])


def test_overlap_zero_coordinate_is_differentiable_if_groups_nonzero():
    g = norm_gradient(OVERLAP, [1.0, 0.0, 1.0])
    assert np.all(np.isfinite(g)) and g[1] == 0.0


# ---------------------------------------------------------------- JSON


def test_json_one_based(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"kind": "group_l2", "p": 3, "groups": [[1, 2], [3]], "weights": [2, 1]}))
    spec = load_norm_spec(path)
    assert spec.structure.groups == ((0, 1), (2,))
    assert norm_value(spec, [3, 4, 2]) == pytest.approx(9.0710678, abs=1e-7)
    assert spec.to_dict()["groups"] == [[1, 2], [3]]
    assert norm_spec_from_dict(spec.to_dict()).structure.groups == spec.structure.groups


def test_json_kind_inferred():
    assert norm_spec_from_dict({"p": 3, "groups": [[1, 2], [2, 3]]}).kind is NormKind.OVERLAP_GROUP_L2
    assert norm_spec_from_dict({"p": 3, "groups": [[1, 2], [3]], "weights": [2, 1]}).kind is NormKind.GROUP_L2
    assert norm_spec_from_dict({"p": 3}).kind is NormKind.L2


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"kind": "nope", "p": 2},
        {"kind": "l2", "p": 0},
        {"kind": "l2", "p": 2, "groups": [[1, 2]]},
        {"kind": "group_l2", "p": 2},
        {"kind": "group_l2", "p": 2, "groups": [[1, 2.5]]},
        {"kind": "group_l2", "p": 2, "groups": [[0, 1]]},
        {"kind": "overlap_group_l2", "p": 2, "groups": [[1, 2]], "weights": [1]},
        {"kind": "l2", "p": 2, "extra": 1},
    ],
)
def test_json_rejects(doc):
    with pytest.raises(InvalidGroupStructure):
        norm_spec_from_dict(doc)


# ---------------------------------------------------------------- restriction


def test_restrict_keeps_parent_weights():
    spec = NormSpec.overlap_group_l2(4, [[0, 1], [1, 2], [2, 3]])
    sub = restrict_spec(spec, [2, 3])
    np.testing.assert_array_equal(sub.structure.tilde_weights, [0.5, 1.0])
    # equals the parent norm on vectors supported on the kept coordinates
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.standard_normal(2)
        full = np.zeros(4)
        full[[2, 3]] = v
        assert norm_value(sub, v) == pytest.approx(norm_value(spec, full), rel=1e-14)
    g = NormSpec.group_l2(5, [[0, 1], [2, 3, 4]])
    sg = restrict_spec(g, [3, 4])
    np.testing.assert_array_equal(sg.structure.weights, [3.0])
    assert restrict_spec(NormSpec.l2(5), [0, 1]).p == 2


# ---------------------------------------------------------------- properties


@pytest.mark.parametrize("name", list(small_specs()))
@given(seed=seeds, alpha=st.floats(-1e3, 1e3, allow_nan=False))
def test_homogeneity(name, seed, alpha):
    spec = small_specs()[name]
    x = np.random.default_rng(seed).standard_normal(spec.p)
    assert norm_value(spec, alpha * x) == pytest.approx(abs(alpha) * norm_value(spec, x), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("name", list(small_specs()))
@given(seed=seeds)
def test_triangle_inequality(name, seed):
    spec = small_specs()[name]
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, spec.p)) * rng.exponential(3, size=2)[:, None]
    assert norm_value(spec, x + y) <= norm_value(spec, x) + norm_value(spec, y) + 1e-12


@pytest.mark.parametrize("name", list(small_specs()))
def test_definiteness(name):
    spec = small_specs()[name]
    assert norm_value(spec, np.zeros(spec.p)) == 0.0
    assert norm_value(spec, np.eye(spec.p)[0] * 1e-300) > 0


@pytest.mark.parametrize("name", SMOOTH)
@given(seed=seeds)
def test_euler_identity(name, seed):
    spec = small_specs()[name]
    x = rng_points(spec, 1, seed)[0]
    assert float(norm_gradient(spec, x) @ x) == pytest.approx(norm_value(spec, x), rel=1e-10)
    # the Hessian is homogeneous of degree -1, so H x = 0
    np.testing.assert_allclose(norm_hessian(spec, x) @ x, 0.0, atol=1e-12)


@pytest.mark.parametrize("name", SMOOTH)
def test_gradient_finite_differences(name):
    spec = small_specs()[name]
    for x in rng_points(spec, 100, 1):
        fd = fd_gradient(lambda v: norm_value(spec, v), x)
        assert rel_close(norm_gradient(spec, x), fd, 1e-5) <= 1.0


@pytest.mark.parametrize("name", SMOOTH)
def test_hessian_finite_differences(name):
    spec = small_specs()[name]
    for x in rng_points(spec, 100, 2):
        fd = fd_jacobian(lambda v: norm_gradient(spec, v), x)
        H = norm_hessian(spec, x)
        assert rel_close(H, fd, 1e-4) <= 1.0
        np.testing.assert_array_equal(H, H.T)


@pytest.mark.parametrize("name", SMOOTH)
@given(seed=seeds)
def test_hessian_psd_and_majorizer(name, seed):
    spec = small_specs()[name]
    x = rng_points(spec, 1, seed)[0]
    H = norm_hessian(spec, x)
    M = norm_majorizer(spec, x)
    assert np.linalg.eigvalsh(H).min() >= -1e-8
    assert np.linalg.eigvalsh(M - H).min() >= -1e-8 * np.abs(M).max()
    np.testing.assert_allclose(M @ x, norm_gradient(spec, x), rtol=1e-12, atol=1e-14)


@given(seed=seeds)
def test_overlap_reduces_to_group(seed):
    groups = [[0, 1], [2, 3, 4], [5]]
    ov = NormSpec.overlap_group_l2(6, groups)
    gr = NormSpec.group_l2(6, groups, [1.0, 1.0, 1.0])
    assert np.all(ov.structure.tilde_weights == 1.0)
    x = np.random.default_rng(seed).standard_normal(6)
    assert norm_value(ov, x) == pytest.approx(norm_value(gr, x), rel=1e-12)


@given(seed=seeds)
def test_l1_linf_dual_pair(seed):
    x = np.random.default_rng(seed).standard_normal(5)
    assert analytic_dual(NormSpec.l1(5), x) == norm_value(NormSpec.linf(5), x)
    assert analytic_dual(NormSpec.linf(5), x) == norm_value(NormSpec.l1(5), x)


@pytest.mark.parametrize("name", ["l1", "l2", "linf", "group_l2", "group_l2_w"])
@given(seed=seeds)
def test_analytic_dual_is_a_sup(name, seed):
    """x'z <= dual(x) * norm(z) (Holder) for random z."""
    spec = small_specs()[name]
    rng = np.random.default_rng(seed)
    x, z = rng.standard_normal((2, spec.p))
    assert x @ z <= analytic_dual(spec, x) * norm_value(spec, z) + 1e-12
