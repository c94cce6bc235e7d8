import numpy as np
import pytest

from theta_bundle.bundles import GENERATORS, bundle_from_type, gamma_action
from theta_bundle.embedding import (
    ProjectivePoint,
    coordinate_derivatives,
    equivariance_check,
    fs_distance,
    fs_distance_matrix,
    injectivity_scan,
    jacobian_tilde,
    jacobian_tilde_analytic,
    phi_k,
    phi_k_coords,
    rank_check,
)
from theta_bundle.errors import AllSectionsVanish
from theta_bundle.sampling import cube_grid, random_points
from theta_bundle.theta_core import TruncationPolicy

C1 = bundle_from_type("C", 1)
B2 = bundle_from_type("B2")
P0 = np.array([0.1, 0.2, 0.3, 0.4])


def test_fs_distance_basics():
    rng = np.random.default_rng(0)
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    assert fs_distance(v, v) < 1e-15
    assert fs_distance(v, (3 - 4j) * v) < 1e-14
    assert abs(fs_distance([1, 0, 0], [0, 1j, 0]) - np.pi / 2) < 1e-15
    with pytest.raises(ValueError):
        fs_distance([0, 0], [1, 0])
    with pytest.raises(ValueError):
        ProjectivePoint(np.zeros(3))


def test_fs_distance_small_angles_are_accurate():
    u = np.array([1.0, 0, 0], complex)
    v = np.array([1.0, 1e-9, 0], complex)
    assert abs(fs_distance(u, v) - 1e-9) < 1e-20
    D = fs_distance_matrix(np.stack([u, v, [0, 0, 1]]))
    assert abs(D[0, 1] - 1e-9) < 1e-20 and abs(D[0, 2] - np.pi / 2) < 1e-15
    assert np.array_equal(D, D.T)


def test_projective_equality():
    P = ProjectivePoint(np.array([1, 2j, 3]))
    assert P.same_as(ProjectivePoint(np.array([2j, -4, 6j])))
    assert abs(np.linalg.norm(P.normalized()) - 1) < 1e-15


def test_phi_1_is_a_point():
    a, b = phi_k(C1, 1, P0), phi_k(C1, 1, [0.7, 0.4, 0.1, 0.9])
    assert a.coords.shape == (1,) and a.same_as(b)


def test_phi_truncation_stable():
    coarse = phi_k(C1, 3, P0, TruncationPolicy(1e-15))
    fine = phi_k(C1, 3, P0, TruncationPolicy(1e-30, 8001))
    assert coarse.coords.shape == (9,)
    assert fs_distance(coarse, fine) < 1e-10


def test_phi_invariant_under_c():
    c = gamma_action(GENERATORS["c"], P0, C1)
    assert fs_distance(phi_k(C1, 3, P0), phi_k(C1, 3, c)) < 1e-8


def test_phi_rejects_batches_and_vanishing():
    with pytest.raises(ValueError):
        phi_k(C1, 2, cube_grid(2))
    with pytest.raises(AllSectionsVanish):
        phi_k_coords(C1, 1, [0, 0, 0, 0])


@pytest.mark.parametrize("bundle", [C1, B2, bundle_from_type("F")], ids=str)
@pytest.mark.parametrize("k", [2, 3])
def test_c_acts_by_sign(bundle, k):
    rep = equivariance_check(bundle, k, "c", cube_grid(3))
    assert rep.is_projectively_scalar and rep.spread < 1e-9
    assert all(abs(r - (-1) ** k) < 1e-9 for r in rep.induced_ratios)


@pytest.mark.parametrize("gen", "bd")
def test_b_d_act_by_scalars_on_type_c(gen):
    assert equivariance_check(C1, 3, gen, cube_grid(3)).spread < 1e-9


def test_a_on_type_c_is_a_constant_diagonal():
    # a permutes the fiber characteristics up to fixed phases: the induced map on
    # coordinates is diagonal with a constant nonscalar pattern
    rep = equivariance_check(C1, 3, "a", cube_grid(3))
    assert not rep.is_projectively_scalar
    assert rep.pattern_spread < 1e-8
    ratios = np.array(rep.induced_ratios)
    rel = ratios / ratios[0]
    w3 = np.exp(2j * np.pi / 3)
    assert np.allclose(rel[:3], 1, atol=1e-9)
    assert np.allclose(rel[3:6], w3, atol=1e-9)
    # the image of M is still well defined: the pattern is a fixed projective transformation
    k2 = equivariance_check(C1, 2, "a", cube_grid(3))
    assert k2.pattern_spread < 1e-8
    assert np.allclose(np.array(k2.induced_ratios) / k2.induced_ratios[0], [1, 1, 1j, 1j], atol=1e-9)


def test_a_on_b2_mixes_coordinates():
    rep = equivariance_check(B2, 4, "a", cube_grid(3))
    assert not rep.is_projectively_scalar and rep.pattern_spread > 1.0


def test_last_row_vanishes():
    for p in random_points(5, seed=1):
        J = jacobian_tilde(C1, 3, p)
        assert J.shape == (5, 9)
        assert np.max(np.abs(J[4])) < 1e-6 * np.max(np.abs(J[1:4]))


@pytest.mark.parametrize("bundle", [C1, B2, bundle_from_type("F")], ids=str)
def test_difference_rows_match_analytic(bundle):
    for p in random_points(5, seed=2):
        Jf = jacobian_tilde(bundle, 3, p)
        Ja = jacobian_tilde_analytic(bundle, 3, p)
        assert np.max(np.abs(Jf - Ja)) < 1e-6 * max(1.0, np.max(np.abs(Ja)))
        assert np.max(np.abs(Ja[4])) < 1e-10 * max(1.0, np.max(np.abs(Ja)))


def test_difference_rows_second_order():
    p = np.array([0.31, 0.27, 0.62, 0.44])
    exact = jacobian_tilde_analytic(C1, 3, p)[1:4]
    e1 = np.max(np.abs(jacobian_tilde(C1, 3, p, 2e-3)[1:4] - exact))
    e2 = np.max(np.abs(jacobian_tilde(C1, 3, p, 1e-3)[1:4] - exact))
    assert 3.5 < e1 / e2 < 4.5


def test_coordinate_derivative_shapes():
    Z, dZ = coordinate_derivatives(C1, 2, cube_grid(2))
    assert Z.shape == (16, 4) and dZ.shape == (16, 4, 4)


def test_rank_one_is_zero():
    rep = rank_check(C1, 1, P0)
    assert rep.rank_at_tol == 0 and rep.singular_values == [0.0] * 4


@pytest.mark.parametrize("bundle,k", [(C1, 3), (B2, 4)], ids=["C-k3", "B2-k4"])
def test_rank_four(bundle, k):
    for p in random_points(20, seed=7):
        rep = rank_check(bundle, k, p)
        assert rep.rank_at_tol == 4
        assert rep.singular_values == sorted(rep.singular_values, reverse=True)
        assert min(rep.fs_singular_values) > 1e-3


def test_rank_is_chart_independent():
    for p in random_points(10, seed=3):
        a = rank_check(C1, 3, p, pivot="max")
        b = rank_check(C1, 3, p, pivot="second")
        assert a.pivot != b.pivot
        assert a.rank_at_tol == b.rank_at_tol == 4
        assert np.allclose(a.fs_singular_values, b.fs_singular_values, rtol=1e-9)


def test_injectivity_type_c():
    rep = injectivity_scan(C1, 3, 4)
    assert rep.collisions == [] and rep.min_offdiagonal_fs_distance > 0.1
    assert rep.n_points == 256


def test_injectivity_b2_interior():
    rep = injectivity_scan(B2, 4, 3, interior=True)
    assert rep.collisions == [] and rep.min_offdiagonal_fs_distance > 0.1


def test_injectivity_k1_collides():
    rep = injectivity_scan(C1, 1, 3)
    assert len(rep.collisions) == 81 * 80 // 2


def test_injectivity_k2_negative_control():
    assert len(injectivity_scan(C1, 2, 4).collisions) > 0


def test_chart_singular_values_depend_on_pivot():
    # only the rank is chart independent; the raw chart values rescale with the pivot
    p = random_points(1, seed=3)[0]
    a = rank_check(C1, 3, p, pivot="max")
    b = rank_check(C1, 3, p, pivot="second")
    assert not np.allclose(a.singular_values, b.singular_values, rtol=1e-6)
