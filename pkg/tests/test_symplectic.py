import numpy as np
import pytest
from scipy.integrate import quad

from theta_bundle.bundles import bundle_from_type, table_representatives
from theta_bundle.errors import ChartDegenerate, NotACycle
from theta_bundle.sampling import cube_grid, random_points
from theta_bundle.symplectic import (
    REFERENCE_FORM,
    CycleSpec,
    TwoFormMatrix,
    chern_pairing,
    closedness_residual,
    cohomology_class_report,
    factor_derivatives,
    fs_form_chart,
    fs_form_homogeneous,
    fs_pullback,
    fs_pullback_field,
    nondegeneracy_check,
    pfaffian,
    pfaffian_det_mismatch,
    period_integral,
    standard_cycle,
)

C1 = bundle_from_type("C", 1)
B2 = bundle_from_type("B2")
REPS = table_representatives()


def antisym(rng):
    a = rng.normal(size=(4, 4))
    return a - a.T


def test_two_form_validation():
    with pytest.raises(ValueError):
        TwoFormMatrix(np.eye(4))
    assert REFERENCE_FORM.entry("x", "y") == 1 and REFERENCE_FORM.entry("t", "s") == -1


def test_pfaffian_examples():
    assert nondegeneracy_check(REFERENCE_FORM) == 1
    mu, nu, f, g = 0.7, -1.3, 2.1, 0.4
    M = np.zeros((4, 4))
    M[0, 1], M[2, 3], M[2, 0], M[3, 0] = mu, nu, f, g
    M = M - M.T
    assert abs(nondegeneracy_check(TwoFormMatrix(M)) - mu * nu) < 1e-15
    D = np.zeros((4, 4))
    D[0, 1], D[1, 0] = 1, -1
    assert nondegeneracy_check(TwoFormMatrix(D)) == 0


def test_pfaffian_squares_to_determinant():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = antisym(rng)
        assert abs(pfaffian(M) ** 2 - np.linalg.det(M)) < 1e-12 * max(1, abs(np.linalg.det(M)))
        assert pfaffian_det_mismatch(TwoFormMatrix(M)) < 1e-12


def test_pullback_is_antisymmetric_and_chart_free():
    P = random_points(10, seed=1)
    (F, dF), (G, dG) = factor_derivatives(C1, 3, P)
    assert np.allclose(fs_form_chart(F, dF), fs_form_homogeneous(F, dF), atol=1e-12)
    assert np.allclose(fs_form_chart(G, dG), fs_form_homogeneous(G, dG), atol=1e-12)
    W = fs_pullback_field(C1, 3, P)
    assert np.max(np.abs(W + np.swapaxes(W, -1, -2))) < 1e-12 * np.max(np.abs(W))


def test_line_has_unit_area():
    # P^1 in the affine coordinate z: the form is dx^dy / (pi (1 + |z|^2)^2); integrate in polar coordinates
    area, _ = quad(lambda r: 2 * np.pi * r / (np.pi * (1 + r * r) ** 2), 0, np.inf)
    assert abs(area - 1) < 1e-12
    # same density from the chart formula at z = 0.3 + 0.4i
    Z = np.array([1.0, 0.3 + 0.4j])
    dZ = np.zeros((4, 2), complex)
    dZ[0, 1], dZ[1, 1] = 1, 1j
    form = fs_form_chart(Z, dZ)
    assert abs(form[0, 1] - 1 / (np.pi * (1 + 0.25) ** 2)) < 1e-15


def test_k1_pullback_vanishes():
    W = fs_pullback(bundle_from_type("A"), 1, [0.1, 0.2, 0.3, 0.4])
    assert np.array_equal(W.entries, np.zeros((4, 4)))


def test_chart_degenerate():
    Z = np.zeros(3, complex)
    with pytest.raises(ChartDegenerate):
        fs_form_chart(Z, np.zeros((4, 3), complex))


def test_b2_block_structure():
    for p in random_points(5, seed=2):
        W = fs_pullback(B2, 3, p)
        assert abs(W.entry("x", "y")) > 1e-6 and abs(W.entry("s", "t")) > 1e-6
        # omega constant on B2: no mixed terms between base and fiber
        assert abs(W.entry("y", "s")) < 1e-9 and abs(W.entry("y", "t")) < 1e-9


def test_pullback_second_order_in_step():
    p = np.array([0.31, 0.27, 0.62, 0.44])
    ref = fs_pullback_field(C1, 3, p, 1e-4)
    e1 = np.max(np.abs(fs_pullback_field(C1, 3, p, 4e-2) - ref))
    e2 = np.max(np.abs(fs_pullback_field(C1, 3, p, 2e-2) - ref))
    assert 3.5 < e1 / e2 < 4.5


@pytest.mark.parametrize("bundle", [C1, B2], ids=str)
def test_pfaffian_nonzero_on_grid(bundle):
    W = fs_pullback_field(bundle, 3, cube_grid(5))
    scale = np.max(np.abs(W), axis=(-1, -2)) ** 2
    assert np.min(np.abs(pfaffian(W)) / scale) > 1e-6


def test_closedness():
    p = np.array([0.31, 0.27, 0.62, 0.44])
    r1 = closedness_residual(C1, 3, p, 2e-3)
    r2 = closedness_residual(C1, 3, p, 1e-3)
    assert r2 < 1e-4
    assert 3.0 < r1 / r2 < 5.0
    assert closedness_residual(B2, 3, p) < 1e-4


def test_cycles():
    assert standard_cycle("T_cd").name == "T_cd"
    with pytest.raises(ValueError):
        standard_cycle("T_abc")
    with pytest.raises(NotACycle):
        CycleSpec("a", "d").axes
    with pytest.raises(NotACycle):
        standard_cycle("T_ac").validate(B2)
    with pytest.raises(NotACycle):
        standard_cycle("T_ab", (0.25, 0.35, 0.1, 0.2)).validate(B2)
    standard_cycle("T_ac").validate(C1)
    standard_cycle("T_bd").validate(C1)


def test_reference_periods():
    assert period_integral(C1, 3, standard_cycle("T_cd"), 10, form="reference") == 1
    assert period_integral(C1, 3, standard_cycle("T_bd"), 10, form="reference") == 0


@pytest.mark.parametrize("bundle,k,name,expected", [
    (B2, 3, "T_cd", 3), (B2, 3, "T_ab", 3), (C1, 3, "T_ab", 3), (C1, 3, "T_cd", 3),
    (C1, 3, "T_ac", 0), (C1, 3, "T_bd", 0), (B2, 2, "T_ab", 2),
])
def test_periods(bundle, k, name, expected):
    assert abs(period_integral(bundle, k, standard_cycle(name), 60) - expected) < 1e-4


def test_periods_converge_fast():
    cyc = standard_cycle("T_ab")
    errs = [abs(period_integral(C1, 3, cyc, n) - 3) for n in (4, 8, 16)]
    assert errs[1] < errs[0] and errs[2] < 1e-8


@pytest.mark.parametrize("bundle", REPS, ids=str)
@pytest.mark.parametrize("name", ["T_ab", "T_cd"])
def test_chern_pairings_are_one(bundle, name):
    for u in random_points(10, seed=3):
        ce = chern_pairing(bundle, standard_cycle(name), u)
        assert ce.nearest_integer == 1 and ce.deviation < 1e-9 and ce.branch_residual < 1e-9


@pytest.mark.parametrize("name", ["T_ac", "T_bd"])
def test_chern_extra_cycles_vanish(name):
    for u in random_points(10, seed=4):
        ce = chern_pairing(C1, standard_cycle(name), u)
        assert ce.nearest_integer == 0 and ce.deviation < 1e-9


def test_chern_needs_commuting_pair():
    with pytest.raises(NotACycle):
        chern_pairing(B2, standard_cycle("T_ac"))


def test_cohomology_report():
    rep = cohomology_class_report(C1, 3, resolution=40)
    assert set(rep.periods) == {"T_ab", "T_cd", "T_ac", "T_bd"}
    assert rep.verdict == "pass" and rep.chern == {"T_ab": 1, "T_cd": 1, "T_ac": 0, "T_bd": 0}
    b2 = cohomology_class_report(B2, 4, resolution=40)
    assert b2.verdict == "pass" and abs(b2.periods["T_ab"] - 4) < 1e-4 and abs(b2.periods["T_cd"] - 4) < 1e-4
    edge = cohomology_class_report(C1, 1, resolution=8)
    assert edge.degenerate_factors and edge.periods["T_ab"] == 0
