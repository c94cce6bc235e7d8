import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from theta_bundle.bundles import (
    GENERATORS,
    TABLE_TAGS,
    GroupElement,
    MonodromyPair,
    bundle_from_type,
    classify,
    gamma_action,
    hyperbolic_data,
    left_invariant_coframe,
    load_bundle_spec,
    omega,
    omega_derivative,
    omega_transform_check,
    reduce_to_cube,
    relator_words,
    table_representatives,
    word_element,
)
from theta_bundle.errors import InvalidMonodromy, NonRealPower, Unclassified

coords = st.floats(-3.0, 3.0, allow_nan=False)
points = st.tuples(coords, coords, coords, coords).map(np.array)
elements = st.builds(GroupElement, *(st.integers(-3, 3) for _ in range(4)))


def test_classify_rows():
    assert classify(MonodromyPair(((1, 0), (0, 1)), ((1, 0), (0, 1)))).tag == "A"
    c = classify(MonodromyPair(((1, 1), (0, 1)), ((1, 0), (0, 1))))
    assert (c.tag, c.k) == ("C", 1)
    assert classify(MonodromyPair(((2, 1), (1, 1)), ((1, 0), (0, 1)))).tag == "F"
    assert classify(MonodromyPair(((2, 1), (1, 1)), ((-1, 0), (0, -1)))).tag == "G"
    assert classify(MonodromyPair(((1, 3), (0, 1)), ((-1, 0), (0, -1)))).k == 3


def test_classify_rejects():
    with pytest.raises(Unclassified):
        classify(MonodromyPair(((1, 1), (0, 1)), ((1, 2), (0, 1))))
    with pytest.raises(Unclassified):
        classify(MonodromyPair(((0, -1), (1, 0)), ((-1, 0), (0, -1))))
    with pytest.raises(InvalidMonodromy):
        MonodromyPair(((2, 0), (0, 1)), ((1, 0), (0, 1)))
    with pytest.raises(InvalidMonodromy):
        MonodromyPair(((1, 1), (0, 1)), ((1, 0), (1, 1)))


def test_representatives_roundtrip():
    reps = table_representatives()
    assert [b.tag for b in reps] == list(TABLE_TAGS)
    for b in reps:
        again = classify(MonodromyPair(b.A, b.B))
        assert again == b


def test_bundle_from_type_validation():
    with pytest.raises(Unclassified):
        bundle_from_type("C")
    with pytest.raises(Unclassified):
        bundle_from_type("C", 0)
    with pytest.raises(Unclassified):
        bundle_from_type("B2", 1)
    with pytest.raises(Unclassified):
        bundle_from_type("Z")
    with pytest.raises(Unclassified):
        bundle_from_type("F", A=((1, 1), (0, 1)))
    assert bundle_from_type("F", A=((3, 1), (2, 1))).A == ((3, 1), (2, 1))


def test_load_bundle_spec(tmp_path):
    assert load_bundle_spec({"type": "C", "k": 2}).k == 2
    assert load_bundle_spec('{"A": [[0, -1], [1, 0]], "B": [[1, 0], [0, 1]]}').tag == "B2"
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"type": "G"}))
    assert load_bundle_spec(path).tag == "G"
    with pytest.raises(Unclassified):
        load_bundle_spec("{not json")
    with pytest.raises(Unclassified):
        load_bundle_spec({"k": 1})


def test_gamma_action_examples():
    kt = bundle_from_type("C", 1)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.array_equal(gamma_action(GroupElement(), p, kt), p)
    assert np.allclose(gamma_action(GENERATORS["c"], p, kt), [0.1, 0.2, 1.3, 0.4])
    assert np.allclose(gamma_action(GENERATORS["a"], [0, 0, 0.2, 0.5], kt), [1, 0, 0.7, 0.5])
    e = bundle_from_type("E", 1)
    assert np.allclose(gamma_action(GENERATORS["b"], p, e), [0.1, 1.2, -0.3, -0.4])


@pytest.mark.parametrize("tag", TABLE_TAGS)
@given(g=elements, h=elements, p=points)
def test_action_is_a_homomorphism(tag, g, h, p):
    b = table_representatives()[TABLE_TAGS.index(tag)]
    lhs = gamma_action(g.mul(h, b), p, b)
    rhs = gamma_action(g, gamma_action(h, p, b), b)
    assert np.allclose(lhs, rhs, atol=1e-9)


@pytest.mark.parametrize("tag", TABLE_TAGS)
@given(g=elements, p=points)
def test_inverse(tag, g, p):
    b = table_representatives()[TABLE_TAGS.index(tag)]
    assert g.mul(g.inverse(b), b).is_identity()
    assert np.allclose(gamma_action(g.inverse(b), gamma_action(g, p, b), b), p, atol=1e-9)


@pytest.mark.parametrize("bundle", table_representatives() + [bundle_from_type("C", 3), bundle_from_type("D", -2)],
                         ids=str)
def test_relators_fix_points_exactly(bundle):
    rng = np.random.default_rng(0)
    P = rng.integers(-4, 5, size=(20, 4)).astype(float)
    for name, word in relator_words(bundle).items():
        g = word_element(word, bundle)
        assert g.is_identity(), name
        # act syllable by syllable (rightmost first)
        Q = P.copy()
        for gen, n in reversed(word):
            step = GENERATORS[gen] if n > 0 else GENERATORS[gen].inverse(bundle)
            for _ in range(abs(n)):
                Q = gamma_action(step, Q, bundle)
        assert np.array_equal(Q, P), name


def test_omega_table_values():
    assert omega(bundle_from_type("B2"), 0.37) == 1j
    assert omega(bundle_from_type("B4"), -1.2) == 1j
    assert omega(bundle_from_type("A"), 0.5) == 1j
    assert abs(omega(bundle_from_type("B1"), 0.1) - complex(-0.5, math.sqrt(3) / 2)) < 1e-15
    assert abs(omega(bundle_from_type("C", 2), 0.5) - (-1 + 1j)) < 1e-15
    assert abs(omega(bundle_from_type("D", 2), 0.5) - (1 + 1j)) < 1e-15


def test_hyperbolic_omega_against_eigensolver():
    f = bundle_from_type("F")
    h = hyperbolic_data(f)
    w, V = np.linalg.eig(f.A_np.T.astype(float))
    order = np.argsort(-w.real)
    lam = w.real[order[0]]
    vp, vm = V[:, order[0]].real, V[:, order[1]].real
    vm = vm / (vp[0] * vm[1] - vm[0] * vp[1])
    assert abs(h.lam - lam) < 1e-12
    assert abs(h.u_plus * h.v_minus - h.u_minus * h.v_plus - 1) < 1e-12
    x = 0.3
    direct = (lam**-x * vp[1] + 1j * lam**x * vm[1]) / (lam**-x * vp[0] + 1j * lam**x * vm[0])
    assert abs(omega(f, x) - direct) < 1e-12
    im_formula = 1.0 / ((lam**-x * vp[0]) ** 2 + (lam**x * vm[0]) ** 2)
    assert abs(omega(f, x).imag - im_formula) < 1e-12


@pytest.mark.parametrize("bundle", table_representatives(), ids=str)
def test_omega_in_upper_half_plane(bundle):
    x = np.linspace(-2, 2, 1000)
    assert np.all(np.asarray(omega(bundle, x)).imag > 0)


@pytest.mark.parametrize("bundle", table_representatives(), ids=str)
def test_omega_derivative_matches_difference(bundle):
    x = np.linspace(-1, 1, 11)
    h = 1e-6
    fd = (omega(bundle, x + h) - omega(bundle, x - h)) / (2 * h)
    assert np.allclose(omega_derivative(bundle, x), fd, atol=1e-7)


@pytest.mark.parametrize("bundle", table_representatives(), ids=str)
def test_omega_transform(bundle):
    rng = np.random.default_rng(5)
    P = rng.uniform(-1, 1, (50, 4))
    r_omega, r_z = omega_transform_check(bundle, P)
    assert r_omega < 1e-10 and r_z < 1e-10


def test_omega_transform_examples():
    assert max(omega_transform_check(bundle_from_type("C", 1), [0.3, 0, 0.2, 0.5])) < 1e-12
    assert max(omega_transform_check(bundle_from_type("B2"), [0, 0, 0.1, 0.7])) < 1e-12


def test_coframe_examples():
    for b in table_representatives():
        assert np.array_equal(left_invariant_coframe(b, 0, 0), np.eye(2))
    c = bundle_from_type("C", 2)
    assert np.allclose(left_invariant_coframe(c, 0.4, 0.3), [[1, -0.8], [0, 1]])
    assert np.array_equal(left_invariant_coframe(bundle_from_type("F"), 1, 0), [[1, -1], [-1, 2]])


@pytest.mark.parametrize("tag", ["C", "F", "A"])
def test_coframe_cocycle(tag):
    b = bundle_from_type(tag, 1 if tag == "C" else None)
    Ainv = np.linalg.inv(b.A_np.astype(float))
    for x in (-0.7, 0.2, 0.55):
        M0 = left_invariant_coframe(b, x, 0.3)
        M1 = left_invariant_coframe(b, x + 1, 0.3)
        assert np.allclose(M1, Ainv @ M0, atol=1e-12)


def test_coframe_non_real_powers():
    with pytest.raises(NonRealPower):
        left_invariant_coframe(bundle_from_type("B2"), 0.5, 0)
    with pytest.raises(NonRealPower):
        left_invariant_coframe(bundle_from_type("E", 1), 0.2, 0.5)
    with pytest.raises(NonRealPower):
        left_invariant_coframe(bundle_from_type("D", 1), 0.2, 0)
    assert left_invariant_coframe(bundle_from_type("E", 1), 0.2, 1).shape == (2, 2)


@pytest.mark.parametrize("bundle", table_representatives(), ids=str)
@given(p=points)
def test_reduce_to_cube(bundle, p):
    q = reduce_to_cube(bundle, p)
    assert np.all(q >= 0) and np.all(q < 1)
    assert np.allclose(reduce_to_cube(bundle, q), q)
