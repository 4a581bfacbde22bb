import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hopflab import maps, mesh
from hopflab.forms import (Cochain, EuclideanForm, bump_area_form, comass_estimate, d, integrate_wedge, load_cochain,
                           project_form, pullback_field, save_cochain, stokes_check, sup_norm, whitney_eval,
                           zeros)


S3_L1 = mesh.gen_sphere(3, 1)


@pytest.fixture(scope="module")
def omega():
    return bump_area_form()


@pytest.fixture(scope="module")
def area_cochain(s2_l4, omega):
    return project_form(maps.identity(maps.sphere(2)), omega, s2_l4, 2)


def test_area_form_normalized(area_cochain):
    assert abs(area_cochain.total() - 1) < 1e-3


def test_area_form_vanishes_outside_support(omega):
    v = np.random.default_rng(0).standard_normal((50, 3))
    v *= 2 / np.linalg.norm(v, axis=1, keepdims=True)
    assert np.all(omega(v) == 0)


def test_area_form_antisymmetric(omega):
    v = np.random.default_rng(1).standard_normal((100, 3))
    w = omega(v)
    assert np.abs(w + np.swapaxes(w, 1, 2)).max() < 1e-12


def test_domega_matches_finite_differences(omega):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((20, 3))
    x *= rng.uniform(0.6, 1.4, (20, 1)) / np.linalg.norm(x, axis=1, keepdims=True)
    h = 1e-5
    grads = np.stack([(omega(x + h * e) - omega(x - h * e)) / (2 * h) for e in np.eye(3)], axis=1)
    # (d omega)_{ijk} = partial_i w_jk - partial_j w_ik + partial_k w_ij
    fd = grads - np.transpose(grads, (0, 2, 1, 3)) + np.transpose(grads, (0, 2, 3, 1))
    assert np.abs(fd - omega.exterior_derivative(x)).max() < 1e-6


def test_d_of_zero_cochain_edges(s2_l2):
    f = np.random.default_rng(3).standard_normal(s2_l2.count(0))
    df = d(Cochain(0, f, s2_l2))
    e = s2_l2.simplices[1]
    assert np.allclose(df.values, f[e[:, 1]] - f[e[:, 0]], rtol=0, atol=1e-15)


@given(st.integers(0, 2 ** 31 - 1))
def test_dd_zero_random(seed):
    s3_l1 = S3_L1
    rng = np.random.default_rng(seed)
    for k in range(2):
        a = Cochain(k, rng.standard_normal(s3_l1.count(k)), s3_l1)
        assert np.abs(d(d(a)).values).max() < 1e-12


def test_d_top_degree_raises(s2_l2):
    with pytest.raises(ValueError, match="top degree"):
        d(zeros(s2_l2, 2))


def test_d_of_zeros(s3_l1):
    assert not np.any(d(zeros(s3_l1, 1)).values)


def test_constant_map_projects_to_zero(s2_l2, omega):
    c = project_form(maps.constant_map([0.0, 0.0, 1.0], maps.sphere(2)), omega, s2_l2)
    assert not np.any(c.values)


def test_project_form_linear_in_omega(s2_l2, omega):
    ident = maps.identity(maps.sphere(2))
    a = project_form(ident, omega, s2_l2)
    b = project_form(ident, omega.scaled(2.5), s2_l2)
    assert np.allclose(b.values, 2.5 * a.values, rtol=1e-13, atol=0)


def test_hopf_pullback_closed_under_refinement(omega):
    defects = []
    for level in (1, 2):
        c = mesh.gen_sphere(3, level)
        p = project_form(maps.i_hopf(), omega, c, 6)
        defects.append(np.abs(d(p).values).max())
    assert defects[1] < defects[0]


def test_whitney_gradient_identity(s2_l2):
    f = np.random.default_rng(4).standard_normal(s2_l2.count(0))
    df = d(Cochain(0, f, s2_l2))
    sigma = 7
    verts = s2_l2.simplices[2][sigma]
    pts = s2_l2.vertices[verts]
    bary = np.array([[1 / 3, 1 / 3, 1 / 3], [0.6, 0.2, 0.2]])
    w = whitney_eval(df, sigma, bary)
    # on each edge of sigma the interpolant reproduces the difference of f
    for i in range(3):
        for j in range(i + 1, 3):
            vec = pts[j] - pts[i]
            assert np.allclose(w @ vec, f[verts[j]] - f[verts[i]], atol=1e-12)


def test_whitney_duality_single_edge(s2_l2):
    sigma = 3
    verts = s2_l2.simplices[2][sigma]
    edge = np.flatnonzero(np.all(s2_l2.simplices[1] == verts[[0, 1]], axis=1))[0]
    vals = np.zeros(s2_l2.count(1))
    vals[edge] = 0.7
    a = Cochain(1, vals, s2_l2)
    g, gw = np.polynomial.legendre.leggauss(4)
    t = (g + 1) / 2
    bary = np.column_stack([1 - t, t, np.zeros_like(t)])
    w = whitney_eval(a, sigma, bary)
    vec = s2_l2.vertices[verts[1]] - s2_l2.vertices[verts[0]]
    assert abs(np.sum(gw / 2 * (w @ vec)) - 0.7) < 1e-12


def test_whitney_reintegration(s2_l2, omega):
    a = project_form(maps.identity(maps.sphere(2)), omega, s2_l2, 2)
    sigma = 11
    pts = s2_l2.vertices[s2_l2.simplices[2][sigma]]
    w = whitney_eval(a, sigma, np.array([[1 / 3, 1 / 3, 1 / 3]]))[0]
    # the top-degree Whitney form is constant; the sorted-order value times orientation is the cochain value
    val = (pts[1] - pts[0]) @ w @ (pts[2] - pts[0]) / 2
    assert abs(val * s2_l2.orientations[2][sigma] - a.values[sigma]) < 1e-6


def test_integrate_wedge_zero(s2_l2, omega):
    field = pullback_field(maps.identity(maps.sphere(2)), omega, s2_l2)
    assert integrate_wedge(zeros(s2_l2, 0), field, s2_l2) == 0.0


def test_integrate_wedge_degree_mismatch(s2_l2, omega):
    field = pullback_field(maps.identity(maps.sphere(2)), omega, s2_l2)
    with pytest.raises(ValueError, match="degree"):
        integrate_wedge(zeros(s2_l2, 1), field, s2_l2)


def _closed_one_form():
    # d(x1 x2), closed on R^3
    return EuclideanForm(1, 3, lambda x: np.column_stack([x[:, 1], x[:, 0], np.zeros(len(x))]), name="d(x1 x2)")


def test_wedge_with_exact_form_vanishes_under_refinement():
    vals = []
    for level in (2, 3, 4):
        c = mesh.gen_sphere(2, level)
        # the same smooth function sampled on every level
        f = np.sin(3 * c.vertices[:, 0]) + c.vertices[:, 1] * c.vertices[:, 2]
        field = pullback_field(maps.identity(maps.sphere(2)), _closed_one_form(), c)
        vals.append(abs(integrate_wedge(d(Cochain(0, f, c)), field, c)))
    assert vals[-1] < 2e-2
    assert vals[2] <= vals[1] <= vals[0]


def test_integrate_wedge_bilinear(s2_l2):
    rng = np.random.default_rng(9)
    a = Cochain(1, rng.standard_normal(s2_l2.count(1)), s2_l2)
    b = Cochain(1, rng.standard_normal(s2_l2.count(1)), s2_l2)
    field = pullback_field(maps.identity(maps.sphere(2)), _closed_one_form(), s2_l2)
    lhs = integrate_wedge(a * 2.0 + b, field, s2_l2)
    rhs = 2.0 * integrate_wedge(a, field, s2_l2) + integrate_wedge(b, field, s2_l2)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_comass_of_area_form(area_cochain):
    assert abs(comass_estimate(area_cochain) * 4 * math.pi - 1) < 0.02


def test_norms_of_zero(s2_l2):
    z = zeros(s2_l2, 1)
    assert sup_norm(z) == 0 and comass_estimate(z) == 0


@given(st.one_of(st.just(0.0), st.floats(1e-6, 5), st.floats(-5, -1e-6)))
def test_norm_homogeneity(t):
    c = S3_L1
    a = Cochain(2, np.random.default_rng(6).standard_normal(c.count(2)), c)
    assert sup_norm(a * t) == pytest.approx(abs(t) * sup_norm(a), rel=1e-12, abs=1e-300)
    assert comass_estimate(a * t) == pytest.approx(abs(t) * comass_estimate(a), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("seed", range(5))
def test_discrete_stokes_product(product_l0, seed):
    a = Cochain(3, np.random.default_rng(seed).standard_normal(product_l0.count(3)), product_l0)
    bulk, boundary = stokes_check(a)
    assert abs(bulk - boundary) < 1e-9 * (1 + abs(bulk))


def test_stokes_zero_and_closed(product_l0, s3_l1):
    assert stokes_check(zeros(product_l0, 3)) == (0.0, 0.0)
    a = Cochain(2, np.random.default_rng(7).standard_normal(s3_l1.count(2)), s3_l1)
    bulk, boundary = stokes_check(a)
    assert abs(bulk) < 1e-9 and boundary == 0.0


def test_cochain_round_trip(tmp_path, s3_l1):
    a = Cochain(1, np.random.default_rng(8).standard_normal(s3_l1.count(1)), s3_l1)
    save_cochain(a, tmp_path / "a.json")
    b = load_cochain(tmp_path / "a.json", s3_l1)
    assert np.array_equal(a.values, b.values) and b.degree == 1
    with pytest.raises(ValueError, match="different complex"):
        load_cochain(tmp_path / "a.json", mesh.gen_sphere(3, 0))


def test_cochain_length_checked(s3_l1):
    with pytest.raises(ValueError, match="values"):
        Cochain(1, np.zeros(3), s3_l1)
