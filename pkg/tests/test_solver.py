import numpy as np
import pytest
from hypothesis import given, strategies as st

from hopflab import maps, mesh
from hopflab.forms import Cochain, bump_area_form, d, project_form, zeros
from hopflab.solver import NonExactError, exactness_check, least_norm_primitive, lp_sup_primitive, mass_matrix

S3_L1 = mesh.gen_sphere(3, 1)


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([1, 2]))
def test_exact_target_recovered(seed, k):
    beta0 = Cochain(k - 1, np.random.default_rng(seed).standard_normal(S3_L1.count(k - 1)), S3_L1)
    target = d(beta0)
    sol = least_norm_primitive(target)
    assert sol.residual < 1e-10
    assert np.abs(d(sol.primitive).values - target.values).max() < 1e-8
    assert sol.sup_ratio > 0 and np.isfinite(sol.sup_ratio)


def test_least_norm_is_orthogonal_to_closed_forms():
    rng = np.random.default_rng(1)
    target = d(Cochain(1, rng.standard_normal(S3_L1.count(1)), S3_L1))
    prim = least_norm_primitive(target).primitive
    # every exact 1-cochain d(f) is mass-orthogonal to the least-norm primitive
    df = d(Cochain(0, rng.standard_normal(S3_L1.count(0)), S3_L1)).values
    m = mass_matrix(S3_L1, 1)
    assert abs(df @ (m @ prim.values)) < 1e-8 * np.sqrt(df @ (m @ df)) * np.sqrt(prim.values @ (m @ prim.values))


def test_area_form_is_not_exact(s2_l2):
    target = project_form(maps.identity(maps.sphere(2)), bump_area_form(), s2_l2)
    with pytest.raises(NonExactError) as err:
        least_norm_primitive(target)
    assert abs(err.value.obstruction - 1) < 1e-2
    with pytest.raises(NonExactError):
        lp_sup_primitive(target)


def test_area_form_obstruction_close_to_one():
    target = project_form(maps.identity(maps.sphere(2)), bump_area_form(), mesh.gen_sphere(2, 2))
    assert abs(exactness_check(target) - 1) < 1e-3


def test_exactness_check_of_exact_and_projected():
    rng = np.random.default_rng(2)
    assert exactness_check(d(Cochain(1, rng.standard_normal(S3_L1.count(1)), S3_L1))) < 1e-10
    s2 = mesh.gen_sphere(2, 1)
    a = Cochain(2, rng.standard_normal(s2.count(2)), s2)
    # a top cochain with zero total is exact on a closed surface
    vol = s2.volumes(2)
    exact = a - Cochain(2, vol * a.total() / vol.sum(), s2)
    assert exactness_check(exact) < 1e-8


def test_zero_target():
    sol = least_norm_primitive(zeros(S3_L1, 2))
    assert sol.sup_ratio == 0 and not np.any(sol.primitive.values)
    lp = lp_sup_primitive(zeros(S3_L1, 2))
    assert lp.sup_ratio == 0


def test_zero_degree_has_no_primitive():
    with pytest.raises(ValueError):
        least_norm_primitive(zeros(S3_L1, 0))


@pytest.mark.parametrize("seed", range(3))
def test_lp_optimal_in_its_objective(seed):
    rng = np.random.default_rng(seed)
    target = d(Cochain(1, rng.standard_normal(S3_L1.count(1)), S3_L1))
    ln = least_norm_primitive(target)
    lp = lp_sup_primitive(target)
    assert np.abs(d(lp.primitive).values - target.values).max() < 1e-6
    assert lp.density_ratio <= ln.density_ratio * (1 + 1e-7)


def test_hopf_pullback_sup_ratio_stable_under_refinement():
    ratios = []
    for level in (2, 4):
        c = mesh.gen_sphere(3, level)
        sol = least_norm_primitive(project_form(maps.i_hopf(), bump_area_form(), c, 6), tol=1e-3)
        ratios.append(sol.sup_ratio)
    assert 0.5 <= ratios[1] / ratios[0] <= 2
