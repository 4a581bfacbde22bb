import numpy as np
import pytest

from hopflab import hopf, maps, mesh
from hopflab.forms import bump_area_form
from hopflab.solver import NonExactError


@pytest.fixture(scope="module")
def values():
    return {level: hopf.hopf_invariant(maps.i_hopf(), level=level).value for level in (1, 2)}


def test_hopf_value_improves(values):
    assert abs(values[2] - 1) < abs(values[1] - 1)
    assert abs(values[2] - 1) < 0.06


def test_reversed_orientation():
    v = hopf.hopf_invariant(maps.i_hopf_reversed(), level=2).value
    assert abs(v + 1) < 0.06


def test_constant_is_exactly_zero():
    rep = hopf.hopf_invariant(maps.constant_map([0.0, 0.0, 1.0]), level=1)
    assert rep.value == 0.0 and not rep.rank_flag


def test_report_fields():
    rep = hopf.hopf_invariant(maps.i_hopf(), level=1)
    d = rep.to_dict()
    for key in ("value", "closedness_defect", "primitive_residual", "primitive_sup", "mesh_level",
                "quadrature_order"):
        assert key in d
    assert rep.mesh_level == 1 and rep.quadrature_order == hopf.HOPF_QUAD_ORDER
    assert rep.primitive_residual <= hopf.HOPF_EXACT_TOL
    assert not rep.rank_flag


@pytest.mark.parametrize("t", [2.0, -1.0])
def test_quadratic_in_omega(t):
    c = mesh.gen_sphere(3, 1)
    base = hopf.hopf_invariant(maps.i_hopf(), bump_area_form(), c).value
    scaled = hopf.hopf_invariant(maps.i_hopf(), bump_area_form().scaled(t), c).value
    assert abs(scaled - t**2 * base) <= 1e-9 * abs(t**2 * base)


def test_rank_three_map_rejected():
    # F* omega is not closed where DF has rank 3, so the pipeline must refuse it
    F = maps.AnalyticMap("proj", maps.sphere(3), maps.euclidean(3), lambda x: x[:, :3],
                         lambda x: np.broadcast_to(np.eye(3, 4), (len(x), 3, 4)).copy())
    with pytest.raises(NonExactError) as err:
        hopf.hopf_invariant(F, level=1)
    assert err.value.obstruction > 0.5


def test_primitive_independence_trivial_cases():
    c = mesh.gen_sphere(3, 1)
    assert hopf.primitive_independence(maps.i_hopf(), mesh=c, trials=0) == 0.0
    assert hopf.primitive_independence(maps.constant_map([0.0, 0, 1]), mesh=c, trials=3) == 0.0


def test_primitive_independence_decreases():
    a = hopf.primitive_independence(maps.i_hopf(), mesh=mesh.gen_sphere(3, 1), trials=5)
    b = hopf.primitive_independence(maps.i_hopf(), mesh=mesh.gen_sphere(3, 2), trials=5)
    assert b < a < 0.01


def test_linking_oracle():
    assert hopf.linking_oracle(maps.hopf_map()) == 1
    G = maps.compose(maps.hopf_map(), maps.orientation_reversal())
    assert hopf.linking_oracle(G) == -1


def test_linking_oracle_raw_close_to_integer():
    n, raw = hopf.linking_oracle(maps.hopf_map(), return_raw=True)
    assert n == 1 and abs(raw - 1) < 0.05


def test_fibers_match_closed_form_circles():
    loops = hopf.preimage_loops(maps.hopf_map(), (0, 0, 1), hopf.oracle_mesh(3))
    assert len(loops) == 1
    pts = loops[0]
    # the fiber over the north pole is the great circle x2 = x3 = 0
    assert np.abs(pts[:, 2:]).max() < 2e-2
    assert np.abs(np.linalg.norm(pts, axis=1) - 1).max() < 2e-2


def test_gauss_linking_of_hopf_circles():
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    a = np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)])
    b = np.column_stack([1 + np.cos(t), np.zeros_like(t), np.sin(t)])
    assert abs(abs(hopf.gauss_linking(a, b)) - 1) < 1e-3
    far = b + [5, 0, 0]
    assert abs(hopf.gauss_linking(a, far)) < 1e-3


def test_pole_of_equatorial_map_is_not_regular():
    with pytest.raises(hopf.RegularValueError):
        hopf.linking_oracle(maps.equatorial_map(), p=(0, 0, 1), q=(1, 0, 0), level=2)


def test_equal_values_rejected():
    with pytest.raises(ValueError, match="differ"):
        hopf.linking_oracle(maps.hopf_map(), p=(0, 0, 1), q=(0, 0, 2))


def test_random_regular_values_agree():
    vals = hopf.choose_regular_values(maps.hopf_map(), 2, seed=3)
    assert hopf.linking_oracle(maps.hopf_map(), vals[0], vals[1]) == 1
