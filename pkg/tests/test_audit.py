import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hopflab import audit, dilation, maps

PLAN = dilation.SamplingPlan(count=2000, refine_rounds=1, refine_points=200)


@pytest.fixture(scope="module")
def line_report():
    return audit.audit_homotopy(maps.registry("line-null:i∘hopf"), base_level=1, plan=PLAN)


@pytest.fixture(scope="module")
def constant_report():
    return audit.audit_homotopy(maps.registry("const-time:i∘hopf"), base_level=1, plan=PLAN)


def test_straight_line_gap(line_report):
    r = line_report
    assert abs(r.hopf_gap - 1) < 0.05
    assert abs(r.H0 - 1) < 0.05 and r.H1 == 0.0
    assert r.stokes_residual <= 0.01
    assert isinstance(r.measured_ratio, float) and math.isfinite(r.measured_ratio)
    assert r.bound_value == pytest.approx(audit.bound_value(r.dil2, r.dil3))


def test_straight_line_sups_nonnegative(line_report):
    r = line_report
    for v in (r.alpha_sup, r.beta_sup, r.beta_tilde_sup, r.gamma_sup, r.eta_sup):
        assert v >= 0 and math.isfinite(v)
    assert all(v >= 0 for v in r.bulk_terms.values())


def test_chain_bounds_finite(line_report):
    rows = audit.verify_chain_bounds(line_report)
    assert len(rows) == 9
    for row in rows:
        if row.constant != audit.UNDEFINED:
            assert math.isfinite(row.constant)
    alpha_row = rows[0]
    assert alpha_row.constant != audit.UNDEFINED


def test_d_omega_discrepancy_small(line_report):
    assert line_report.d_omega_discrepancy < 0.05


def test_time_constant_control(constant_report, line_report):
    r = constant_report
    assert r.hopf_gap <= 0.01
    assert r.dil3 <= 1e-8
    assert r.measured_ratio == audit.UNDEFINED
    # d(c) is only the quadrature error of a closed pullback here
    assert r.alpha_sup < 1e-2 * line_report.alpha_sup


def test_rotation_control():
    r = audit.audit_homotopy(maps.registry("rot:6.283185307179586"),
                             base_level=1, plan=PLAN)
    assert r.hopf_gap <= 0.05


def test_dil4_side_inequality():
    plan = dilation.SamplingPlan(count=500, refine_rounds=0)
    assert audit.dil4_min_slack(maps.registry("line-null:i∘hopf"), plan) >= -1e-12


@given(st.lists(st.floats(0, 10), min_size=4, max_size=4))
def test_log_majorization(s):
    s = np.sort(np.asarray(s))[::-1]
    p3 = np.prod(s[:3])
    if s[3] <= p3 ** (1 / 3):
        assert np.prod(s) <= p3 ** (4 / 3) * (1 + 1e-12) + 1e-300


def test_mismatched_meshes_rejected():
    from hopflab import mesh
    with pytest.raises(ValueError, match="product"):
        audit.audit_homotopy(maps.registry("line-null:i∘hopf"), product_mesh=mesh.gen_sphere(3, 0),
                             slice_mesh=mesh.gen_sphere(3, 0), plan=PLAN)


def test_endpoint_map():
    F = maps.registry("line-null:i∘hopf")
    x = dilation.sample_space(maps.sphere(3), 20, 0)
    assert np.allclose(audit.endpoint_map(F, 0)(x), maps.i_hopf()(x))
    assert not np.any(audit.endpoint_map(F, 1)(x))
