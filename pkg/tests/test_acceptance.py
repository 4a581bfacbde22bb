"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (written past
pytest's capture) and then asserts the criterion at its stated tolerance.
"""
import math
import time

import numpy as np
import pytest

from hopflab import audit, construction, dilation, hopf, maps, mesh
from hopflab.forms import Cochain, bump_area_form, d, project_form, stokes_check
from hopflab.solver import exactness_check, least_norm_primitive, lp_sup_primitive


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def _product_meshes():
    return [mesh.gen_product_interval(mesh.gen_sphere(3, 0), 2), mesh.gen_product_interval(mesh.gen_sphere(3, 1), 1),
            mesh.gen_product_interval(mesh.gen_sphere(3, 1), 3)]


def test_1_chain_complex_exactness(verdict):
    meshes = ([mesh.gen_sphere(2, L) for L in range(5)] + [mesh.gen_sphere(3, L) for L in range(4)]
              + _product_meshes())
    worst = 0.0
    for c in meshes:
        for k in range(c.dim - 1):
            dd = c.coboundary(k + 1) @ c.coboundary(k)
            worst = max(worst, float(abs(dd).max()) if dd.nnz else 0.0)
    ok = verdict(1, worst < 1e-12, f"max |d o d| = {worst:.1e} over {len(meshes)} meshes")
    assert ok


def test_2_discrete_stokes(verdict):
    rng = np.random.default_rng(2)
    meshes = _product_meshes() + [mesh.gen_sphere(3, 1), mesh.gen_sphere(3, 2), mesh.gen_sphere(2, 3)]
    worst = 0.0
    for c in meshes:
        for _ in range(20):
            a = Cochain(c.dim - 1, rng.standard_normal(c.count(c.dim - 1)), c)
            bulk, boundary = stokes_check(a)
            worst = max(worst, abs(bulk - boundary) / (1 + abs(bulk)))
    ok = verdict(2, worst < 1e-9, f"max |bulk - boundary|/(1+|bulk|) = {worst:.1e} (20 cochains x {len(meshes)} meshes)")
    assert ok


def test_3_hopf_flagship(verdict):
    t0 = time.perf_counter()
    values = [hopf.hopf_invariant(maps.i_hopf(), level=L).value for L in (1, 2, 3)]
    oracle = hopf.linking_oracle(maps.hopf_map())
    elapsed = time.perf_counter() - t0
    errs = [abs(v - 1) for v in values]
    ok = errs[2] <= 0.05 and errs[0] > errs[1] > errs[2] and oracle == 1 and elapsed <= 600
    verdict(3, ok, f"H(i o hopf) at levels 1-3 = {', '.join(f'{v:.4f}' for v in values)}; oracle {oracle}; "
                   f"{elapsed:.1f}s")
    assert ok


def test_4_orientation(verdict):
    v = hopf.hopf_invariant(maps.i_hopf_reversed(), level=3).value
    oracle = hopf.linking_oracle(maps.compose(maps.hopf_map(), maps.orientation_reversal()))
    ok = abs(v + 1) <= 0.05 and oracle == -1
    verdict(4, ok, f"reversed H = {v:.4f}; oracle {oracle}")
    assert ok


def test_5_primitive_independence(verdict):
    devs = [hopf.primitive_independence(maps.i_hopf(), mesh=mesh.gen_sphere(3, L), trials=10, seed=0)
            for L in (1, 2, 3)]
    ok = devs[2] <= 0.01 and devs[0] > devs[1] > devs[2]
    verdict(5, ok, f"max |dH| over 10 trials at levels 1-3 = {', '.join(f'{d:.1e}' for d in devs)}")
    assert ok


def test_6_hopf_dilation(verdict):
    plan = dilation.SamplingPlan(count=10_000)
    h = maps.hopf_map()
    dils = [dilation.dilation(h, k, plan) for k in (1, 2, 3)]
    rel = [dilation.check_dilation_relation(h, j, k, plan) for j, k in ((1, 2), (1, 3), (2, 3))]
    slack = min(r.per_sample_min_slack for r in rel)
    viol = dilation.check_pullback_bound(maps.i_hopf(), bump_area_form(), plan)
    d1, d2, d3 = (r.sup_estimate for r in dils)
    ok = (abs(d1 - 2) <= 0.02 and abs(d2 - 4) <= 0.04 and d3 <= 1e-8 and min(r.sample_count for r in dils) >= 10_000
          and slack >= -1e-12 and viol <= 1e-9)
    verdict(6, ok, f"dil1 {d1:.6f}, dil2 {d2:.6f}, dil3 {d3:.1e}; min relation slack {slack:.1e}; "
                   f"pullback violation {viol:.1e}")
    assert ok


# regression guard on least-norm vs the LP optimum, frozen after the first run
CO_ISOPERIMETRIC_GUARD = 10.0


def test_7_co_isoperimetric_solver(verdict):
    c = mesh.gen_sphere(3, 1)
    rng = np.random.default_rng(7)
    density, comass = [], []
    for _ in range(10):
        target = d(Cochain(1, rng.standard_normal(c.count(1)), c))
        ln = least_norm_primitive(target)
        lp = lp_sup_primitive(target)
        # the LP minimizes the sup mass-density, so the two are compared in that objective
        density.append(ln.density_ratio / lp.density_ratio)
        comass.append(ln.sup_ratio / lp.sup_ratio)
    area = project_form(maps.identity(maps.sphere(2)), bump_area_form(), mesh.gen_sphere(2, 2))
    obstruction = exactness_check(area)
    ok = max(density) <= CO_ISOPERIMETRIC_GUARD and abs(obstruction - 1) <= 1e-3
    verdict(7, ok, f"least-norm/LP density ratio max {max(density):.3f} (comass ratio max {max(comass):.3f}); "
                   f"area-form obstruction {obstruction:.5f}")
    assert ok


def _stable(a, b):
    if a == audit.UNDEFINED or b == audit.UNDEFINED:
        return a == b
    if a == 0 and b == 0:
        return True
    return math.isfinite(a) and math.isfinite(b) and a != 0 and abs(b / a - 1) <= 0.5


def test_8_homotopy_audit(verdict):
    F = maps.registry("line-null:i∘hopf")
    t0 = time.perf_counter()
    r1 = audit.audit_homotopy(F, base_level=1)
    t1 = time.perf_counter() - t0
    r2 = audit.audit_homotopy(F, base_level=2)
    b1, b2 = audit.verify_chain_bounds(r1), audit.verify_chain_bounds(r2)
    finite = all(x.constant == audit.UNDEFINED or math.isfinite(x.constant) for x in b1 + b2)
    unstable = [x.name for x, y in zip(b1, b2) if not _stable(x.constant, y.constant)]
    ctrl = audit.audit_homotopy(maps.registry("const-time:i∘hopf"), base_level=1)
    ok = (abs(r1.hopf_gap - 1) <= 0.05 and r1.stokes_residual <= 0.01 and r2.stokes_residual <= 0.01 and finite
          and not unstable and ctrl.hopf_gap <= 0.01 and ctrl.measured_ratio == audit.UNDEFINED and t1 <= 1800)
    verdict(8, ok, f"gap {r1.hopf_gap:.4f}, Stokes residual {r1.stokes_residual:.1e}/{r2.stokes_residual:.1e}, "
                   f"ratio {r1.measured_ratio:.4f}, unstable constants {unstable or 'none'}; control gap "
                   f"{ctrl.hopf_gap:.1e}, ratio {ctrl.measured_ratio}; level-1 runtime {t1:.0f}s")
    assert ok


def test_9_squeeze_builders(verdict):
    checks = [construction.check_builders(construction.SqueezeParams(delta=dl)) for dl in (0.2, 0.1, 0.05)]
    lips = [c.lip_psi for c in checks]
    spread = (max(lips) - min(lips)) / min(lips)
    ok = spread < 0.2 and all(
        c.periodicity_defect < 1e-12 and c.max_displacement <= c.displacement_bound < c.delta
        and c.skeleton_distance <= 1e-9 and c.boundary_identity_defect <= 1e-9 and c.max_s3_ratio_outside <= 1e-6
        for c in checks)
    verdict(9, ok, f"periodicity {max(c.periodicity_defect for c in checks):.1e}, displacement/bound "
                   f"{max(c.max_displacement / c.displacement_bound for c in checks):.3f}, skeleton "
                   f"{max(c.skeleton_distance for c in checks):.1e}, boundary {max(c.boundary_identity_defect for c in checks):.1e}, "
                   f"s3/s1 {max(c.max_s3_ratio_outside for c in checks):.1e}, Lip(Psi) {', '.join(f'{v:.2f}' for v in lips)}")
    assert ok


def test_10_sweep_rank_collapse(verdict):
    rep = construction.sweep([0.2, 0.1, 0.05])
    outside = max(r.dil3_composite_outside for r in rep.rows)
    bnd = max(r.boundary_defect for r in rep.rows)
    ok = outside <= 1e-6 and bnd <= 1e-9 and len(rep.rows) == 3
    verdict(10, ok, f"dil3 outside V_W {outside:.1e}; overall "
                    f"{', '.join(f'{r.dil3_composite_overall:.0f}' for r in rep.rows)}; boundary defect {bnd:.1e}")
    assert ok
