"""k-dilation of the Hopf map and the dilation inequalities."""
from hopflab import dilation, maps
from hopflab.forms import bump_area_form

plan = dilation.SamplingPlan(count=10_000)
h = maps.hopf_map()
for k in (1, 2, 3):
    rep = dilation.dilation(h, k, plan)
    print(f"dil_{k}(hopf) = {rep.sup_estimate:.6g} over {rep.sample_count} samples, rank {rep.rank_profile}")

# Hopf stretches every tangent 2-plane orthogonal to the fiber by exactly 4
rel = dilation.check_dilation_relation(h, 1, 2, plan)
print(f"dil_1 = {rel.lhs:.6f} >= dil_2^(1/2) = {rel.rhs:.6f}; per-sample min slack {rel.per_sample_min_slack:.1e}")
print("pullback bound violation:", dilation.check_pullback_bound(maps.i_hopf(), bump_area_form(), plan))

lip = dilation.lipschitz_estimate(h, plan)
print(f"Lip(hopf): jacobian {lip.jacobian_sup:.5f}, difference quotients {lip.quotient_sup:.5f}")

# the straight-line null-homotopy has rank 3, so dil_3 > 0
F = maps.registry("line-null:i∘hopf")
print("dil_3 of the straight-line homotopy:", dilation.dilation(F, 3, plan).sup_estimate)
