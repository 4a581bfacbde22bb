"""The squeeze map Psi and the delta sweep.

Psi pushes everything outside small balls around a delta-lattice onto the
2-skeleton of the dual cubes, so Psi o F0 has rank <= 2 away from the
lattice while Lip(Psi) stays bounded as delta shrinks.
"""
from hopflab import construction

for delta in (0.2, 0.1, 0.05):
    chk = construction.check_builders(construction.SqueezeParams(delta=delta))
    print(f"delta {delta}: max |R(y)-y| = {chk.max_displacement:.4f} <= {chk.displacement_bound:.4f}, "
          f"s3/s1 outside V_W = {chk.max_s3_ratio_outside:.1e}, Lip(Psi) = {chk.lip_psi:.2f}")

rep = construction.sweep([0.2, 0.1, 0.05])
print("\n delta   Lip(Psi)   dil3 outside V_W   dil3 overall   excluded")
for row in rep.rows:
    print(f" {row.delta:5.2f}   {row.lip_psi:8.2f}   {row.dil3_composite_outside:16.1e}   "
          f"{row.dil3_composite_overall:12.1f}   {row.excluded_fraction:.4f}")
