"""The Hopf invariant two ways.

First as the integral of alpha ^ F*omega with d(alpha) = F*omega on a
sequence of S^3 meshes, then as the linking number of two fibers.
"""
from hopflab import hopf, maps, mesh

F = maps.i_hopf()
for level in (1, 2, 3):
    rep = hopf.hopf_invariant(F, level=level)
    print(f"level {level}: H = {rep.value:.5f}  (closedness defect {rep.closedness_defect:.1e}, "
          f"primitive residual {rep.primitive_residual:.1e})")

rev = hopf.hopf_invariant(maps.i_hopf_reversed(), level=3)
print(f"orientation reversed: H = {rev.value:.5f}")

# the fibers over two points are linked great circles
n, raw = hopf.linking_oracle(maps.hopf_map(), return_raw=True)
print(f"linking number of the fibers over N and (1,0,0): {n} (Gauss integral {raw:.4f})")
p, q = hopf.choose_regular_values(maps.hopf_map(), 2, seed=1)
print("random regular values give", hopf.linking_oracle(maps.hopf_map(), p, q))

# changing the primitive by an exact form barely moves H
for level in (1, 2, 3):
    dev = hopf.primitive_independence(F, mesh=mesh.gen_sphere(3, level), trials=10)
    print(f"level {level}: max |dH| over 10 primitives = {dev:.2e}")
