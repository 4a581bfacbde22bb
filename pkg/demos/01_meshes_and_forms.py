"""Meshes, cochains and the area form.

Builds the cross-polytope spheres, checks their combinatorics and then
projects the normalized area form onto S^2 to see the total converge to 1.
"""
import numpy as np

from hopflab import maps, mesh
from hopflab.forms import Cochain, bump_area_form, comass_estimate, d, project_form, stokes_check

# counts and Euler characteristics
for level in range(4):
    s2 = mesh.gen_sphere(2, level)
    print(f"S^2 level {level}: counts {[s2.count(k) for k in range(3)]}, chi = {s2.euler_characteristic}, "
          f"area = {s2.volumes(2).sum():.5f} (4 pi = {4 * np.pi:.5f})")
for level in range(3):
    s3 = mesh.gen_sphere(3, level)
    print(f"S^3 level {level}: counts {[s3.count(k) for k in range(4)]}, chi = {s3.euler_characteristic}")

# omega restricted to the unit sphere integrates to 1
omega = bump_area_form()
ident = maps.identity(maps.sphere(2))
for level in range(5):
    c = project_form(ident, omega, mesh.gen_sphere(2, level))
    print(f"level {level}: integral of i*omega = {c.total():.6f}, comass = {comass_estimate(c) * 4 * np.pi:.4f} / 4pi")

# d o d = 0 and discrete Stokes on the product S^3 x [0, 1]
prod = mesh.gen_product_interval(mesh.gen_sphere(3, 0), 3)
rng = np.random.default_rng(0)
a = Cochain(2, rng.standard_normal(prod.count(2)), prod)
print("max |d d a| =", np.abs(d(d(a)).values).max())
b = Cochain(3, rng.standard_normal(prod.count(3)), prod)
bulk, boundary = stokes_check(b)
print(f"Stokes on the product: bulk {bulk:.12f}, boundary {boundary:.12f}")
