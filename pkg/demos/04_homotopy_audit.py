"""Audit of the homotopy inequality |H(F0) - H(F1)| <~ dil2 dil3 + dil3^2 + dil3^(4/3).

Runs every primitive of the proof on the straight-line null-homotopy of
i o hopf and on the time-constant control, then prints the measured
constants of each step.
"""
from hopflab import audit, maps

for name in ("line-null:i∘hopf", "const-time:i∘hopf"):
    r = audit.audit_homotopy(maps.registry(name), base_level=1)
    print(f"\n{name}")
    print(f"  H0 = {r.H0:.4f}, H1 = {r.H1:.4f}, gap = {r.hopf_gap:.4f}")
    print(f"  dil2 = {r.dil2:.4f}, dil3 = {r.dil3:.4g}, bound = {r.bound_value:.4g}, ratio = {r.measured_ratio}")
    print(f"  Stokes: bulk {r.stokes_bulk:.6f}, boundary {r.stokes_boundary:.6f}, residual {r.stokes_residual:.1e}")
    for row in audit.verify_chain_bounds(r):
        const = row.constant if isinstance(row.constant, str) else f"{row.constant:.4g}"
        print(f"  {row.name:45s} lhs {row.lhs:.3e}  C = {const}")
