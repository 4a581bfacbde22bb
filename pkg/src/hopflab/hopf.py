"""Generalized Hopf invariant of rank-2 maps S^3 -> R^3 and its linking-number check.

``hopf_invariant`` runs the discrete Whitehead pipeline: project F*omega to a
2-cochain, solve for a least-norm primitive alpha, and integrate
Whitney(alpha) ^ F*omega with the second factor evaluated analytically.

``linking_oracle`` is independent of all of that: it extracts the preimage
loops of two regular values by marching a tetrahedral mesh and evaluates the
Gauss linking integral of the resulting polygons.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .forms import (Cochain, _local_face_ids, EuclideanForm, bump_area_form, comass_estimate, d, integrate_wedge,
                    project_form, pullback_field)
from .maps import AnalyticMap, sphere, tangent_frame
from .mesh import SimplicialComplex, gen_sphere, sphere_counts
from .solver import DEFAULT_TOL, exactness_check, least_norm_primitive, NonExactError

HOPF_QUAD_ORDER = 6
# closedness defect of the projected pullback is quadrature error; see README
HOPF_EXACT_TOL = 1e-3
RANK_TOL = 1e-8


class RegularValueError(ValueError):
    """The requested value is not regular, or its preimage is degenerate."""


class LinkingRoundingError(ValueError):
    """The Gauss integral is too far from an integer."""


@dataclass
class HopfReport:
    value: float
    closedness_defect: float
    exactness_obstruction: float
    primitive_residual: float
    primitive_sup: float
    mesh_level: int
    quadrature_order: int
    rank_flag: bool = False
    rank_violation_fraction: float = 0.0
    solver_iterations: int = 0

    def to_dict(self):
        return asdict(self)


def sphere_level(c: SimplicialComplex) -> int:
    """Subdivision level of a generated sphere mesh (-1 if not recognised)."""
    for level in range(10):
        counts = sphere_counts(c.dim, level)
        if counts[-1] == c.count(c.dim):
            return level
        if counts[-1] > c.count(c.dim):
            break
    return -1


def _rank_violation(F: AnalyticMap, pts: np.ndarray, max_rank: int = 2) -> float:
    s = np.linalg.svd(F.tangent_jacobian(pts), compute_uv=False)
    if s.shape[1] <= max_rank:
        return 0.0
    big = s[:, max_rank] > RANK_TOL * np.maximum(s[:, 0], 1e-300)
    big &= s[:, 0] > 0
    return float(np.mean(big))


def _alpha(F, omega, mesh, q_order, tol):
    c = project_form(F, omega, mesh, q_order)
    if not np.any(c.values):
        return c, None, 0.0, 0.0
    defect = float(np.linalg.norm(d(c).values) / np.linalg.norm(c.values))
    obstruction = exactness_check(c)
    if obstruction > tol:
        raise NonExactError(obstruction, f"projected pullback is not exact (obstruction {obstruction:.3e}); "
                                         "the map may have rank > 2 or the mesh is too coarse")
    sol = least_norm_primitive(c, tol=tol)
    return c, sol, defect, obstruction


def hopf_invariant(F: AnalyticMap, omega: EuclideanForm | None = None, mesh: SimplicialComplex | None = None,
                   q_order: int = HOPF_QUAD_ORDER, tol: float = HOPF_EXACT_TOL, level: int = 3) -> HopfReport:
    """H_omega(F) = integral of alpha ^ F*omega with d(alpha) = F*omega."""
    omega = bump_area_form() if omega is None else omega
    mesh = gen_sphere(3, level) if mesh is None else mesh
    frac = _rank_violation(F, mesh.vertices)
    c, sol, defect, obstruction = _alpha(F, omega, mesh, q_order, tol)
    lvl = sphere_level(mesh)
    if sol is None:
        return HopfReport(0.0, 0.0, 0.0, 0.0, 0.0, lvl, q_order, frac > 0, frac)
    value = integrate_wedge(sol.primitive, pullback_field(F, omega, mesh), mesh, q_order)
    return HopfReport(value, defect, obstruction, sol.residual, comass_estimate(sol.primitive), lvl, q_order,
                      frac > 0, frac, sol.solver_iterations)


def primitive_independence(F: AnalyticMap, omega: EuclideanForm | None = None, mesh: SimplicialComplex | None = None,
                           trials: int = 10, seed: int = 0, q_order: int = HOPF_QUAD_ORDER,
                           tol: float = HOPF_EXACT_TOL) -> float:
    """Max change of H over primitives alpha + d(gamma) with comass(d gamma) = comass(alpha)."""
    omega = bump_area_form() if omega is None else omega
    mesh = gen_sphere(3, 3) if mesh is None else mesh
    c, sol, _, _ = _alpha(F, omega, mesh, q_order, tol)
    if sol is None:
        return 0.0
    field_ = pullback_field(F, omega, mesh)
    alpha = sol.primitive
    base = integrate_wedge(alpha, field_, mesh, q_order)
    scale = comass_estimate(alpha)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        dg = d(Cochain(0, rng.standard_normal(mesh.count(0)), mesh))
        dg = dg * (scale / comass_estimate(dg))
        worst = max(worst, abs(integrate_wedge(alpha + dg, field_, mesh, q_order) - base))
    return worst


# -- linking-number oracle ------------------------------------------------------------

def _generic_rotation(seed: int = 12345) -> np.ndarray:
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((4, 4)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def oracle_mesh(level: int = 3) -> SimplicialComplex:
    """S^3 mesh in general position (a fixed generic rotation of gen_sphere(3, level))."""
    base = gen_sphere(3, level)
    return SimplicialComplex(base.dim, base.ambient_dim, base.vertices @ _generic_rotation().T,
                             [s.copy() for s in base.simplices], [o.copy() for o in base.orientations])


def _chart(p: np.ndarray) -> np.ndarray:
    """Basis (b1, b2) of T_p S^2 with (p, b1, b2) positively oriented."""
    a = np.array([1.0, 0, 0]) if abs(p[0]) < 0.9 else np.array([0, 1.0, 0])
    b1 = a - (a @ p) * p
    b1 /= np.linalg.norm(b1)
    return np.stack([b1, np.cross(p, b1)])


def preimage_loops(G: AnalyticMap, p, mesh: SimplicialComplex, min_s2: float = 1e-3) -> list[np.ndarray]:
    """Oriented closed polygons (on S^3) approximating G^{-1}(p)."""
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    gv = G(mesh.vertices)
    chart = _chart(p)
    u = gv @ chart.T
    valid = gv @ p > 0.2
    tris = mesh.simplices[2]
    ok = valid[tris].all(axis=1)
    tri_ids = np.flatnonzero(ok)
    # barycentric mu with sum mu_i u_i = 0, sum mu_i = 1
    mats = np.concatenate([np.transpose(u[tris[tri_ids]], (0, 2, 1)), np.ones((len(tri_ids), 1, 3))], axis=1)
    nondeg = np.abs(np.linalg.det(mats)) > 1e-14
    tri_ids, mats = tri_ids[nondeg], mats[nondeg]
    rhs = np.broadcast_to(np.array([0.0, 0.0, 1.0])[:, None], (len(tri_ids), 3, 1))
    mu = np.linalg.solve(mats, rhs)[..., 0]
    hit = np.all(mu >= 0, axis=1)
    crossing = {}
    for t, m in zip(tri_ids[hit], mu[hit]):
        crossing[int(t)] = m
    if not crossing:
        raise RegularValueError(f"value {p.tolist()} has an empty or degenerate preimage; choose a different value")
    face_ids = _local_face_ids(mesh, 2)  # (T, 4) local faces = combinations of 3 of 4 vertices
    local_faces = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    tets = mesh.simplices[3]
    orient = mesh.orientations[3]
    succ: dict[int, int] = {}
    for ti in range(len(tets)):
        hits = [j for j in range(4) if int(face_ids[ti, j]) in crossing]
        if not hits:
            continue
        if len(hits) != 2:
            raise RegularValueError(f"preimage of {p.tolist()} meets a tetrahedron in {len(hits)} faces; "
                                    "choose a different value")
        ut = u[tets[ti]]
        a = (ut[1:] - ut[0]).T  # 2 x 3 in edge coordinates
        tau = np.cross(a[0], a[1])
        svals = []
        for j in hits:
            bary = np.zeros(4)
            bary[list(local_faces[j])] = crossing[int(face_ids[ti, j])]
            svals.append(bary[1:])
        direction = np.sign((svals[1] - svals[0]) @ tau) * orient[ti]
        f0, f1 = int(face_ids[ti, hits[0]]), int(face_ids[ti, hits[1]])
        if direction < 0:
            f0, f1 = f1, f0
        if f0 in succ:
            raise RegularValueError(f"preimage of {p.tolist()} branches; choose a different value")
        succ[f0] = f1
    if set(succ) != set(succ.values()):
        raise RegularValueError(f"preimage of {p.tolist()} has loose ends; choose a different value")
    points = {f: crossing[f] @ mesh.vertices[tris[f]] for f in succ}
    loops, seen = [], set()
    for start in sorted(succ):
        if start in seen:
            continue
        loop, f = [], start
        while f not in seen:
            seen.add(f)
            loop.append(points[f])
            f = succ[f]
        if len(loop) < 3:
            raise RegularValueError(f"preimage loop of {p.tolist()} has fewer than 3 segments")
        pts = np.array(loop)
        loops.append(pts / np.linalg.norm(pts, axis=1, keepdims=True))
    allpts = np.concatenate(loops)
    s = np.linalg.svd(G.tangent_jacobian(allpts), compute_uv=False)
    if np.min(s[:, 1]) <= min_s2:
        raise RegularValueError(f"{p.tolist()} is not a regular value (second singular value "
                                f"{np.min(s[:, 1]):.2e}); choose a different value")
    return loops


def gauss_linking(c1: np.ndarray, c2: np.ndarray) -> float:
    """Gauss linking integral of two closed polygons in R^3 (vertices, implicitly closed).

    Uses the exact per-segment-pair solid-angle formula.
    """
    a0, a1 = c1, np.roll(c1, -1, axis=0)
    b0, b1 = c2, np.roll(c2, -1, axis=0)
    r00 = b0[None] - a0[:, None]
    r01 = b1[None] - a0[:, None]
    r10 = b0[None] - a1[:, None]
    r11 = b1[None] - a1[:, None]
    total = _quad_solid_angle(r00, r01, r11, r10)
    return float(-np.sum(total) / (4 * np.pi))


def _tri_solid_angle(a, b, c):
    na, nb, nc = (np.linalg.norm(v, axis=-1) for v in (a, b, c))
    num = np.einsum("...i,...i->...", a, np.cross(b, c))
    den = na * nb * nc + np.einsum("...i,...i->...", a, b) * nc + np.einsum("...i,...i->...", b, c) * na \
        + np.einsum("...i,...i->...", c, a) * nb
    return 2 * np.arctan2(num, den)


def _quad_solid_angle(r00, r01, r11, r10):
    # signed solid angle of the quadrilateral swept by the two segments
    return _tri_solid_angle(r00, r01, r11) + _tri_solid_angle(r00, r11, r10)


def _stereographic(points: list[np.ndarray]):
    allpts = np.concatenate(points)
    cands = np.concatenate([np.eye(4), -np.eye(4)])
    pole = cands[np.argmax([np.min(np.linalg.norm(allpts - c, axis=1)) for c in cands])]
    q, _ = np.linalg.qr(np.column_stack([pole, np.eye(4)[np.argsort(np.abs(pole))[:3]].T]))
    q[:, 0] = pole
    basis = q[:, 1:]

    def proj(x):
        return (x @ basis) / (1 - x @ pole)[:, None]

    # orientation of the projection relative to the outward-normal orientation of S^3
    x = allpts[:1]
    den = 1 - x @ pole
    jac = basis.T / den[:, None] + np.outer(x @ basis, pole) / den[:, None] ** 2
    sign = np.sign(np.linalg.det(jac @ tangent_frame(sphere(3), x)[0]))
    return proj, sign


def linking_oracle(G: AnalyticMap, p=(0.0, 0.0, 1.0), q=(1.0, 0.0, 0.0), level: int = 3,
                   rounding_tol: float = 0.2, return_raw: bool = False):
    """Hopf invariant of G: S^3 -> S^2 as the linking number of two regular fibers."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    if np.allclose(p / np.linalg.norm(p), q / np.linalg.norm(q)):
        raise ValueError("p and q must differ")
    mesh = oracle_mesh(level)
    lp = preimage_loops(G, p, mesh)
    lq = preimage_loops(G, q, mesh)
    proj, sign = _stereographic(lp + lq)
    raw = sign * sum(gauss_linking(proj(a), proj(b)) for a in lp for b in lq)
    nearest = int(round(raw))
    if abs(raw - nearest) > rounding_tol:
        raise LinkingRoundingError(f"Gauss integral {raw:.3f} is ambiguous")
    return (nearest, raw) if return_raw else nearest


def choose_regular_values(G: AnalyticMap, count: int = 2, seed: int = 0, level: int = 3,
                          attempts: int = 50) -> list[np.ndarray]:
    """Rejection-sample values of G whose extracted preimages are regular."""
    rng = np.random.default_rng(seed)
    mesh = oracle_mesh(level)
    out = []
    for _ in range(attempts):
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        try:
            preimage_loops(G, v, mesh)
        except RegularValueError:
            continue
        out.append(v)
        if len(out) == count:
            return out
    raise RegularValueError(f"found only {len(out)} regular values in {attempts} attempts")
