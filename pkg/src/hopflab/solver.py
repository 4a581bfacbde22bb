"""Primitives of exact cochains with controlled norm.

The production route returns the primitive of least Whitney-mass L2 norm:
first a mass-weighted least-squares primitive from the normal equations,
then the component along ``range(d)`` (plus constants in degree 0) is removed
in the mass inner product.  On S^2, S^3 and S^3 x [0, 1] the first and second
cohomology vanish, so this leaves the unique primitive orthogonal to
``ker d``.  A linear program minimizing the sup mass-density serves as an
oracle on small meshes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.sparse.linalg import cg

from . import exterior
from .forms import Cochain, comass_estimate, d, sup_norm, whitney_reference
from .mesh import SimplicialComplex
from .quadrature import simplex_rule

DEFAULT_TOL = 1e-6
CG_TOL = 1e-12
CG_MAXITER = 50_000
LP_SIZE_CAP = 20_000


class NonExactError(ValueError):
    """The target is not (numerically) in the range of d."""

    def __init__(self, obstruction: float, msg: str = ""):
        self.obstruction = obstruction
        super().__init__(msg or f"target is not exact: obstruction {obstruction:.3e}")


class SolverError(RuntimeError):
    """An iterative solve did not converge."""

    def __init__(self, iterations: int, residual: float):
        self.iterations, self.residual = iterations, residual
        super().__init__(f"CG did not converge after {iterations} iterations (residual {residual:.3e})")


@dataclass
class PrimitiveSolution:
    primitive: Cochain
    residual: float
    sup_ratio: float
    solver_iterations: int
    obstruction: float = 0.0
    density_ratio: float = 0.0


def mass_matrix(c: SimplicialComplex, k: int) -> sp.csr_matrix:
    """Whitney-form mass matrix of degree k (exact for the flat simplices)."""
    cache = c.__dict__.setdefault("_mass", {})
    if k in cache:
        return cache[k]
    from .forms import _local_face_ids

    n = c.dim
    bary, w = simplex_rule(n, 2)
    _, ref = whitney_reference(n, k, tuple(bary.ravel()))
    pts = c.vertices[c.simplices[n]]
    edges = pts[:, 1:] - pts[:, :1]
    ginv = np.linalg.inv(np.einsum("tia,tja->tij", edges, edges))
    combos = exterior.increasing(n, k)
    if k == 0:
        minors = np.ones((len(pts), 1, 1))
    else:
        minors = np.empty((len(pts), len(combos), len(combos)))
        for a, ia in enumerate(combos):
            for b, ib in enumerate(combos):
                minors[:, a, b] = np.linalg.det(ginv[:, list(ia)][:, :, list(ib)])
    vol = c.volumes(n)
    local = np.einsum("q,qfa,tab,qgb->tfg", w, ref, minors, ref) * vol[:, None, None]
    ids = _local_face_ids(c, k)
    nf = ids.shape[1]
    rows = np.repeat(ids, nf, axis=1).ravel()
    cols = np.tile(ids, (1, nf)).ravel()
    m = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(c.count(k), c.count(k)))
    cache[k] = m
    return m


def _mass_norm(m, v) -> float:
    return math.sqrt(max(float(v @ (m @ v)), 0.0))


def _pcg(a, b, tol=CG_TOL, maxiter=CG_MAXITER):
    """Jacobi-preconditioned CG on a symmetric positive semidefinite system."""
    if not np.any(b):
        return np.zeros_like(b), 0
    diag = a.diagonal()
    inv = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)
    precond = sp.diags(inv)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = cg(a, b, rtol=tol, atol=0.0, maxiter=maxiter, M=precond, callback=cb)
    if info != 0:
        res = float(np.linalg.norm(a @ x - b) / np.linalg.norm(b))
        # CG stalls slightly above tol on singular systems; accept near-converged runs
        if res > 100 * tol:
            raise SolverError(count[0], res)
    return x, count[0]


def _least_squares_primitive(target: Cochain, tol=CG_TOL, scale: float = 0.0):
    c, k = target.complex, target.degree
    dk = c.coboundary(k - 1)
    mk = mass_matrix(c, k)
    t = target.values
    normal = (dk.T @ mk @ dk).tocsr()
    beta, its = _pcg(normal, dk.T @ (mk @ t), tol)
    r = t - dk @ beta
    tn = max(_mass_norm(mk, t), scale)
    obstruction = _mass_norm(mk, r) / tn if tn > 0 else 0.0
    return beta, obstruction, its


def exactness_check(target: Cochain, c: SimplicialComplex | None = None) -> float:
    """Relative mass norm of the part of ``target`` orthogonal to range(d); 0 means exact."""
    if target.degree == 0:
        return 1.0 if np.any(target.values) else 0.0
    if not np.any(target.values):
        return 0.0
    return _least_squares_primitive(target)[1]


def _remove_kernel_component(beta: np.ndarray, c: SimplicialComplex, j: int, tol=CG_TOL):
    """Make a j-cochain mass-orthogonal to ker d (range(d) for j >= 1, constants for j = 0)."""
    m = mass_matrix(c, j)
    if j == 0:
        ones = np.ones(c.count(0))
        return beta - (ones @ (m @ beta)) / (ones @ (m @ ones)) * ones, 0
    dj = c.coboundary(j - 1)
    lap = (dj.T @ m @ dj).tocsr()
    phi, its = _pcg(lap, dj.T @ (m @ beta), tol)
    return beta - dj @ phi, its


def least_norm_primitive(target: Cochain, c: SimplicialComplex | None = None, tol: float = DEFAULT_TOL,
                         cg_tol: float = CG_TOL, scale: float = 0.0) -> PrimitiveSolution:
    """Primitive of least Whitney-mass norm; raises NonExactError above ``tol``.

    Obstruction and residual are relative to max(mass norm of target, ``scale``),
    so a target that is itself a small remainder can be judged against the
    quantity it was derived from.
    """
    c = target.complex if c is None else c
    k = target.degree
    if k == 0:
        raise ValueError("0-cochains have no primitive")
    if not np.any(target.values):
        return PrimitiveSolution(Cochain(k - 1, np.zeros(c.count(k - 1)), c), 0.0, 0.0, 0, 0.0, 0.0)
    beta, obstruction, its = _least_squares_primitive(target, cg_tol, scale)
    if obstruction > tol:
        raise NonExactError(obstruction)
    beta, its2 = _remove_kernel_component(beta, c, k - 1, cg_tol)
    prim = Cochain(k - 1, beta, c)
    mk = mass_matrix(c, k)
    residual = _mass_norm(mk, d(prim).values - target.values) / max(_mass_norm(mk, target.values), scale)
    if residual > max(tol, 10 * obstruction):
        raise NonExactError(residual, f"primitive residual {residual:.3e} above tolerance {tol:.1e}")
    return PrimitiveSolution(
        prim, residual, comass_estimate(prim) / comass_estimate(target), its + its2, obstruction,
        sup_norm(prim) / sup_norm(target),
    )


def lp_sup_primitive(target: Cochain, c: SimplicialComplex | None = None) -> PrimitiveSolution:
    """Primitive minimizing the sup mass-density max |b_i| / vol_i, by linear programming."""
    c = target.complex if c is None else c
    k = target.degree
    if k == 0:
        raise ValueError("0-cochains have no primitive")
    n = c.count(k - 1)
    if n + c.count(k) > LP_SIZE_CAP:
        raise ValueError(f"LP oracle limited to {LP_SIZE_CAP} simplices in the relevant degrees")
    if not np.any(target.values):
        return PrimitiveSolution(Cochain(k - 1, np.zeros(n), c), 0.0, 0.0, 0, 0.0, 0.0)
    vol = c.volumes(k - 1)
    eye = sp.eye(n, format="csr")
    vcol = sp.csr_matrix(vol.reshape(-1, 1))
    a_ub = sp.vstack([sp.hstack([eye, -vcol]), sp.hstack([-eye, -vcol])]).tocsr()
    a_eq = sp.hstack([c.coboundary(k - 1), sp.csr_matrix((c.count(k), 1))]).tocsr()
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(2 * n), A_eq=a_eq, b_eq=target.values,
                  bounds=[(None, None)] * n + [(0, None)], method="highs")
    if res.status == 2:
        raise NonExactError(float("nan"), "LP infeasible: target is not exact")
    if res.status != 0:
        raise SolverError(int(res.nit), float("nan"))
    prim = Cochain(k - 1, res.x[:n], c)
    mk = mass_matrix(c, k)
    residual = _mass_norm(mk, d(prim).values - target.values) / _mass_norm(mk, target.values)
    return PrimitiveSolution(prim, residual, comass_estimate(prim) / comass_estimate(target), int(res.nit), 0.0,
                             sup_norm(prim) / sup_norm(target))
