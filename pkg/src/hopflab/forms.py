"""Cochains, Whitney interpolation and quadrature-projected pullbacks.

Every integral over the curved sphere (or S^3 x [0, 1]) is computed on the
flat simplices of the mesh after composing with the carrier's radial
projection, so simplex integrals add up to exact integrals over the carrier
and Stokes' theorem holds simplex by simplex up to quadrature error.

Wedge products keep one factor analytic: a cochain is interpolated by Whitney
forms and wedged pointwise with a form field evaluated from Jacobians at the
quadrature nodes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import exterior
from .maps import AnalyticMap
from .mesh import SimplicialComplex
from .quadrature import simplex_rule

EPS_CHUNK = 200_000  # quadrature points evaluated per batch


class FormEvaluationError(RuntimeError):
    """A map or form returned non-finite values at a quadrature point."""


@dataclass(eq=False)
class Cochain:
    """One real per oriented k-simplex of ``complex``.

    Values on top simplices refer to the simplex with its orientation sign
    applied; lower-degree values refer to sorted vertex order.
    """

    degree: int
    values: np.ndarray
    complex: SimplicialComplex

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not 0 <= self.degree <= self.complex.dim:
            raise ValueError(f"degree {self.degree} outside 0..{self.complex.dim}")
        if self.values.shape != (self.complex.count(self.degree),):
            raise ValueError(
                f"{self.degree}-cochain needs {self.complex.count(self.degree)} values, got {self.values.shape}"
            )
        self.values.setflags(write=False)

    def _same(self, other: "Cochain"):
        if other.complex is not self.complex or other.degree != self.degree:
            raise ValueError("cochains live on different complexes or degrees")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._same(other)
        return Cochain(self.degree, self.values + other.values, self.complex)

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._same(other)
        return Cochain(self.degree, self.values - other.values, self.complex)

    def __mul__(self, t: float) -> "Cochain":
        return Cochain(self.degree, t * self.values, self.complex)

    __rmul__ = __mul__

    def __neg__(self) -> "Cochain":
        return self * -1.0

    def total(self) -> float:
        """Sum of values; for top-degree cochains, the integral over the complex."""
        return float(np.sum(self.values))


def zeros(c: SimplicialComplex, k: int) -> Cochain:
    return Cochain(k, np.zeros(c.count(k)), c)


@dataclass(frozen=True, eq=False)
class EuclideanForm:
    """A k-form on R^D given by a vectorized coefficient-tensor evaluator."""

    degree: int
    ambient_dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    exterior_derivative: Optional["EuclideanForm"] = None
    sup_norm_hint: Optional[float] = None
    name: str = "form"

    def __call__(self, x) -> np.ndarray:
        return self.eval(np.atleast_2d(np.asarray(x, dtype=float)))

    def scaled(self, t: float) -> "EuclideanForm":
        d = self.exterior_derivative.scaled(t) if self.exterior_derivative is not None else None
        hint = abs(t) * self.sup_norm_hint if self.sup_norm_hint is not None else None
        return EuclideanForm(self.degree, self.ambient_dim, lambda x: t * self.eval(x), d, hint, f"{t:g}*{self.name}")


_LEVI = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI[_i, _j, _k] = 1.0
    _LEVI[_i, _k, _j] = -1.0


def _bump(r):
    """f(r) = exp(1 - 1/(1 - s^2)) / (4 pi), s = 2(r - 1); supported in (1/2, 3/2), f(1) = 1/(4 pi)."""
    s = 2.0 * (r - 1.0)
    inside = np.abs(s) < 1
    out = np.zeros_like(r)
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2)) / (4 * np.pi)
    return out


def _bump_prime(r):
    s = 2.0 * (r - 1.0)
    inside = np.abs(s) < 1
    out = np.zeros_like(r)
    si = s[inside]
    out[inside] = _bump(r[inside]) * (-2 * si / (1 - si**2) ** 2) * 2.0
    return out


def bump_area_form() -> EuclideanForm:
    """omega = f(|v|) (v1 dv2^dv3 + v2 dv3^dv1 + v3 dv1^dv2) with a bump f, f(1) = 1/(4 pi).

    Restricted to the unit sphere it is the area form normalized to total 1.
    """
    def omega(x):
        f = _bump(np.linalg.norm(x, axis=1))
        return np.einsum("ijk,nk->nij", _LEVI, x) * f[:, None, None]

    def domega(x):
        r = np.linalg.norm(x, axis=1)
        g = _bump_prime(r) * r + 3 * _bump(r)
        return g[:, None, None, None] * _LEVI[None]

    rs = np.linspace(0.5, 1.5, 20001)
    d_form = EuclideanForm(3, 3, domega, None, float(np.max(np.abs(_bump_prime(rs) * rs + 3 * _bump(rs)))), "d(bump_area)")
    return EuclideanForm(2, 3, omega, d_form, float(np.max(_bump(rs) * rs)), "bump_area")


# -- exterior derivative ---------------------------------------------------------

def d(a: Cochain) -> Cochain:
    """Coboundary: exact signed incidence sums, no quadrature."""
    c = a.complex
    if a.degree >= c.dim:
        raise ValueError("top degree: d of a top-degree cochain is not defined")
    return Cochain(a.degree + 1, c.coboundary(a.degree) @ a.values, c)


# -- projection of pullbacks --------------------------------------------------------

def _check_finite(arr, pts, what):
    bad = ~np.isfinite(arr.reshape(len(arr), -1)).all(axis=1)
    if bad.any():
        raise FormEvaluationError(f"{what} is not finite at point {pts[np.argmax(bad)].tolist()}")


def _pushed_edges(F: AnalyticMap, c: SimplicialComplex, x: np.ndarray, edges: np.ndarray):
    """F(pi(x)) and D(F o pi) applied to the simplex edge vectors: ``(N, out, m)``."""
    y, jpi = c.project(x)
    fy = F(y)
    jac = F.jacobian(y)
    _check_finite(fy, x, f"{F.name}")
    _check_finite(jac, x, f"Jacobian of {F.name}")
    return fy, np.einsum("noa,nab,nmb->nom", jac, jpi, edges)


def project_form(F: AnalyticMap, omega: EuclideanForm, c: SimplicialComplex, q: int = 2) -> Cochain:
    """Quadrature value of the integral of F*omega over every k-simplex."""
    k = omega.degree
    if k > c.dim:
        raise ValueError("form degree exceeds complex dimension")
    rows = c.simplices[k]
    pts = c.vertices[rows]
    if k == 0:
        y, _ = c.project(pts[:, 0])
        vals = omega(F(y)).reshape(-1)
        return Cochain(0, vals, c)
    bary, w = simplex_rule(k, q)
    edges = pts[:, 1:] - pts[:, :1]
    out = np.empty(len(rows))
    per = max(1, EPS_CHUNK // len(w))
    for s0 in range(0, len(rows), per):
        p = pts[s0:s0 + per]
        e = edges[s0:s0 + per]
        x = np.einsum("qi,sia->sqa", bary, p).reshape(-1, c.ambient_dim)
        ee = np.repeat(e, len(w), axis=0)
        fy, vecs = _pushed_edges(F, c, x, ee)
        tens = omega(fy)
        _check_finite(tens, x, f"form {omega.name}")
        vals = exterior.contract(tens, k, vecs)
        vals = vals[(slice(None),) + tuple(range(k))].reshape(len(p), len(w))
        out[s0:s0 + per] = vals @ w / math.factorial(k)
    if k == c.dim:
        out *= c.orientations[k]
    return Cochain(k, out, c)


# -- Whitney forms -------------------------------------------------------------------

@lru_cache(maxsize=None)
def whitney_reference(n: int, p: int, bary_key: tuple) -> tuple[tuple, np.ndarray]:
    """Whitney basis p-forms of the reference n-simplex in edge coordinates.

    Returns the local faces and an array ``(Q, n_faces, C(n, p))`` holding
    ``W_f(e_I)`` at each barycentric point, where ``e_a = v_a - v_0`` and ``I``
    runs over increasing p-tuples of edge indices.
    """
    bary = np.array(bary_key).reshape(-1, n + 1)
    # L[i, a] = d(lambda_i)(e_a)
    lmat = np.vstack([-np.ones((1, n)), np.eye(n)])
    faces = exterior.increasing(n + 1, p + 1)
    combos = exterior.increasing(n, p)
    out = np.zeros((len(bary), len(faces), len(combos)))
    for fi, face in enumerate(faces):
        for j, vj in enumerate(face):
            rest = [v for i, v in enumerate(face) if i != j]
            for ci, idx in enumerate(combos):
                det = np.linalg.det(lmat[np.ix_(rest, idx)]) if p else 1.0
                out[:, fi, ci] += (-1) ** j * bary[:, vj] * det
    out *= math.factorial(p)
    return faces, out


def _local_face_ids(c: SimplicialComplex, p: int) -> np.ndarray:
    """Global index of each local p-face of each top simplex, ``(T, n_faces)``."""
    cache = c.__dict__.setdefault("_face_ids", {})
    if p not in cache:
        from .mesh import _lookup, _row_index

        top = c.simplices[c.dim]
        faces = exterior.increasing(c.dim + 1, p + 1)
        rows = top[:, faces].reshape(-1, p + 1)
        ids = _lookup(_row_index(c.simplices[p]), rows, "local faces")
        cache[p] = ids.reshape(len(top), len(faces))
    return cache[p]


def _face_values(a: Cochain) -> np.ndarray:
    """Cochain values on local faces, with top-degree orientation removed."""
    c = a.complex
    ids = _local_face_ids(c, a.degree)
    vals = a.values[ids]
    if a.degree == c.dim:
        vals = vals * c.orientations[c.dim][:, None]
    return vals


def _edge_frame(c: SimplicialComplex, top_ids):
    pts = c.vertices[c.simplices[c.dim][top_ids]]
    return pts, pts[:, 1:] - pts[:, :1]


def whitney_edge_components(a: Cochain, top_ids, bary: np.ndarray) -> np.ndarray:
    """Whitney interpolant of ``a`` on top simplices, as components on edge-vector tuples.

    Returns ``(T, Q, C(n, p))``, sorted-vertex orientation.
    """
    c = a.complex
    n, p = c.dim, a.degree
    _, ref = whitney_reference(n, p, tuple(np.asarray(bary, float).ravel()))
    vals = _face_values(a)[top_ids]
    return np.einsum("tf,qfc->tqc", vals, ref)


def whitney_eval(a: Cochain, sigma: int, bary) -> np.ndarray:
    """Whitney interpolant of ``a`` at barycentric points of top simplex ``sigma``.

    Returns full ambient tensors ``(Q,) + (ambient,)*p`` (sorted-vertex
    orientation of sigma); they vanish on vectors normal to the simplex.
    """
    c = a.complex
    n, p = c.dim, a.degree
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    comp = whitney_edge_components(a, np.array([sigma]), bary)[0]
    _, edges = _edge_frame(c, np.array([sigma]))
    e = edges[0]
    grads = np.linalg.solve(e @ e.T, e)  # rows: ambient gradients of the edge coordinates
    out = np.zeros((len(bary),) + (c.ambient_dim,) * p)
    for ci, idx in enumerate(exterior.increasing(n, p)):
        basis = exterior.wedge_covectors(grads[list(idx)]) if p else np.ones(())
        out += comp[:, ci].reshape((-1,) + (1,) * p) * basis
    return out


def _orthonormal_transform(edges: np.ndarray) -> np.ndarray:
    """Matrix taking orthonormal tangent coordinates to edge coordinates, ``(T, n, n)``."""
    _, r = np.linalg.qr(np.transpose(edges, (0, 2, 1)))
    return np.linalg.inv(r)


def _to_orthonormal(comp: np.ndarray, n: int, p: int, rinv: np.ndarray) -> np.ndarray:
    """Edge-coordinate components ``(T, Q, C)`` -> full orthonormal tensors ``(T, Q) + (n,)*p``."""
    full = exterior.from_components(comp, n, p)
    for axis in range(p):
        full = np.einsum("tqa...,taz->tq...z", full, rinv)
    return full


def comass_field(a: Cochain, bary: np.ndarray) -> np.ndarray:
    """Comass of the Whitney interpolant at barycentric points of every top simplex, ``(T, Q)``."""
    c = a.complex
    n, p = c.dim, a.degree
    top_ids = np.arange(c.count(n))
    comp = whitney_edge_components(a, top_ids, bary)
    _, edges = _edge_frame(c, top_ids)
    full = _to_orthonormal(comp, n, p, _orthonormal_transform(edges))
    return exterior.comass(full, p)


def comass_estimate(a: Cochain) -> float:
    """Max comass of the Whitney interpolant.

    The interpolant is affine on each simplex and comass is a norm, so the
    maximum over a simplex is attained at one of its vertices.
    """
    n = a.complex.dim
    if not np.any(a.values):
        return 0.0
    return float(np.max(comass_field(a, np.eye(n + 1))))


def sup_norm(a: Cochain) -> float:
    """Max |value| / volume over the k-simplices (mass-density proxy)."""
    if not len(a.values):
        return 0.0
    return float(np.max(np.abs(a.values) / a.complex.volumes(a.degree)))


# -- wedge integration ----------------------------------------------------------------

class PullbackField:
    """The pointwise form (F o pi)* omega on flat simplices, in edge coordinates."""

    def __init__(self, F: AnalyticMap, omega: EuclideanForm, c: SimplicialComplex):
        self.F, self.omega, self.complex = F, omega, c
        self.degree = omega.degree

    def __call__(self, x: np.ndarray, edges: np.ndarray) -> np.ndarray:
        fy, vecs = _pushed_edges(self.F, self.complex, x, edges)
        return exterior.contract(self.omega(fy), self.degree, vecs)


def pullback_field(F: AnalyticMap, omega: EuclideanForm, c: SimplicialComplex) -> PullbackField:
    return PullbackField(F, omega, c)


def integrate_wedge(a: Cochain, b_field, c: SimplicialComplex, q_order: int = 2,
                    absolute: bool = False) -> float:
    """Integral over the complex of Whitney(a) ^ b_field.

    ``b_field(x, edges)`` returns the q-form at flat points ``x`` evaluated on
    all tuples of the simplex edge vectors, ``(N,) + (n,)*q``.  With
    ``absolute`` the integrand is replaced by its absolute value (an L1 norm).
    """
    n, p = c.dim, a.degree
    q = b_field.degree
    if a.complex is not c:
        raise ValueError("cochain lives on a different complex")
    if p + q != n:
        raise ValueError(f"degree mismatch: {p} + {q} != {n}")
    if not np.any(a.values):
        return 0.0
    bary, w = simplex_rule(n, q_order)
    top = c.simplices[n]
    orient = c.orientations[n]
    vol_factor = 1.0 / math.factorial(n)
    total = np.zeros(len(top))
    per = max(1, EPS_CHUNK // len(w))
    for s0 in range(0, len(top), per):
        ids = np.arange(s0, min(s0 + per, len(top)))
        pts, edges = _edge_frame(c, ids)
        x = np.einsum("qi,sia->sqa", bary, pts).reshape(-1, c.ambient_dim)
        ee = np.repeat(edges, len(w), axis=0)
        bt = b_field(x, ee).reshape((len(ids), len(w)) + (n,) * q)
        comp = whitney_edge_components(a, ids, bary)
        at = exterior.from_components(comp, n, p) if p else comp[..., 0]
        integrand = exterior.wedge_top(at, p, bt, q)
        if absolute:
            integrand = np.abs(integrand)
            total[ids] = integrand @ w * vol_factor
        else:
            total[ids] = orient[ids] * (integrand @ w) * vol_factor
    return float(np.sum(total))


# -- Stokes --------------------------------------------------------------------------

def stokes_check(a: Cochain) -> tuple[float, float]:
    """(sum of d(a) over top simplices, boundary sum t=1 minus t=0).

    The boundary side uses the orientation of each slice face computed
    geometrically from the base sphere, independent of the product orientation.
    """
    c = a.complex
    if a.degree != c.dim - 1:
        raise ValueError("stokes_check needs a (dim-1)-cochain")
    bulk = d(a).total()
    if c.carrier != "product":
        return bulk, 0.0
    faces = c.simplices[c.dim - 1]
    t = c.vertices[faces][:, :, -1]
    boundary = 0.0
    for which, sign in ((1.0, 1.0), (0.0, -1.0)):
        on = np.flatnonzero(np.all(t == which, axis=1))
        pts = c.vertices[faces[on]][:, :, :-1]
        mat = np.concatenate([pts.mean(axis=1)[:, None, :], pts[:, 1:] - pts[:, :1]], axis=1)
        orient = np.sign(np.linalg.det(mat))
        boundary += sign * float(np.sum(orient * a.values[on]))
    return bulk, boundary


# -- persistence ---------------------------------------------------------------------

def save_cochain(a: Cochain, path) -> None:
    obj = {"degree": a.degree, "complex": a.complex.checksum(), "values": a.values.tolist()}
    Path(path).write_text(json.dumps(obj))


def load_cochain(path, c: SimplicialComplex) -> Cochain:
    obj = json.loads(Path(path).read_text())
    if obj["complex"] != c.checksum():
        raise ValueError("cochain file was written for a different complex")
    return Cochain(int(obj["degree"]), np.array(obj["values"], dtype=float), c)
