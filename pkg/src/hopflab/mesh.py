"""Oriented simplicial meshes of S^2, S^3 and the product S^3 x [0, 1].

Simplices of every degree are stored as sorted vertex-index rows.  Simplices
below the top degree are oriented by their sorted vertex order; top simplices
carry an extra orientation sign so that the fundamental chain is a cycle
(spheres) or has boundary ``slice(t=1) - slice(t=0)`` (product meshes).
"""
from __future__ import annotations

import hashlib
import itertools
import math
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

DEFAULT_SIMPLEX_CAP = 2_000_000


class MeshResourceError(RuntimeError):
    """Raised when a requested mesh would exceed the simplex cap."""


class MeshValidationError(ValueError):
    """Raised when a complex violates one of its structural invariants."""


class MeshParseError(ValueError):
    """Raised for malformed mesh files."""


def _faces_of(rows: np.ndarray, k: int) -> np.ndarray:
    """All sorted k-faces (k+1 vertices) of the sorted rows, with repeats."""
    n = rows.shape[1]
    combos = list(itertools.combinations(range(n), k + 1))
    return rows[:, combos].reshape(-1, k + 1)


def _row_index(table: np.ndarray) -> dict:
    return {tuple(r): i for i, r in enumerate(table.tolist())}


def _lookup(index: dict, rows: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.fromiter((index[tuple(r)] for r in rows.tolist()), dtype=np.int64, count=len(rows))
    except KeyError as exc:
        raise MeshValidationError(f"{what}: face {exc.args[0]} is missing from the complex") from None


@dataclass(eq=False)
class SimplicialComplex:
    """An immutable oriented simplicial complex embedded in Euclidean space.

    ``carrier`` is ``"sphere"`` (vertices on the unit sphere of
    ``ambient_dim``) or ``"product"`` (vertices ``(x, t)`` with ``x`` on S^3).
    """

    dim: int
    ambient_dim: int
    vertices: np.ndarray
    simplices: list[np.ndarray]
    orientations: list[np.ndarray]
    carrier: str = "sphere"
    slice_vertex_count: int = 0
    boundary_maps: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.vertices.setflags(write=False)
        for arr in (*self.simplices, *self.orientations):
            arr.setflags(write=False)
        if not self.boundary_maps:
            self.boundary_maps = self._build_boundary_maps()
        self._volumes: dict[int, np.ndarray] = {}

    # -- construction helpers ------------------------------------------------
    @classmethod
    def from_top(cls, vertices, top, orient, carrier="sphere", slice_vertex_count=0):
        top = np.sort(np.asarray(top, dtype=np.int64), axis=1)
        dim = top.shape[1] - 1
        simplices = []
        for k in range(dim):
            if k == 0:
                simplices.append(np.arange(len(vertices), dtype=np.int64).reshape(-1, 1))
            else:
                simplices.append(np.unique(_faces_of(top, k), axis=0))
        simplices.append(top)
        orientations = [np.ones(len(s), dtype=np.int64) for s in simplices[:-1]]
        orientations.append(np.asarray(orient, dtype=np.int64))
        vertices = np.asarray(vertices, dtype=float)
        return cls(dim, vertices.shape[1], vertices, simplices, orientations, carrier, slice_vertex_count)

    def _build_boundary_maps(self) -> list:
        maps = [sp.csr_matrix((0, len(self.simplices[0])), dtype=np.int64)]
        for k in range(1, self.dim + 1):
            rows = self.simplices[k]
            n_rows = len(rows)
            index = _row_index(self.simplices[k - 1])
            faces, signs = [], []
            for j in range(k + 1):
                faces.append(np.delete(rows, j, axis=1))
                signs.append(np.full(n_rows, (-1) ** j, dtype=np.int64))
            face_ids = _lookup(index, np.concatenate(faces), f"boundary of degree {k}")
            cols = np.tile(np.arange(n_rows), k + 1)
            vals = np.concatenate(signs) * self.orientations[k][cols]
            b = sp.csr_matrix((vals, (face_ids, cols)), shape=(len(self.simplices[k - 1]), n_rows))
            maps.append(b)
        return maps

    # -- basic queries ---------------------------------------------------------
    def count(self, k: int) -> int:
        return len(self.simplices[k])

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** k * self.count(k) for k in range(self.dim + 1))

    def coboundary(self, k: int) -> sp.csr_matrix:
        """Matrix of d acting on k-cochains (shape n_{k+1} x n_k)."""
        return self.boundary_maps[k + 1].T.tocsr().astype(float)

    def volumes(self, k: int) -> np.ndarray:
        """Flat k-volumes of the k-simplices (1 for vertices)."""
        if k not in self._volumes:
            if k == 0:
                vol = np.ones(self.count(0))
            else:
                pts = self.vertices[self.simplices[k]]
                edges = pts[:, 1:] - pts[:, :1]
                gram = np.einsum("sia,sja->sij", edges, edges)
                vol = np.sqrt(np.clip(np.linalg.det(gram), 0, None)) / math.factorial(k)
            self._volumes[k] = vol
        return self._volumes[k]

    def max_edge_length(self) -> float:
        e = self.vertices[self.simplices[1]]
        return float(np.max(np.linalg.norm(e[:, 1] - e[:, 0], axis=1)))

    def checksum(self) -> str:
        return hashlib.sha256(mesh_to_json(self).encode()).hexdigest()

    # -- carrier geometry ------------------------------------------------------
    def project(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Radial projection onto the curved carrier and its Jacobian.

        The flat simplices are integrated after pushing through this map, so
        the curved simplices tile the carrier exactly.
        """
        x = np.asarray(x, dtype=float)
        n_sph = self.ambient_dim if self.carrier == "sphere" else self.ambient_dim - 1
        v = x[:, :n_sph]
        r = np.linalg.norm(v, axis=1)
        u = v / r[:, None]
        y = x.copy()
        y[:, :n_sph] = u
        jac = np.zeros((len(x), self.ambient_dim, self.ambient_dim))
        jac[:, :n_sph, :n_sph] = (np.eye(n_sph)[None] - u[:, :, None] * u[:, None, :]) / r[:, None, None]
        if self.carrier == "product":
            jac[:, -1, -1] = 1.0
        return y, jac

    # -- product slices --------------------------------------------------------
    def boundary_components(self) -> list[np.ndarray]:
        """Top-dimensional faces on the boundary, grouped into connected components."""
        b = self.boundary_maps[self.dim]
        free = np.flatnonzero(np.asarray(abs(b).sum(axis=1)).ravel() == 1)
        faces = self.simplices[self.dim - 1][free]
        # union-find over shared vertices
        parent = list(range(len(faces)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        owner: dict[int, int] = {}
        for i, row in enumerate(faces.tolist()):
            for v in row:
                if v in owner:
                    a, c = find(i), find(owner[v])
                    if a != c:
                        parent[a] = c
                else:
                    owner[v] = i
        roots = np.array([find(i) for i in range(len(faces))])
        return [free[roots == r] for r in np.unique(roots)]


def _orientation_signs(vertices: np.ndarray, top: np.ndarray, carrier: str) -> np.ndarray:
    pts = vertices[top]
    edges = pts[:, 1:] - pts[:, :1]
    normal = pts.mean(axis=1)
    if carrier == "product":
        normal[:, -1] = 0.0
    mat = np.concatenate([normal[:, None, :], edges], axis=1)
    sign = np.sign(np.linalg.det(mat)).astype(np.int64)
    if carrier == "product":
        # product orientation puts d/dt first so that the boundary is t=1 minus t=0
        sign = -sign
    if np.any(sign == 0):
        raise MeshValidationError("degenerate top simplex")
    return sign


# -- generation -------------------------------------------------------------------

def _cross_polytope(d: int):
    n = d + 1
    verts = np.concatenate([np.eye(n), -np.eye(n)])
    top = []
    for signs in itertools.product((0, 1), repeat=n):
        top.append([i + n * s for i, s in enumerate(signs)])
    return verts, np.sort(np.array(top), axis=1)


def sphere_counts(d: int, level: int) -> list[int]:
    """Simplex counts per degree of ``gen_sphere(d, level)``."""
    if d == 2:
        c = [6, 12, 8]
        for _ in range(level):
            v, e, f = c
            c = [v + e, 2 * e + 3 * f, 4 * f]
    elif d == 3:
        c = [8, 24, 32, 16]
        for _ in range(level):
            v, e, f, t = c
            c = [v + e, 2 * e + 3 * f + t, 4 * f + 8 * t, 8 * t]
    else:
        raise ValueError("d must be 2 or 3")
    return c


def _split_tets(tets, mid, coords):
    out = []
    for v0, v1, v2, v3 in tets.tolist():
        m = {(a, b): mid[(min(a, b), max(a, b))] for a, b in itertools.combinations((v0, v1, v2, v3), 2)}
        m01, m02, m03 = m[v0, v1], m[v0, v2], m[v0, v3]
        m12, m13, m23 = m[v1, v2], m[v1, v3], m[v2, v3]
        out += [[v0, m01, m02, m03], [v1, m01, m12, m13], [v2, m02, m12, m23], [v3, m03, m13, m23]]
        diagonals = {
            (m01, m23): (m02, m12, m13, m03),
            (m02, m13): (m01, m12, m23, m03),
            (m03, m12): (m01, m02, m23, m13),
        }
        (a, b), ring = min(
            diagonals.items(), key=lambda kv: (np.linalg.norm(coords[kv[0][0]] - coords[kv[0][1]]), kv[0])
        )
        for i in range(4):
            out.append([a, b, ring[i], ring[(i + 1) % 4]])
    return np.array(out)


def _split_tris(tris, mid):
    out = []
    for v0, v1, v2 in tris.tolist():
        m01, m02, m12 = mid[min(v0, v1), max(v0, v1)], mid[min(v0, v2), max(v0, v2)], mid[min(v1, v2), max(v1, v2)]
        out += [[v0, m01, m02], [v1, m01, m12], [v2, m02, m12], [m01, m02, m12]]
    return np.array(out)


def gen_sphere(d: int, level: int, cap: int = DEFAULT_SIMPLEX_CAP) -> SimplicialComplex:
    """Triangulate the unit sphere S^d (d = 2 or 3).

    Starts from the boundary of the cross-polytope and applies ``level``
    rounds of edge-midpoint subdivision followed by radial normalization.
    """
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    if level < 0:
        raise ValueError("level must be >= 0")
    total = sum(sphere_counts(d, level))
    if total > cap:
        raise MeshResourceError(f"gen_sphere({d}, {level}) needs {total} simplices, above the cap of {cap}")
    verts, top = _cross_polytope(d)
    coords = [v for v in verts]
    for _ in range(level):
        edges = np.unique(_faces_of(top, 1), axis=0)
        mid = {}
        for a, b in edges.tolist():
            p = coords[a] + coords[b]
            mid[a, b] = len(coords)
            coords.append(p / np.linalg.norm(p))
        top = _split_tets(top, mid, coords) if d == 3 else _split_tris(top, mid)
        top = np.sort(top, axis=1)
    vertices = np.array(coords)
    return SimplicialComplex.from_top(vertices, top, _orientation_signs(vertices, top, "sphere"))


def gen_product_interval(base: SimplicialComplex, steps: int, cap: int = DEFAULT_SIMPLEX_CAP) -> SimplicialComplex:
    """Triangulate base x [0, 1] with ``steps`` time layers.

    Each prism (top simplex x time step) is cut into dim+1 simplices by the
    staircase rule on the global vertex order, so shared prism faces are cut
    the same way from both sides.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if base.carrier != "sphere":
        raise ValueError("base must be a sphere mesh")
    nv = base.count(0)
    n = base.dim + 1
    if n * base.count(base.dim) * steps > cap:
        raise MeshResourceError(f"product mesh needs more than the cap of {cap} simplices")
    ts = np.linspace(0.0, 1.0, steps + 1)
    vertices = np.concatenate([np.hstack([base.vertices, np.full((nv, 1), t)]) for t in ts])
    top = []
    base_top = base.simplices[base.dim]
    for j in range(steps):
        lo, hi = base_top + j * nv, base_top + (j + 1) * nv
        for i in range(n):
            top.append(np.hstack([lo[:, : i + 1], hi[:, i:]]))
    top = np.sort(np.concatenate(top), axis=1)
    return SimplicialComplex.from_top(
        vertices, top, _orientation_signs(vertices, top, "product"), carrier="product", slice_vertex_count=nv
    )


def product_slice_ids(product: SimplicialComplex, base: SimplicialComplex, k: int, which: int) -> np.ndarray:
    """Indices in ``product`` of the k-simplices of the slice t = which (0 or 1)."""
    offset = 0 if which == 0 else product.count(0) - base.count(0)
    return _lookup(_row_index(product.simplices[k]), base.simplices[k] + offset, "slice extraction")


# -- validation ----------------------------------------------------------------

def validate(c: SimplicialComplex) -> None:
    """Check every structural invariant; raise MeshValidationError naming the first violated one."""
    nv = len(c.vertices)
    for k, s in enumerate(c.simplices):
        if s.size and (s.min() < 0 or s.max() >= nv):
            raise MeshValidationError(f"dangling vertex index in {k}-simplices")
        if s.shape[1] != k + 1:
            raise MeshValidationError(f"{k}-simplices must have {k + 1} vertices")
        if len(c.orientations[k]) != len(s) or not np.all(np.abs(c.orientations[k]) == 1):
            raise MeshValidationError(f"orientation signs for degree {k} must be +-1, one per simplex")
    for k in range(2, c.dim + 1):
        prod = c.boundary_maps[k - 1] @ c.boundary_maps[k]
        if prod.count_nonzero() and np.abs(prod.data).max() != 0:
            raise MeshValidationError(f"boundary_map[{k - 1}] . boundary_map[{k}] != 0")
    b = c.boundary_maps[c.dim]
    incidence = np.asarray(abs(b).sum(axis=1)).ravel()
    net = np.asarray(b.sum(axis=1)).ravel()
    faces = c.simplices[c.dim - 1]
    allowed = (2,) if c.carrier == "sphere" else (1, 2)
    bad = np.flatnonzero(~np.isin(incidence, allowed))
    if bad.size:
        raise MeshValidationError(
            f"face {tuple(faces[bad[0]].tolist())} lies in {int(incidence[bad[0]])} top simplices"
        )
    bad = np.flatnonzero((incidence == 2) & (net != 0))
    if bad.size:
        raise MeshValidationError(
            f"orientation mismatch on shared face {tuple(faces[bad[0]].tolist())}"
        )
    if c.carrier == "sphere":
        defect = np.abs(np.linalg.norm(c.vertices, axis=1) - 1.0).max()
        if defect > 1e-12:
            raise MeshValidationError(f"sphere vertex off the unit sphere by {defect:.3g}")
    else:
        comps = c.boundary_components()
        if len(comps) != 2:
            raise MeshValidationError(f"product boundary has {len(comps)} components, expected 2")


# -- persistence ---------------------------------------------------------------

def mesh_to_json(c: SimplicialComplex) -> str:
    obj = {
        "dim": c.dim,
        "ambient_dim": c.ambient_dim,
        "carrier": c.carrier,
        "slice_vertex_count": c.slice_vertex_count,
        "vertices": c.vertices.tolist(),
        "simplices": {str(k): s.tolist() for k, s in enumerate(c.simplices)},
        "orientations": {str(k): o.tolist() for k, o in enumerate(c.orientations)},
    }
    return json.dumps(obj)


def mesh_from_json(text: str) -> SimplicialComplex:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeshParseError(f"line {exc.lineno}: {exc.msg}") from None
    try:
        dim = int(obj["dim"])
        ambient = int(obj["ambient_dim"])
        vertices = np.array(obj["vertices"], dtype=float)
        simplices = [np.array(obj["simplices"][str(k)], dtype=np.int64).reshape(-1, k + 1) for k in range(dim + 1)]
        orient = [np.array(obj["orientations"][str(k)], dtype=np.int64) for k in range(dim + 1)]
    except KeyError as exc:
        raise MeshParseError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise MeshParseError(f"bad field value: {exc}") from None
    if vertices.ndim != 2 or vertices.shape[1] != ambient:
        raise MeshParseError("field 'vertices': rows must have ambient_dim coordinates")
    carrier = obj.get("carrier", "product" if dim == 4 else "sphere")
    nv = len(vertices)
    for k, s in enumerate(simplices):
        if s.size and (s.min() < 0 or s.max() >= nv):
            raise MeshValidationError(f"dangling vertex index in {k}-simplices")
    c = SimplicialComplex(dim, ambient, vertices, simplices, orient, carrier, int(obj.get("slice_vertex_count", 0)))
    validate(c)
    return c


def save_mesh(c: SimplicialComplex, path) -> None:
    Path(path).write_text(mesh_to_json(c))


def load_mesh(path) -> SimplicialComplex:
    return mesh_from_json(Path(path).read_text())


def meshes_equal(a: SimplicialComplex, b: SimplicialComplex) -> bool:
    return (
        a.dim == b.dim
        and a.ambient_dim == b.ambient_dim
        and a.carrier == b.carrier
        and np.array_equal(a.vertices, b.vertices)
        and all(np.array_equal(x, y) for x, y in zip(a.simplices, b.simplices))
        and all(np.array_equal(x, y) for x, y in zip(a.orientations, b.orientations))
    )
