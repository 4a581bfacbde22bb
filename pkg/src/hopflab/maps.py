"""Registry of analytic maps with Jacobians, tangent frames and pullbacks.

Maps are vectorized: ``F(x)`` takes ``(N, ambient)`` points and returns
``(N, out)``; ``F.jacobian(x)`` returns ``(N, out, ambient)``, the Jacobian of
the ambient formula.  Only its restriction to the domain tangent space is
meaningful, and ``tangent_jacobian`` applies that restriction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import exterior

FD_STEP = 1e-5


class DomainError(ValueError):
    """Raised when maps are composed across incompatible spaces."""


class NonSmoothPointError(ValueError):
    """Raised when a pointwise operation is requested on a declared crease."""


@dataclass(frozen=True)
class Space:
    """``kind`` is one of sphere, ball, euclidean, product (S^dim x [0, 1])."""

    kind: str
    dim: int

    @property
    def ambient(self) -> int:
        return {"sphere": self.dim + 1, "ball": self.dim, "euclidean": self.dim, "product": self.dim + 2}[self.kind]

    @property
    def intrinsic(self) -> int:
        return self.dim + 1 if self.kind == "product" else self.dim

    def __str__(self):
        sym = {"sphere": "S", "ball": "B", "euclidean": "R"}
        if self.kind == "product":
            return f"S{self.dim}x[0,1]"
        return f"{sym[self.kind]}{self.dim}"

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.kind == "sphere":
            return np.abs(np.linalg.norm(x, axis=1) - 1) <= tol
        if self.kind == "ball":
            return np.linalg.norm(x, axis=1) <= 1 + tol
        if self.kind == "product":
            t = x[:, -1]
            return (np.abs(np.linalg.norm(x[:, :-1], axis=1) - 1) <= tol) & (t >= -tol) & (t <= 1 + tol)
        return np.ones(len(x), dtype=bool)

    def is_subset_of(self, other: "Space") -> bool:
        if self == other:
            return True
        if other.kind == "euclidean":
            return self.ambient == other.dim and self.kind != "euclidean"
        if other.kind == "ball":
            return self.kind == "sphere" and self.dim + 1 == other.dim
        return False


def sphere(d: int) -> Space:
    return Space("sphere", d)


def ball(d: int) -> Space:
    return Space("ball", d)


def euclidean(d: int) -> Space:
    return Space("euclidean", d)


def product(d: int) -> Space:
    return Space("product", d)


def tangent_frame(space: Space, x: np.ndarray) -> np.ndarray:
    """Oriented orthonormal tangent frames, shape ``(N, ambient, intrinsic)``.

    Sphere frames come from Gram-Schmidt of the position vector followed by
    the coordinate axes, skipping the axis where the position is largest.
    The frame is positive when prefixed by the outward normal.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = len(x)
    if space.kind in ("ball", "euclidean"):
        return np.broadcast_to(np.eye(space.ambient), (n, space.ambient, space.ambient)).copy()
    v = x[:, :-1] if space.kind == "product" else x
    a = v.shape[1]
    u = v / np.linalg.norm(v, axis=1, keepdims=True)
    pivot = np.argmax(np.abs(u), axis=1)
    eye = np.eye(a)
    keep = np.array([[j for j in range(a) if j != p] for p in range(a)])[pivot]
    mats = np.concatenate([u[:, :, None], np.transpose(eye[keep], (0, 2, 1))], axis=2)
    q, r = np.linalg.qr(mats)
    q = q * np.sign(r[:, 0, 0])[:, None, None]
    q[:, :, 0] = u
    frame = q[:, :, 1:]
    s = np.sign(np.linalg.det(np.concatenate([u[:, :, None], frame], axis=2)))
    frame[:, :, -1] *= s[:, None]
    if space.kind == "sphere":
        return frame
    out = np.zeros((n, a + 1, a))
    out[:, :a, : a - 1] = frame
    out[:, a, a - 1] = 1.0
    return out


@dataclass(frozen=True, eq=False)
class AnalyticMap:
    name: str
    domain: Space
    codomain: Space
    func: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = FD_STEP
    # distance from each point to declared non-smooth interfaces (None: smooth everywhere)
    interface_distance: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None)

    @property
    def jacobian_mode(self) -> str:
        return "closed_form" if self.jac is not None else f"finite_difference(h={self.fd_step:g})"

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.func(x)

    def jacobian(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.jac is not None:
            return self.jac(x)
        return fd_jacobian(self.func, x, self.fd_step)

    def tangent_jacobian(self, x) -> np.ndarray:
        """Jacobian in an orthonormal tangent frame of the domain, ``(N, out, intrinsic)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.jacobian(x) @ tangent_frame(self.domain, x)

    def near_interface(self, x, tol: float = 1e-6) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.interface_distance is None:
            return np.zeros(len(x), dtype=bool)
        return self.interface_distance(x) < tol


def fd_jacobian(func, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    cols = []
    for j in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[j] = h
        cols.append((func(x + e) - func(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


# -- registry ------------------------------------------------------------------

def identity(space: Space) -> AnalyticMap:
    d = space.ambient
    return AnalyticMap(
        f"id:{space}", space, space, lambda x: x.copy(),
        lambda x: np.broadcast_to(np.eye(d), (len(x), d, d)).copy(),
    )


def _hopf(x):
    x0, x1, x2, x3 = x.T
    return np.stack([2 * (x0 * x2 + x1 * x3), 2 * (x1 * x2 - x0 * x3), x0**2 + x1**2 - x2**2 - x3**2], axis=1)


def _hopf_jac(x):
    x0, x1, x2, x3 = x.T
    rows = [
        np.stack([x2, x3, x0, x1], axis=1),
        np.stack([-x3, x2, x1, -x0], axis=1),
        np.stack([x0, x1, -x2, -x3], axis=1),
    ]
    return 2 * np.stack(rows, axis=1)


def hopf_map() -> AnalyticMap:
    """h(z1, z2) = (2 z1 conj(z2), |z1|^2 - |z2|^2) with z1 = x0 + i x1, z2 = x2 + i x3."""
    return AnalyticMap("hopf", sphere(3), sphere(2), _hopf, _hopf_jac)


def inclusion_s2() -> AnalyticMap:
    return AnalyticMap("i-s2", sphere(2), euclidean(3), lambda x: x.copy(),
                       lambda x: np.broadcast_to(np.eye(3), (len(x), 3, 3)).copy())


def constant_map(v, domain: Space = sphere(3)) -> AnalyticMap:
    v = np.asarray(v, dtype=float)
    return AnalyticMap(
        f"const:{','.join(f'{c:g}' for c in v)}", domain, euclidean(len(v)),
        lambda x: np.broadcast_to(v, (len(x), len(v))).copy(),
        lambda x: np.zeros((len(x), len(v), domain.ambient)),
    )


def orientation_reversal() -> AnalyticMap:
    """The isometry (x0, x1, x2, x3) -> (x0, x1, x2, -x3) of S^3."""
    m = np.diag([1.0, 1.0, 1.0, -1.0])
    return AnalyticMap("rev", sphere(3), sphere(3), lambda x: x @ m,
                       lambda x: np.broadcast_to(m, (len(x), 4, 4)).copy())


def equatorial_map() -> AnalyticMap:
    """A smooth S^3 -> S^2 map whose image is the equator (no preimage of the poles)."""
    def f(x):
        a = 2 * np.pi * x[:, 0]
        return np.stack([np.cos(a), np.sin(a), np.zeros(len(x))], axis=1)

    def j(x):
        a = 2 * np.pi * x[:, 0]
        out = np.zeros((len(x), 3, 4))
        out[:, 0, 0] = -2 * np.pi * np.sin(a)
        out[:, 1, 0] = 2 * np.pi * np.cos(a)
        return out

    return AnalyticMap("equatorial", sphere(3), sphere(2), f, j)


def compose(f: AnalyticMap, g: AnalyticMap) -> AnalyticMap:
    """f o g; the Jacobian is chained when both are closed form."""
    if not g.codomain.is_subset_of(f.domain):
        raise DomainError(f"cannot compose {f.name} after {g.name}: {g.codomain} is not inside {f.domain}")

    def func(x):
        return f.func(g.func(x))

    jac = None
    if f.jac is not None and g.jac is not None:
        def jac(x):
            return f.jac(g.func(x)) @ g.jac(x)

    dist = None
    if f.interface_distance is not None or g.interface_distance is not None:
        def dist(x):
            d = np.full(len(x), np.inf)
            if g.interface_distance is not None:
                d = np.minimum(d, g.interface_distance(x))
            if f.interface_distance is not None:
                d = np.minimum(d, f.interface_distance(g.func(x)))
            return d

    return AnalyticMap(f"{f.name}∘{g.name}", g.domain, f.codomain, func, jac,
                       min(f.fd_step, g.fd_step), dist)


def _check_into_r3(f: AnalyticMap):
    if f.codomain.ambient != 3:
        raise DomainError(f"{f.name} must map into R^3")
    if f.domain != sphere(3):
        raise DomainError(f"{f.name} must be defined on S^3")


def straight_line_null_homotopy(f0: AnalyticMap) -> AnalyticMap:
    """F(x, t) = (1 - t) F0(x) on S^3 x [0, 1]."""
    _check_into_r3(f0)

    def func(z):
        x, t = z[:, :-1], z[:, -1:]
        return (1 - t) * f0.func(x)

    def jac(z):
        x, t = z[:, :-1], z[:, -1]
        out = np.empty((len(z), 3, z.shape[1]))
        out[:, :, :-1] = (1 - t)[:, None, None] * f0.jacobian(x)
        out[:, :, -1] = -f0.func(x)
        return out

    return AnalyticMap(f"line-null:{f0.name}", product(3), euclidean(3), func, jac)


def time_constant_homotopy(f0: AnalyticMap) -> AnalyticMap:
    """F(x, t) = F0(x); a homotopy with no time dependence."""
    _check_into_r3(f0)

    def jac(z):
        out = np.zeros((len(z), 3, z.shape[1]))
        out[:, :, :-1] = f0.jacobian(z[:, :-1])
        return out

    return AnalyticMap(f"const-time:{f0.name}", product(3), euclidean(3), lambda z: f0.func(z[:, :-1]), jac)


def _rot_z(a):
    c, s = np.cos(a), np.sin(a)
    z, o = np.zeros_like(a), np.ones_like(a)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def rotation_path(g: AnalyticMap, theta: float) -> AnalyticMap:
    """F(x, t) = Rot_z(theta t) G(x), a homotopy through maps into S^2."""
    if g.codomain != sphere(2):
        raise DomainError("rotation_path needs a map into S^2")

    def func(z):
        rot = _rot_z(theta * z[:, -1])
        return np.einsum("nij,nj->ni", rot, g.func(z[:, :-1]))

    def jac(z):
        x, t = z[:, :-1], z[:, -1]
        rot = _rot_z(theta * t)
        drot = _rot_z(theta * t + np.pi / 2) * theta
        drot[:, 2, 2] = 0.0
        out = np.empty((len(z), 3, z.shape[1]))
        out[:, :, :-1] = rot @ g.jacobian(x)
        out[:, :, -1] = np.einsum("nij,nj->ni", drot, g.func(x))
        return out

    return AnalyticMap(f"rot:{theta:g}", product(3), euclidean(3), func, jac)


def smoothstep(u):
    """Quintic smoothstep on [0, 1], clamped; C^2 at both ends."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10 - 15 * u + 6 * u**2)


def smoothstep_prime(u):
    inside = (u > 0) & (u < 1)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 30 * u**2 * (1 - u) ** 2, 0.0)


def _chi(s):
    return smoothstep((s - 0.25) / 0.75)


def _chi_prime(s):
    return smoothstep_prime((s - 0.25) / 0.75) / 0.75


def cone_extension(g: AnalyticMap) -> AnalyticMap:
    """F0(x) = chi(|x|) G(x/|x|) on the ball, with chi = 0 on [0, 1/4] and chi(1) = 1."""
    if g.domain.kind != "sphere" or g.codomain.kind != "sphere":
        raise DomainError("cone_extension needs a sphere-to-sphere map")
    m, n = g.domain.dim, g.codomain.dim

    def func(x):
        s = np.linalg.norm(x, axis=1)
        out = np.zeros((len(x), n + 1))
        live = s > 0.25
        if live.any():
            xs = x[live] / s[live, None]
            out[live] = _chi(s[live])[:, None] * g.func(xs)
        return out

    def jac(x):
        s = np.linalg.norm(x, axis=1)
        out = np.zeros((len(x), n + 1, m + 1))
        live = s > 0.25
        if live.any():
            sl = s[live]
            u = x[live] / sl[:, None]
            proj = (np.eye(m + 1)[None] - u[:, :, None] * u[:, None, :]) / sl[:, None, None]
            out[live] = (_chi_prime(sl)[:, None, None] * g.func(u)[:, :, None] * u[:, None, :]
                         + _chi(sl)[:, None, None] * (g.jacobian(u) @ proj))
        return out

    return AnalyticMap(f"cone:{g.name}", ball(m + 1), ball(n + 1), func, jac)


def pullback_at(f: AnalyticMap, omega, p) -> np.ndarray:
    """(F* omega) at points p, in the oriented orthonormal tangent frame of the domain."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    bad = f.near_interface(p)
    if bad.any():
        raise NonSmoothPointError(f"point {p[np.argmax(bad)].tolist()} lies on a declared interface of {f.name}")
    vecs = f.tangent_jacobian(p)
    return exterior.contract(omega(f(p)), omega.degree, vecs)


def pullback_comass(f: AnalyticMap, omega, p) -> np.ndarray:
    t = pullback_at(f, omega, p)
    return exterior.comass(t, omega.degree)


# -- names ---------------------------------------------------------------------

def i_hopf() -> AnalyticMap:
    return compose(inclusion_s2(), hopf_map())


def i_hopf_reversed() -> AnalyticMap:
    return compose(inclusion_s2(), compose(hopf_map(), orientation_reversal()))


REGISTRY_NAMES = (
    "hopf", "i-s2", "i∘hopf", "i∘hopf∘rev", "const:v", "cone:hopf", "line-null:i∘hopf",
    "const-time:i∘hopf", "rot:θ", "equatorial", "rev", "i",
)


def registry(name: str) -> AnalyticMap:
    """Resolve a registry name; ``.`` is accepted in place of ``∘``.

    Composites ``f∘g∘...`` and the prefixes ``line-null:``, ``const-time:``
    and ``cone:`` resolve recursively.
    """
    name = name.strip()
    if name.startswith("const:"):
        return constant_map([float(v) for v in name.split(":", 1)[1].split(",")])
    if name.startswith("rot:"):
        return rotation_path(hopf_map(), float(name.split(":", 1)[1]))
    key = name.replace(".", "∘")
    simple = {
        "hopf": hopf_map,
        "i": inclusion_s2,
        "i-s2": inclusion_s2,
        "rev": orientation_reversal,
        "equatorial": equatorial_map,
    }
    if key in simple:
        return simple[key]()
    prefixes = {"line-null:": straight_line_null_homotopy, "const-time:": time_constant_homotopy,
                "cone:": cone_extension}
    for prefix, build in prefixes.items():
        if key.startswith(prefix):
            return build(registry(key[len(prefix):]))
    if "∘" in key:
        parts = [registry(p) for p in key.split("∘")]
        out = parts[-1]
        for f in reversed(parts[:-1]):
            out = compose(f, out)
        out = AnalyticMap(key, out.domain, out.codomain, out.func, out.jac, out.fd_step, out.interface_distance)
        return out
    raise KeyError(f"unknown map {name!r}; registry: {', '.join(REGISTRY_NAMES)}")
