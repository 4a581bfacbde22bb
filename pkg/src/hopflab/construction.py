"""Explicit squeeze maps on the 3-ball and the delta-sweep of dil_3(Psi o F0).

* ``build_lambda`` / ``build_Lambda``: radial profile lambda(s), linear near 0,
  equal to 1 past r/2; Lambda(x) = lambda(|x|) x/|x|.
* ``build_R``: delta Z^3-periodic map pushing everything outside the W delta
  neighborhood of the lattice radially onto the cube-boundary skeleton.
* ``build_psi``: Lambda o R inside B_{3r/4}, a slerp shell on 3r/4 <= |x| <= r,
  Lambda outside B_r.

All Jacobians are closed form.  Kinks (cell faces, cube-diagonal creases and
the two gluing spheres) are declared through ``interface_distance`` so the
samplers can stay off them.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dilation as dil
from .maps import AnalyticMap, ball, compose, cone_extension, euclidean, hopf_map, smoothstep, smoothstep_prime

SQRT3 = np.sqrt(3.0)


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SqueezeParams:
    delta: float = 0.1
    W: float = 0.3
    r: float = 0.9
    offset: tuple | None = None  # lattice offset; default delta/3 (1, 1, 1)
    n_plus_1: int = 3

    def __post_init__(self):
        if self.n_plus_1 != 3:
            raise ParameterError("only the 3-dimensional squeeze is implemented")
        if not 0.5 < self.r < 1:
            raise ParameterError(f"r = {self.r} must lie in (1/2, 1)")
        if not 0 < self.delta <= 0.25:
            raise ParameterError(f"delta = {self.delta} must lie in (0, 0.25]")
        if not 0 < self.W < 0.5:
            raise ParameterError(f"W = {self.W}: the neighborhood radius W delta must be below delta/2")
        if self.W * self.delta >= self.r / 4:
            raise ParameterError("W delta must be below r/4")
        if SQRT3 * self.delta / 2 >= self.r / 4:
            raise ParameterError("delta too large: displacement sqrt(3) delta/2 must stay below r/4")

    @property
    def lattice_offset(self) -> np.ndarray:
        if self.offset is None:
            return np.full(3, self.delta / 3)
        return np.asarray(self.offset, dtype=float)


def _unit(x):
    n = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(n, 1e-300), n[:, 0]


# -- lambda / Lambda -------------------------------------------------------------------

def _check_r(r):
    if not 0.5 < r < 1:
        raise ParameterError(f"r = {r} must lie in (1/2, 1)")


def build_lambda(r: float):
    """Return (lambda, lambda') as vectorized functions of s >= 0."""
    _check_r(r)
    a = r / 4

    def lam(s):
        s = np.asarray(s, dtype=float)
        sig = smoothstep((s - a) / a)
        return (1 - sig) * s / r + sig

    def lam_prime(s):
        s = np.asarray(s, dtype=float)
        sig = smoothstep((s - a) / a)
        return (1 - sig) / r + smoothstep_prime((s - a) / a) / a * (1 - s / r)

    return lam, lam_prime


def _Lambda_parts(r):
    lam, lam_p = build_lambda(r)

    def func(x):
        u, s = _unit(x)
        return lam(s)[:, None] * u

    def jac(x):
        u, s = _unit(x)
        small = s < 1e-12
        ratio = np.where(small, 1.0 / r, lam(s) / np.maximum(s, 1e-300))
        uu = u[:, :, None] * u[:, None, :]
        out = ratio[:, None, None] * (np.eye(3)[None] - uu) + lam_p(s)[:, None, None] * uu
        out[small] = np.eye(3) / r
        return out

    return func, jac


def build_Lambda(r: float) -> AnalyticMap:
    func, jac = _Lambda_parts(r)
    return AnalyticMap(f"Lambda(r={r:g})", ball(3), ball(3), func, jac)


# -- R ---------------------------------------------------------------------------------

def nearest_lattice(y: np.ndarray, p: SqueezeParams) -> np.ndarray:
    off = p.lattice_offset
    return off + p.delta * np.round((y - off) / p.delta)


def dual_skeleton_distance(z: np.ndarray, p: SqueezeParams) -> np.ndarray:
    """Distance to the union of the cube faces around the lattice points."""
    w = (z - p.lattice_offset) / p.delta - 0.5
    return np.min(np.abs(w - np.round(w)), axis=1) * p.delta


def _R_interface_distance(y, p: SqueezeParams):
    v = y - nearest_lattice(y, p)
    a = np.sort(np.abs(v), axis=1)
    faces = p.delta / 2 - a[:, -1]
    creases = (a[:, -1] - a[:, -2]) / np.sqrt(2)
    # the crease only matters where the ramp is switched on
    creases = np.where(np.linalg.norm(v, axis=1) < p.W * p.delta / 2, np.inf, creases)
    return np.minimum(faces, creases)


def _R_parts(p: SqueezeParams):
    wd = p.W * p.delta
    half = p.delta / 2

    def ramp(u):
        return smoothstep(2 * u - 1), 2 * smoothstep_prime(2 * u - 1)

    def func(y):
        q = nearest_lattice(y, p)
        v = y - q
        dist = np.linalg.norm(v, axis=1)
        m = np.max(np.abs(v), axis=1)
        rho, _ = ramp(dist / wd)
        live = rho > 0
        out = y.copy()
        P = q[live] + half * v[live] / m[live, None]
        out[live] = y[live] + rho[live, None] * (P - y[live])
        return out

    def jac(y):
        q = nearest_lattice(y, p)
        v = y - q
        dist = np.linalg.norm(v, axis=1)
        rho, rho_p = ramp(dist / wd)
        out = np.broadcast_to(np.eye(3), (len(y), 3, 3)).copy()
        live = rho > 0
        if live.any():
            vl, dl = v[live], dist[live]
            idx = np.argmax(np.abs(vl), axis=1)
            m = np.abs(vl[np.arange(len(vl)), idx])
            sgn = np.sign(vl[np.arange(len(vl)), idx])
            e = np.zeros_like(vl)
            e[np.arange(len(vl)), idx] = sgn
            P = q[live] + half * vl / m[:, None]
            dP = half * (np.eye(3)[None] / m[:, None, None] - vl[:, :, None] * e[:, None, :] / (m**2)[:, None, None])
            grad_rho = (rho_p[live] / wd)[:, None] * vl / dl[:, None]
            out[live] = (np.eye(3)[None] + (P - y[live])[:, :, None] * grad_rho[:, None, :]
                         + rho[live, None, None] * (dP - np.eye(3)[None]))
        return out

    return func, jac


def build_R(params: SqueezeParams) -> AnalyticMap:
    func, jac = _R_parts(params)
    return AnalyticMap(f"R(delta={params.delta:g},W={params.W:g})", euclidean(3), euclidean(3), func, jac,
                       interface_distance=lambda y: _R_interface_distance(y, params))


def build_lambda_R(params: SqueezeParams) -> AnalyticMap:
    """Lambda o R on the ball (R may push points slightly outside B^3, where Lambda is still defined)."""
    lam_f, lam_j = _Lambda_parts(params.r)
    R_f, R_j = _R_parts(params)
    return AnalyticMap(f"Lambda∘R(delta={params.delta:g})", ball(3), ball(3), lambda x: lam_f(R_f(x)),
                       lambda x: lam_j(R_f(x)) @ R_j(x), interface_distance=lambda y: _R_interface_distance(y, params))


# -- Psi -------------------------------------------------------------------------------

def _sin_ratio(a, th):
    """sin(a th)/sin(th) and its th-derivative divided by -sin(th); series near th = 0."""
    small = th < 1e-2
    ths = np.where(small, 1.0, th)
    s, c = np.sin(ths), np.cos(ths)
    val = np.sin(a * ths) / s
    dval = (a * np.cos(a * ths) * s - np.sin(a * ths) * c) / s**2
    g = -dval / s
    t2 = th**2
    val_series = a * (1 + (1 - a**2) * t2 / 6 + (1 - a**2) * (7 - 3 * a**2) * t2**2 / 360)
    # d/dth of the series, divided by -th (sin th ~ th to the same order)
    g_series = -a * (1 - a**2) * (1 / 3 + (7 - 3 * a**2) * t2 / 90 + t2 / 18)
    return np.where(small, val_series, val), np.where(small, g_series, g)


def build_psi(params: SqueezeParams) -> AnalyticMap:
    r = params.r
    inner, outer = 0.75 * r, r
    width = outer - inner
    lam_f, lam_j = _Lambda_parts(r)
    R_f, R_j = _R_parts(params)

    def regions(x):
        s = np.linalg.norm(x, axis=1)
        return s < inner, (s >= inner) & (s <= outer), s > outer

    def shell_parts(x):
        u, s = _unit(x)
        y = inner * u
        A = lam_f(R_f(y))
        t = smoothstep((s - inner) / width)
        c = np.clip(np.sum(A * u, axis=1), -1.0, 1.0)
        th = np.arccos(c)
        f, fg = _sin_ratio(1 - t, th)
        g, gg = _sin_ratio(t, th)
        return u, s, y, A, t, c, th, f, fg, g, gg

    def func(x):
        a, b, o = regions(x)
        out = np.empty_like(x)
        if a.any():
            out[a] = lam_f(R_f(x[a]))
        if o.any():
            out[o] = lam_f(x[o])
        if b.any():
            u, s, y, A, t, c, th, f, fg, g, gg = shell_parts(x[b])
            out[b] = f[:, None] * A + g[:, None] * u
        return out

    def jac(x):
        a, b, o = regions(x)
        out = np.empty((len(x), 3, 3))
        if a.any():
            out[a] = lam_j(R_f(x[a])) @ R_j(x[a])
        if o.any():
            out[o] = lam_j(x[o])
        if b.any():
            xb = x[b]
            u, s, y, A, t, c, th, f, fg, g, gg = shell_parts(xb)
            proj = (np.eye(3)[None] - u[:, :, None] * u[:, None, :]) / s[:, None, None]
            dA = lam_j(R_f(y)) @ R_j(y) @ (inner * proj)
            dB = proj
            dc = np.einsum("ni,nij->nj", u, dA) + np.einsum("ni,nij->nj", A, dB)
            dt = (smoothstep_prime((s - inner) / width) / width)[:, None] * u
            # d/dt of sin(a th)/sin(th) with a = 1 - t and a = t
            sn = np.where(th < 1e-12, 1.0, np.sin(th))
            df_dt = np.where(th < 1e-12, -1.0, -th * np.cos((1 - t) * th) / sn)
            dg_dt = np.where(th < 1e-12, 1.0, th * np.cos(t * th) / sn)
            # d(sin(a th)/sin th) = (-g_ratio) d th * sin th = g_ratio dc, since d th = -dc / sin th
            df = fg[:, None] * dc + df_dt[:, None] * dt
            dg = gg[:, None] * dc + dg_dt[:, None] * dt
            out[b] = (f[:, None, None] * dA + g[:, None, None] * dB
                      + A[:, :, None] * df[:, None, :] + u[:, :, None] * dg[:, None, :])
        return out

    def interfaces(x):
        s = np.linalg.norm(x, axis=1)
        d = np.minimum(np.abs(s - inner), np.abs(s - outer))
        core = s < inner
        if core.any():
            d[core] = np.minimum(d[core], _R_interface_distance(x[core], params))
        shell = (s >= inner) & (s <= outer)
        if shell.any():
            u = x[shell] / s[shell, None]
            d[shell] = np.minimum(d[shell], _R_interface_distance(inner * u, params) * s[shell] / inner)
        return d

    return AnalyticMap(f"Psi(delta={params.delta:g},W={params.W:g},r={r:g})", ball(3), ball(3), func, jac,
                       interface_distance=interfaces)


def lattice_neighborhood_distance(z: np.ndarray, params: SqueezeParams) -> np.ndarray:
    """Distance to the nearest lattice point of Q = (offset + delta Z^3) within B_r; V_W is where this < W delta."""
    q = nearest_lattice(z, params)
    d = np.linalg.norm(z - q, axis=1)
    return np.where(np.linalg.norm(q, axis=1) < params.r, d, np.inf)


# -- property checks -------------------------------------------------------------------

def _ball_samples(count, seed):
    return dil.sample_space(ball(3), count, seed)


@dataclass
class BuilderChecks:
    delta: float
    periodicity_defect: float
    max_displacement: float
    displacement_bound: float
    skeleton_distance: float
    boundary_identity_defect: float
    outside_agreement_defect: float
    max_s3_ratio_outside: float
    lip_psi: float


def check_builders(params: SqueezeParams, samples: int = 10_000, seed: int = 0) -> BuilderChecks:
    rng = np.random.default_rng(seed)
    R = build_R(params)
    psi = build_psi(params)
    y = rng.uniform(-1, 1, (1000, 3))
    per = 0.0
    for e in np.eye(3):
        per = max(per, float(np.max(np.abs(R(y + params.delta * e) - R(y) - params.delta * e))))
    y = rng.uniform(-1, 1, (max(samples, 100_000), 3))
    disp = float(np.max(np.linalg.norm(R(y) - y, axis=1)))
    off = y[np.linalg.norm(y - nearest_lattice(y, params), axis=1) >= params.W * params.delta]
    skel = float(np.max(dual_skeleton_distance(R(off), params)))
    b = rng.standard_normal((1000, 3))
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    bnd = float(np.max(np.abs(psi(b) - b)))
    out = rng.standard_normal((1000, 3))
    out = out / np.linalg.norm(out, axis=1, keepdims=True) * rng.uniform(params.r * 1.0001, 1, (1000, 1))
    agree = float(np.max(np.abs(psi(out) - build_Lambda(params.r)(out))))
    x = _ball_samples(samples, seed)
    x = x[~psi.near_interface(x)]
    x = x[lattice_neighborhood_distance(x, params) >= params.W * params.delta]
    s = dil.singular_values(psi, x)
    s3 = float(np.max(s[:, 2] / np.maximum(s[:, 0], 1e-300)))
    lip = dil.lipschitz_estimate(psi, dil.SamplingPlan(count=samples, seed=seed)).value
    return BuilderChecks(params.delta, per, disp, SQRT3 * params.delta / 2, skel, bnd, agree, s3, lip)


# -- sweep -----------------------------------------------------------------------------

@dataclass
class SweepRow:
    delta: float
    lip_lambda_R: float
    lip_psi: float
    max_third_singular_outside_VW: float
    dil3_composite_outside: float
    dil3_composite_overall: float
    excluded_fraction: float
    boundary_defect: float


@dataclass
class SweepReport:
    W: float
    r: float
    f0: str
    rows: list = field(default_factory=list)

    def to_dict(self):
        return {"W": self.W, "r": self.r, "f0": self.f0, "rows": [asdict(row) for row in self.rows]}

    def write_csv(self, path):
        names = list(SweepRow.__dataclass_fields__)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for row in self.rows:
                w.writerow([repr(float(getattr(row, n))) for n in names])

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def default_f0() -> AnalyticMap:
    return cone_extension(hopf_map())


def sweep(delta_list, W: float = 0.3, r: float = 0.9, F0: AnalyticMap | None = None,
          plan: dil.SamplingPlan | None = None, phi: AnalyticMap | None = None) -> SweepReport:
    """Per delta: Lipschitz data of Lambda o R and Psi, and dil_3 of Psi o F0 split by F0(x) in V_W."""
    plan = plan or dil.SamplingPlan(count=10_000)
    F0 = default_f0() if F0 is None else F0
    if phi is not None:
        F0 = compose(F0, phi)
    base = dil.sample_space(F0.domain, plan.count, plan.seed)
    lip0 = max(float(np.max(dil.singular_values(F0, base)[:, 0])), 1.0)
    bnd = dil.sample_space(F0.domain, 1000, plan.seed + 7)
    bnd = bnd / np.linalg.norm(bnd, axis=1, keepdims=True)
    report = SweepReport(W, r, F0.name)
    for delta in sorted(delta_list, reverse=True):
        p = SqueezeParams(delta=delta, W=W, r=r)
        psi = build_psi(p)
        lam_R = build_lambda_R(p)
        lip_lr = dil.lipschitz_estimate(lam_R, plan).value
        lip_psi = dil.lipschitz_estimate(psi, plan).value
        xb = dil.sample_space(ball(3), plan.count, plan.seed)
        xb = xb[~psi.near_interface(xb)]
        xb = xb[lattice_neighborhood_distance(xb, p) >= W * delta]
        if not len(xb):
            raise ValueError("no samples outside V_W")
        s = dil.singular_values(psi, xb)
        s3 = float(np.max(s[:, 2] / np.maximum(s[:, 0], 1e-300)))
        y = F0(base)
        smooth = psi.interface_distance(y) / lip0 >= plan.interface_tol
        x, y = base[smooth], y[smooth]
        comp = compose(psi, F0)
        prod = dil.top_products(dil.singular_values(comp, x), 3)
        outside = lattice_neighborhood_distance(y, p) >= W * delta
        if not outside.any() or not len(x):
            raise ValueError("empty sample stratum")
        bdef = float(np.max(np.abs(comp(bnd) - hopf_map()(bnd)))) if phi is None else float("nan")
        report.rows.append(SweepRow(delta, lip_lr, lip_psi, s3, float(np.max(prod[outside])), float(np.max(prod)),
                                    1 - len(x) / len(base), bdef))
    return report
