"""Sampled k-dilation of analytic maps and the pointwise dilation inequalities.

dil_k(F) is the sup over the domain of s_1 * ... * s_k, the product of the
top k singular values of DF in orthonormal frames.  It is estimated by a
scrambled Sobol base set followed by rounds of Gaussian jitter around the
running argmax.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from . import exterior
from .maps import AnalyticMap, Space

QUANTILES = (0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0)
EUCLIDEAN_BOX = 2.0


@dataclass
class SamplingPlan:
    count: int = 10_000
    refine_rounds: int = 3
    refine_points: int = 1000
    refine_sigma: float = 0.1
    seed: int = 0
    interface_tol: float = 1e-6
    rank_tol: float = 1e-8
    echo: bool = False


@dataclass
class DilationReport:
    k: int
    sup_estimate: float
    argmax_point: np.ndarray
    sample_count: int
    histogram: dict
    rank_profile: int
    seed: int
    excluded_count: int = 0
    samples: np.ndarray | None = field(default=None, repr=False)
    products: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "k": self.k, "sup_estimate": self.sup_estimate, "argmax_point": self.argmax_point.tolist(),
            "sample_count": self.sample_count, "histogram": self.histogram, "rank_profile": self.rank_profile,
            "seed": self.seed, "excluded_count": self.excluded_count,
        }


# -- samplers ----------------------------------------------------------------------------

def _sobol(dim: int, count: int, seed: int) -> np.ndarray:
    with warnings.catch_warnings():
        # non-power-of-two counts lose only the balance property, which nothing here relies on
        warnings.simplefilter("ignore", UserWarning)
        u = qmc.Sobol(dim, scramble=True, seed=seed).random(count)
    return np.clip(u, 1e-12, 1 - 1e-12)


def sample_space(space: Space, count: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points of a sphere, ball, product S^d x [0,1] or box in R^d."""
    kind = space.kind
    if kind == "sphere":
        g = norm.ppf(_sobol(space.ambient, count, seed))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if kind == "ball":
        u = _sobol(space.ambient + 1, count, seed)
        g = norm.ppf(u[:, :-1])
        return g / np.linalg.norm(g, axis=1, keepdims=True) * u[:, -1:] ** (1.0 / space.ambient)
    if kind == "product":
        u = _sobol(space.ambient, count, seed)
        g = norm.ppf(u[:, :-1])
        return np.column_stack([g / np.linalg.norm(g, axis=1, keepdims=True), u[:, -1]])
    if kind == "euclidean":
        return (2 * _sobol(space.ambient, count, seed) - 1) * EUCLIDEAN_BOX
    raise ValueError(f"cannot sample {space}")


def project_to_space(space: Space, x: np.ndarray) -> np.ndarray:
    if space.kind == "sphere":
        return x / np.linalg.norm(x, axis=1, keepdims=True)
    if space.kind == "ball":
        r = np.linalg.norm(x, axis=1, keepdims=True)
        return np.where(r > 1, x / np.maximum(r, 1e-300), x)
    if space.kind == "product":
        v = x[:, :-1]
        return np.column_stack([v / np.linalg.norm(v, axis=1, keepdims=True), np.clip(x[:, -1], 0, 1)])
    return np.clip(x, -EUCLIDEAN_BOX, EUCLIDEAN_BOX)


def singular_values(F: AnalyticMap, x: np.ndarray) -> np.ndarray:
    """Singular values of DF in orthonormal tangent frames, descending, ``(N, min(out, intrinsic))``."""
    return np.linalg.svd(F.tangent_jacobian(x), compute_uv=False)


def _max_k(F: AnalyticMap) -> int:
    # ambient codomain: the normal direction of a sphere target contributes an exact zero
    return min(F.domain.intrinsic, F.codomain.ambient)


def _check_k(F: AnalyticMap, k: int):
    if not 1 <= k <= _max_k(F):
        raise ValueError(f"k = {k} out of range 1..{_max_k(F)} for {F.name}")


def _smooth_samples(F: AnalyticMap, x: np.ndarray, tol: float):
    bad = F.near_interface(x, tol)
    return x[~bad], int(bad.sum())


def collect_samples(F: AnalyticMap, plan: SamplingPlan, score=None):
    """Base samples plus refinement rounds around the argmax of ``score(points, svals)``.

    Returns (points, singular values, excluded count).  Without ``score`` the
    refinement follows s_1.
    """
    score = score or (lambda pts, s: s[:, 0])
    x, excluded = _smooth_samples(F, sample_space(F.domain, plan.count, plan.seed), plan.interface_tol)
    pts, svals = [x], [singular_values(F, x)] if len(x) else [np.zeros((0, _max_k(F)))]
    rng = np.random.default_rng(plan.seed + 1)
    sigma = plan.refine_sigma
    for _ in range(plan.refine_rounds):
        allp = np.concatenate(pts)
        if not len(allp):
            break
        vals = score(allp, np.concatenate(svals))
        centre = allp[int(np.argmax(vals))]
        y = project_to_space(F.domain, centre + sigma * rng.standard_normal((plan.refine_points, len(centre))))
        y, ex = _smooth_samples(F, y, plan.interface_tol)
        excluded += ex
        if len(y):
            pts.append(y)
            svals.append(singular_values(F, y))
        sigma /= 3.0
    allp = np.concatenate(pts)
    if not len(allp):
        raise ValueError("every sample was rejected; the sampling plan is degenerate")
    return allp, np.concatenate(svals), excluded


def top_products(svals: np.ndarray, k: int) -> np.ndarray:
    return np.prod(svals[:, :k], axis=1)


def dilation(F: AnalyticMap, k: int, plan: SamplingPlan | None = None) -> DilationReport:
    """Sampled estimate of dil_k(F) = sup of s_1 ... s_k."""
    plan = plan or SamplingPlan()
    _check_k(F, k)
    pts, svals, excluded = collect_samples(F, plan, lambda p, s: top_products(s, k))
    prod = top_products(svals, k)
    i = int(np.argmax(prod))
    rank = int(np.max(np.sum(svals > plan.rank_tol * np.maximum(svals[:, :1], 1e-300), axis=1)
                      * (svals[:, 0] > 0)))
    hist = {f"q{q:g}": float(np.quantile(prod, q)) for q in QUANTILES}
    return DilationReport(k, float(prod[i]), pts[i].copy(), len(pts), hist, rank, plan.seed, excluded,
                          pts if plan.echo else None, prod if plan.echo else None)


@dataclass
class RelationCheck:
    lhs: float
    rhs: float
    holds: bool
    per_sample_min_slack: float
    per_sample_holds: bool


def check_dilation_relation(F: AnalyticMap, j: int, k: int, plan: SamplingPlan | None = None) -> RelationCheck:
    """dil_j^(1/j) >= dil_k^(1/k) for j < k, on the sups and at every sample."""
    plan = plan or SamplingPlan()
    if not j < k:
        raise ValueError("need j < k")
    _check_k(F, j)
    _check_k(F, k)
    _, svals, _ = collect_samples(F, plan)
    pj = top_products(svals, j) ** (1.0 / j)
    pk = top_products(svals, k) ** (1.0 / k)
    slack = pj - pk
    lhs, rhs = float(np.max(pj)), float(np.max(pk))
    return RelationCheck(lhs, rhs, lhs >= rhs - 1e-12, float(np.min(slack)), bool(np.all(slack >= -1e-12)))


def check_pullback_bound(F: AnalyticMap, omega, plan: SamplingPlan | None = None) -> float:
    """Max over samples of comass(F*omega) - (s_1 ... s_k) comass(omega o F); should be <= 0."""
    plan = plan or SamplingPlan()
    k = omega.degree
    _check_k(F, k)
    pts, svals, _ = collect_samples(F, plan)
    vecs = F.tangent_jacobian(pts)
    lhs = exterior.comass(exterior.contract(omega(F(pts)), k, vecs), k)
    rhs = top_products(svals, k) * exterior.comass(omega(F(pts)), k)
    return float(np.max(lhs - rhs))


@dataclass
class LipschitzEstimate:
    value: float
    jacobian_sup: float
    quotient_sup: float
    disagree: bool


def _distance(space: Space, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if space.kind == "sphere":
        return np.arccos(np.clip(np.sum(a * b, axis=1), -1.0, 1.0))
    return np.linalg.norm(a - b, axis=1)


def lipschitz_estimate(F: AnalyticMap, plan: SamplingPlan | None = None, pairs: int = 10_000) -> LipschitzEstimate:
    """max s_1 over samples, cross-checked by difference quotients on point pairs."""
    plan = plan or SamplingPlan()
    _, svals, _ = collect_samples(F, plan)
    jac = float(np.max(svals[:, 0]))
    rng = np.random.default_rng(plan.seed + 2)
    a = sample_space(F.domain, pairs, plan.seed + 3)
    far = sample_space(F.domain, pairs // 2, plan.seed + 4)
    near = project_to_space(F.domain, a[pairs // 2:] + 1e-3 * rng.standard_normal(a[pairs // 2:].shape))
    b = np.concatenate([far, near])
    dx = _distance(F.domain, a, b)
    dy = _distance(F.codomain, F(a), F(b))
    ok = dx > 1e-12
    quot = float(np.max(dy[ok] / dx[ok])) if ok.any() else 0.0
    value = max(jac, quot)
    disagree = value > 0 and abs(jac - quot) > 0.05 * value
    return LipschitzEstimate(value, jac, quot, bool(disagree))


def write_csv(reports: list[DilationReport], path) -> None:
    if not reports:
        raise ValueError("no reports to write")
    dim = len(reports[0].argmax_point)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "sup_estimate", "samples"] + [f"argmax_{i}" for i in range(dim)]
                   + [f"q{q:g}" for q in QUANTILES])
        for r in reports:
            w.writerow([r.k, repr(r.sup_estimate), r.sample_count] + [repr(float(v)) for v in r.argmax_point]
                       + [repr(r.histogram[f"q{q:g}"]) for q in QUANTILES])
