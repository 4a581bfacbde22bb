"""Pointwise exterior algebra on full antisymmetric coefficient arrays.

A k-tensor on an n-dimensional space is stored as an array of shape
``(..., n, ..., n)`` holding its values on basis vectors, so a 2-form
``w`` has ``w[..., i, j] = w(e_i, e_j)``.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def increasing(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(n), k))


def perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _signed_perms(k: int):
    return tuple((perm, perm_sign(perm)) for perm in itertools.permutations(range(k)))


def from_components(comp: np.ndarray, n: int, k: int) -> np.ndarray:
    """Full tensor from components on increasing index tuples (last axis)."""
    lead = comp.shape[:-1]
    out = np.zeros(lead + (n,) * k)
    for c, idx in enumerate(increasing(n, k)):
        for perm, s in _signed_perms(k):
            out[(...,) + tuple(idx[p] for p in perm)] = s * comp[..., c]
    return out


def components(t: np.ndarray, n: int, k: int) -> np.ndarray:
    """Components of a full k-tensor on increasing index tuples."""
    if k == 0:
        return t[..., None]
    return np.stack([t[(...,) + idx] for idx in increasing(n, k)], axis=-1)


def contract(t: np.ndarray, k: int, vecs: np.ndarray) -> np.ndarray:
    """Evaluate a k-tensor on all tuples of the given vectors.

    ``t`` has shape ``(N,) + (D,)*k`` and ``vecs`` has shape ``(N, D, m)``
    (columns are vectors).  Returns the pulled-back tensor ``(N,) + (m,)*k``.
    """
    out = t
    for axis in range(k):
        # contract the first remaining D-axis, appending the new m-axis at the end
        out = np.einsum("nd...,ndm->n...m", out, vecs)
    return out


def wedge_covectors(g: np.ndarray) -> np.ndarray:
    """Full tensor of g_1 ^ ... ^ g_k for covectors stacked as ``(..., k, D)``."""
    k, d = g.shape[-2:]
    out = np.zeros(g.shape[:-2] + (d,) * k)
    letters = "abcdefgh"[:k]
    for perm, s in _signed_perms(k):
        ops = [g[..., p, :] for p in perm]
        spec = ",".join(f"...{c}" for c in letters) + "->..." + letters
        out += s * np.einsum(spec, *ops)
    return out


def antisymmetry_defect(t: np.ndarray, k: int) -> float:
    if k < 2:
        return 0.0
    lead = t.ndim - k
    worst = 0.0
    for i in range(k - 1):
        axes = list(range(t.ndim))
        axes[lead + i], axes[lead + i + 1] = axes[lead + i + 1], axes[lead + i]
        worst = max(worst, float(np.max(np.abs(t + np.transpose(t, axes)))))
    return worst


def comass(t: np.ndarray, k: int) -> np.ndarray:
    """Comass of k-tensors given in orthonormal coordinates, shape ``(N,) + (n,)*k``.

    Exact for every (n, k) with n <= 4: degrees 0, 1, n-1 and n are simple
    (norm of components) and degree 2 is the largest singular value.
    """
    if k == 0:
        return np.abs(t)
    n = t.shape[-1]
    if k == 2 and n > 3:
        return np.linalg.svd(t, compute_uv=False)[..., 0]
    if k in (1, n - 1, n) or k == 2:
        return np.sqrt(np.sum(components(t, n, k) ** 2, axis=-1))
    raise NotImplementedError(f"comass of {k}-forms in dimension {n}")


def wedge_top(a: np.ndarray, p: int, b: np.ndarray, q: int) -> np.ndarray:
    """(a ^ b)(e_1, ..., e_n) for a p-tensor and q-tensor with p + q = n."""
    n = p + q
    total = 0.0
    for idx in increasing(n, p):
        rest = tuple(i for i in range(n) if i not in idx)
        s = perm_sign(idx + rest)
        total = total + s * a[(...,) + idx] * b[(...,) + rest]
    return total
