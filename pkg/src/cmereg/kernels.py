"""Scalar kernels and Gram-matrix construction.

Conventions:
  * gaussian: k(a, b) = exp(-||a - b||^2 / (2 sigma^2)), sigma = bandwidth.
  * linear:   k(a, b) = <a, b>.
  * delta:    k(a, b) = 1 if the symbols are equal, else 0. Points are
    hashable symbols from a finite alphabet; domain_dim is ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError

VARIANTS = ("gaussian", "linear", "delta")


@dataclass(frozen=True)
class KernelSpec:
    variant: str
    bandwidth: float | None = None
    domain_dim: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InputError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "gaussian":
            if self.bandwidth is None or not self.bandwidth > 0:
                raise InputError("gaussian kernel requires bandwidth > 0")
        if self.domain_dim < 1:
            raise InputError("domain_dim must be a positive integer")


@dataclass(frozen=True)
class GramMatrix:
    """Matrix of pairwise kernel evaluations; symmetric iff built from one point set."""

    entries: np.ndarray
    symmetric: bool


def _as_array(spec: KernelSpec, points) -> np.ndarray:
    """Stack numeric points into an (m, d) array, checking dimensions."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:  # sequence of scalar points
        arr = arr[:, None]
    if arr.ndim != 2:
        raise InputError("numeric points must be scalars or 1-d vectors")
    if arr.shape[1] != spec.domain_dim:
        raise InputError(
            f"points have dimension {arr.shape[1]}, kernel expects {spec.domain_dim}"
        )
    return arr


def eval_kernel(spec: KernelSpec, a, b) -> float:
    """Evaluate the kernel on a single pair of points."""
    if spec.variant == "delta":
        if type(a) is not type(b):
            raise InputError(
                f"delta kernel points must share a type, got {type(a).__name__} vs {type(b).__name__}"
            )
        return 1.0 if a == b else 0.0
    av = _as_array(spec, [a])[0]
    bv = _as_array(spec, [b])[0]
    if spec.variant == "linear":
        return float(np.dot(av, bv))
    d2 = float(np.sum((av - bv) ** 2))
    return float(np.exp(-d2 / (2.0 * spec.bandwidth**2)))


def _matrix(spec: KernelSpec, rows, cols) -> np.ndarray:
    if spec.variant == "delta":
        first = type(next(iter(rows)))
        codes = {}
        def encode(pts):
            out = np.empty(len(pts), dtype=np.int64)
            for i, p in enumerate(pts):
                if type(p) is not first:
                    raise InputError("delta kernel points must share a type")
                out[i] = codes.setdefault(p, len(codes))
            return out
        r, c = encode(rows), encode(cols)
        return (r[:, None] == c[None, :]).astype(float)
    R = _as_array(spec, rows)
    C = _as_array(spec, cols)
    if spec.variant == "linear":
        return R @ C.T
    d2 = cdist(R, C, metric="sqeuclidean")
    return np.exp(-d2 / (2.0 * spec.bandwidth**2))


def gram(spec: KernelSpec, points) -> GramMatrix:
    """Symmetric Gram matrix over one point set.

    The upper triangle is computed and mirrored so symmetry holds exactly.
    """
    if len(points) == 0:
        raise InputError("gram() needs a nonempty point sequence")
    M = _matrix(spec, points, points)
    upper = np.triu(M)
    M = upper + np.triu(M, 1).T
    if spec.variant == "gaussian":
        np.fill_diagonal(M, 1.0)
    return GramMatrix(entries=M, symmetric=True)


def cross_gram(spec: KernelSpec, rows, cols) -> GramMatrix:
    """Rectangular kernel matrix between two point sets."""
    if len(rows) == 0 or len(cols) == 0:
        raise InputError("cross_gram() needs nonempty point sequences")
    return GramMatrix(entries=_matrix(spec, rows, cols), symmetric=False)


def median_bandwidth(points, max_points: int = 500, seed: int = 0) -> float:
    """Median pairwise distance heuristic for picking a gaussian bandwidth."""
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    n = arr.shape[0]
    if n > max_points:
        idx = np.random.default_rng(seed).choice(n, size=max_points, replace=False)
        arr = arr[np.sort(idx)]
    d = cdist(arr, arr)
    vals = d[np.triu_indices_from(d, k=1)]
    med = float(np.median(vals)) if vals.size else 1.0
    return med if med > 0 else 1.0
