"""Independent brute-force reference implementations for the test suite.

These deliberately avoid the library's numerical code paths (no factorized
solves, no library eigensolvers beyond what a specific oracle states, no
shared kernels); they share only scalar arithmetic with the modules they
check.  They are test-tree-only and never imported by the package.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def gauss_jordan_inverse(matrix: np.ndarray) -> np.ndarray:
    """Explicit Gauss-Jordan elimination with partial pivoting."""
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    if n > 400:
        raise ValueError("oracle restricted to dimension <= 400")
    aug = np.hstack([a, np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < 1e-14:
            raise ZeroDivisionError("singular system")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] = aug[col] / aug[col, col]
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row] = aug[row] - aug[row, col] * aug[col]
    return aug[:, n:]


def dense_inverse_green(matrix: np.ndarray, E: float, i: int, j: int) -> float:
    """Green's function entry via explicit inversion of (H - E)."""
    inv = gauss_jordan_inverse(matrix - E * np.eye(matrix.shape[0]))
    return float(inv[i, j])


def grid_resonant_pair(
    ev1: np.ndarray,
    ev2: np.ndarray,
    interval: tuple[float, float] | None,
    L: int,
    beta: float,
    spacing: float | None = None,
) -> bool:
    """Fine-grid scan for an energy resonant with both spectra."""
    width = math.exp(-float(L) ** beta)
    if spacing is None:
        spacing = width / 10.0
    assert spacing <= width / 10.0 + 1e-300
    if interval is None:
        lo = min(ev1.min(), ev2.min()) - 2 * width
        hi = max(ev1.max(), ev2.max()) + 2 * width
    else:
        lo, hi = interval
    n = int(math.ceil((hi - lo) / spacing)) + 1
    for t in range(n):
        e = lo + t * spacing
        if e > hi:
            break
        if (np.abs(ev1 - e).min() < width) and (np.abs(ev2 - e).min() < width):
            return True
    return False


def sep_metric(u: tuple, v: tuple) -> int:
    """Exchange-symmetrised sup distance between flat 2d-coordinate tuples."""
    d = len(u) // 2
    direct = max(abs(a - b) for a, b in zip(u, v))
    swapped_u = u[d:] + u[:d]
    swapped = max(abs(a - b) for a, b in zip(swapped_u, v))
    return min(direct, swapped)


def exhaustive_separated_subset(centers: list[tuple], min_separation: int) -> int:
    """Maximum size over all subsets with pairwise separation exceeding the
    threshold; feasible only for small candidate sets."""
    n = len(centers)
    if n > 20:
        raise ValueError("oracle refuses more than 20 centers")
    best = 0
    for r in range(n, 0, -1):
        if r <= best:
            break
        for combo in itertools.combinations(range(n), r):
            ok = all(
                sep_metric(centers[a], centers[b]) > min_separation
                for a, b in itertools.combinations(combo, 2)
            )
            if ok:
                best = max(best, r)
                break
    return best


def boundary_by_neighbor_scan(points: np.ndarray, all_points: set) -> list:
    """Interior boundary via the literal rule: points with some neighbour
    (sup-distance 1) outside the set."""
    dim = points.shape[1]
    offsets = [
        off for off in itertools.product((-1, 0, 1), repeat=dim)
        if any(off)
    ]
    out = []
    for p in points:
        tp = tuple(int(c) for c in p)
        for off in offsets:
            q = tuple(a + b for a, b in zip(tp, off))
            if q not in all_points:
                out.append(tp)
                break
    return out


def path_graph_eigenvalues(n: int) -> np.ndarray:
    """Eigenvalues 2*cos(k*pi/(n+1)) of the n-site path with unit hopping."""
    return np.array([2.0 * math.cos(k * math.pi / (n + 1)) for k in range(1, n + 1)])
