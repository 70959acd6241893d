"""Entailment-weighted response graphs and their Laplacian spectra.

Directed pairwise entailment probabilities between sampled responses are
symmetrized into an undirected weighted graph.  Two views of that graph feed
the estimators: a hard one (connected components under a bidirectional
entailment threshold, giving discrete semantic classes) and a soft one (the
heat-kernel trace of the normalized Laplacian, a smooth multiscale count of
semantic modes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EntailmentMatrix",
    "SemanticGraph",
    "Spectrum",
    "ConvergenceError",
    "symmetrize",
    "cluster_bidirectional",
    "normalized_laplacian",
    "eigenvalues_symmetric",
    "laplacian_spectrum",
    "heat_trace",
    "u_eigv",
    "connected_components",
]

SYMMETRY_TOL = 1e-12
JACOBI_OFF_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
LAPLACIAN_EIG_TOL = 1e-8


class ConvergenceError(RuntimeError):
    """Eigensolver failed to reach the off-diagonal tolerance.

    Attributes:
        residual: Off-diagonal Frobenius norm after the final sweep.
    """

    def __init__(self, residual: float):
        super().__init__(f"Jacobi sweeps did not converge (off-diagonal norm {residual:.3e})")
        self.residual = residual


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False, repr=False)
class EntailmentMatrix:
    """Directed entailment probabilities a_ij between n responses.

    Entry (i, j) is the probability that response i entails response j.  The
    matrix need not be symmetric; the diagonal is defined as 1.0 and is
    overwritten on construction.
    """

    a: np.ndarray

    def __init__(self, a) -> None:
        arr = np.array(a, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"entailment matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("entailment matrix must have at least one node")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError("entailment entries must lie in [0, 1]")
        np.fill_diagonal(arr, 1.0)
        object.__setattr__(self, "a", _readonly(arr))

    @property
    def n(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True, eq=False, repr=False)
class SemanticGraph:
    """Undirected response graph with symmetric weights and zero diagonal."""

    w: np.ndarray

    def __init__(self, w) -> None:
        arr = np.array(w, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {arr.shape}")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError("weights must lie in [0, 1]")
        if np.abs(arr - arr.T).max() > SYMMETRY_TOL:
            raise ValueError("weight matrix must be symmetric")
        np.fill_diagonal(arr, 0.0)
        object.__setattr__(self, "w", _readonly(arr))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.w.sum(axis=1)


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues of a symmetric matrix (ascending)."""

    eigenvalues: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def symmetrize(m: EntailmentMatrix) -> SemanticGraph:
    """Averages the two entailment directions into undirected weights.

    w_ij = (a_ij + a_ji) / 2 for i != j; the diagonal is forced to zero so
    self-entailment carries no structural information.
    """
    w = (m.a + m.a.T) / 2.0
    np.fill_diagonal(w, 0.0)
    return SemanticGraph(w)


class _DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]


def cluster_bidirectional(m: EntailmentMatrix, threshold: float = 0.5) -> list[int]:
    """Clusters responses by bidirectional entailment.

    Responses i and j are linked iff min(a_ij, a_ji) > threshold, i.e. each
    must entail the other; clusters are the connected components of the link
    relation.  Each cluster is identified by its smallest member index, so
    the output depends only on the link structure.

    Args:
        m: Directed entailment matrix.
        threshold: Link threshold, strictly inside (0, 1).

    Returns:
        A cluster id per response (length n).
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    n = m.n
    ds = _DisjointSet(n)
    mutual = np.minimum(m.a, m.a.T)
    for i in range(n - 1):
        linked = np.nonzero(mutual[i, i + 1 :] > threshold)[0]
        for off in linked:
            ds.union(i, i + 1 + int(off))
    smallest: dict[int, int] = {}
    for i in range(n):
        root = ds.find(i)
        if root not in smallest:
            smallest[root] = i
    return [smallest[ds.find(i)] for i in range(n)]


def connected_components(g: SemanticGraph) -> int:
    """Number of connected components under strictly positive weights.

    Zero-degree nodes count as their own components.
    """
    ds = _DisjointSet(g.n)
    rows, cols = np.nonzero(g.w > 0.0)
    for i, j in zip(rows, cols):
        ds.union(int(i), int(j))
    return len({ds.find(i) for i in range(g.n)})


def normalized_laplacian(g: SemanticGraph) -> np.ndarray:
    """Normalized Laplacian I - D^{-1/2} W D^{-1/2} of the response graph.

    Isolated nodes (zero degree) get an all-zero row and column, including
    the diagonal, so each contributes eigenvalue 0: a response entailing
    nothing is its own semantic mode.
    """
    d = g.degrees
    inv_sqrt = np.zeros_like(d)
    positive = d > 0.0
    inv_sqrt[positive] = 1.0 / np.sqrt(d[positive])
    lap = -np.outer(inv_sqrt, inv_sqrt) * g.w
    lap[np.diag_indices_from(lap)] = np.where(positive, 1.0, 0.0)
    return (lap + lap.T) / 2.0


def _jacobi_kernel(a, off_tol, max_sweeps):
    """Cyclic Jacobi rotations on a symmetric matrix, in place.

    Returns (sorted eigenvalues, sweeps used, final off-diagonal norm).
    """
    n = a.shape[0]
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        off = np.sqrt(2.0 * off)
        if off < off_tol:
            return np.sort(np.diag(a).copy()), sweeps, off
        sweeps = sweep + 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
    off = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            off += a[i, j] * a[i, j]
    return np.sort(np.diag(a).copy()), sweeps, np.sqrt(2.0 * off)


try:  # pure-Python fallback keeps the module importable without numba
    from numba import njit

    _jacobi = njit(cache=True)(_jacobi_kernel)
except ImportError:  # pragma: no cover
    _jacobi = _jacobi_kernel


def eigenvalues_symmetric(
    matrix: np.ndarray,
    *,
    off_tol: float = JACOBI_OFF_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> Spectrum:
    """Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop when the off-diagonal Frobenius norm drops below ``off_tol``
    or after ``max_sweeps`` full sweeps.

    Args:
        matrix: Symmetric (within 1e-12) real matrix, n >= 1.

    Returns:
        The sorted eigenvalue Spectrum.

    Raises:
        ValueError: If the input is not square or not symmetric.
        ConvergenceError: If the sweep limit is hit; carries the residual.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix with n >= 1, got shape {a.shape}")
    if np.abs(a - a.T).max() > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within 1e-12")
    eigs, _, off = _jacobi(np.ascontiguousarray(a), off_tol, max_sweeps)
    if off >= off_tol:
        raise ConvergenceError(float(off))
    return Spectrum(eigenvalues=tuple(float(x) for x in eigs))


def laplacian_spectrum(g: SemanticGraph) -> Spectrum:
    """Spectrum of the graph's normalized Laplacian, validated and clipped.

    Raw eigenvalues must lie in [-1e-8, 2 + 1e-8] with the smallest at most
    1e-8 (there is always a zero mode); they are clipped to [0, 2] on output.
    """
    spectrum = eigenvalues_symmetric(normalized_laplacian(g))
    lo, hi = spectrum.eigenvalues[0], spectrum.eigenvalues[-1]
    if lo < -LAPLACIAN_EIG_TOL or hi > 2.0 + LAPLACIAN_EIG_TOL:
        raise ValueError(f"Laplacian eigenvalues outside [0, 2] tolerance: [{lo}, {hi}]")
    if lo > LAPLACIAN_EIG_TOL:
        raise ValueError(f"normalized Laplacian lost its zero mode (smallest eigenvalue {lo})")
    clipped = tuple(min(max(x, 0.0), 2.0) for x in spectrum.eigenvalues)
    return Spectrum(eigenvalues=clipped)


def heat_trace(s: Spectrum, beta: float) -> float:
    """Heat-kernel trace sum(exp(-beta * lambda_i)): the soft mode count.

    Tends to n as beta -> 0 and to the connected-component count as
    beta -> infinity.

    Raises:
        ValueError: If beta <= 0.
    """
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    return float(np.exp(-beta * np.asarray(s.eigenvalues)).sum())


def u_eigv(s: Spectrum) -> float:
    """Continuous cluster count sum(max(0, 1 - lambda_i)) of the spectrum."""
    return float(np.maximum(0.0, 1.0 - np.asarray(s.eigenvalues)).sum())
