"""Dense non-hermitian eigenanalysis with paired left/right eigenvectors.

Left and right systems come from one LAPACK call (same Schur form), so the
pairing is exact and no eigenvalue matching heuristic is needed.  Within a
degenerate (but diagonalizable) cluster the left rows are re-mixed so that
the biorthogonality relation holds pairwise; clusters whose left/right
Gram matrix is ill-conditioned are flagged near-defective instead of being
force-normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import AmbiguousClusteringError, EigensolveFailureError
from .fock import ManyBodyOperator

DEFAULT_FLAG_TOL = 1e-6


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, ManyBodyOperator):
        return op.matrix
    return np.asarray(op, dtype=complex)


def _cluster_eigenvalues(w: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage clusters of eigenvalues within tol of each other."""
    order = np.lexsort((w.imag, w.real))
    clusters: list[list[int]] = []
    n = len(w)
    assigned = np.full(n, -1)
    for i in order:
        placed = False
        for ci, members in enumerate(clusters):
            if any(abs(w[i] - w[j]) <= tol for j in members):
                members.append(i)
                assigned[i] = ci
                placed = True
                break
        if not placed:
            assigned[i] = len(clusters)
            clusters.append([i])
    return [sorted(c) for c in clusters]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues with paired right columns and left rows."""

    eigenvalues: np.ndarray
    right_vectors: np.ndarray = field(repr=False)
    left_vectors: np.ndarray = field(repr=False)
    biorth_residual: float
    condition_flags: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class AngleReport:
    """Minimum pairwise angle between unit-normalized right eigenvectors."""

    min_angle: float
    argmin_pair: tuple[int, int]
    pairwise_min_per_vector: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class JordanReport:
    """Eigenvalue clusters with Jordan chain structure."""

    eigenvalues: np.ndarray
    clusters: tuple[tuple[int, ...], ...]
    cluster_values: tuple[complex, ...]
    chain_lengths: tuple[tuple[int, ...], ...]
    generalized_vectors: tuple[np.ndarray, ...] = field(repr=False)

    def defective_clusters(self) -> list[int]:
        """Indices of clusters containing a chain of length >= 2."""
        return [i for i, ch in enumerate(self.chain_lengths) if max(ch) >= 2]


def decompose(op, cluster_tol: float | None = None, flag_tol: float = DEFAULT_FLAG_TOL) -> SpectralDecomposition:
    """Full right/left eigendecomposition with biorthogonal normalization."""
    A = _as_matrix(op)
    if not np.all(np.isfinite(A)):
        raise EigensolveFailureError("matrix contains non-finite entries")
    try:
        w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - backend failure
        raise EigensolveFailureError(str(exc)) from exc
    left = vl.conj().T
    right = vr
    scale = max(1.0, np.linalg.norm(A, 2)) if A.size else 1.0
    tol = cluster_tol if cluster_tol is not None else 1e-6 * scale
    flags = np.zeros(len(w), dtype=bool)
    for members in _cluster_eigenvalues(w, tol):
        idx = np.array(members)
        gram = left[idx, :] @ right[:, idx]
        sv = np.linalg.svd(gram, compute_uv=False)
        if sv[-1] < flag_tol:
            flags[idx] = True
            continue
        left[idx, :] = np.linalg.solve(gram, left[idx, :])
    ok = ~flags
    residual = 0.0
    if ok.any():
        gram = left[ok, :] @ right[:, ok]
        residual = float(np.abs(gram - np.eye(ok.sum())).max())
    return SpectralDecomposition(
        eigenvalues=w,
        right_vectors=right,
        left_vectors=left,
        biorth_residual=residual,
        condition_flags=flags,
    )


def min_angle(dec: SpectralDecomposition | np.ndarray) -> AngleReport:
    """Smallest arccos|<r_i|r_j>| over all unordered eigenvector pairs."""
    R = dec.right_vectors if isinstance(dec, SpectralDecomposition) else np.asarray(dec)
    R = R / np.linalg.norm(R, axis=0, keepdims=True)
    overlap = np.abs(R.conj().T @ R)
    np.clip(overlap, 0.0, 1.0, out=overlap)
    np.fill_diagonal(overlap, 0.0)
    angles = np.arccos(overlap)
    np.fill_diagonal(angles, np.inf)
    per_vector = angles.min(axis=1)
    i, j = np.unravel_index(np.argmin(angles), angles.shape)
    pair = (int(min(i, j)), int(max(i, j)))
    return AngleReport(
        min_angle=float(angles[i, j]),
        argmin_pair=pair,
        pairwise_min_per_vector=per_vector,
    )


def vector_robustness(dec: SpectralDecomposition, reference: np.ndarray) -> np.ndarray:
    """Angle of every right eigenvector to a unit reference vector."""
    ref = np.asarray(reference, dtype=complex)
    ref = ref / np.linalg.norm(ref)
    R = dec.right_vectors / np.linalg.norm(dec.right_vectors, axis=0, keepdims=True)
    overlaps = np.clip(np.abs(ref.conj() @ R), 0.0, 1.0)
    return np.arccos(overlaps)


def jordan_analysis(
    A,
    cluster_tol: float | None = None,
    rank_tol: float | None = None,
    strict: bool = True,
) -> JordanReport:
    """Cluster the spectrum and estimate Jordan chain lengths per cluster.

    Chain structure follows from the nullity sequence of (A - lambda)^j,
    j = 1..multiplicity, with ranks decided by singular values against
    ``rank_tol`` (default 1e-8 * sigma_max of each power).
    """
    M = _as_matrix(A)
    w = np.linalg.eigvals(M)
    scale = max(1.0, np.linalg.norm(M, 2))
    tol = cluster_tol if cluster_tol is not None else 1e-6 * scale
    clusters = _cluster_eigenvalues(w, tol)
    if strict:
        centers = [np.mean(w[np.array(c)]) for c in clusters]
        for a in range(len(centers)):
            for b in range(a + 1, len(centers)):
                gap = abs(centers[a] - centers[b])
                if gap < 10.0 * tol:
                    raise AmbiguousClusteringError(
                        f"cluster gap {gap:.3e} within a factor 10 of tol {tol:.3e}"
                    )
    n = M.shape[0]
    chain_lengths = []
    generalized = []
    values = []
    for members in clusters:
        lam = complex(np.mean(w[np.array(members)]))
        r = len(members)
        values.append(lam)
        B = M - lam * np.eye(n)
        power = np.eye(n)
        nullities = [0]
        kernel = np.zeros((n, 0))
        for _ in range(r):
            power = power @ B
            sv, vh = np.linalg.svd(power)[1:]
            cut = (rank_tol if rank_tol is not None else 1e-8 * max(sv[0], 1e-300))
            nullity = int(np.sum(sv < cut))
            nullity = min(nullity, r)
            kernel = vh[len(sv) - nullity:].conj().T if nullity else kernel
            nullities.append(nullity)
            if nullity == r or nullity == nullities[-2]:
                break
        counts = [nullities[j] - nullities[j - 1] for j in range(1, len(nullities))]
        chains = []
        for j in range(len(counts), 0, -1):
            exactly = counts[j - 1] - (counts[j] if j < len(counts) else 0)
            chains.extend([j] * max(exactly, 0))
        if not chains:
            chains = [1] * r
        chain_lengths.append(tuple(sorted(chains, reverse=True)))
        generalized.append(kernel)
    return JordanReport(
        eigenvalues=w,
        clusters=tuple(tuple(c) for c in clusters),
        cluster_values=tuple(values),
        chain_lengths=tuple(chain_lengths),
        generalized_vectors=tuple(generalized),
    )
