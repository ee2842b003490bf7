import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermiep.errors import AmbiguousClusteringError, EigensolveFailureError
from fermiep.spectral import (
    decompose,
    jordan_analysis,
    min_angle,
    vector_robustness,
)

RNG = np.random.default_rng(1234)


def random_similarity(n, rng=RNG):
    while True:
        S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        if np.linalg.cond(S) < 50:
            return S


def jordan_block(lam, size):
    return lam * np.eye(size) + np.diag(np.ones(size - 1), 1)


def test_decompose_diagonalizable_biorthogonal():
    A = random_similarity(7) @ np.diag(RNG.normal(size=7)) @ np.linalg.inv(
        random_similarity(7)
    )
    # generic nonnormal matrix: distinct eigenvalues, clean biorthogonality
    A = RNG.normal(size=(7, 7)) + 1j * RNG.normal(size=(7, 7))
    dec = decompose(A)
    assert not dec.condition_flags.any()
    assert dec.biorth_residual < 1e-8
    # eigen-equations
    for i in range(7):
        r = dec.right_vectors[:, i]
        assert np.abs(A @ r - dec.eigenvalues[i] * r).max() < 1e-8
        l = dec.left_vectors[i, :]
        assert np.abs(l @ A - dec.eigenvalues[i] * l).max() < 1e-8


def test_decompose_degenerate_cluster_remixed():
    # exact double eigenvalue, still diagonalizable: the Gram solve must
    # restore left/right pairing inside the cluster
    S = random_similarity(5)
    A = S @ np.diag([2.0, 2.0, -1.0, 0.5, 3.0]) @ np.linalg.inv(S)
    dec = decompose(A)
    assert not dec.condition_flags.any()
    assert dec.biorth_residual < 1e-7


def test_decompose_flags_defective_cluster():
    S = random_similarity(4)
    A = S @ np.block([
        [jordan_block(1.0, 2), np.zeros((2, 2))],
        [np.zeros((2, 2)), np.diag([3.0, -2.0])],
    ]) @ np.linalg.inv(S)
    dec = decompose(A)
    assert dec.condition_flags.sum() == 2
    # the unflagged pairs still satisfy biorthogonality
    assert dec.biorth_residual < 1e-6


def test_decompose_rejects_nonfinite():
    A = np.eye(3, dtype=complex)
    A[0, 1] = np.nan
    with pytest.raises(EigensolveFailureError):
        decompose(A)


def test_min_angle_known_pair():
    # two unit vectors at an exact 30 degree angle plus an orthogonal one
    v1 = np.array([1.0, 0.0, 0.0])
    v2 = np.array([np.cos(np.pi / 6), np.sin(np.pi / 6), 0.0])
    v3 = np.array([0.0, 0.0, 1.0])
    rep = min_angle(np.column_stack([v1, v2, v3]))
    assert rep.min_angle == pytest.approx(np.pi / 6, abs=1e-12)
    assert rep.argmin_pair == (0, 1)


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_min_angle_phase_and_scale_invariant(seed):
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    base = min_angle(R).min_angle
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=6))
    scales = rng.uniform(0.1, 10.0, size=6)
    twiddled = R * (phases * scales)[None, :]
    assert abs(min_angle(twiddled).min_angle - base) < 1e-12


def test_min_angle_accepts_decomposition():
    A = RNG.normal(size=(5, 5))
    dec = decompose(A)
    assert min_angle(dec).min_angle == min_angle(dec.right_vectors).min_angle


def test_vector_robustness_angles():
    dec = decompose(np.diag([1.0, 2.0, 3.0]))
    ref = np.array([1.0, 0.0, 0.0])
    ang = vector_robustness(dec, ref)
    assert ang.min() < 1e-8
    assert (ang > 1.0).sum() == 2


@pytest.mark.parametrize(
    "chains",
    [((2,),), ((3,),), ((2, 1),), ((4,),), ((2,), (3,))],
)
def test_jordan_analysis_recovers_planted_structure(chains):
    blocks = []
    lam = 1.0
    expected = []
    for cluster in chains:
        for size in cluster:
            blocks.append(jordan_block(lam, size))
        expected.append(tuple(sorted(cluster, reverse=True)))
        lam += 2.0
    n = sum(sum(c) for c in chains)
    J = np.zeros((n, n), dtype=complex)
    pos = 0
    for b in blocks:
        s = b.shape[0]
        J[pos : pos + s, pos : pos + s] = b
        pos += s
    S = random_similarity(n)
    A = S @ J @ np.linalg.inv(S)
    # a planted chain of length k splits by ~eps^(1/k) under the backward
    # error of the eigensolver, so the cluster tolerance must sit above
    # that (5.6e-4 for k = 4) but below the inter-cluster spacing
    rep = jordan_analysis(A, cluster_tol=5e-3, rank_tol=1e-8, strict=False)
    got = sorted(
        tuple(sorted(ch, reverse=True))
        for ch in rep.chain_lengths
        if max(ch) >= 2 or sum(ch) > 1
    )
    want = sorted(expected)
    assert got == want


def test_jordan_analysis_diagonalizable_reports_singletons():
    A = np.diag([1.0, 2.5, -3.0])
    rep = jordan_analysis(A)
    assert rep.defective_clusters() == []
    assert all(max(ch) == 1 for ch in rep.chain_lengths)


def test_jordan_analysis_strict_ambiguity():
    # two eigenvalues separated by barely more than the tolerance: the
    # clustering is ambiguous and strict mode must say so
    A = np.diag([1.0, 1.0 + 5e-4, 10.0])
    with pytest.raises(AmbiguousClusteringError):
        jordan_analysis(A, cluster_tol=1e-4, strict=True)
    rep = jordan_analysis(A, cluster_tol=1e-4, strict=False)
    assert len(rep.clusters) == 3


def test_jordan_generalized_vectors_annihilate():
    S = random_similarity(3)
    A = S @ jordan_block(0.7, 3) @ np.linalg.inv(S)
    rep = jordan_analysis(A, cluster_tol=1e-4, rank_tol=1e-8, strict=False)
    assert rep.chain_lengths == ((3,),)
    lam = rep.cluster_values[0]
    V = rep.generalized_vectors[0]
    B = A - lam * np.eye(3)
    assert np.abs(B @ B @ B @ V).max() < 1e-6
