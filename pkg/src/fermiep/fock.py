"""N-fermion Fock basis over 2L modes and dense many-body operators.

States are occupation bitmasks over mode indices 2*idx + orbital, where
idx is a momentum index k (momentum labeling) or a site j (real-space
labeling) and orbital 0/1 stands for a/b.  The fermionic sign convention
is fixed globally: creation operators act in ascending mode index on the
vacuum, and matrix elements carry the usual (-1)^(occupied below) signs.

Dense storage is used throughout; the largest case of interest is
D = L(2L-1) = 630 for L = 18, N = 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidFillingError,
    LabelingMismatchError,
    NotTranslationInvariantError,
)
from .model import (
    DisorderRealization,
    ModelSpec,
    build_real_space_single_particle,
    momentum_space_single_particle,
)

MOMENTUM = "momentum"
REAL = "real"


@dataclass(frozen=True)
class FockBasis:
    """Ordered N-fermion occupation basis over 2L modes."""

    L: int
    N: int
    labeling: str
    states: tuple[int, ...]
    index: dict[int, int] = field(repr=False)

    @property
    def mode_count(self) -> int:
        return 2 * self.L

    @property
    def dim(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class ManyBodyOperator:
    """Dense complex operator on a Fock basis."""

    basis: FockBasis
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError("matrix dimension does not match basis size")


@dataclass(frozen=True)
class MomentumSector:
    """Indices of basis states with fixed total momentum mod L."""

    k_tot: int
    member_indices: tuple[int, ...]


def enumerate_basis(L: int, N: int, labeling: str = MOMENTUM) -> FockBasis:
    """Canonical basis of all N-fermion bitmasks, ascending by value."""
    if labeling not in (MOMENTUM, REAL):
        raise ValueError(f"unknown labeling {labeling!r}")
    if not 0 < N <= 2 * L:
        raise InvalidFillingError(f"N={N} outside (0, {2 * L}]")
    states = sorted(
        sum(1 << m for m in combo)
        for combo in itertools.combinations(range(2 * L), N)
    )
    index = {s: i for i, s in enumerate(states)}
    return FockBasis(L=L, N=N, labeling=labeling, states=tuple(states), index=index)


def apply_mode_ops(state: int, ops) -> tuple[int, int] | None:
    """Apply a string of (mode, is_creation) operators, rightmost first.

    Returns (sign, new_state) or None if the string annihilates the state.
    """
    sign = 1
    for mode, create in reversed(ops):
        bit = 1 << mode
        if create:
            if state & bit:
                return None
            if (state & (bit - 1)).bit_count() & 1:
                sign = -sign
            state |= bit
        else:
            if not state & bit:
                return None
            if (state & (bit - 1)).bit_count() & 1:
                sign = -sign
            state &= ~bit
    return sign, state


def lift_one_body(basis: FockBasis, h: np.ndarray) -> ManyBodyOperator:
    """Lift a one-body matrix h[p, q] c+_p c_q into the Fock basis."""
    if h.shape != (basis.mode_count, basis.mode_count):
        raise ValueError("one-body matrix has wrong dimension")
    D = basis.dim
    M = np.zeros((D, D), dtype=complex)
    rows, cols = np.nonzero(h)
    for col, state in enumerate(basis.states):
        for p, q in zip(rows, cols):
            res = apply_mode_ops(state, [(int(p), True), (int(q), False)])
            if res is None:
                continue
            sign, new_state = res
            M[basis.index[new_state], col] += sign * h[p, q]
    return ManyBodyOperator(basis=basis, matrix=M)


def assemble_h0_many(
    basis: FockBasis,
    model: ModelSpec,
    noise: DisorderRealization | None = None,
) -> ManyBodyOperator:
    """Non-interacting many-body Hamiltonian in the basis labeling.

    Momentum labeling lifts the block-diagonal momentum-space matrix and
    requires a clean model; real-space labeling lifts the real-space
    matrix and accepts a disorder realization.
    """
    if basis.labeling == MOMENTUM:
        if model.disorder_sigma > 0 or noise is not None:
            raise LabelingMismatchError("disorder requires real-space labeling")
        return lift_one_body(basis, momentum_space_single_particle(model))
    return lift_one_body(basis, build_real_space_single_particle(model, noise))


def assemble_hint(basis: FockBasis) -> ManyBodyOperator:
    """Density-density interaction (unit strength) in the basis labeling.

    Real-space labeling gives the diagonal operator sum_j n_j^a n_j^b.
    Momentum labeling gives the equivalent quartic sum
    (1/L) sum_{k,k',q} a+_k a_{k+q} b+_{k'} b_{k'-q}.
    """
    L, D = basis.L, basis.dim
    M = np.zeros((D, D), dtype=complex)
    if basis.labeling == REAL:
        for col, state in enumerate(basis.states):
            count = sum(
                1 for j in range(L) if state & (1 << (2 * j)) and state & (1 << (2 * j + 1))
            )
            M[col, col] = count
        return ManyBodyOperator(basis=basis, matrix=M)
    for col, state in enumerate(basis.states):
        for q in range(L):
            for k in range(L):
                a_dag, a_ann = 2 * k, 2 * ((k + q) % L)
                first = apply_mode_ops(state, [(a_dag, True), (a_ann, False)])
                # b-operators act after the a-pair; split keeps the loop O(L^2)
                # per surviving intermediate instead of O(L^3) blind attempts.
                if first is None:
                    continue
                sign_a, mid = first
                for kp in range(L):
                    b_dag, b_ann = 2 * kp + 1, 2 * ((kp - q) % L) + 1
                    res = apply_mode_ops(mid, [(b_dag, True), (b_ann, False)])
                    if res is None:
                        continue
                    sign_b, new_state = res
                    M[basis.index[new_state], col] += sign_a * sign_b / L
    return ManyBodyOperator(basis=basis, matrix=M)


def assemble_hamiltonian(
    basis: FockBasis,
    model: ModelSpec,
    noise: DisorderRealization | None = None,
    hint: ManyBodyOperator | None = None,
) -> ManyBodyOperator:
    """H = H0 + U * H_int in the given basis.

    ``hint`` may be passed to reuse a precomputed interaction operator
    (it depends only on the basis, not on the model parameters).
    """
    h0 = assemble_h0_many(basis, model, noise)
    if hint is None:
        hint = assemble_hint(basis)
    return ManyBodyOperator(basis=basis, matrix=h0.matrix + model.U * hint.matrix)


def total_momentum(state: int, L: int) -> int:
    """Sum of momentum indices of occupied modes, mod L."""
    tot = 0
    for mode in range(2 * L):
        if state & (1 << mode):
            tot += mode // 2
    return tot % L


def momentum_sectors(basis: FockBasis, model: ModelSpec | None = None) -> list[MomentumSector]:
    """Partition of the basis into fixed-total-momentum sectors."""
    if basis.labeling != MOMENTUM:
        raise LabelingMismatchError("momentum sectors require momentum labeling")
    if model is not None and model.disorder_sigma > 0:
        raise NotTranslationInvariantError("momentum sectors invalid with disorder")
    members: dict[int, list[int]] = {k: [] for k in range(basis.L)}
    for i, state in enumerate(basis.states):
        members[total_momentum(state, basis.L)].append(i)
    return [
        MomentumSector(k_tot=k, member_indices=tuple(members[k]))
        for k in range(basis.L)
        if members[k]
    ]


def extract_block(op: ManyBodyOperator | np.ndarray, sector: MomentumSector) -> np.ndarray:
    """Dense submatrix of the operator restricted to one sector."""
    idx = np.array(sector.member_indices)
    mat = op.matrix if isinstance(op, ManyBodyOperator) else np.asarray(op)
    return mat[np.ix_(idx, idx)]


def number_operator(basis: FockBasis) -> ManyBodyOperator:
    """Total particle number (diagonal, constant N on a fixed-N basis)."""
    diag = np.array([s.bit_count() for s in basis.states], dtype=complex)
    return ManyBodyOperator(basis=basis, matrix=np.diag(diag))


def slater_rotation(basis_from: FockBasis, basis_to: FockBasis, A: np.ndarray) -> np.ndarray:
    """Many-body change of basis induced by a single-particle map.

    A[alpha, beta] expresses the new creation operators in terms of the
    old ones, new+_alpha = sum_beta A[alpha, beta] old+_beta.  The result
    W satisfies |I>_new = sum_J W[J, I] |J>_old with W[J, I] the minor
    determinant det(A[I, J]).
    """
    if basis_from.N != basis_to.N or basis_from.L != basis_to.L:
        raise ValueError("bases must share L and N")
    D = basis_from.dim
    W = np.zeros((D, D), dtype=complex)
    occ_from = [_occupied(s, basis_from.mode_count) for s in basis_from.states]
    occ_to = [_occupied(s, basis_to.mode_count) for s in basis_to.states]
    for i, I in enumerate(occ_to):
        rows = A[I, :]
        for j, J in enumerate(occ_from):
            W[j, i] = np.linalg.det(rows[:, J])
    return W


def _occupied(state: int, n_modes: int) -> list[int]:
    return [m for m in range(n_modes) if state & (1 << m)]
