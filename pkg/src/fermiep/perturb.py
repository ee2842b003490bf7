"""Effective Hamiltonians and closed-form exceptional-line predictions.

Three perturbative subspaces are supported:

* inherited (kind I): the 2x2 space of generalized eigenvectors
  |a_ke; E_(q,+/-)> and |b_ke; E_(q,+/-)> around a single-particle
  exceptional twist;
* emergent (kinds II_2 / II_3 / II_4): pairs of two-particle states that
  become degenerate at zero energy at a diagonalizable degeneracy twist,
  extended by zero, one or two trivial pair states depending on the
  parities of L and k+q;
* annihilation (kinds III_ODD / III_EVEN): the inherited 2x2 extended by
  the trivial-state superposition, large enough to host the third-order
  exceptional point where two exceptional lines terminate.

All square, fourth and cube roots are principal, taken factor by factor
(never as a root of a product); multivalued closed-form eigenvalues are
followed along parameter paths by nearest-match numerical continuation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DefectiveInputError,
    DegenerateFormulaError,
    ParityMismatchError,
    StepTooCoarseError,
)
from .fock import FockBasis, apply_mode_ops, enumerate_basis
from .model import ModelSpec, bloch_coefficients

KIND_I = "I"
KIND_II_2 = "II_2"
KIND_II_3 = "II_3"
KIND_II_4 = "II_4"
KIND_III_ODD = "III_ODD"
KIND_III_EVEN = "III_EVEN"

REAL = "REAL"
IMAGINARY = "IMAGINARY"
COMPLEX = "COMPLEX"


@dataclass(frozen=True)
class SPRoots:
    """Cached principal-root data for one momentum index."""

    k: int
    m_k: float
    p_k: float
    sqrt_m: complex
    sqrt_p: complex
    e_plus: complex


def sp_roots(k: int, model: ModelSpec) -> SPRoots:
    c = bloch_coefficients(k, model)
    sm = cmath.sqrt(c.m_k)
    sp = cmath.sqrt(c.p_k)
    return SPRoots(k=k, m_k=c.m_k, p_k=c.p_k, sqrt_m=sm, sqrt_p=sp, e_plus=sp * sm)


@dataclass(frozen=True)
class TwoParticleState:
    """A labeled state with explicit right/left Fock vectors."""

    labels: tuple
    basis: FockBasis
    right_vec: np.ndarray = field(repr=False)
    left_vec: np.ndarray = field(repr=False)


def _build_ket(basis: FockBasis, terms) -> np.ndarray:
    """terms: list of (coeff, [creation modes, leftmost first])."""
    v = np.zeros(basis.dim, dtype=complex)
    for coeff, modes in terms:
        res = apply_mode_ops(0, [(mode, True) for mode in modes])
        if res is None:
            continue
        sign, state = res
        v[basis.index[state]] += coeff * sign
    return v


def _build_bra(basis: FockBasis, terms) -> np.ndarray:
    """terms: list of (coeff, [annihilation modes, leftmost first])."""
    v = np.zeros(basis.dim, dtype=complex)
    for coeff, modes in terms:
        ops = [(mode, False) for mode in modes]
        for i, state in enumerate(basis.states):
            res = apply_mode_ops(state, ops)
            if res is None:
                continue
            sign, remainder = res
            if remainder == 0:
                v[i] += coeff * sign
    return v


def _band_factors_right(k: int, xi: int, model: ModelSpec):
    d = sp_roots(k, model)
    return [(xi * d.sqrt_m, 2 * k), (d.sqrt_p, 2 * k + 1)], d


def _band_factors_left(k: int, xi: int, model: ModelSpec):
    d = sp_roots(k, model)
    return [(xi * d.sqrt_p, 2 * k), (d.sqrt_m, 2 * k + 1)], d


def _check_not_defective(d: SPRoots, tol: float):
    if abs(d.e_plus) < tol:
        raise DefectiveInputError(
            f"momentum {d.k} is exceptional here; use generalized states"
        )


def two_particle_state(labels, model: ModelSpec, basis: FockBasis | None = None) -> TwoParticleState:
    """Construct the explicit Fock vectors for a labeled perturbative state.

    Supported labels:

    * ``("pair", (k, xi_k), (q, xi_q))`` - product of two band eigenstates;
      the left vector applies the momenta in swapped order.
    * ``("phi", p)`` - the trivial state a+_p b+_p |0>.
    * ``("gen", c, k_e, (q, xi))`` with c in {"a", "b"} - generalized
      state combining an exceptional-momentum orbital with a band state.
    * ``("gen3", c, k_e, (k, xi_k), (q, xi_q))`` - three-fermion analog.
    """
    kind = labels[0]
    tol = model.defect_tol
    if kind == "phi":
        p = labels[1]
        basis = basis or enumerate_basis(model.L, 2)
        right = _build_ket(basis, [(1.0, [2 * p, 2 * p + 1])])
        left = _build_bra(basis, [(1.0, [2 * p + 1, 2 * p])])
        return TwoParticleState(labels=labels, basis=basis, right_vec=right, left_vec=left)
    if kind == "pair":
        (k, xk), (q, xq) = labels[1], labels[2]
        if k == q:
            raise ValueError("pair labels require distinct momenta")
        basis = basis or enumerate_basis(model.L, 2)
        fk, dk = _band_factors_right(k, xk, model)
        fq, dq = _band_factors_right(q, xq, model)
        _check_not_defective(dk, tol)
        _check_not_defective(dq, tol)
        norm = cmath.sqrt(2 * dk.e_plus) * cmath.sqrt(2 * dq.e_plus)
        ket_terms = [(ck * cq / norm, [mk, mq]) for ck, mk in fk for cq, mq in fq]
        gk, _ = _band_factors_left(k, xk, model)
        gq, _ = _band_factors_left(q, xq, model)
        bra_terms = [(cq * ck / norm, [mq, mk]) for cq, mq in gq for ck, mk in gk]
        right = _build_ket(basis, ket_terms)
        left = _build_bra(basis, bra_terms)
        return TwoParticleState(labels=labels, basis=basis, right_vec=right, left_vec=left)
    if kind == "gen":
        c, k_e, (q, xq) = labels[1], labels[2], labels[3]
        basis = basis or enumerate_basis(model.L, 2)
        c_mode = 2 * k_e + (0 if c == "a" else 1)
        fq, dq = _band_factors_right(q, xq, model)
        _check_not_defective(dq, tol)
        norm = cmath.sqrt(2 * dq.e_plus)
        ket_terms = [(cq / norm, [c_mode, mq]) for cq, mq in fq]
        gq, _ = _band_factors_left(q, xq, model)
        bra_terms = [(cq / norm, [mq, c_mode]) for cq, mq in gq]
        right = _build_ket(basis, ket_terms)
        left = _build_bra(basis, bra_terms)
        return TwoParticleState(labels=labels, basis=basis, right_vec=right, left_vec=left)
    if kind == "gen3":
        c, k_e, (k, xk), (q, xq) = labels[1], labels[2], labels[3], labels[4]
        basis = basis or enumerate_basis(model.L, 3)
        c_mode = 2 * k_e + (0 if c == "a" else 1)
        fk, dk = _band_factors_right(k, xk, model)
        fq, dq = _band_factors_right(q, xq, model)
        _check_not_defective(dk, tol)
        _check_not_defective(dq, tol)
        norm = cmath.sqrt(2 * dk.e_plus) * cmath.sqrt(2 * dq.e_plus)
        ket_terms = [
            (ck * cq / norm, [c_mode, mk, mq]) for ck, mk in fk for cq, mq in fq
        ]
        gk, _ = _band_factors_left(k, xk, model)
        gq, _ = _band_factors_left(q, xq, model)
        bra_terms = [
            (cq * ck / norm, [mq, mk, c_mode]) for cq, mq in gq for ck, mk in gk
        ]
        right = _build_ket(basis, ket_terms)
        left = _build_bra(basis, bra_terms)
        return TwoParticleState(labels=labels, basis=basis, right_vec=right, left_vec=left)
    raise ValueError(f"unknown state label kind {kind!r}")


def hint_matrix_element(bra_labels, ket_labels, model: ModelSpec) -> complex:
    """Closed-form density-density element between two pair states.

    ``bra_labels``/``ket_labels`` are ((k0, xi0), (k1, xi1)) pairs; the
    element vanishes unless the total momenta agree mod L.
    """
    (k0, x0), (k1, x1) = bra_labels
    (k2, x2), (k3, x3) = ket_labels
    L = model.L
    if (k0 + k1) % L != (k2 + k3) % L:
        return 0.0
    d = {kk: sp_roots(kk, model) for kk in {k0, k1, k2, k3}}
    pref = 1.0 / (
        4 * L * cmath.sqrt(d[k0].e_plus) * cmath.sqrt(d[k1].e_plus)
        * cmath.sqrt(d[k2].e_plus) * cmath.sqrt(d[k3].e_plus)
    )
    sm = {kk: d[kk].sqrt_m for kk in d}
    sp = {kk: d[kk].sqrt_p for kk in d}
    t1 = x1 * x3 * sm[k0] * sp[k1] * sp[k2] * sm[k3]
    t2 = x1 * x2 * sm[k0] * sp[k1] * sm[k2] * sp[k3]
    t3 = x0 * x2 * sp[k0] * sm[k1] * sm[k2] * sp[k3]
    t4 = x0 * x3 * sp[k0] * sm[k1] * sp[k2] * sm[k3]
    return pref * (t1 - t2 + t3 - t4)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """A small labeled matrix realizing one perturbative subspace."""

    kind: str
    matrix: np.ndarray = field(repr=False)
    state_labels: tuple
    params: dict = field(repr=False)


def delta_and_a(k: int, q: int, xi: int, model: ModelSpec) -> tuple[complex, complex]:
    """Splitting delta = E_(k,+) + E_(q,xi) and the coupling coefficient a."""
    dk, dq = sp_roots(k, model), sp_roots(q, model)
    if abs(dk.e_plus) < model.defect_tol or abs(dq.e_plus) < model.defect_tol:
        raise DefectiveInputError("coefficient a undefined at an exceptional momentum")
    delta = dk.e_plus + xi * dq.e_plus
    a = (xi * dk.sqrt_m * dq.sqrt_p - dk.sqrt_p * dq.sqrt_m) / (
        2 * cmath.sqrt(dk.e_plus) * cmath.sqrt(dq.e_plus)
    )
    return delta, a


def emergent_matrix(size: int, delta: complex, a: complex, xi: int, U: complex, L: int) -> np.ndarray:
    """Kind-II effective matrix from abstract (delta, a) coefficients."""
    u = U / L
    if size == 2:
        return np.array(
            [[delta - u * xi * a**2, u * xi * a**2],
             [u * xi * a**2, -delta - u * xi * a**2]],
            dtype=complex,
        )
    if size == 3:
        return np.array(
            [[u, u * xi * a, -u * xi * a],
             [-u * a, delta - u * xi * a**2, u * xi * a**2],
             [u * a, u * xi * a**2, -delta - u * xi * a**2]],
            dtype=complex,
        )
    if size == 4:
        r2 = math.sqrt(2.0)
        M = np.zeros((4, 4), dtype=complex)
        M[2, 2], M[3, 3] = delta, -delta
        M[1, 1] = 2 * u
        M[1, 2], M[1, 3] = u * xi * r2 * a, -u * xi * r2 * a
        M[2, 1], M[3, 1] = -u * r2 * a, u * r2 * a
        M[2, 2] += -u * xi * a**2
        M[2, 3] = u * xi * a**2
        M[3, 2] = u * xi * a**2
        M[3, 3] += -u * xi * a**2
        return M
    raise ValueError(f"size must be 2, 3 or 4, got {size}")


def _emergent_size(L: int, k: int, q: int) -> int:
    if L % 2 == 1:
        return 3
    return 4 if (k + q) % 2 == 0 else 2


def _emergent_labels(size: int, L: int, k: int, q: int, xi: int) -> tuple:
    psi_p = ("pair", (k, +1), (q, xi))
    psi_m = ("pair", (k, -1), (q, -xi))
    if size == 2:
        return (psi_p, psi_m)
    tot = (k + q) % L
    ps = [p for p in range(L) if (2 * p) % L == tot]
    if size == 3:
        return (("phi", ps[0]), psi_p, psi_m)
    plus = ("phi_sum", tuple(ps), +1)
    minus = ("phi_sum", tuple(ps), -1)
    return (minus, plus, psi_p, psi_m)


def build_h_eff(kind: str, model: ModelSpec, **params) -> EffectiveHamiltonian:
    """Assemble a printed-form effective Hamiltonian.

    Parameters by kind:

    * I: ``k_e``, ``q``, ``band`` (+1/-1).
    * II_2 / II_3 / II_4: ``k``, ``q``, ``xi``; parity of L and k+q must
      match the requested size.
    * III_ODD / III_EVEN: ``k_e``, ``q``, ``band``.
    """
    L, U = model.L, model.U
    if kind == KIND_I:
        k_e, q, band = params["k_e"], params["q"], params["band"]
        ce = bloch_coefficients(k_e, model)
        dq = sp_roots(q, model)
        _check_not_defective(dq, model.defect_tol)
        E = band * dq.e_plus
        ratio_mp = dq.sqrt_m / dq.sqrt_p
        ratio_pm = dq.sqrt_p / dq.sqrt_m
        M = np.array(
            [[E + U / (2 * L), ce.m_k - band * U / (2 * L) * ratio_mp],
             [ce.p_k - band * U / (2 * L) * ratio_pm, E + U / (2 * L)]],
            dtype=complex,
        )
        labels = (("gen", "a", k_e, (q, band)), ("gen", "b", k_e, (q, band)))
        return EffectiveHamiltonian(kind=kind, matrix=M, state_labels=labels,
                                    params=dict(params, L=L, m=model.m, phi=model.phi, U=U))
    if kind in (KIND_II_2, KIND_II_3, KIND_II_4):
        k, q, xi = params["k"], params["q"], params["xi"]
        size = {KIND_II_2: 2, KIND_II_3: 3, KIND_II_4: 4}[kind]
        if _emergent_size(L, k, q) != size:
            raise ParityMismatchError(
                f"{kind} incompatible with L={L}, k+q={k + q}"
            )
        delta, a = delta_and_a(k, q, xi, model)
        M = emergent_matrix(size, delta, a, xi, U, L)
        labels = _emergent_labels(size, L, k, q, xi)
        return EffectiveHamiltonian(kind=kind, matrix=M, state_labels=labels,
                                    params=dict(params, L=L, m=model.m, phi=model.phi,
                                                U=U, delta=delta, a=a))
    if kind in (KIND_III_ODD, KIND_III_EVEN):
        k_e, q, band = params["k_e"], params["q"], params["band"]
        weight = 2.0 if kind == KIND_III_ODD else 4.0
        ce = bloch_coefficients(k_e, model)
        dq = sp_roots(q, model)
        _check_not_defective(dq, model.defect_tol)
        E = band * dq.e_plus
        u = U / (2 * L)
        root_pm = dq.sqrt_p / dq.sqrt_m
        root_mp = dq.sqrt_m / dq.sqrt_p
        q_pm = cmath.sqrt(root_pm)
        q_mp = cmath.sqrt(root_mp)
        w = math.sqrt(weight)
        M = np.array(
            [[weight * u, u * w * q_pm, -band * u * w * q_mp],
             [u * w * q_mp, E + u, ce.m_k - band * u * root_mp],
             [-band * u * w * q_pm, ce.p_k - band * u * root_pm, E + u]],
            dtype=complex,
        )
        tot = (k_e + q) % L
        ps = tuple(p for p in range(L) if (2 * p) % L == tot)
        extra = ("phi", ps[0]) if kind == KIND_III_ODD else ("phi_sum", ps, +1)
        labels = (extra, ("gen", "a", k_e, (q, band)), ("gen", "b", k_e, (q, band)))
        return EffectiveHamiltonian(kind=kind, matrix=M, state_labels=labels,
                                    params=dict(params, L=L, m=model.m, phi=model.phi, U=U))
    raise ValueError(f"unknown effective-Hamiltonian kind {kind!r}")


@dataclass(frozen=True)
class EPPrediction:
    """One analytic exceptional-line branch U(phi)."""

    source: str
    branch: tuple
    u_of_phi: Callable[[float], complex] = field(repr=False)
    involved_states: tuple

    def evaluate(self, phi: float) -> complex:
        return self.u_of_phi(phi)

    def realness(self, phi: float, rel_tol: float = 1e-10) -> str:
        u = self.u_of_phi(phi)
        mag = abs(u)
        if mag == 0:
            return REAL
        if abs(u.imag) < rel_tol * mag:
            return REAL
        if abs(u.real) < rel_tol * mag:
            return IMAGINARY
        return COMPLEX


def predict_U_inherited(q: int, band: int, family: str, k_e: int, model: ModelSpec) -> EPPrediction:
    """Inherited-line branch: the interaction strength that keeps the
    kind-I matrix defective as a function of the twist."""
    L = model.L

    def u_of_phi(phi: float) -> complex:
        local = ModelSpec(L=L, m=model.m, phi=phi, seed=model.seed)
        ce = bloch_coefficients(k_e, local)
        dq = sp_roots(q, local)
        if family == "M_ZERO":
            return band * 2 * L * ce.m_k * dq.sqrt_p / dq.sqrt_m
        return band * 2 * L * ce.p_k * dq.sqrt_m / dq.sqrt_p

    states = (("gen", "a", k_e, (q, band)), ("gen", "b", k_e, (q, band)))
    return EPPrediction(source=KIND_I, branch=(q, band, family),
                        u_of_phi=u_of_phi, involved_states=states)


def emergent_u_values(size: int, delta: complex, a: complex, xi: int, L: int) -> list[tuple[tuple, complex]]:
    """The 2 or 4 interaction strengths at which the kind-II matrix is
    defective, from the closed forms (with degenerate-input guards)."""
    if abs(a) < 1e-12 or abs(delta) < 1e-12:
        raise DegenerateFormulaError("emergent prediction degenerate: a or delta vanishes")
    out = []
    if size == 2:
        for s in (+1, -1):
            out.append(((s,), s * 1j * L * delta / (a * a)))
        return out
    if size == 3:
        num_const, denom_fac, inner_shift = 10.0, 2.0, 4.0
        quart_shift = 2.0
        core = lambda s_in: (a**4 - xi * num_const * a**2 - quart_shift
                             + s_in * a * cmath.sqrt((a**2 + inner_shift * xi) ** 3))
        denom = denom_fac * (2 * a**2 - xi) ** 3
    elif size == 4:
        core = lambda s_in: (a**4 - xi * 20.0 * a**2 - 8.0
                             + s_in * a * cmath.sqrt((a**2 + 8.0 * xi) ** 3))
        denom = 32.0 * (a**2 - xi) ** 3
    else:
        raise ValueError(f"size must be 2, 3 or 4, got {size}")
    if abs(denom) < 1e-14:
        raise DegenerateFormulaError("emergent prediction degenerate: denominator vanishes")
    for s_out in (+1, -1):
        for s_in in (+1, -1):
            out.append(((s_out, s_in), s_out * L * delta * cmath.sqrt(xi * core(s_in) / denom)))
    return out


def predict_U_emergent(size: int, k: int, q: int, xi: int, model: ModelSpec) -> list[EPPrediction]:
    """All emergent-line branches for one degenerate pair of states."""
    L = model.L
    labels = _emergent_labels(size, L, k, q, xi)

    def make(branch):
        def u_of_phi(phi: float) -> complex:
            local = ModelSpec(L=L, m=model.m, phi=phi, seed=model.seed)
            delta, a = delta_and_a(k, q, xi, local)
            for b, val in emergent_u_values(size, delta, a, xi, L):
                if b == branch:
                    return val
            raise RuntimeError("branch disappeared")  # pragma: no cover
        return u_of_phi

    delta, a = delta_and_a(k, q, xi, model)
    return [
        EPPrediction(source=f"II_{size}", branch=branch, u_of_phi=make(branch),
                     involved_states=labels)
        for branch, _ in emergent_u_values(size, delta, a, xi, L)
    ]


def cubic_coefficients(size: int, delta: complex, a: complex, xi: int, U: complex, L: int):
    """(x, y, c) of the Cardano form for the kind-II nontrivial eigenvalues.

    The printed constant term of the 3x3 case disagrees with the trace of
    the printed matrix; the value used here is rederived from the
    characteristic polynomial (the direct eigensolve is the arbiter).
    """
    d2 = delta * delta
    u = U / L
    if size == 3:
        g = 2 * a**2 - xi
        x = 3 * d2 + u**2 * g**2
        y = xi * 9 * d2 * u * (a**2 + xi) + xi * u**3 * g**3
        c = u * (1 - 2 * xi * a**2) / 3.0
    elif size == 4:
        g = 2 * a**2 - 2 * xi
        x = 3 * d2 + u**2 * g**2
        y = xi * 9 * d2 * u * (a**2 + 2 * xi) + xi * u**3 * g**3
        c = u * (2 - 2 * xi * a**2) / 3.0
    else:
        raise ValueError("cubic coefficients exist for sizes 3 and 4 only")
    return x, y, c


def cubic_eigenvalues(x: complex, y: complex, c: complex) -> np.ndarray:
    """Three closed-form eigenvalues from the (x, y, c) coefficients."""
    disc = cmath.sqrt(y * y - x**3)
    base = y + disc
    if abs(base) < 1e-300:
        base = y - disc
    if abs(base) < 1e-300:
        return np.full(3, c, dtype=complex)
    C = base ** (1.0 / 3.0)
    out = np.empty(3, dtype=complex)
    for n in range(3):
        w = cmath.exp(2j * math.pi * n / 3.0)
        out[n] = -(x / C) / (3.0 * w) - w * C / 3.0 + c
    return out


@dataclass(frozen=True)
class TrackedEigenvalue:
    """Continuity-tracked eigenvalue branch along a parameter path."""

    label: str
    path: tuple
    values: np.ndarray = field(repr=False)


def track_eigenvalues(
    matrix_of_u: Callable[[complex], np.ndarray],
    u_path: np.ndarray,
    labels_at_start: dict[str, complex],
    jump_factor: float = 10.0,
) -> tuple[dict[str, TrackedEigenvalue], tuple[str, str]]:
    """Follow eigenvalue branches along a discretized U path.

    ``labels_at_start`` maps branch labels to the eigenvalues at the first
    path point.  Branches are propagated by nearest-match assignment; a
    jump exceeding ``jump_factor`` times the local step estimate raises
    STEP_TOO_COARSE (halve the step and retry).  Returns the tracked
    branches and the pair of labels closest at the endpoint.
    """
    from scipy.optimize import linear_sum_assignment

    u_path = np.asarray(u_path)
    n = len(labels_at_start)
    names = list(labels_at_start)
    current = np.array([labels_at_start[name] for name in names], dtype=complex)
    w0 = np.linalg.eigvals(matrix_of_u(u_path[0]))
    cost = np.abs(current[:, None] - w0[None, :])
    rows, cols = linear_sum_assignment(cost)
    current = w0[cols[np.argsort(rows)]]
    history = [current.copy()]
    prev_step = None
    for t in range(1, len(u_path)):
        w = np.linalg.eigvals(matrix_of_u(u_path[t]))
        cost = np.abs(current[:, None] - w[None, :])
        rows, cols = linear_sum_assignment(cost)
        new = w[cols[np.argsort(rows)]]
        jumps = np.abs(new - current)
        if prev_step is not None:
            bound = jump_factor * max(prev_step, 1e-12)
            if jumps.max() > bound:
                raise StepTooCoarseError(
                    f"eigenvalue jump {jumps.max():.3e} exceeds bound {bound:.3e} at step {t}"
                )
        prev_step = max(jumps.max(), 1e-12)
        current = new
        history.append(current.copy())
    values = np.array(history)
    tracked = {
        name: TrackedEigenvalue(label=name, path=tuple(u_path), values=values[:, i])
        for i, name in enumerate(names)
    }
    final = values[-1]
    best, pair = np.inf, (names[0], names[1 % n])
    for i in range(n):
        for j in range(i + 1, n):
            gap = abs(final[i] - final[j])
            if gap < best:
                best, pair = gap, (names[i], names[j])
    return tracked, pair


def predict_U_three_fermion(
    family: str,
    k_e: int,
    k_label: tuple[int, int],
    q_label: tuple[int, int],
    model: ModelSpec,
) -> EPPrediction:
    """Inherited-line branch for three fermions (one exceptional orbital
    plus a two-particle band state)."""
    (k, xk), (q, xq) = k_label, q_label
    if k == q or k_e in (k, q):
        raise ValueError("momenta must be pairwise distinct")
    L = model.L

    def u_of_phi(phi: float) -> complex:
        local = ModelSpec(L=L, m=model.m, phi=phi, seed=model.seed)
        ce = bloch_coefficients(k_e, local)
        dk, dq = sp_roots(k, local), sp_roots(q, local)
        Ek, Eq = dk.e_plus, dq.e_plus
        if family == "M_ZERO":
            denom = xk * dk.m_k * Eq + xq * dq.m_k * Ek
            num = 2 * ce.m_k * L * Ek * Eq
        else:
            denom = xk * dk.p_k * Eq + xq * dq.p_k * Ek
            num = 2 * ce.p_k * L * Ek * Eq
        if abs(denom) < 1e-14:
            raise DegenerateFormulaError("three-fermion prediction denominator vanishes")
        return num / denom

    states = (("gen3", "a", k_e, k_label, q_label), ("gen3", "b", k_e, k_label, q_label))
    return EPPrediction(source="I_3F", branch=(k_e, k_label, q_label, family),
                        u_of_phi=u_of_phi, involved_states=states)


def three_fermion_vertical_lines(k_e: int, phi_e: float, L: int) -> list[dict]:
    """Twist-pinned exceptional lines from trivial pair states combined
    with the exceptional orbital: one per momentum other than k_e."""
    out = []
    for k_t in range(L):
        if k_t == k_e:
            continue
        out.append({
            "phi": phi_e,
            "k_tilde": k_t,
            "k_tot": (k_e + 2 * k_t) % L,
        })
    return out


def find_phi_degenerate(
    k: int, q: int, xi: int, model: ModelSpec,
    lo: float, hi: float, tol: float = 1e-12,
) -> float:
    """Bisection root of delta(phi) = E_(k,+) + E_(q,xi) inside [lo, hi].

    delta is purely real or purely imaginary between exceptional twists;
    the bracket must not straddle one.
    """
    def g(phi: float) -> float:
        local = ModelSpec(L=model.L, m=model.m, phi=phi, seed=model.seed)
        delta, _ = delta_and_a(k, q, xi, local)
        return delta.real + delta.imag

    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise ValueError("bracket does not straddle a degeneracy")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if glo * gm < 0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def phi_degeneracy_candidates(k: int, q: int, xi: int, model: ModelSpec, samples: int = 4000) -> list[float]:
    """Scan the twist axis for sign changes of delta and bisect each."""
    phis = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    vals = []
    for phi in phis:
        local = ModelSpec(L=model.L, m=model.m, phi=phi, seed=model.seed)
        try:
            delta, _ = delta_and_a(k, q, xi, local)
        except DefectiveInputError:
            vals.append(math.nan)
            continue
        vals.append(delta.real + delta.imag)
    roots = []
    for i in range(len(phis)):
        j = (i + 1) % len(phis)
        a, b = vals[i], vals[j]
        if math.isnan(a) or math.isnan(b) or a * b > 0:
            continue
        lo, hi = phis[i], phis[i] + (2 * math.pi / samples)
        try:
            root = find_phi_degenerate(k, q, xi, model, lo, hi)
        except ValueError:
            continue
        local = ModelSpec(L=model.L, m=model.m, phi=root, seed=model.seed)
        delta, _ = delta_and_a(k, q, xi, local)
        if abs(delta) < 1e-8:
            roots.append(root)
    return roots


def phi_sum_state(ps: tuple[int, ...], sign: int, model: ModelSpec, basis: FockBasis | None = None) -> TwoParticleState:
    """Normalized (Phi_p + sign * Phi_p') / sqrt(2) superposition."""
    basis = basis or enumerate_basis(model.L, 2)
    s0 = two_particle_state(("phi", ps[0]), model, basis)
    s1 = two_particle_state(("phi", ps[1]), model, basis)
    r = (s0.right_vec + sign * s1.right_vec) / math.sqrt(2)
    l = (s0.left_vec + sign * s1.left_vec) / math.sqrt(2)
    return TwoParticleState(labels=("phi_sum", ps, sign), basis=basis, right_vec=r, left_vec=l)


def resolve_state(label, model: ModelSpec, basis: FockBasis | None = None) -> TwoParticleState:
    """Materialize any supported state label, including phi_sum."""
    if label[0] == "phi_sum":
        return phi_sum_state(label[1], label[2], model, basis)
    return two_particle_state(label, model, basis)
