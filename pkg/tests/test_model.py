import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermiep.errors import DimensionMismatchError, NoSolutionError
from fermiep.model import (
    DisorderRealization,
    ModelSpec,
    band_energy,
    bloch_coefficients,
    bloch_matrix,
    build_real_space_single_particle,
    check_pt_symmetry,
    exceptional_thetas,
    fourier_rotation,
    momentum_space_single_particle,
    single_particle_spectrum,
    solve_exceptional_twists,
    theta_of,
)

TWO_PI = 2.0 * math.pi


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(L=1, m=0.7)
    with pytest.raises(ValueError):
        ModelSpec(L=4, m=0.7, disorder_sigma=-0.1)
    # phi reduced mod 2*pi on construction
    spec = ModelSpec(L=4, m=0.7, phi=TWO_PI + 0.25)
    assert abs(spec.phi - 0.25) < 1e-12


def test_bloch_coefficients_match_definition():
    spec = ModelSpec(L=5, m=0.3, phi=1.1)
    for k in range(5):
        c = bloch_coefficients(k, spec)
        theta = (TWO_PI * k + 1.1) / 5
        assert c.theta == pytest.approx(theta)
        assert c.m_k == pytest.approx(0.3 - math.cos(theta) - math.sin(theta))
        assert c.p_k == pytest.approx(0.3 - math.cos(theta) + math.sin(theta))


def test_bloch_coefficients_rejects_bad_index():
    spec = ModelSpec(L=5, m=0.3)
    with pytest.raises(ValueError):
        bloch_coefficients(5, spec)
    with pytest.raises(ValueError):
        bloch_coefficients(-1, spec)


@given(
    L=st.integers(min_value=2, max_value=12),
    m=st.floats(min_value=-1.3, max_value=1.3),
    phi=st.floats(min_value=0.0, max_value=TWO_PI),
    k=st.integers(min_value=0, max_value=11),
)
@settings(max_examples=60, deadline=None)
def test_spectrum_solves_eigenproblem(L, m, phi, k):
    k = k % L
    spec = ModelSpec(L=L, m=m, phi=phi)
    h = bloch_matrix(k, spec)
    plus, minus = single_particle_spectrum(k, spec)
    for mode in (plus, minus):
        if mode.defective:
            continue
        resid = h @ mode.right_vec - mode.energy * mode.right_vec
        assert np.abs(resid).max() < 1e-12
        lresid = mode.left_vec @ h - mode.energy * mode.left_vec
        assert np.abs(lresid).max() < 1e-12


def test_spectrum_biorthonormal_away_from_defects():
    spec = ModelSpec(L=6, m=0.7, phi=0.9)
    for k in range(6):
        plus, minus = single_particle_spectrum(k, spec)
        assert plus.left_vec @ plus.right_vec == pytest.approx(1.0, abs=1e-12)
        assert minus.left_vec @ minus.right_vec == pytest.approx(1.0, abs=1e-12)
        assert abs(plus.left_vec @ minus.right_vec) < 1e-12


def test_band_energy_principal_root_convention():
    # with m_k < 0 and p_k < 0 the product of individual principal roots
    # is negative real, NOT the principal root of the product
    spec = ModelSpec(L=3, m=-0.5, phi=0.0)
    c = bloch_coefficients(0, spec)
    assert c.m_k < 0 and c.p_k < 0
    e = band_energy(0, spec, +1)
    assert e.real == pytest.approx(-math.sqrt(c.m_k * c.p_k))
    assert abs(e.imag) < 1e-14


def test_exceptional_thetas_are_roots():
    for m in (0.0, 0.3, 0.7, -0.9, 1.2):
        for theta in exceptional_thetas(m):
            prod = (m - math.cos(theta) - math.sin(theta)) * (
                m - math.cos(theta) + math.sin(theta)
            )
            assert abs(prod) < 1e-12


def test_exceptional_thetas_no_solution():
    with pytest.raises(NoSolutionError):
        exceptional_thetas(1.5)


def test_solve_exceptional_twists_wraps_theta():
    spec = ModelSpec(L=6, m=0.7)
    twists = solve_exceptional_twists(spec)
    assert len(twists) == 4
    for tw in twists:
        assert 0.0 <= tw.phi_e < TWO_PI
        assert theta_of(tw.k_e, 6, tw.phi_e) == pytest.approx(tw.theta_e, abs=1e-10)
        local = ModelSpec(L=6, m=0.7, phi=tw.phi_e)
        c = bloch_coefficients(tw.k_e, local)
        assert min(abs(c.m_k), abs(c.p_k)) < 1e-10


def test_fourier_block_diagonalizes_clean_matrix():
    for L in (2, 3, 6, 10):
        spec = ModelSpec(L=L, m=0.7, phi=1.37)
        Hr = build_real_space_single_particle(spec)
        F = fourier_rotation(L)
        Hk = momentum_space_single_particle(spec)
        assert np.abs(F @ Hr @ F.conj().T - Hk).max() < 1e-12


def test_momentum_matrix_spectrum_is_band_energies():
    spec = ModelSpec(L=7, m=0.4, phi=0.2)
    key = lambda z: (round(z.real, 8), round(z.imag, 8))
    w = sorted(np.linalg.eigvals(momentum_space_single_particle(spec)), key=key)
    expect = sorted(
        (band_energy(k, spec, b) for k in range(7) for b in (1, -1)), key=key
    )
    assert np.abs(np.array(w) - np.array(expect)).max() < 1e-10


def test_symmetry_residual_clean_and_disordered():
    spec = ModelSpec(L=6, m=0.7, phi=2.2, disorder_sigma=0.05, seed=3)
    clean = build_real_space_single_particle(ModelSpec(L=6, m=0.7, phi=2.2))
    assert check_pt_symmetry(clean) < 1e-14
    noisy = build_real_space_single_particle(spec, DisorderRealization.draw(spec))
    assert check_pt_symmetry(noisy) > 1e-3


def test_disorder_preserves_conjugation_structure():
    # per-channel dressing keeps H^dag = Q H Q with Q the orbital swap,
    # hence a characteristic polynomial with real coefficients
    spec = ModelSpec(L=6, m=0.7, phi=1.9, disorder_sigma=0.08, seed=11)
    noise = DisorderRealization.draw(spec, stream=2)
    H = build_real_space_single_particle(spec, noise)
    Q = np.zeros((12, 12))
    for j in range(6):
        Q[2 * j, 2 * j + 1] = Q[2 * j + 1, 2 * j] = 1.0
    assert np.abs(H.conj().T - Q @ H @ Q).max() < 1e-13
    coeffs = np.poly(H)
    assert np.abs(coeffs.imag).max() < 1e-12


def test_disorder_factor_count_enforced():
    spec = ModelSpec(L=4, m=0.7, disorder_sigma=0.01)
    bad = DisorderRealization(factors=np.ones(7))
    with pytest.raises(DimensionMismatchError):
        build_real_space_single_particle(spec, bad)


def test_disorder_draw_reproducible_and_channel_count():
    spec = ModelSpec(L=5, m=0.7, disorder_sigma=0.02, seed=9)
    a = DisorderRealization.draw(spec, stream=1)
    b = DisorderRealization.draw(spec, stream=1)
    c = DisorderRealization.draw(spec, stream=2)
    assert a.factors.shape == (15,)
    assert np.array_equal(a.factors, b.factors)
    assert not np.array_equal(a.factors, c.factors)


def test_sigma_zero_draw_is_exactly_clean():
    spec = ModelSpec(L=6, m=0.7, phi=0.77, seed=42)
    noise = DisorderRealization.draw(spec)
    assert np.all(noise.factors == 1.0)
    H_noisy = build_real_space_single_particle(spec, noise)
    H_clean = build_real_space_single_particle(spec)
    assert np.array_equal(H_noisy, H_clean)


def test_dress_intracell_switch():
    spec = ModelSpec(L=4, m=0.7, phi=0.5, disorder_sigma=0.3, seed=1)
    noise = DisorderRealization.draw(spec)
    full = build_real_space_single_particle(spec, noise, dress_intracell=True)
    bonds_only = build_real_space_single_particle(spec, noise, dress_intracell=False)
    clean = build_real_space_single_particle(ModelSpec(L=4, m=0.7, phi=0.5))
    for j in range(4):
        assert bonds_only[2 * j, 2 * j + 1] == clean[2 * j, 2 * j + 1]
        assert full[2 * j, 2 * j + 1] != clean[2 * j, 2 * j + 1]
