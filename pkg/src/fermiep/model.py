"""Single-particle two-band model with twisted boundary conditions.

The momentum-space Hamiltonian decomposes into 2x2 blocks

    h(k) = [[0, m_k], [p_k, 0]],   m_k = m - cos(theta_k) - sin(theta_k),
                                   p_k = m - cos(theta_k) + sin(theta_k),

with the shifted momentum theta_k = (2*pi*k + phi) / L.  The block becomes
non-diagonalizable (an exceptional point) whenever m_k or p_k vanishes.

Branch convention: all square roots are principal (cut on the negative real
axis, sqrt(-1) = +1j), and the band energy is the *product* of principal
roots, E_+ = sqrt(p_k) * sqrt(m_k).  With both coefficients negative this
gives E_+ = -|m_k|, and every downstream formula uses the same convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NoSolutionError

TWO_PI = 2.0 * math.pi

M_ZERO = "M_ZERO"
P_ZERO = "P_ZERO"


@dataclass(frozen=True)
class ModelSpec:
    """Physical parameters of one model instance.

    Parameters
    ----------
    L : int
        Number of unit cells (>= 2).
    m : float
        Mass parameter.
    phi : float
        Twist angle, reduced modulo 2*pi on construction.
    U : complex
        Interaction strength.  Real for hermitian runs, imaginary for
        anti-hermitian runs, general complex only in sphere probes.
    disorder_sigma : float
        Standard deviation of the multiplicative Gaussian hopping noise.
    seed : int
        Seed for disorder realizations.
    """

    L: int
    m: float
    phi: float = 0.0
    U: complex = 0.0
    disorder_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"L must be >= 2, got {self.L}")
        if self.disorder_sigma < 0:
            raise ValueError("disorder_sigma must be >= 0")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)
        object.__setattr__(self, "U", complex(self.U))

    @property
    def defect_tol(self) -> float:
        """Threshold below which |m_k| or |p_k| counts as vanishing."""
        return 1e-10 * max(1.0, abs(self.m))


@dataclass(frozen=True)
class BlochCoeffs:
    """Coefficients of the 2x2 momentum-space block at momentum index k."""

    k: int
    theta: float
    m_k: float
    p_k: float


@dataclass(frozen=True)
class SingleParticleMode:
    """One band eigenpair of a 2x2 momentum block.

    ``right_vec``/``left_vec`` follow the closed-form normalization by
    sqrt(2*E_+).  At an exceptional point the normalization underflows;
    the mode is then flagged ``defective`` and the vectors are returned
    unnormalized (callers should switch to generalized eigenvectors).
    """

    k: int
    band: int
    energy: complex
    right_vec: np.ndarray = field(repr=False)
    left_vec: np.ndarray = field(repr=False)
    defective: bool = False


@dataclass(frozen=True)
class ExceptionalTwist:
    """A solution (k_e, phi_e) at which one Bloch coefficient vanishes."""

    k_e: int
    phi_e: float
    family: str
    theta_e: float


def theta_of(k: int, L: int, phi: float) -> float:
    return (TWO_PI * k + phi) / L


def bloch_coefficients(k: int, model: ModelSpec) -> BlochCoeffs:
    """Return (theta, m_k, p_k) for momentum index k."""
    if not 0 <= k < model.L:
        raise ValueError(f"momentum index {k} outside [0, {model.L})")
    theta = theta_of(k, model.L, model.phi)
    c, s = math.cos(theta), math.sin(theta)
    return BlochCoeffs(k=k, theta=theta, m_k=model.m - c - s, p_k=model.m - c + s)


def bloch_matrix(k: int, model: ModelSpec) -> np.ndarray:
    """Dense 2x2 momentum-space block [[0, m_k], [p_k, 0]]."""
    c = bloch_coefficients(k, model)
    return np.array([[0.0, c.m_k], [c.p_k, 0.0]], dtype=complex)


def single_particle_spectrum(k: int, model: ModelSpec) -> tuple[SingleParticleMode, SingleParticleMode]:
    """Both band eigenpairs of the momentum block at index k.

    Energies are E_(k,+/-) = +/- sqrt(p_k) * sqrt(m_k) with principal
    roots taken individually.  Right vectors are (+/- sqrt(m_k), sqrt(p_k))
    and left covectors (+/- sqrt(p_k), sqrt(m_k)), each divided by
    sqrt(2*E_+) away from exceptional points.
    """
    c = bloch_coefficients(k, model)
    sm = np.sqrt(complex(c.m_k))
    sp = np.sqrt(complex(c.p_k))
    e_plus = sp * sm
    defective = min(abs(c.m_k), abs(c.p_k)) < model.defect_tol
    modes = []
    for band in (+1, -1):
        right = np.array([band * sm, sp], dtype=complex)
        left = np.array([band * sp, sm], dtype=complex)
        if not defective:
            norm = np.sqrt(2.0 * e_plus)
            right = right / norm
            left = left / norm
        modes.append(
            SingleParticleMode(
                k=k,
                band=band,
                energy=band * e_plus,
                right_vec=right,
                left_vec=left,
                defective=defective,
            )
        )
    return modes[0], modes[1]


def band_energy(k: int, model: ModelSpec, band: int = +1) -> complex:
    """E_(k, band) without constructing eigenvectors."""
    c = bloch_coefficients(k, model)
    return band * np.sqrt(complex(c.p_k)) * np.sqrt(complex(c.m_k))


def exceptional_thetas(m: float) -> list[float]:
    """The four shifted momenta where a Bloch coefficient vanishes.

    Solutions of cos(theta) +/- sin(theta) = m, written as
    theta = 2*atan((s1*sqrt(2 - m^2) + s2) / (m + 1)) mod 2*pi.
    """
    if m * m >= 2.0:
        raise NoSolutionError(f"no real exceptional twist for m^2 >= 2 (m={m})")
    root = math.sqrt(2.0 - m * m)
    thetas = []
    for s1 in (+1, -1):
        for s2 in (+1, -1):
            theta = 2.0 * math.atan2(s1 * root + s2, m + 1.0) % TWO_PI
            thetas.append(theta)
    return sorted(thetas)


def solve_exceptional_twists(model: ModelSpec) -> list[ExceptionalTwist]:
    """All exceptional twists of the finite chain, one per theta root.

    Each theta_e maps to the unique pair (k_e, phi_e) with
    phi_e = L*theta_e - 2*pi*k_e in [0, 2*pi).
    """
    out = []
    for theta_e in exceptional_thetas(model.m):
        scaled = model.L * theta_e / TWO_PI
        k_e = int(math.floor(scaled)) % model.L
        phi_e = (model.L * theta_e - TWO_PI * k_e) % TWO_PI
        probe = ModelSpec(L=model.L, m=model.m, phi=phi_e)
        c = bloch_coefficients(k_e, probe)
        family = M_ZERO if abs(c.m_k) <= abs(c.p_k) else P_ZERO
        out.append(ExceptionalTwist(k_e=k_e, phi_e=phi_e, family=family, theta_e=theta_e))
    return out


# Real-space form.  Mode index = 2*j + orbital (0 = a, 1 = b).  The inter-cell
# couplings follow from m_k = m - (1-1j)/2 * e^{i theta} - (1+1j)/2 * e^{-i theta}
# (and p_k with the two factors swapped); the twist is spread uniformly as a
# phase e^{i phi / L} on every forward bond.  The plain Fourier rotation
# F[k, j] = exp(-2i pi k j / L) / sqrt(L) per orbital then block-diagonalizes
# the clean matrix into the momentum blocks exactly.

_AB_FWD = -(1.0 - 1.0j) / 2.0
_AB_BWD = -(1.0 + 1.0j) / 2.0
_BA_FWD = -(1.0 + 1.0j) / 2.0
_BA_BWD = -(1.0 - 1.0j) / 2.0


def _coupling_list(model: ModelSpec, dress_intracell: bool = True):
    """Ordered nonzero couplings (row, col, amplitude, channel, dressed-flag).

    Each physical amplitude occupies one *channel* shared by the two matrix
    elements that carry it (the element and its conjugate partner under the
    orbital swap): channel 3j is the intra-cell m coupling of site j,
    channels 3j+1 and 3j+2 the a->b and b->a links of bond (j, j+1).
    Dressing per channel rather than per element keeps the spectrum closed
    under complex conjugation, so exceptional lines survive the noise
    instead of collapsing into isolated points.
    """
    L = model.L
    fwd = np.exp(1j * model.phi / L)
    out = []
    for j in range(L):
        jp, jm = (j + 1) % L, (j - 1) % L
        out.append((2 * j, 2 * j + 1, complex(model.m), 3 * j, dress_intracell))
        out.append((2 * j + 1, 2 * j, complex(model.m), 3 * j, dress_intracell))
        out.append((2 * j, 2 * jp + 1, _AB_FWD * fwd, 3 * j + 1, True))
        out.append((2 * j + 1, 2 * jp, _BA_FWD * fwd, 3 * j + 2, True))
        out.append((2 * j, 2 * jm + 1, _AB_BWD * np.conj(fwd), 3 * jm + 1, True))
        out.append((2 * j + 1, 2 * jm, _BA_BWD * np.conj(fwd), 3 * jm + 2, True))
    return out


@dataclass(frozen=True)
class DisorderRealization:
    """Multiplicative Gaussian factors, one per coupling channel (3L total)."""

    factors: np.ndarray

    @classmethod
    def draw(cls, model: ModelSpec, stream: int = 0) -> "DisorderRealization":
        """Sample factors ~ Normal(1, disorder_sigma) from (seed, stream)."""
        rng = np.random.default_rng([model.seed, stream])
        factors = 1.0 + model.disorder_sigma * rng.standard_normal(3 * model.L)
        return cls(factors=factors)


def build_real_space_single_particle(
    model: ModelSpec,
    noise: DisorderRealization | None = None,
    dress_intracell: bool = True,
) -> np.ndarray:
    """Dense 2L x 2L real-space matrix over (site, orbital) modes.

    Without noise the Fourier rotation maps it exactly onto the momentum
    blocks.  With noise, every dressed hopping amplitude is multiplied by
    its Gaussian factor.  ``dress_intracell=False`` restricts the noise to
    inter-cell bonds.
    """
    couplings = _coupling_list(model, dress_intracell)
    if noise is not None and len(noise.factors) != 3 * model.L:
        raise DimensionMismatchError(
            f"noise has {len(noise.factors)} factors, expected {3 * model.L}"
        )
    H = np.zeros((2 * model.L, 2 * model.L), dtype=complex)
    for r, c, amp, channel, dressed in couplings:
        if noise is not None and dressed:
            amp = amp * noise.factors[channel]
        H[r, c] += amp
    return H


def fourier_rotation(L: int) -> np.ndarray:
    """Orbital-preserving DFT matrix F with F[k, j] = e^{-2i pi k j / L}/sqrt(L)."""
    F = np.zeros((2 * L, 2 * L), dtype=complex)
    grid = np.exp(-2j * np.pi * np.outer(np.arange(L), np.arange(L)) / L) / math.sqrt(L)
    F[0::2, 0::2] = grid
    F[1::2, 1::2] = grid
    return F


def momentum_space_single_particle(model: ModelSpec) -> np.ndarray:
    """Block-diagonal 2L x 2L momentum-space matrix (interleaved modes)."""
    H = np.zeros((2 * model.L, 2 * model.L), dtype=complex)
    for k in range(model.L):
        c = bloch_coefficients(k, model)
        H[2 * k, 2 * k + 1] = c.m_k
        H[2 * k + 1, 2 * k] = c.p_k
    return H


def check_pt_symmetry(H: np.ndarray) -> float:
    """Max-norm residual of the protecting antiunitary symmetry.

    The symmetry combines complex conjugation with real-space inversion.
    In the gauge produced by :func:`build_real_space_single_particle` the
    orbital swap is absorbed into the cell labeling, so the unitary part
    reduces to the site-inversion permutation j -> -j mod L acting on both
    orbitals.  Clean matrices give a residual at machine precision;
    disorder breaks the symmetry.
    """
    dim = H.shape[0]
    if H.shape != (dim, dim) or dim % 2:
        raise DimensionMismatchError(f"expected a 2L x 2L matrix, got {H.shape}")
    L = dim // 2
    perm = np.empty(dim, dtype=int)
    for j in range(L):
        jj = (-j) % L
        perm[2 * j] = 2 * jj
        perm[2 * j + 1] = 2 * jj + 1
    transformed = H[np.ix_(perm, perm)]
    return float(np.abs(H.conj() - transformed).max())
