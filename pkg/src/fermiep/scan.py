"""Parameter-plane exploration of the minimum eigenvector angle.

The (twist, interaction) plane is rasterized by exact diagonalization;
dark valleys of the min-angle field are refined to exceptional points,
followed along their lines, and probed with circles and spheres around
suspected endpoints.  All scanning is deterministic: results depend only
on the grid and the model, never on worker scheduling.
"""

from __future__ import annotations

import functools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from .errors import ConfigError, EigensolveFailureError
from .fock import (
    MOMENTUM,
    REAL,
    assemble_h0_many,
    assemble_hint,
    enumerate_basis,
    extract_block,
    momentum_sectors,
)
from .model import DisorderRealization, ModelSpec
from .spectral import decompose, jordan_analysis, min_angle

U_AXIS_REAL = "REAL"
U_AXIS_IMAGINARY = "IMAGINARY"

STATUS_CONFIRMED = "CONFIRMED"
STATUS_LOST = "LOST"

TAG_BOUNDARY = "BOUNDARY"
TAG_ANNIHILATION = "ANNIHILATION"
TAG_LOST = "LOST"
TAG_MAX_STEPS = "MAX_STEPS"


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (phi, U) raster with an optional sector restriction."""

    phi_range: tuple[float, float, int]
    u_range: tuple[float, float, int]
    u_axis: str = U_AXIS_REAL
    sector: int | None = None

    def __post_init__(self):
        if self.phi_range[2] < 2 or self.u_range[2] < 2:
            raise ConfigError("grid needs at least 2 steps per axis")
        for v in (*self.phi_range[:2], *self.u_range[:2]):
            if not math.isfinite(v):
                raise ConfigError("grid ranges must be finite")
        if self.u_axis not in (U_AXIS_REAL, U_AXIS_IMAGINARY):
            raise ConfigError(f"unknown U axis {self.u_axis!r}")

    @property
    def phi_values(self) -> np.ndarray:
        lo, hi, n = self.phi_range
        return np.linspace(lo, hi, n)

    @property
    def u_values(self) -> np.ndarray:
        lo, hi, n = self.u_range
        vals = np.linspace(lo, hi, n)
        return vals * (1j if self.u_axis == U_AXIS_IMAGINARY else 1)


@dataclass(frozen=True)
class SweepResult:
    """min-angle field over the grid, phi along axis 0, U along axis 1."""

    grid: GridSpec
    angles: np.ndarray = field(repr=False)
    argmin_i: np.ndarray = field(repr=False)
    argmin_j: np.ndarray = field(repr=False)
    model: ModelSpec
    n_fermions: int
    wall_time: float


@dataclass(frozen=True)
class EPRefinement:
    """Locally refined exceptional-point candidate."""

    phi: float
    u: complex
    angle: float
    status: str
    jordan: object = None


@dataclass(frozen=True)
class EPLine:
    """Ordered polyline of refined exceptional points."""

    points: tuple[tuple[float, complex], ...]
    angles: tuple[float, ...]
    endpoint_tag: str
    label: tuple | None = None

    def retagged(self, tag: str) -> "EPLine":
        return replace(self, endpoint_tag=tag)


@dataclass(frozen=True)
class ProbeSpec:
    """Circle or sphere around a candidate point in (phi, U)."""

    center: tuple[float, complex]
    r_phi: float
    r_u: float
    n_theta: int = 720
    n_nu: int = 181
    n_eta: int = 91
    sector: int | None = None

    def __post_init__(self):
        if self.r_phi <= 0 or self.r_u <= 0:
            raise ConfigError("probe radii must be positive")


@dataclass(frozen=True)
class CircleProbeResult:
    thetas: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)
    dip_indices: tuple[int, ...]
    threshold: float

    @property
    def n_dips(self) -> int:
        return len(self.dip_indices)


@dataclass(frozen=True)
class SphereProbeResult:
    nus: np.ndarray = field(repr=False)
    etas: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)
    dips: tuple[tuple[float, float, float], ...]
    threshold: float

    @property
    def n_dips(self) -> int:
        return len(self.dips)


@functools.lru_cache(maxsize=16)
def _cached_basis(L: int, N: int, labeling: str):
    return enumerate_basis(L, N, labeling)


@functools.lru_cache(maxsize=16)
def _cached_hint(L: int, N: int, labeling: str):
    return assemble_hint(_cached_basis(L, N, labeling)).matrix


def _sector_indices(model: ModelSpec, N: int, sector: int | None):
    if sector is None:
        return None
    basis = _cached_basis(model.L, N, MOMENTUM)
    for s in momentum_sectors(basis, model):
        if s.k_tot == sector % model.L:
            return s
    raise ConfigError(f"no occupied sector k_tot={sector}")


def angle_at(
    phi: float,
    u: complex,
    model: ModelSpec,
    N: int,
    sector: int | None = None,
    noise: DisorderRealization | None = None,
) -> tuple[float, int, int]:
    """min-angle of H(phi, U) and the argmin eigenvector pair."""
    labeling = REAL if noise is not None else MOMENTUM
    local = replace(model, phi=phi % (2 * math.pi), U=u)
    basis = _cached_basis(model.L, N, labeling)
    H0 = assemble_h0_many(basis, local, noise=noise).matrix
    H = H0 + u * _cached_hint(model.L, N, labeling)
    sec = _sector_indices(local, N, sector) if noise is None else None
    if sec is not None:
        H = extract_block(H, sec)
    report = min_angle(decompose(H).right_vectors)
    return report.min_angle, report.argmin_pair[0], report.argmin_pair[1]


def _sweep_columns(args):
    model, grid, N, noise, cols = args
    labeling = REAL if noise is not None else MOMENTUM
    basis = _cached_basis(model.L, N, labeling)
    hint = _cached_hint(model.L, N, labeling)
    phis = grid.phi_values
    us = grid.u_values
    sec = None
    if noise is None and grid.sector is not None:
        sec = _sector_indices(model, N, grid.sector)
    out = []
    for ci in cols:
        local = replace(model, phi=phis[ci] % (2 * math.pi))
        H0 = assemble_h0_many(basis, local, noise=noise).matrix
        col_a = np.empty(len(us))
        col_i = np.empty(len(us), dtype=int)
        col_j = np.empty(len(us), dtype=int)
        for uj, u in enumerate(us):
            H = H0 + u * hint
            if sec is not None:
                H = extract_block(H, sec)
            try:
                report = min_angle(decompose(H).right_vectors)
                col_a[uj] = report.min_angle
                col_i[uj], col_j[uj] = report.argmin_pair
            except EigensolveFailureError:
                col_a[uj] = math.nan
                col_i[uj] = col_j[uj] = -1
        out.append((ci, col_a, col_i, col_j))
    return out


def sweep(
    grid: GridSpec,
    model: ModelSpec,
    N: int = 2,
    noise: DisorderRealization | None = None,
    workers: int = 1,
) -> SweepResult:
    """Rasterize the min-angle field over the grid.

    With a disorder realization the real-space basis is used and sector
    restriction is unavailable.  Output is identical for any worker count.
    """
    if noise is not None and grid.sector is not None:
        raise ConfigError("sector restriction invalid with disorder")
    t0 = time.perf_counter()
    n_phi, n_u = grid.phi_range[2], grid.u_range[2]
    angles = np.empty((n_phi, n_u))
    arg_i = np.empty((n_phi, n_u), dtype=int)
    arg_j = np.empty((n_phi, n_u), dtype=int)
    cols = list(range(n_phi))
    if workers <= 1:
        results = [_sweep_columns((model, grid, N, noise, cols))]
    else:
        chunks = [cols[i::workers] for i in range(workers) if cols[i::workers]]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(_sweep_columns, [(model, grid, N, noise, ch) for ch in chunks])
            )
    for chunk in results:
        for ci, col_a, col_i, col_j in chunk:
            angles[ci] = col_a
            arg_i[ci] = col_i
            arg_j[ci] = col_j
    return SweepResult(
        grid=grid,
        angles=angles,
        argmin_i=arg_i,
        argmin_j=arg_j,
        model=model,
        n_fermions=N,
        wall_time=time.perf_counter() - t0,
    )


def refine_ep(
    phi0: float,
    u0: complex,
    model: ModelSpec,
    N: int = 2,
    sector: int | None = None,
    complex_u: bool = False,
    angle_threshold: float = 1e-6,
    span: float = 0.05,
    confirm: bool = True,
    fix_phi: bool = False,
    fix_u: bool = False,
) -> EPRefinement:
    """Minimize the min-angle locally and confirm defectiveness.

    Returns CONFIRMED when the refined angle drops below the threshold
    (and, if ``confirm``, the Jordan analysis finds a chain of length
    >= 2); LOST when the minimization stalls above it, e.g. at a
    diagonalizable near-degeneracy.  ``fix_phi``/``fix_u`` freeze one
    coordinate (useful when comparing against a prediction at fixed
    twist, or when locating a twist at fixed interaction).
    """

    u0 = complex(u0)
    u_is_imag = abs(u0.imag) > abs(u0.real)
    if fix_phi and fix_u:
        raise ValueError("cannot fix both coordinates")
    if fix_phi:
        if complex_u:
            x0 = np.array([u0.real, u0.imag])
            unpack = lambda x: (phi0, complex(x[0], x[1]))
        elif u_is_imag:
            x0 = np.array([u0.imag])
            unpack = lambda x: (phi0, 1j * x[0])
        else:
            x0 = np.array([u0.real])
            unpack = lambda x: (phi0, complex(x[0]))
    elif fix_u:
        x0 = np.array([phi0])
        unpack = lambda x: (x[0], u0)
    elif complex_u:
        x0 = np.array([phi0, u0.real, u0.imag])
        unpack = lambda x: (x[0], complex(x[1], x[2]))
    elif u_is_imag:
        x0 = np.array([phi0, u0.imag])
        unpack = lambda x: (x[0], 1j * x[1])
    else:
        x0 = np.array([phi0, u0.real])
        unpack = lambda x: (x[0], complex(x[1]))

    def cost(x):
        phi, u = unpack(x)
        try:
            a, _, _ = angle_at(phi, u, model, N, sector)
        except EigensolveFailureError:
            return math.pi
        return a

    res = scipy.optimize.minimize(
        cost,
        x0,
        method="Nelder-Mead",
        options=dict(
            xatol=1e-10, fatol=1e-12, maxiter=600,
            initial_simplex=x0 + span * np.vstack([np.zeros_like(x0), np.eye(len(x0))]),
        ),
    )
    phi_r, u_r = unpack(res.x)
    angle = float(res.fun)
    jordan = None
    status = STATUS_CONFIRMED if angle < angle_threshold else STATUS_LOST
    if status == STATUS_CONFIRMED and confirm:
        labeling = MOMENTUM
        local = replace(model, phi=phi_r % (2 * math.pi), U=u_r)
        basis = _cached_basis(model.L, N, labeling)
        H = assemble_h0_many(basis, local).matrix + u_r * _cached_hint(model.L, N, labeling)
        sec = _sector_indices(local, N, sector)
        if sec is not None:
            H = extract_block(H, sec)
        jordan = jordan_analysis(H, cluster_tol=max(10 * angle, 1e-7), strict=False)
        if not jordan.defective_clusters():
            status = STATUS_LOST
    return EPRefinement(phi=phi_r, u=u_r, angle=angle, status=status, jordan=jordan)


def trace_line(
    start: EPRefinement,
    model: ModelSpec,
    N: int = 2,
    sector: int | None = None,
    step: float = 0.02,
    max_steps: int = 200,
    phi_bounds: tuple[float, float] = (0.0, 2 * math.pi),
    u_bounds: tuple[float, float] = (-4.0, 4.0),
    angle_threshold: float = 1e-6,
    initial_direction: tuple[float, float] | None = None,
    label: tuple | None = None,
) -> EPLine:
    """Predictor-corrector walk along an exceptional line.

    Steps tangentially from the last two refined points (or the supplied
    initial direction), re-refines at each predicted point, and halves
    the step on failure down to a floor.  Endpoint tags: BOUNDARY when a
    bound is crossed, LOST when refinement stops converging (candidate
    annihilation endpoint), MAX_STEPS otherwise.
    """
    if start.status != STATUS_CONFIRMED:
        raise ValueError("trace requires a confirmed starting point")
    u_is_imag = abs(start.u.imag) > abs(start.u.real)
    pts = [(start.phi, start.u)]
    angs = [start.angle]
    if initial_direction is None:
        initial_direction = (1.0, 0.0)
    direction = np.array(initial_direction, dtype=float)
    direction /= np.linalg.norm(direction)
    tag = TAG_MAX_STEPS
    h = step
    for _ in range(max_steps):
        phi_c, u_c = pts[-1]
        u_scalar = u_c.imag if u_is_imag else u_c.real
        if len(pts) >= 2:
            phi_p, u_p = pts[-2]
            u_p_scalar = u_p.imag if u_is_imag else u_p.real
            d = np.array([phi_c - phi_p, u_scalar - u_p_scalar])
            nrm = np.linalg.norm(d)
            if nrm > 1e-14:
                direction = d / nrm
        refined = None
        while True:
            guess = np.array([phi_c, u_scalar]) + h * direction
            u_guess = 1j * guess[1] if u_is_imag else complex(guess[1])
            cand = refine_ep(
                guess[0], u_guess, model, N, sector,
                angle_threshold=angle_threshold, span=max(h / 4, 1e-4),
                confirm=False,
            )
            moved = math.hypot(
                cand.phi - phi_c,
                (cand.u.imag if u_is_imag else cand.u.real) - u_scalar,
            )
            if cand.status == STATUS_CONFIRMED and moved > 0.2 * h:
                refined = cand
                break
            h /= 2
            if h < step / 64:
                break
        if refined is None:
            tag = TAG_LOST
            break
        h = min(step, h * 2)
        pts.append((refined.phi, refined.u))
        angs.append(refined.angle)
        u_val = refined.u.imag if u_is_imag else refined.u.real
        if not (phi_bounds[0] <= refined.phi <= phi_bounds[1]) or not (
            u_bounds[0] <= u_val <= u_bounds[1]
        ):
            tag = TAG_BOUNDARY
            break
    return EPLine(points=tuple(pts), angles=tuple(angs), endpoint_tag=tag, label=label)


def merge_endpoint(
    line_a: EPLine,
    line_b: EPLine,
    merge_distance: float,
) -> tuple[float, complex] | None:
    """Common endpoint of two traced lines, if they converge.

    Geometric test only; order-3 confirmation (the annihilation
    signature) is the caller's job on the effective or full matrix.
    """
    pa, ua = line_a.points[-1]
    pb, ub = line_b.points[-1]
    dist = math.hypot(pa - pb, abs(ua - ub))
    if dist > merge_distance:
        return None
    return (0.5 * (pa + pb), 0.5 * (ua + ub))


def _dip_groups(angles: np.ndarray, threshold: float, periodic: bool = True) -> list[int]:
    """One representative index (the local minimum) per connected
    below-threshold group."""
    below = angles < threshold
    n = len(angles)
    if not below.any():
        return []
    if below.all():
        return [int(np.argmin(angles))]
    groups = []
    i = 0
    # rotate so position 0 is above threshold, avoiding a split wrap group
    if periodic:
        start = int(np.argmax(~below))
    else:
        start = 0
    idx = np.arange(n)
    if periodic:
        order = np.roll(idx, -start)
    else:
        order = idx
    current = []
    for pos in order:
        if below[pos]:
            current.append(pos)
        elif current:
            groups.append(current)
            current = []
    if current:
        groups.append(current)
    return sorted(int(g[int(np.argmin(angles[g]))]) for g in groups)


def circle_probe(
    probe: ProbeSpec,
    model: ModelSpec,
    N: int = 2,
    threshold: float = 1e-2,
) -> CircleProbeResult:
    """min-angle series around a circle in the (phi, U) plane; connected
    dips below the threshold count the exceptional lines crossed."""
    phi_c, u_c = probe.center
    thetas = np.linspace(0.0, 2 * math.pi, probe.n_theta, endpoint=False)
    angles = np.empty_like(thetas)
    for i, th in enumerate(thetas):
        phi = phi_c + probe.r_phi * math.cos(th)
        u = u_c + probe.r_u * math.sin(th)
        angles[i], _, _ = angle_at(phi, u, model, N, probe.sector)
    dips = _dip_groups(angles, threshold, periodic=True)
    return CircleProbeResult(
        thetas=thetas, angles=angles, dip_indices=tuple(dips), threshold=threshold
    )


def sphere_probe(
    probe: ProbeSpec,
    model: ModelSpec,
    N: int = 2,
    threshold: float = 1e-2,
) -> SphereProbeResult:
    """min-angle field on a sphere in (phi, Re U, Im U) around the center.

    Parameterization: phi = r_phi cos(nu) sin(eta) + phi_c,
    Re U = r_u sin(nu) sin(eta) + Re U_c, Im U = r_u cos(eta) + Im U_c.
    Dips are local minima of the field below the threshold.
    """
    phi_c, u_c = probe.center
    nus = np.linspace(0.0, 2 * math.pi, probe.n_nu, endpoint=False)
    etas = np.linspace(0.0, math.pi, probe.n_eta)
    angles = np.empty((probe.n_nu, probe.n_eta))
    for i, nu in enumerate(nus):
        for j, eta in enumerate(etas):
            phi = phi_c + probe.r_phi * math.cos(nu) * math.sin(eta)
            u = u_c + probe.r_u * math.sin(nu) * math.sin(eta) + 1j * probe.r_u * math.cos(eta)
            angles[i, j], _, _ = angle_at(phi, u, model, N, probe.sector)
    dips = []
    for i in range(probe.n_nu):
        for j in range(probe.n_eta):
            if angles[i, j] >= threshold:
                continue
            val = angles[i, j]
            neighbors = []
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
                ni = (i + di) % probe.n_nu
                nj = j + dj
                if 0 <= nj < probe.n_eta:
                    neighbors.append(angles[ni, nj])
            if all(val <= nb for nb in neighbors):
                dips.append((float(nus[i]), float(etas[j]), float(val)))
    merged: list[tuple[float, float, float]] = []
    for nu, eta, val in sorted(dips, key=lambda d: d[2]):
        dn = 2 * math.pi / probe.n_nu
        de = math.pi / max(probe.n_eta - 1, 1)
        close = False
        for mu, me, _ in merged:
            dnu = min(abs(nu - mu), 2 * math.pi - abs(nu - mu)) * math.sin(0.5 * (eta + me))
            if math.hypot(dnu, eta - me) < 3 * max(dn, de):
                close = True
                break
        if not close:
            merged.append((nu, eta, val))
    return SphereProbeResult(
        nus=nus, etas=etas, angles=angles, dips=tuple(merged), threshold=threshold
    )
