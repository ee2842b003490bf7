"""Two exceptional lines can meet and annihilate at a third-order point.

For L = 6 the inherited line of the phi_e = 4.7472 twist and the emergent
line born at phi_d = 4.7724 both run to negative U and curve toward each
other.  They merge near U = -0.1: past the merge the min-angle dip lifts
off the floor and both lines are gone.  A 3x3 effective matrix for the
three participating states predicts the endpoint in closed form, and its
Jordan chain there has length three.

A small sphere in (phi, Re U, Im U) around the endpoint shows the
signature dip pattern: two dips on the real-U equator (the incoming
lines) plus a mirrored off-equator pair (complex-U lines leaving the
endpoint).
"""

import numpy as np
from scipy.optimize import fsolve, minimize_scalar

from fermiep.model import ModelSpec
from fermiep.perturb import KIND_III_EVEN, build_h_eff
from fermiep.scan import ProbeSpec, angle_at, sphere_probe
from fermiep.spectral import jordan_analysis

model = ModelSpec(L=6, m=0.7)


def triple_root(seed):
    """Parameters where the effective cubic has a threefold root."""

    def eqs(z):
        phi, u = z
        loc = ModelSpec(L=6, m=0.7, phi=phi, U=u)
        M = build_h_eff(KIND_III_EVEN, loc, k_e=1, q=5, band=1).matrix
        c2 = -np.trace(M)
        c1 = 0.5 * (np.trace(M) ** 2 - np.trace(M @ M))
        c0 = -np.linalg.det(M)
        p = c1 - c2**2 / 3.0
        q = 2 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
        return [p.real + p.imag, q.real + q.imag]

    return fsolve(eqs, seed, xtol=1e-13)


phi_eff, u_eff = triple_root((4.7372, -0.098))
print(f"effective endpoint: phi = {phi_eff:.6f}, U = {u_eff:.6f}")
loc = ModelSpec(L=6, m=0.7, phi=phi_eff, U=u_eff)
M = build_h_eff(KIND_III_EVEN, loc, k_e=1, q=5, band=1).matrix
rep = jordan_analysis(M, cluster_tol=1e-3, rank_tol=1e-8, strict=False)
print(f"Jordan chains of the effective matrix there: {rep.chain_lengths}")

# follow the exact dips down in U until they merge and vanish; the dips
# are extremely narrow, so locate them by dense scan before refining
def dips_in(u, lo, hi, n=120, thr=1e-3):
    phis = np.linspace(lo, hi, n)
    angs = np.array([angle_at(p, complex(u), model, 2, 0)[0] for p in phis])
    step = (hi - lo) / n
    found = []
    for i in range(1, n - 1):
        if angs[i] < 5e-2 and angs[i] <= angs[i - 1] and angs[i] <= angs[i + 1]:
            r = minimize_scalar(
                lambda p: angle_at(p, complex(u), model, 2, 0)[0],
                bounds=(phis[i] - step, phis[i] + step),
                method="bounded",
                options=dict(xatol=1e-12),
            )
            if r.fun < thr and (not found or r.x - found[-1][0] > 2 * step):
                found.append((float(r.x), float(r.fun)))
    return found


print("\ntracking the exact dips (sector 0):")
for u in (-0.07, -0.085, -0.0925, -0.0975, -0.1, -0.1025):
    found = dips_in(u, 4.730, 4.749)
    desc = ", ".join(f"{x:.5f} ({f:.0e})" for x, f in found) or "none"
    print(f"  U = {u:.4f}: {desc}")

print(f"\nthe merged dip disappears near (4.737, -0.100); "
      f"effective prediction ({phi_eff:.4f}, {u_eff:.4f})")

# sphere probe around the endpoint
probe = ProbeSpec(
    center=(4.73675723, -0.10000391 + 0j),
    r_phi=0.002,
    r_u=0.02,
    n_nu=181,
    n_eta=91,
    sector=0,
)
res = sphere_probe(probe, model, N=2, threshold=5e-2)
print(f"\nsphere probe around the endpoint: {res.n_dips} dips")
for nu, eta, ang in res.dips:
    where = "equator" if abs(eta - np.pi / 2) < 1e-6 else "off-equator"
    print(f"  nu = {nu:.4f}  eta = {eta:.4f}  angle = {ang:.1e}  ({where})")
