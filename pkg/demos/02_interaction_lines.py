"""Interactions turn exceptional points into lines in the (phi, U) plane.

Each free exceptional twist seeds a family of lines: second-order
perturbation theory in the defective subspace gives a closed-form U(phi)
for every partner momentum ("inherited" lines), and degenerate pairs of
single-particle levels away from the twist give additional lines born at
the degeneracy ("emergent" lines).

This script evaluates both predictions for L = 6 and checks them against
minima of the exact min-angle landscape.
"""

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from fermiep.model import ModelSpec, solve_exceptional_twists
from fermiep.perturb import (
    phi_degeneracy_candidates,
    predict_U_emergent,
    predict_U_inherited,
)
from fermiep.scan import angle_at

model = ModelSpec(L=6, m=0.7)
tw = solve_exceptional_twists(model)[1]  # k_e = 1, phi_e = 4.7472
print(f"twist: k_e = {tw.k_e}, phi_e = {tw.phi_e:.5f} ({tw.family})")

# --- inherited line for partner momentum q = 5, upper band -----------------
pred = predict_U_inherited(5, 1, tw.family, tw.k_e, model)
sector = (tw.k_e + 5) % 6
print("\ninherited line, partner q = 5, band +1 (real side of the twist):")
for target in (0.002, 0.005, 0.008):
    d = brentq(lambda d: abs(pred.evaluate(tw.phi_e - d)) - target, 1e-7, 0.5)
    phi = tw.phi_e - d
    u = pred.evaluate(phi).real
    r = minimize_scalar(
        lambda x: angle_at(phi, complex(x), model, 2, sector)[0],
        bounds=tuple(sorted((0.5 * u, 1.5 * u))),
        method="bounded",
        options=dict(xatol=1e-12),
    )
    rel = abs(r.x - u) / abs(u)
    print(f"  phi = {phi:.5f}  predicted U = {u:+.6f}  exact U = {r.x:+.6f}"
          f"  (off by {100 * rel:.2f}%, angle {r.fun:.1e})")

# --- emergent line from the (k, q) = (1, 5) degenerate pair ----------------
phi_d = phi_degeneracy_candidates(1, 5, 1, model, samples=600)[0]
print(f"\ndegenerate pair (1, 5) at phi_d = {phi_d:.6f}; emergent branches:")
for p in predict_U_emergent(4, 1, 5, 1, model):
    u = p.evaluate(4.76)
    print(f"  branch {p.branch}: U(4.76) = {u:+.5f}  [{p.realness(4.76)}]")

branch = [
    p for p in predict_U_emergent(4, 1, 5, 1, model)
    if p.realness(4.76) == "REAL" and -0.1 < p.evaluate(4.76).real < 0
][0]
u = branch.evaluate(4.76).real
us = np.linspace(2.0 * u, 0.5 * u, 121)
angs = [angle_at(4.76, complex(x), model, 2, sector=0)[0] for x in us]
i = int(np.argmin(angs))
r = minimize_scalar(
    lambda x: angle_at(4.76, complex(x), model, 2, sector=0)[0],
    bounds=(us[i - 1], us[i + 1]),
    method="bounded",
    options=dict(xatol=1e-12),
)
print(f"\nemergent branch {branch.branch} at phi = 4.76:")
print(f"  predicted U = {u:+.6f}  exact U = {r.x:+.6f}"
      f"  (off by {100 * abs(r.x - u) / abs(u):.2f}%)")
