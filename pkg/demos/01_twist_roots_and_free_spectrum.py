"""Where do exceptional points live before interactions are switched on?

The two-band ring has Bloch blocks [[0, m_k], [p_k, 0]], so an eigenvalue
pair coalesces whenever m_k or p_k vanishes.  Sweeping the boundary twist
phi moves every momentum's angle theta_k = (2*pi*k + phi)/L through the
roots of m and p, which pins down a finite set of exceptional twists.

This script finds those twists for L = 6, m = 0.7, shows that the
min-angle quantifier dips to zero there, and counts the defective Jordan
chains of the free two-fermion Hamiltonian at the twist.
"""

import numpy as np

from fermiep.fock import assemble_h0_many, enumerate_basis
from fermiep.model import ModelSpec, exceptional_thetas, solve_exceptional_twists
from fermiep.scan import angle_at
from fermiep.spectral import jordan_analysis

model = ModelSpec(L=6, m=0.7)

print("roots of m(theta), p(theta) at m = 0.7:")
for th in exceptional_thetas(0.7):
    print(f"  theta = {th:.6f}")

print("\nexceptional twists of the L = 6 ring:")
twists = solve_exceptional_twists(model)
for tw in twists:
    print(f"  k = {tw.k_e}  phi_e = {tw.phi_e:.6f}  ({tw.family})")

tw = twists[0]
print(f"\nmin-angle of the two-fermion spectrum near phi_e = {tw.phi_e:.4f}:")
for dphi in (-0.1, -0.01, 0.0, 0.01, 0.1):
    ang, _, _ = angle_at(tw.phi_e + dphi, 0.0, model, N=2)
    print(f"  phi_e {dphi:+.2f}:  angle = {ang:.3e}")

print("\nJordan structure of the free Hamiltonian exactly at the twist:")
basis = enumerate_basis(6, 2)
H0 = assemble_h0_many(basis, ModelSpec(L=6, m=0.7, phi=tw.phi_e)).matrix
rep = jordan_analysis(H0, cluster_tol=1e-4, rank_tol=1e-8, strict=False)
defective = rep.defective_clusters()
print(f"  defective eigenvalue clusters: {len(defective)} (expected 2L-2 = 10)")
print(f"  chain lengths all equal 2: "
      f"{all(max(rep.chain_lengths[i]) == 2 for i in defective)}")
