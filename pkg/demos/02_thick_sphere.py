"""
Thick spherical shell with shell subdomains
===========================================

The reduced energy of a hollow sphere is a quadratic form in the inner
displacement and one plastic amplitude per shell.  Its coefficients can
be printed directly, and the elastic inner stress converges to the Lamé
solution as shells are added.
"""

from pathlib import Path

import numpy as np

from effplast import sphere as sph
from effplast.oracles.sphere import lame_coefficients, lame_radial_stress
from effplast.scenario import compare, load_config, run_scenario

CONFIGS = Path(__file__).resolve().parent / "configs"

E, NU = 1000.0, 0.25
K, MU = E / (3 * (1 - 2 * NU)), E / (2 * (1 + NU))
TAU_Y = 0.5 * np.sqrt(2.0 / 3.0)

# coefficients per steradian with the outer surface free; keys are exponents of (u_in, p_1, p_2)
form = sph.assemble(sph.SphereModel.equidistant(5.0, 10.0, 2, K, MU, TAU_Y, solid_angle=1.0), free_outer=True)
for alpha, c in sorted(form.coefficients().items()):
    print(alpha, f"{c:.6g}")

# elastic inner stress for a prescribed inner displacement against Lamé
ref = lame_radial_stress(5.0, lame_coefficients(5.0, 10.0, K, MU, u_in=0.01), K, MU)
print("\nshells  sigma_rr(r_in)  rel. error")
for n in (2, 5, 10, 20):
    f = sph.assemble(sph.SphereModel.equidistant(5.0, 10.0, n, K, MU, TAU_Y), free_outer=True)
    s = sph.inner_traction(f, sph.SphereState(np.zeros(n), u_in=0.01))
    print(f"{n:6d}  {s:14.6f}  {abs(s / ref - 1):10.2%}")

# cyclic outer displacement with the inner surface held, against the 1D finite element oracle
rom = run_scenario(load_config(CONFIGS / "sphere_cyclic.json"))
fem = run_scenario(load_config(CONFIGS / "sphere_oracle.json"))
d = compare(rom, fem, ["sigma_rr_in"])[0]
print(f"\ninner radial stress history: relative L2 {d.relative_l2:.2e}")
