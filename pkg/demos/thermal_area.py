"""Thermal mutual information of a Heisenberg ring against the area bound.

For each inverse temperature the half-ring split has two cut bonds. The
mutual information grows with beta but stays under the bound built from the
crossing terms, and levels off near its ground-state value.
"""

from arealaw.lattice import model_preset
from arealaw.thermal import BoundarySplit, build_gibbs, quantum_thermal_area_check

h = model_preset("heisenberg-ring-8")
split = BoundarySplit.from_region(h, (0, 1, 2, 3))
print(f"region A = {split.region_a}, crossing terms = {len(split.boundary_a)}")
print(f"{'beta':>6} {'I(A:B)':>10} {'bound':>10}")
for beta in (0.0, 0.25, 0.5, 1.0, 2.0, 4.0):
    rep = quantum_thermal_area_check(build_gibbs(h, beta), split)
    print(f"{beta:>6} {rep.values['I_AB']:>10.4f} {rep.values['rhs'] + 0.0:>10.4f}")
