"""Solve a J-holomorphic disk for a cubic jet, sweep it into a cylinder and
measure how far the derived vector field is from being J-flat."""
import numpy as np

from acx import acstruct as acs
from acx import jdisks as jd

J = acs.jet_to_J(acs.single_entry_jet(2, 0.1), exact=True)
v = np.array([1.0, 0.0, 1.0, 0.0]) / np.sqrt(2)

disk = jd.solve_disk(J, np.zeros(4), v, 0.2, N=128)
print(f"disk: residual {disk.residual:.2e} after {disk.iterations} Picard steps")
print("iterate decay ratios:", np.round(disk.decay_ratios(), 4))

base = jd.solve_disk(J, np.zeros(4), v, 0.1, N=64)
frame = np.array([[1.0, 0.0, -1.0, 0.0]]) / np.sqrt(2)
family = jd.solve_cylinder(J, base, frame, 0.05, 5)
F = jd.j_flat_field(J, family)
print(f"cylinder of {len(family.slices)} slices, worst slice residual {max(family.residuals):.1e}")
print(f"flatness defect: {F.defect:.2e} (pullback), {F.defect_bracket:.2e} (bracket)")
print(f"constant field for comparison: {jd.constant_field_defect(J, v, [np.zeros(4)]):.3f}")
