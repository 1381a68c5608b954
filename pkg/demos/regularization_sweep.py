"""Regularise |z|^2 through the geodesic exponential of a cubic jet and show
the O(eps^2) bias and the monotone decrease as eps shrinks."""
import numpy as np

from acx import acstruct as acs
from acx import fields as fl
from acx import forms
from acx import psh_reg as pr

J = acs.jet_to_J(acs.single_entry_jet(2, 0.1), exact=True)
g = forms.HermitianMetric.standard(2)
K = pr.RegularizationKernel(2)
x = np.array([0.05, 0.0, 0.02, 0.0])
u = fl.abs2(2)

print(f"c_chi = {K.c_chi:.6f}")
prev = None
for eps in (0.2, 0.1, 0.05, 0.025):
    val = pr.regularize(J, g, u, eps, x, quad_res=(8, 16), steps=4)
    bias = val - u(x)
    ratio = "" if prev is None else f"   ratio {prev / bias:.3f}"
    print(f"eps {eps:<6} u_eps {val:.10f}   bias {bias:.3e}   flat prediction {K.c_chi * eps**2:.3e}{ratio}")
    prev = bias
