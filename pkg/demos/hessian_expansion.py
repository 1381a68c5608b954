"""Compare the jet expansion of the almost complex Hessian with the direct
evaluation and print the log-log slope of the remainder."""
import numpy as np

from acx import acstruct as acs
from acx import fields as fl
from acx import hessian as hs

jet = acs.random_jet(2, np.random.default_rng(4))
J = acs.jet_to_J(jet)
terms = hs.expansion_terms(jet)
u = fl.mixed_poly(2)
xi = np.array([1.0, 0.4 - 0.3j])
d = np.array([0.8 + 0.1j, -0.2 + 0.55j])
d /= np.linalg.norm(d)

radii = np.logspace(-3, -1, 7)
rows = []
for r in radii:
    direct = hs.hessian_direct(J, u, xi, acs.to_real(r * d))
    approx = hs.hessian_expansion(jet, u, xi, r * d, terms)
    rows.append((r, direct, approx))
    print(f"|z| = {r:.4f}   direct {direct:+.10f}   expansion {approx:+.10f}   diff {abs(direct - approx):.2e}")
print(f"slope {hs.fit_slope(radii, [abs(a - b) for _, a, b in rows]):.3f} (3 expected)")
