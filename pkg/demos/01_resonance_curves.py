"""
Bistable resonance curves
=========================

The condensate acts as a Kerr medium: each photon shifts the cavity
resonance, so the steady-state photon number solves a cubic.  Below the
critical pump the curve is a distorted Lorentzian; above it three branches
coexist over a window of detunings.
"""

import numpy as np

from beccavity.physics import derive_params, paper_params, validity_report
from beccavity.steady_state import bistable_window, critical_point, resonance_curve

p = paper_params()
d = derive_params(p)
print(validity_report(p))

k = d.kappa
cp = critical_point(d)
print(f"critical pump {cp.eta_cr / k:.3f} kappa, critical photon number {cp.n_cr:.4f}")

# detunings relative to the dispersively shifted resonance, in units of kappa
rel = np.linspace(-8, 4, 241)
for ratio in (0.7, 1.0, 2.0):
    eta = ratio * cp.eta_cr
    curve = resonance_curve(d.dispersive_shift + rel * k, eta, d)
    branches = np.array([len(sols) for _, sols in curve.points])
    peak = max(s.photon_number for _, sols in curve.points for s in sols)
    window = bistable_window(eta, d)
    text = "none" if window is None else f"{(window[0] - d.dispersive_shift) / k:.3f} .. {(window[1] - d.dispersive_shift) / k:.3f} kappa"
    print(f"eta = {ratio} eta_cr: peak n = {peak:.4f}, detunings with three roots: {np.sum(branches == 3)}, window {text}")

# the middle branch is always the unstable one
_, sols = next((dc, s) for dc, s in curve.points if len(s) == 3)
print("stability across a three-root detuning:", [s.stability.value for s in sols])
