"""
Critical photon number three ways
=================================

The closed form assumes the two-mode overlap of an interaction-free
condensate.  A brute-force search over pump strength and detuning checks it,
and ground states of the full trapped, interacting condensate give the
overlap curve that raises the threshold.
"""

import numpy as np

from beccavity.dynamics import IntegratorConfig, overlap_curve
from beccavity.physics import derive_params, paper_params
from beccavity.steady_state import OverlapCurve, critical_point, critical_point_from_overlap, find_critical_numeric

p = paper_params()
d = derive_params(p)

analytic = critical_point(d)
numeric = find_critical_numeric(d)
print(f"closed form   n_cr = {analytic.n_cr:.5f}")
print(f"root search   n_cr = {numeric.n_cr:.5f}")

# fewer lattice periods than the full cloud keeps this quick; use periods=64, points=512 for the full result
cfg = IntegratorConfig(periods=16, points=256)
photons, overlaps = overlap_curve(np.linspace(0.0, 0.6, 13), p, cfg, trap=True, interactions=True)
interacting = critical_point_from_overlap(OverlapCurve(photons, overlaps), d)
print(f"interacting   n_cr = {interacting.n_cr:.5f}  (16 periods)")
for n, o in zip(photons[::3], overlaps[::3]):
    print(f"  n = {n:.2f}  overlap = {o:.5f}")
