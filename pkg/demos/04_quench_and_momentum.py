"""
Quench dynamics and momentum populations
========================================

Switching the pump on abruptly sets the condensate oscillating between
p = 0 and p = ±2ħk at 4 ω_rec.  The overlap with the cavity mode follows the
oscillation and so does the transmission.  A strong quench on resonance with
the unperturbed lattice gives strongly pulsed transmission.
"""

import numpy as np

from beccavity.dynamics import (
    DriveProtocol,
    IntegratorConfig,
    Schedule,
    evolve,
    ground_state_imaginary_time,
    quench_response,
)
from beccavity.measurement import dominant_frequency
from beccavity.physics import TWO_PI, derive_params, paper_params

p = paper_params()
d = derive_params(p)
bare = 4 * d.omega_rec / TWO_PI

weak = quench_response(0.01, p)
peak = dominant_frequency(weak.overlap, weak.times[1] - weak.times[0])
print(f"weak quench: overlap oscillates at {peak.frequency / 1e3:.2f} kHz, 4 omega_rec = {bare / 1e3:.2f} kHz")

side = weak.momentum["plus2"] + weak.momentum["minus2"]
print(f"  p = 0 vs ±2ħk correlation {np.corrcoef(weak.momentum['p0'], side)[0, 1]:.4f}")
print(f"  largest odd-momentum population {weak.momentum['odd'].max():.1e}")

cfg = IntegratorConfig(periods=1, points=32, sample_stride=5)
proto = DriveProtocol(Schedule.constant(2 * p.kappa), Schedule.constant(d.dispersive_shift), 1e-3)
psi = ground_state_imaginary_time(0.0, p, cfg, trap=False, interactions=False)
strong = evolve(psi, 0j, proto, p, cfg)
n = strong.photon_number[len(strong) // 4 :]
pulse = dominant_frequency(n, strong.times[1] - strong.times[0])
print(f"strong quench: photon number between {n.min():.3f} and {n.max():.3f}, pulsing at {pulse.frequency / 1e3:.1f} kHz")
