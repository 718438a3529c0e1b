"""
Hysteresis under detuning scans
===============================

Scanning the pump detuning up and down at 2π×1 MHz/ms with atom loss shows
the three regimes: a single peak, a narrow hysteresis loop and a wide one.
The homogeneous interaction-free model below runs in about a minute; pass
"full" on the command line for the trapped, interacting cloud (a few
minutes).
"""

import sys

from beccavity.dynamics import IntegratorConfig, scan_protocol, sweep_simulation
from beccavity.measurement import hysteresis_window, jump_detuning
from beccavity.physics import TWO_PI, derive_params, paper_params
from beccavity.steady_state import turning_points

full = "full" in sys.argv[1:]
p = paper_params(loss_rate=92e3)
d = derive_params(p)
k = p.kappa
speed = TWO_PI * 1e6 / 1e-3
cfg = IntegratorConfig(
    periods=64 if full else 1, points=512 if full else 32, dt=5e-3 / d.omega_rec, sample_stride=2
)

for eta, lo, hi in ((0.22, -6, 4), (0.78, -10, 4), (1.51, -25, 4)):
    traces = {}
    for direction, (start, stop) in (("up", (lo, hi)), ("down", (hi, lo))):
        proto = scan_protocol(p, eta * k, start * k, stop * k, speed, atom_loss=True, interactions=full, trap=full)
        traces[direction] = sweep_simulation(proto, p, cfg)
    up, down = traces["up"], traces["down"]
    xu, xd = up.relative_detuning / k, down.relative_detuning / k
    width = hysteresis_window(xu, up.photon_number, xd, down.photon_number)
    tp = turning_points(eta * k, d.shift_per_photon, k)
    tp_text = "none" if tp is None else f"{tp[0] / k:.2f} .. {tp[1] / k:.2f}"
    print(
        f"eta = {eta} kappa: up jump {jump_detuning(xu, up.photon_number, 'up'):.2f}, "
        f"down jump {jump_detuning(xd, down.photon_number, 'down'):.2f}, window {width:.2f} kappa, "
        f"steady-state turning points {tp_text}"
    )
