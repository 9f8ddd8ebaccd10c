"""Misalignment from drift and the matching window, and the HOM calibration curve.

Run with ``python notebooks/03_phase_drift.py``.
"""

import math

import numpy as np

from asyncmdi.drift import FREE, LOCKED_ONLY, DriftConfig, effective_misalignment, hom_curve, intrinsic_error

locked = DriftConfig(technique=LOCKED_ONLY, fiber_drift_rate=8e3)
angle = effective_misalignment(LOCKED_ONLY, 50e-6, locked, 0.0)
print(f"locked lasers, 50 us window: {angle:.3f} rad, error {intrinsic_error(angle):.4%}")

for dv, tc in ((3e3, 20e-6), (10e3, 10e-6), (100e3, 1e-6)):
    free = DriftConfig(technique=FREE, delta_v=dv, fiber_drift_rate=8e3)
    laser = math.pi * dv * tc
    total = effective_misalignment(FREE, tc, free, 0.0)
    print(f"dv={dv / 1e3:5.0f} kHz, T_c={tc * 1e6:4.0f} us: laser {laser / math.pi:.3f} pi "
          f"({intrinsic_error(laser):.3%}), with fiber drift {intrinsic_error(total):.3%}")

# HOM error rate rises from 25% as the frequency difference grows.
dvs = np.linspace(0, 250e3, 6)
vis, err = hom_curve(dvs, 1e-6)
for dv, e in zip(dvs, err):
    print(f"HOM dv={dv / 1e3:5.0f} kHz: E={e:.2%}")
