"""Why phase differences, not phase.

Shifts a harmonic signal by half a millisecond and compares how much the raw
phase moves against how much the time difference (in baseband form) and the
frequency difference move.  The differences barely notice the shift, which is
what makes them learnable targets.
"""

import numpy as np

import phaseline as pl
from phaseline.metrics import magnitude_quantile_mask

SR = 22050


def harmonic(n, seed=11):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / SR
    f0 = 440.0 + 30.0 * t + 6.0 * np.sin(2 * np.pi * 5.0 * t)
    base = 2 * np.pi * np.cumsum(f0) / SR
    x = sum(k**-0.5 * np.cos(k * base + rng.uniform(0, 2 * np.pi)) for k in range(1, 17))
    return x / np.abs(x).max()


cfg = pl.StftConfig.hann(1024, 256, 1024)
x = harmonic(SR)
shift = 11  # ~0.5 ms

spec_a = pl.stft(x[:-shift], cfg, SR)
spec_b = pl.stft(x[shift:], cfg, SR)
mask = magnitude_quantile_mask(spec_a.magnitude, 0.8)

phase_med = np.median(pl.awe(spec_a.phase, spec_b.phase)[mask])

tpd_a, fpd_a = pl.oracle_differences(spec_a)
tpd_b, fpd_b = pl.oracle_differences(spec_b)
bpd_a = pl.tpd_to_bpd(tpd_a, 256, 1024)
bpd_b = pl.tpd_to_bpd(tpd_b, 256, 1024)
bpd_med = np.median(pl.awe(bpd_a, bpd_b)[mask[:, 1:]])
fpd_med = np.median(pl.awe(fpd_a, fpd_b)[mask[1:, :]])

print("median absolute wrapped change on the loudest 20% of bins")
print(f"  raw phase : {phase_med:.3f} rad")
print(f"  BPD       : {bpd_med:.3f} rad")
print(f"  FPD       : {fpd_med:.3f} rad")

# the baseband form removes the deterministic per-bin advance
advance = pl.bin_phase_advance(5, 256, 1024)
print(f"\nper-bin advance per hop (first 5 bins): {np.round(advance, 3)}")
v = np.full(5, 1.0)
print(f"TPD {v} -> BPD {np.round(pl.tpd_to_bpd(v, 256, 1024), 3)}")
print(f"back to TPD: {np.round(pl.bpd_to_tpd(pl.tpd_to_bpd(v, 256, 1024), 256, 1024), 3)}")
