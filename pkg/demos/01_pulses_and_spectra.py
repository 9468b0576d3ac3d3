"""Nyquist pulses: sample values, energy and zero-padded spectra.

Run:  python demos/01_pulses_and_spectra.py
"""

import numpy as np

from otawave.designer import mask_start_bin, zero_pad_count
from otawave.waveforms import (
    btrc,
    discretize,
    energy,
    raised_cosine,
    sample,
    spectrum,
    table1_waveform,
)

alpha = 0.5
pulses = {"RC": raised_cosine(alpha), "BTRC": btrc(alpha), "Fitted": table1_waveform(alpha)}

t = np.array([0.0, 0.25, 0.5, 1.0, 1.5, 2.0])
print(f"pulse values at alpha={alpha}")
print("t      " + "  ".join(f"{x:>8.2f}" for x in t))
for name, spec in pulses.items():
    print(f"{name:<7}" + "  ".join(f"{v:>8.4f}" for v in sample(spec, t)))

# RC and BTRC vanish at every nonzero integer; the fitted series only approximately
q = np.arange(1, 4, dtype=float)
for name, spec in pulses.items():
    print(f"{name}: max |z(q)| over q=1..3 = {np.max(np.abs(sample(spec, q))):.2e}")

print()
for name, spec in pulses.items():
    print(f"{name}: energy over +-3.5 T = {energy(spec, 3.5):.5f}")

# Zero padding sets the bin width to delta_alpha / 2 so each roll-off step is one bin.
sps, mu = 50, 6
pad = zero_pad_count(0.1, mu, sps)
n_t = mask_start_bin(alpha, 0.1)
print(f"\n{sps} samples/T, {pad} zeros appended, mask starts after bin {n_t}")
for name, spec in pulses.items():
    rep = spectrum(discretize(spec, sps, mu), pad, mask_edge=n_t)
    print(f"{name}: df={rep.df:.4f}/T  |Z| at DC={rep.magnitudes[0]:.2f}  max beyond mask={rep.out_of_band_max:.3f}")
