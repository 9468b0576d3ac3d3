"""Monte-Carlo MSE of the aggregated sum for the three pulse families.

Also shows that one shared receiver jitter gives the same MSE as independent
per-device jitter, and that the data law does not matter at unit variance.

Run:  python demos/04_monte_carlo.py
"""

from dataclasses import replace

from otawave.simulator import ScenarioConfig, equivalence_check, mse_gain, simulate_mse
from otawave.waveforms import btrc, raised_cosine, table1_waveform

cfg = ScenarioConfig(K=20, snr_db=10, sigma_eps=0.1, mu=6, trials=20_000, seed=1)
res = {}
for name, spec in (("RC", raised_cosine(0.5)), ("BTRC", btrc(0.5)), ("Fitted", table1_waveform(0.5))):
    res[name] = simulate_mse(cfg, spec)
    e = res[name]
    print(f"{name:<7} MSE {e.mean:.4f} +/- {e.std_err:.4f}   closed form {e.closed_form:.4f}")
print(f"fitted vs RC: {mse_gain(res['RC'].mean, res['Fitted'].mean):.2f}%  "
      f"vs BTRC: {mse_gain(res['BTRC'].mean, res['Fitted'].mean):.2f}%")

no_isi = simulate_mse(replace(cfg, mu=0), raised_cosine(0.5))
print(f"\nRC without ISI: {no_isi.mean:.4f}  (ISI adds {100 * (res['RC'].mean / no_isi.mean - 1):.1f}%)")

dev, rx = equivalence_check(cfg, raised_cosine(0.5))
print(f"per-device jitter {dev.mean:.4f} +/- {dev.std_err:.4f}, shared jitter {rx.mean:.4f} +/- {rx.std_err:.4f}")

for law in ("uniform_sqrt3", "gaussian_unit", "laplace_unit"):
    e = simulate_mse(replace(cfg, data_dist=law), raised_cosine(0.5))
    print(f"{law:<14} {e.mean:.4f} +/- {e.std_err:.4f}")

noisy = simulate_mse(replace(cfg, csi="noisy"), table1_waveform(0.5))
print(f"\nfitted pulse with estimated channels: {noisy.mean:.4f} (perfect CSI {res['Fitted'].mean:.4f})")
