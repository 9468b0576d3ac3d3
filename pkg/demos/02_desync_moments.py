"""How jitter in the sampling instant turns into amplitude loss and ISI.

The power policy needs three numbers per pulse: the mean amplitude, the mean
squared amplitude at the own symbol and the summed squared leakage from the
neighbours.  Quadrature gives all of them; the power series for the raised
cosine are shown next to it for comparison.

Run:  python demos/02_desync_moments.py
"""

from otawave.moments import (
    all_moments,
    isi_sq_series_alpha0,
    mean_amp_series,
    moment_quadrature,
    rc_moment_exact_series,
)
from otawave.waveforms import btrc, raised_cosine, table1_waveform

print("sigma   pulse    eps_check  eps_tilde0  eps_hat")
for sigma in (0.05, 0.1, 0.2):
    for name, spec in (("RC", raised_cosine(0.5)), ("BTRC", btrc(0.5)), ("Fitted", table1_waveform(0.5))):
        m = all_moments(spec, sigma, mu=6)
        print(f"{sigma:<7} {name:<8} {m.eps_check:.6f}   {m.eps_tilde[0]:.6f}    {m.eps_hat:.6f}")

print("\nfirst moment of RC(0.5): truncated series vs exact series vs quadrature")
for sigma in (0.05, 0.1, 0.2):
    quad = moment_quadrature(raised_cosine(0.5), 0, 1, sigma)
    print(f"  sigma={sigma}: {mean_amp_series(0.5, sigma):.8f}  {rc_moment_exact_series(0.5, sigma):.8f}  {quad:.8f}")

print("\nneighbour leakage of the sinc pulse")
for sigma in (0.05, 0.1, 0.2):
    print(f"  sigma={sigma}: series {isi_sq_series_alpha0(sigma):.3e}  quadrature {moment_quadrature(raised_cosine(0), 1, 2, sigma):.3e}")
