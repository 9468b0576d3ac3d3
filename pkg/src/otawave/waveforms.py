"""Pulse shapes used by the OTA links: raised cosine, better-than-raised-cosine,
the fitted cosine series and arbitrary sampled pulses.

Time is normalized to the symbol period (T = 1) and the closed-form pulses are
unit-peak, i.e. ``sample(spec, 0) == 1`` for RC and BTRC.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

RC = "RC"
BTRC = "BTRC"
FITTED = "FittedCosine"
SAMPLED = "Sampled"
KINDS = (RC, BTRC, FITTED, SAMPLED)

# |denominator| below which the RC expression is replaced by its limit
SINGULAR_TOL = 1e-8

# Reference curve-fit coefficients of learned pulses, keyed by roll-off.
TABLE1_COEFFS = {
    0.2: ((0.0939, 0.2168, 0.1841, 0.2092, 0.1647, 0.0950, 0.0121), 0.6481),
    0.5: ((0.1313, 0.2638, 0.2371, 0.1676, 0.1406, 0.0764, 0.0053), 0.8378),
    0.8: ((0.1360, 0.2507, 0.2046, 0.1712, 0.1315, 0.0994, 0.0405), 0.8739),
}
TABLE1_RMSE = {0.2: 3.041e-3, 0.5: 3.094e-3, 0.8: 3.132e-3}


class WaveformError(ValueError):
    pass


@dataclass(frozen=True)
class WaveformSpec:
    """Immutable description of a pulse.

    ``half_width`` bounds the support of the fitted cosine series (the series
    itself is periodic); it defaults to the 7-symbol design window.
    """

    kind: str
    alpha: float | None = None
    coeffs: tuple[float, ...] | None = None
    p: float | None = None
    samples: np.ndarray | None = field(default=None, compare=False)
    dt: float | None = None
    half_width: float = 3.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise WaveformError(f"unknown waveform kind {self.kind!r}")
        if self.kind in (RC, BTRC):
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise WaveformError(f"alpha must lie in [0, 1], got {self.alpha}")
        elif self.kind == FITTED:
            if self.coeffs is None or len(self.coeffs) != 7:
                raise WaveformError("fitted cosine needs exactly 7 coefficients")
            if self.p is None or not self.p > 0:
                raise WaveformError("fitted cosine needs p > 0")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        else:
            if self.samples is None or self.dt is None:
                raise WaveformError("sampled waveform needs samples and dt")
            s = np.array(self.samples, dtype=float)
            if s.ndim != 1 or s.size % 2 == 0:
                raise WaveformError("sampled waveform needs an odd number of samples")
            if not self.dt > 0:
                raise WaveformError("dt must be positive")
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)

    @property
    def n_samples(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        """Sample instants of a Sampled waveform, centred on t = 0."""
        c = (self.n_samples - 1) // 2
        return (np.arange(self.n_samples) - c) * self.dt

    @property
    def label(self) -> str:
        if self.kind in (RC, BTRC):
            return f"{self.kind}(alpha={self.alpha:g})"
        if self.kind == FITTED:
            return f"Fitted(p={self.p:g})"
        return f"Sampled(n={self.n_samples})"


def raised_cosine(alpha: float) -> WaveformSpec:
    return WaveformSpec(RC, alpha=float(alpha))


def btrc(alpha: float) -> WaveformSpec:
    return WaveformSpec(BTRC, alpha=float(alpha))


def fitted_cosine(coeffs: Sequence[float], p: float, half_width: float = 3.5) -> WaveformSpec:
    return WaveformSpec(FITTED, coeffs=tuple(coeffs), p=float(p), half_width=half_width)


def table1_waveform(alpha: float) -> WaveformSpec:
    """Fitted cosine pulse with the reference coefficients for ``alpha``."""
    key = round(float(alpha), 1)
    if key not in TABLE1_COEFFS:
        raise WaveformError(f"no reference coefficients for alpha={alpha}")
    coeffs, p = TABLE1_COEFFS[key]
    return fitted_cosine(coeffs, p)


def sampled(samples, dt: float) -> WaveformSpec:
    return WaveformSpec(SAMPLED, samples=np.asarray(samples, dtype=float), dt=float(dt))


def _rc(t: np.ndarray, alpha: float) -> np.ndarray:
    den = 1.0 - (2.0 * alpha * t) ** 2
    singular = np.abs(den) < SINGULAR_TOL
    safe = np.where(singular, 1.0, den)
    out = np.sinc(t) * np.cos(np.pi * alpha * t) / safe
    if alpha > 0 and singular.any():
        out = np.where(singular, 0.25 * np.pi * np.sinc(0.5 / alpha), out)
    return out


def _btrc(t: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 0.0:
        # beta -> infinity collapses the bracket to 1
        return np.sinc(t)
    beta = 2.0 * np.log(2.0) / alpha
    pat = np.pi * alpha * t
    num = 4.0 * beta * np.pi * t * np.sin(pat) + 2.0 * beta**2 * np.cos(pat) - beta**2
    den = (2.0 * np.pi * t) ** 2 + beta**2
    return np.sinc(t) * num / den


def _fitted(t: np.ndarray, coeffs, p: float, half_width: float) -> np.ndarray:
    out = np.zeros_like(t)
    for j, a in enumerate(coeffs):
        out += a * np.cos(j * p * t)
    return np.where(np.abs(t) <= half_width + 1e-12, out, 0.0)


def _interp(t: np.ndarray, spec: WaveformSpec) -> np.ndarray:
    return np.interp(t, spec.times, spec.samples, left=0.0, right=0.0)


def sample(spec: WaveformSpec, t):
    """Evaluate the pulse at normalized time(s) ``t``.

    Scalars in, scalar out; arrays keep their shape.
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise WaveformError("sample times must be finite")
    if spec.kind == RC:
        out = _rc(arr, spec.alpha)
    elif spec.kind == BTRC:
        out = _btrc(arr, spec.alpha)
    elif spec.kind == FITTED:
        out = _fitted(arr, spec.coeffs, spec.p, spec.half_width)
    else:
        out = _interp(arr, spec)
    return float(out) if np.ndim(t) == 0 else out


def energy(spec: WaveformSpec, window: float, points_per_symbol: int = 1000) -> float:
    """Integral of z(t)^2 over [-window, window] by composite Simpson."""
    if not window > 0:
        raise WaveformError("window must be positive")
    n = int(np.ceil(2 * window * points_per_symbol))
    n += n % 2  # even number of intervals
    t = np.linspace(-window, window, n + 1)
    return float(simpson(sample(spec, t) ** 2, x=t))


def discretize(spec: WaveformSpec, samples_per_symbol: int, mu: int) -> WaveformSpec:
    """Sample ``spec`` on the (mu+1)-symbol design window."""
    if samples_per_symbol < 2:
        raise WaveformError("samples_per_symbol must be >= 2")
    if mu < 0 or mu % 2:
        raise WaveformError("mu must be even")
    span = samples_per_symbol * (mu + 1)
    if span % 2:
        raise WaveformError("samples_per_symbol * (mu + 1) must be even for a centred grid")
    t = np.arange(-span // 2, span // 2 + 1) / samples_per_symbol
    return sampled(sample(spec, t), 1.0 / samples_per_symbol)


@dataclass(frozen=True)
class SpectrumReport:
    magnitudes: np.ndarray
    df: float
    occupied_bins: int
    out_of_band_max: float
    mask_edge: int | None = None

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.magnitudes.size) * self.df


def spectrum(
    spec: WaveformSpec,
    zero_pad_count: int,
    threshold: float = 0.2,
    mask_edge: int | None = None,
) -> SpectrumReport:
    """One-sided DFT magnitudes of the zero-padded sample sequence.

    Bins strictly above ``mask_edge`` count as out of band.
    """
    if spec.kind != SAMPLED:
        raise WaveformError("spectrum needs a Sampled waveform; discretize first")
    if zero_pad_count < 0:
        raise WaveformError("zero_pad_count must be >= 0")
    n = spec.n_samples + int(zero_pad_count)
    mags = np.abs(np.fft.rfft(spec.samples, n=n))
    occupied = int(np.count_nonzero(mags > threshold))
    oob = 0.0
    if mask_edge is not None and mask_edge + 1 < mags.size:
        oob = float(mags[mask_edge + 1:].max())
    return SpectrumReport(mags, 1.0 / (n * spec.dt), occupied, oob, mask_edge)


def write_waveform_csv(spec: WaveformSpec, path) -> None:
    if spec.kind != SAMPLED:
        raise WaveformError("only Sampled waveforms serialize to CSV")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "z"])
        for t, z in zip(spec.times, spec.samples):
            w.writerow([f"{t:.12g}", f"{z:.12g}"])


def read_waveform_csv(path) -> WaveformSpec:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "z"]:
        raise WaveformError(f"{path}: expected header 't,z'")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    t, z = data[:, 0], data[:, 1]
    dt = np.diff(t)
    if dt.size == 0 or not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
        raise WaveformError(f"{path}: time grid is not uniform")
    return sampled(z, float(np.mean(dt)))


def write_spectrum_csv(report: SpectrumReport, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "frequency", "magnitude"])
        for i, (f, m) in enumerate(zip(report.frequencies, report.magnitudes)):
            w.writerow([i, f"{f:.12g}", f"{m:.12g}"])
