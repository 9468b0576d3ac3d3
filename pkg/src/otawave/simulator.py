"""Monte-Carlo evaluation of the over-the-air sum under jitter, ISI and fading."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace
from typing import Callable, Iterable, Mapping

import numpy as np

from .allocation import ChannelRealization, kkt_batch
from .moments import all_moments
from .waveforms import WaveformSpec, sample

DATA_DISTS = ("uniform_sqrt3", "gaussian_unit", "laplace_unit")
CSI_MODES = ("perfect", "noisy")
ERROR_MODES = ("per_device", "receiver_equivalent")
AXES = ("K", "snr_db", "alpha", "sigma_eps")

BLOCK = 2000  # trials per random stream


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    K: int = 20
    snr_db: float = 10.0
    P: float = 1.0
    sigma_eps: float = 0.1
    mu: int = 6
    data_dist: str = "uniform_sqrt3"
    csi: str = "perfect"
    error_mode: str = "per_device"
    trials: int = 100_000
    seed: int = 0
    nodes: int = 64

    def __post_init__(self):
        if self.K < 1:
            raise ScenarioError("K must be >= 1")
        if self.trials < 1:
            raise ScenarioError("trials must be >= 1")
        if self.mu < 0 or self.mu % 2:
            raise ScenarioError("mu must be even")
        if self.sigma_eps < 0:
            raise ScenarioError("sigma_eps must be >= 0")
        if not self.P > 0:
            raise ScenarioError("P must be positive")
        if not 0 <= self.seed < 2**64:
            raise ScenarioError("seed must be a 64-bit unsigned integer")
        for name, allowed in (("data_dist", DATA_DISTS), ("csi", CSI_MODES), ("error_mode", ERROR_MODES)):
            if getattr(self, name) not in allowed:
                raise ScenarioError(f"{name} must be one of {allowed}")

    @property
    def sigma2(self) -> float:
        """Noise power giving transmit SNR P / sigma^2 = snr_db."""
        return self.P / 10 ** (self.snr_db / 10)


@dataclass(frozen=True)
class MseEstimate:
    mean: float
    std_err: float
    trials: int
    closed_form: float | None = None


def derive_seed(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0])


def _complex_normal(rng, shape, var=1.0) -> np.ndarray:
    s = np.sqrt(var / 2)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channels(K: int, rng) -> ChannelRealization:
    """Rayleigh magnitudes |h|, h ~ CN(0, 1), sorted ascending."""
    if K < 1:
        raise ScenarioError("K must be >= 1")
    return ChannelRealization.from_gains(np.abs(_complex_normal(rng, K)))


def draw_data(dist: str, rng, shape) -> np.ndarray:
    if dist == "uniform_sqrt3":
        return rng.uniform(-np.sqrt(3), np.sqrt(3), shape)
    if dist == "gaussian_unit":
        return rng.standard_normal(shape)
    if dist == "laplace_unit":
        return rng.laplace(0.0, 1 / np.sqrt(2), shape)
    raise ScenarioError(f"unknown data distribution {dist!r}")


def _block(cfg: ScenarioConfig, spec: WaveformSpec, m, n: int, rng):
    K, mu = cfg.K, cfg.mu
    sigma2 = cfg.sigma2
    h = _complex_normal(rng, (n, K))
    if cfg.csi == "noisy":
        est = h + _complex_normal(rng, (n, K), sigma2 / cfg.P)
    else:
        est = h
    mag = np.abs(est)
    order = np.argsort(mag, axis=1, kind="stable")
    known = np.take_along_axis(mag, order, axis=1)
    if cfg.csi == "noisy":
        # phase pre-compensation uses the estimate; only the in-phase part adds coherently
        rot = np.real(h * np.conj(est)) / mag
        gain = np.take_along_axis(rot, order, axis=1)
    else:
        gain = known
    a, b, _, _ = kkt_batch(m.eps_check, m.eps_hat, known, cfg.P, sigma2)

    q = np.arange(-mu // 2, mu // 2 + 1)
    x = draw_data(cfg.data_dist, rng, (n, q.size, K))
    width = K if cfg.error_mode == "per_device" else 1
    eps = cfg.sigma_eps * rng.standard_normal((n, width))
    noise = np.sqrt(sigma2) * rng.standard_normal(n)

    z = sample(spec, q[None, :, None] + eps[:, None, :])
    y = a * (np.einsum("nqk,nqk,nk->n", x, np.broadcast_to(z, x.shape), b * gain) + noise)
    r = x[:, mu // 2, :].sum(axis=1)
    err = (y - r) ** 2

    g = a[:, None] * b * gain
    g2 = np.sum(g * g, axis=1)
    cf = K + g2 * m.eps_tilde[0] - 2 * m.eps_check * g.sum(axis=1) + m.isi_sum * g2 + sigma2 * a * a
    return err, cf


def simulate_mse(cfg: ScenarioConfig, spec: WaveformSpec) -> MseEstimate:
    """Empirical MSE of the received sum; also reports the closed-form MSE
    averaged over the same channel draws."""
    m = all_moments(spec, cfg.sigma_eps, cfg.mu, cfg.nodes)
    errs, cfs = [], []
    done, j = 0, 0
    while done < cfg.trials:
        n = min(BLOCK, cfg.trials - done)
        rng = np.random.default_rng([cfg.seed, j])
        e, c = _block(cfg, spec, m, n, rng)
        errs.append(e)
        cfs.append(c)
        done += n
        j += 1
    err = np.concatenate(errs)
    se = float(err.std(ddof=1) / math.sqrt(err.size)) if err.size > 1 else 0.0
    return MseEstimate(float(np.mean(err)), se, int(err.size), float(np.mean(np.concatenate(cfs))))


def equivalence_check(cfg: ScenarioConfig, spec: WaveformSpec) -> tuple[MseEstimate, MseEstimate]:
    """Per-device jitter versus one shared receiver jitter, independent seeds."""
    if cfg.trials < 10_000:
        raise ScenarioError("equivalence_check needs at least 1e4 trials")
    dev = simulate_mse(replace(cfg, error_mode="per_device", seed=derive_seed(cfg.seed, 0)), spec)
    rx = simulate_mse(replace(cfg, error_mode="receiver_equivalent", seed=derive_seed(cfg.seed, 1)), spec)
    return dev, rx


@dataclass(frozen=True)
class SweepRow:
    axis: float
    waveform: str
    mse: float
    stderr: float
    trials: int


WaveformFactory = Callable[[float], "WaveformSpec | None"]


def sweep(
    cfg_template: ScenarioConfig,
    axis: str,
    values: Iterable[float],
    family: Mapping[str, WaveformFactory],
    alpha: float = 0.5,
) -> list[SweepRow]:
    """Simulate every waveform of ``family`` along one scenario axis.

    ``family`` maps a label to a factory taking the roll-off; a factory may
    return ``None`` where it has no pulse (e.g. roll-offs without reference coefficients).
    All waveforms at one point share the point's seed.
    """
    if axis not in AXES:
        raise ScenarioError(f"axis must be one of {AXES}")
    values = list(values)
    if not values:
        raise ScenarioError("sweep needs at least one value")
    rows = []
    for i, v in enumerate(values):
        cfg = replace(cfg_template, seed=derive_seed(cfg_template.seed, i))
        al = alpha
        if axis == "K":
            cfg = replace(cfg, K=int(v))
        elif axis == "snr_db":
            cfg = replace(cfg, snr_db=float(v))
        elif axis == "sigma_eps":
            cfg = replace(cfg, sigma_eps=float(v))
        else:
            al = float(v)
        for name, factory in family.items():
            spec = factory(al)
            if spec is None:
                continue
            est = simulate_mse(cfg, spec)
            rows.append(SweepRow(float(v), name, est.mean, est.std_err, est.trials))
    return rows


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "waveform", "mse", "stderr", "trials"])
        for r in rows:
            w.writerow([f"{r.axis:.12g}", r.waveform, f"{r.mse:.12g}", f"{r.stderr:.12g}", r.trials])


def mse_gain(reference: float, candidate: float) -> float:
    """Relative MSE reduction of ``candidate`` over ``reference``, in percent."""
    return 100.0 * (reference - candidate) / reference


SCENARIO_FIELDS = {f.name: f.type for f in fields(ScenarioConfig)}
