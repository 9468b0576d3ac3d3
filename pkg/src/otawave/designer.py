"""Learned pulse design.

A small MLP maps one OTA realization ``u = [a, b, h, x0]`` to a whole sampled
pulse.  Training minimizes the sync-error-averaged MSE of the received sum plus
quadratic penalties on out-of-band spectrum, energy and asymmetry.  After
training, the outputs over a test set are averaged into one pulse, which can be
condensed into a seven-term cosine series with :func:`fit_cosine`.

Grid conventions: the pulse spans ``mu + 1`` symbols with ``N_s`` samples,
centre index ``c = (N_s - 1) / 2``, and every DFT is taken after zero-padding to
``N = N_s + N_s^ZP`` points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .allocation import kkt_batch
from .mlp import Adam, MLPParams, backward, forward
from .waveforms import WaveformSpec, btrc, discretize, fitted_cosine, sampled


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class DesignConfig:
    """Designer hyperparameters.  Defaults are the desk-scale CI setting;
    :meth:`full_scale` returns the full-scale variant."""

    K: int = 20
    samples_per_symbol: int = 50
    mu: int = 6
    delta_alpha: float = 0.1
    alpha: float = 0.5
    gamma_thr: float = 0.2
    M_f: float = 22.4
    M_e: float = 9000.0
    M_s: float = 4300.0
    E_target: float | None = None
    hidden: tuple[int, ...] = (256, 256, 256)
    batch: int = 100
    epochs: int = 10
    n_train: int = 5000
    n_val: int = 500
    n_test: int = 5000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    sigma_eps: float = 0.1
    snr_db: float = 10.0
    P: float = 1.0
    spectral_hinge: bool = False
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.hidden, list):
            object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.K < 1:
            raise DesignError("K must be >= 1")
        if self.mu < 0 or self.mu % 2:
            raise DesignError("mu must be even")
        if self.samples_per_symbol < 2 or self.samples_per_symbol % 2:
            raise DesignError("samples_per_symbol must be an even integer >= 2")
        if not 0 < self.delta_alpha <= 1:
            raise DesignError("delta_alpha must lie in (0, 1]")
        if not 0 <= self.alpha <= 1:
            raise DesignError("alpha must lie in [0, 1]")
        if not self.gamma_thr > 0:
            raise DesignError("gamma_thr must be positive")
        if not (self.M_f > 0 and self.M_e > 0 and self.M_s > 0):
            raise DesignError("penalty weights must be positive")
        if self.E_target is not None and not self.E_target > 0:
            raise DesignError("E_target must be positive")
        if not self.sigma_eps > 0:
            raise DesignError("sigma_eps must be positive")
        if min(self.batch, self.epochs, self.n_train, self.n_test) < 1 or self.n_val < 0:
            raise DesignError("batch, epochs and dataset sizes must be positive")
        if not self.hidden or min(self.hidden) < 1:
            raise DesignError("hidden layer widths must be positive")
        mask_start_bin(self.alpha, self.delta_alpha)

    @classmethod
    def full_scale(cls, **overrides) -> DesignConfig:
        base = dict(samples_per_symbol=500, n_train=50_000, n_val=5_000, n_test=50_000)
        base.update(overrides)
        return cls(**base)

    @property
    def N_s(self) -> int:
        return self.samples_per_symbol * (self.mu + 1) + 1

    @property
    def n_fft(self) -> int:
        return self.N_s + zero_pad_count(self.delta_alpha, self.mu, self.samples_per_symbol)

    @property
    def sigma2(self) -> float:
        return self.P / 10 ** (self.snr_db / 10)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (3 * self.K + 1,) + self.hidden + (self.N_s,)


DESIGN_FIELDS = {f.name: f.type for f in fields(DesignConfig)}


@dataclass(frozen=True)
class LossBreakdown:
    l_mse: float
    l_f: float
    l_e: float
    l_s: float
    total: float


def sync_error_pmf(sigma_eps: float, N_s: int, mu: int) -> np.ndarray:
    """Gaussian sync-error mass on the sample offsets |m| <= (N_s-1)/(2(mu+1))."""
    if not sigma_eps > 0:
        raise DesignError("sigma_eps must be positive")
    if (N_s - 1) % (2 * (mu + 1)):
        raise DesignError("N_s - 1 must be a multiple of 2 (mu + 1)")
    half = (N_s - 1) // (2 * (mu + 1))
    dt = (mu + 1) / (N_s - 1)
    m = np.arange(-half, half + 1)
    w = np.exp(-0.5 * (m * dt / sigma_eps) ** 2)
    return w / math.fsum(w)


def zero_pad_count(delta_alpha: float, mu: int, samples_per_symbol: int) -> int:
    """Zero samples appended so the DFT bin width equals delta_alpha / (2T)."""
    if not 0 < delta_alpha <= 1:
        raise DesignError("delta_alpha must lie in (0, 1]")
    return max(0, int(round((2 / delta_alpha - mu - 1) * samples_per_symbol)))


def mask_start_bin(alpha: float, delta_alpha: float) -> int:
    """Last in-band DFT bin; the spectral penalty applies strictly above it."""
    steps = alpha / delta_alpha
    if abs(steps - round(steps)) > 1e-9:
        raise DesignError(f"alpha={alpha} is not a multiple of delta_alpha={delta_alpha}")
    return int(round(1 / delta_alpha)) + int(round(steps)) + 1


def energy_dft(z: np.ndarray, n_fft: int) -> np.ndarray:
    """Mean DFT magnitude of each row of ``z`` zero-padded to ``n_fft``."""
    return np.abs(np.fft.fft(z, n=n_fft, axis=-1)).mean(axis=-1)


def default_energy_target(cfg: DesignConfig) -> float:
    ref = discretize(btrc(cfg.alpha), cfg.samples_per_symbol, cfg.mu)
    return float(energy_dft(ref.samples, cfg.n_fft))


def energy_target(cfg: DesignConfig) -> float:
    return default_energy_target(cfg) if cfg.E_target is None else float(cfg.E_target)


@dataclass(frozen=True)
class DesignBatch:
    """Network inputs ``u`` (B, 3K+1), targets ``r`` (B,), all data symbols
    ``x`` (B, mu+1, K) with column ``mu/2`` equal to x0, and receiver noise (B,)."""

    u: np.ndarray
    r: np.ndarray
    x: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        if self.u.shape[0] == 0:
            raise DesignError("batch must be non-empty")

    @property
    def K(self) -> int:
        return self.x.shape[2]

    @property
    def a(self) -> np.ndarray:
        return self.u[:, 0]

    @property
    def b(self) -> np.ndarray:
        return self.u[:, 1:1 + self.K]

    @property
    def h(self) -> np.ndarray:
        return self.u[:, 1 + self.K:1 + 2 * self.K]

    def __len__(self) -> int:
        return self.u.shape[0]

    def subset(self, idx) -> DesignBatch:
        return DesignBatch(self.u[idx], self.r[idx], self.x[idx], self.noise[idx])


def make_dataset(cfg: DesignConfig, n: int, split: int) -> DesignBatch:
    """``n`` samples; sample ``d`` of split ``split`` uses its own stream
    ``default_rng([seed, split, d])``.

    The gains come from the no-desync, no-ISI policy (unit moments).
    """
    K, Q = cfg.K, cfg.mu + 1
    h = np.empty((n, K))
    x = np.empty((n, Q, K))
    noise = np.empty(n)
    s3 = math.sqrt(3.0)
    for d in range(n):
        rng = np.random.default_rng([cfg.seed, split, d])
        hc = math.sqrt(0.5) * (rng.standard_normal(K) + 1j * rng.standard_normal(K))
        h[d] = np.sort(np.abs(hc))
        x[d] = rng.uniform(-s3, s3, (Q, K))
        noise[d] = math.sqrt(cfg.sigma2) * rng.standard_normal()
    a, b, _, _ = kkt_batch(1.0, 1.0, h, cfg.P, cfg.sigma2)
    x0 = x[:, cfg.mu // 2, :]
    u = np.concatenate([a[:, None], b, h, x0], axis=1)
    return DesignBatch(u, x0.sum(axis=1), x, noise)


class _Geometry:
    """Index tables shared by every loss evaluation for one config."""

    def __init__(self, cfg: DesignConfig, pmf: np.ndarray | None = None):
        self.N_s = cfg.N_s
        self.sps = cfg.samples_per_symbol
        self.c = (self.N_s - 1) // 2
        self.n_fft = cfg.n_fft
        self.pmf = sync_error_pmf(cfg.sigma_eps, self.N_s, cfg.mu) if pmf is None else np.asarray(pmf)
        half = (self.pmf.size - 1) // 2
        m = np.arange(-half, half + 1)
        q = np.arange(-(cfg.mu // 2), cfg.mu // 2 + 1)
        idx = self.c + m[None, :] + q[:, None] * self.sps
        self.valid = (idx >= 0) & (idx < self.N_s)
        self.idx = np.clip(idx, 0, self.N_s - 1)
        n_t = mask_start_bin(cfg.alpha, cfg.delta_alpha)
        self.oob = slice(n_t + 1, self.n_fft // 2 + 1)
        self.gamma = cfg.gamma_thr
        self.hinge = cfg.spectral_hinge
        self.E_t = energy_target(cfg)
        self.M = (cfg.M_f, cfg.M_e, cfg.M_s)


def _loss_terms(z: np.ndarray, batch: DesignBatch, geo: _Geometry, want_grad: bool):
    """Per-component means over the batch and, optionally, their gradients
    with respect to ``z`` (B, N_s)."""
    B = z.shape[0]
    a, r = batch.a, batch.r
    coef = np.einsum("bqk,bk->bq", batch.x, batch.b * batch.h)

    # MSE over the sync-error PMF, ISI taps at m + q*sps
    taps = np.where(geo.valid, z[:, geo.idx], 0.0)  # (B, Q, M)
    y = a[:, None] * (np.einsum("bq,bqm->bm", coef, taps) + batch.noise[:, None])
    res = y - r[:, None]
    l_mse = float(np.sum(geo.pmf * res * res) / B)

    # out-of-band spectrum
    Zr = np.fft.rfft(z, n=geo.n_fft, axis=1)
    mag_r = np.abs(Zr[:, geo.oob])
    dev = mag_r - geo.gamma
    if geo.hinge:
        dev = np.maximum(dev, 0.0)
    l_f = float(np.sum(dev * dev) / B)

    # mean DFT magnitude against the target
    Zf = np.fft.fft(z, n=geo.n_fft, axis=1)
    mag_f = np.abs(Zf)
    E = mag_f.mean(axis=1)
    l_e = float(np.sum((E - geo.E_t) ** 2) / B)

    # symmetry about the centre sample
    c = geo.c
    diff = z[:, c + 1:] - z[:, c - 1::-1]
    l_s = float(np.sum(diff * diff) / B)

    if not want_grad:
        return (l_mse, l_f, l_e, l_s), None

    g_mse = np.zeros_like(z)
    dy = 2.0 * geo.pmf * res / B
    d_taps = (a[:, None] * dy)[:, None, :] * coef[:, :, None] * geo.valid
    for qi in range(geo.idx.shape[0]):
        # indices are unique within one q row
        g_mse[:, geo.idx[qi]] += d_taps[:, qi, :]

    with np.errstate(invalid="ignore", divide="ignore"):
        ph_r = np.where(mag_r > 0, Zr[:, geo.oob] / mag_r, 0.0)
        ph_f = np.where(mag_f > 0, Zf / mag_f, 0.0)
    full = np.zeros((B, geo.n_fft), dtype=complex)
    full[:, geo.oob] = (2.0 * dev / B) * ph_r
    # d|Z_n|/dz_m = Re(Z_n e^{+2 pi i n m / N}) / |Z_n|
    g_f = geo.n_fft * np.fft.ifft(full, axis=1).real[:, :geo.N_s]

    dE = np.fft.ifft(ph_f, axis=1).real[:, :geo.N_s]
    g_e = (2.0 * (E - geo.E_t) / B)[:, None] * dE

    g_s = np.zeros_like(z)
    g_s[:, c + 1:] += 2.0 * diff / B
    g_s[:, c - 1::-1] -= 2.0 * diff / B
    return (l_mse, l_f, l_e, l_s), (g_mse, g_f, g_e, g_s)


def _combine(parts, M) -> LossBreakdown:
    l_mse, l_f, l_e, l_s = parts
    total = l_mse + M[0] * l_f + M[1] * l_e + M[2] * l_s
    return LossBreakdown(l_mse, l_f, l_e, l_s, total)


def waveform_loss(z, batch: DesignBatch, cfg: DesignConfig, pmf=None, want_grad: bool = False):
    """Loss of explicit waveforms ``z`` (B, N_s), one per batch element.

    With ``want_grad`` also returns the four per-component gradients w.r.t. ``z``.
    """
    geo = _Geometry(cfg, pmf)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape == (1, cfg.N_s) and len(batch) > 1:
        z = np.broadcast_to(z, (len(batch), cfg.N_s)).copy()
    if z.shape != (len(batch), cfg.N_s):
        raise DesignError(f"waveform shape {z.shape} does not match batch ({len(batch)}, {cfg.N_s})")
    parts, grads = _loss_terms(z, batch, geo, want_grad)
    lb = _combine(parts, geo.M)
    return (lb, grads) if want_grad else lb


def loss_total(params: MLPParams, batch: DesignBatch, pmf, cfg: DesignConfig,
               want_grad: bool = False, _geo: _Geometry | None = None):
    """Composite training loss of the network on ``batch``.

    With ``want_grad`` returns ``(LossBreakdown, MLPParams gradient)``.
    """
    geo = _geo or _Geometry(cfg, pmf)
    z, acts = forward(params, batch.u, return_cache=True)
    parts, grads = _loss_terms(z, batch, geo, want_grad)
    lb = _combine(parts, geo.M)
    if not want_grad:
        return lb
    g_mse, g_f, g_e, g_s = grads
    M_f, M_e, M_s = geo.M
    dz = g_mse + M_f * g_f + M_e * g_e + M_s * g_s
    return lb, backward(params, acts, dz)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    l_mse: float
    l_f: float
    l_e: float
    l_s: float
    total: float
    val_total: float | None = None


@dataclass
class TrainResult:
    params: MLPParams
    history: list[EpochRecord]
    cfg: DesignConfig
    E_target: float


def train(cfg: DesignConfig, train_set: DesignBatch | None = None, val_set: DesignBatch | None = None,
          log=None) -> TrainResult:
    """Minibatch Adam on :func:`loss_total`.

    Each epoch record holds the batch-averaged loss components.  A non-finite
    loss aborts with the offending epoch, step and components.
    """
    train_set = make_dataset(cfg, cfg.n_train, 0) if train_set is None else train_set
    if val_set is None and cfg.n_val > 0:
        val_set = make_dataset(cfg, cfg.n_val, 1)
    geo = _Geometry(cfg)
    rng = np.random.default_rng([cfg.seed, 99])
    params = MLPParams.init(cfg.layer_sizes, rng)
    opt = Adam(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
    n = len(train_set)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        acc = np.zeros(5)
        steps = 0
        for start in range(0, n, cfg.batch):
            mb = train_set.subset(perm[start:start + cfg.batch])
            lb, grads = loss_total(params, mb, geo.pmf, cfg, want_grad=True, _geo=geo)
            if not math.isfinite(lb.total):
                raise DesignError(
                    f"training diverged at epoch {epoch}, step {steps}: "
                    f"l_mse={lb.l_mse} l_f={lb.l_f} l_e={lb.l_e} l_s={lb.l_s}"
                )
            opt.step(params, grads)
            acc += (lb.l_mse, lb.l_f, lb.l_e, lb.l_s, lb.total)
            steps += 1
        acc /= steps
        val = None
        if val_set is not None and len(val_set):
            val = loss_total(params, val_set, geo.pmf, cfg, _geo=geo).total
        rec = EpochRecord(epoch, *map(float, acc), val_total=val)
        history.append(rec)
        if log is not None:
            log(rec)
    return TrainResult(params, history, cfg, geo.E_t)


def extract_waveform(params: MLPParams, test_inputs, samples_per_symbol: int | None = None,
                     dt: float | None = None) -> WaveformSpec:
    """Element-wise mean of the network outputs over ``test_inputs``."""
    u = test_inputs.u if isinstance(test_inputs, DesignBatch) else np.atleast_2d(test_inputs)
    if u.shape[0] == 0:
        raise DesignError("test set must be non-empty")
    acc = np.zeros(params.sizes[-1])
    for start in range(0, u.shape[0], 1000):
        acc += forward(params, u[start:start + 1000]).sum(axis=0)
    if dt is None:
        dt = 1.0 / samples_per_symbol if samples_per_symbol else 1.0
    return sampled(acc / u.shape[0], dt)


@dataclass(frozen=True)
class Residuals:
    energy_rel: float
    oob_mean: float
    symmetry_rel: float


def constraint_residuals(spec: WaveformSpec, cfg: DesignConfig) -> Residuals:
    """Relative energy error, mean out-of-band |DFT| and peak-relative asymmetry."""
    return _residual_rows(spec.samples[None, :], cfg)[0]


def _residual_rows(z: np.ndarray, cfg: DesignConfig) -> list[Residuals]:
    geo = _Geometry(cfg)
    E = energy_dft(z, geo.n_fft)
    oob = np.abs(np.fft.rfft(z, n=geo.n_fft, axis=1)[:, geo.oob]).mean(axis=1)
    c = geo.c
    asym = np.abs(z[:, c + 1:] - z[:, c - 1::-1]).max(axis=1)
    peak = np.abs(z).max(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        sym = np.where(peak > 0, asym / peak, 0.0)
    return [Residuals(float(abs(e - geo.E_t) / geo.E_t), float(o), float(s)) for e, o, s in zip(E, oob, sym)]


def test_set_residuals(params: MLPParams, test_inputs: DesignBatch, cfg: DesignConfig) -> Residuals:
    """Test-set means of the per-output residuals."""
    z = forward(params, test_inputs.u)
    rows = _residual_rows(z, cfg)
    return Residuals(*(float(np.mean([getattr(r, f) for r in rows])) for f in ("energy_rel", "oob_mean", "symmetry_rel")))


# ---------------------------------------------------------------- cosine fit

@dataclass(frozen=True)
class CosineFit:
    coeffs: tuple[float, ...]
    p: float
    rmse: float

    def to_spec(self, half_width: float = 3.5) -> WaveformSpec:
        return fitted_cosine(self.coeffs, self.p, half_width)


def _design_matrix(t, p, order):
    return np.cos(np.outer(t, np.arange(order + 1)) * p)


def _lstsq(t, z, p, order):
    A = _design_matrix(t, p, order)
    coef, *_ = np.linalg.lstsq(A, z, rcond=None)
    r = A @ coef - z
    return coef, float(r @ r)


def fit_cosine(spec: WaveformSpec, order: int = 6, p_grid=None) -> CosineFit:
    """Least-squares fit of sum_j a_j cos(j p t) over the sample window.

    For each trial ``p`` the a_j follow from linear least squares; ``p``
    comes from a grid scan polished by golden-section search.
    """
    if spec.kind != "Sampled":
        raise DesignError("fit_cosine needs a Sampled waveform")
    t, z = spec.times, spec.samples
    if not np.allclose(t, -t[::-1], atol=1e-12 * max(1.0, abs(t[-1]))):
        raise DesignError("fit_cosine needs a symmetric sample grid")
    if not np.any(z):
        return CosineFit(tuple([0.0] * (order + 1)), 1.0, 0.0)
    if p_grid is None:
        p_grid = np.linspace(0.05, 2.0, 391)
    p_grid = np.asarray(p_grid, dtype=float)
    sse = np.array([_lstsq(t, z, p, order)[1] for p in p_grid])
    j = int(np.argmin(sse))
    if 0 < j < p_grid.size - 1:
        res = minimize_scalar(lambda p: _lstsq(t, z, p, order)[1],
                              bracket=(p_grid[j - 1], p_grid[j], p_grid[j + 1]),
                              method="golden", tol=1e-12)
        p = float(res.x) if res.fun <= sse[j] else float(p_grid[j])
    else:
        p = float(p_grid[j])
    coef, s = _lstsq(t, z, p, order)
    return CosineFit(tuple(float(c) for c in coef), p, math.sqrt(s / z.size))


def write_fit(fit: CosineFit, path) -> None:
    lines = [f"a{j}={c!r}" for j, c in enumerate(fit.coeffs)]
    lines += [f"p={fit.p!r}", f"rmse={fit.rmse!r}"]
    Path(path).write_text("\n".join(lines) + "\n")


def read_fit(path) -> CosineFit:
    kv = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            k, v = line.split("=", 1)
            kv[k.strip()] = float(v)
    n = sum(1 for k in kv if k.startswith("a"))
    return CosineFit(tuple(kv[f"a{j}"] for j in range(n)), kv["p"], kv["rmse"])


def write_history_csv(history: list[EpochRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "l_mse", "l_f", "l_e", "l_s", "total"])
        for r in history:
            w.writerow([r.epoch] + [f"{v:.12g}" for v in (r.l_mse, r.l_f, r.l_e, r.l_s, r.total)])

