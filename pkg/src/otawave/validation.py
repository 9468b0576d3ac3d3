"""Self-checks run by ``otawave validate``.

Each check compares a production code path against an independent route to
the same number (power series, brute force, finite differences, a second
simulation mode) and reports the worst discrepancy seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import oracle_grid_search, solve_isi
from .designer import (
    DesignConfig,
    loss_total,
    make_dataset,
    sync_error_pmf,
    waveform_loss,
)
from .mlp import MLPParams
from .moments import (
    _hermite_nodes,
    all_moments,
    isi_sq_series_alpha0,
    mean_amp_series,
    mean_sq_series,
    moment_quadrature,
    rc_moment_exact_series,
)
from .simulator import ScenarioConfig, equivalence_check
from .waveforms import btrc, raised_cosine, sample

ALPHAS = tuple(round(0.1 * i, 1) for i in range(1, 11))
SIGMAS = (0.05, 0.1, 0.2)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def rc_series_error(alphas=ALPHAS, sigmas=SIGMAS, terms: int = 16) -> float:
    """Worst |series - quadrature| of the first-order RC moment series."""
    worst = 0.0
    for a in alphas:
        spec = raised_cosine(a)
        for s in sigmas:
            worst = max(worst,
                        abs(mean_amp_series(a, s, terms) - moment_quadrature(spec, 0, 1, s, 64)),
                        abs(mean_sq_series(a, s, terms) - moment_quadrature(spec, 0, 2, s, 64)))
    return worst


def truncated_integrand_error(alphas=ALPHAS, sigmas=SIGMAS, terms: int = 16) -> float:
    """Series against quadrature of the integrand they actually expand."""
    x, w = _hermite_nodes(64)
    worst = 0.0
    for a in alphas:
        for s in sigmas:
            e = s * x
            g = np.sinc(e) * np.cos(np.pi * a * e)
            lin = 1 + 4 * a * a * e * e
            worst = max(worst,
                        abs(mean_amp_series(a, s, terms) - math.fsum(w * g * lin)),
                        abs(mean_sq_series(a, s, terms) - math.fsum(w * (g * lin) ** 2)))
    return worst


def exact_series_error(alphas=ALPHAS, sigmas=SIGMAS) -> float:
    worst = 0.0
    for a in alphas:
        spec = raised_cosine(a)
        for s in sigmas:
            for power in (1, 2):
                worst = max(worst, abs(rc_moment_exact_series(a, s, power) - moment_quadrature(spec, 0, power, s)))
    return worst


def isi_series_errors(sigmas=SIGMAS) -> tuple[float, float]:
    """(series vs quadrature, |eps~_1 - eps~_-1|) for the alpha = 0 pulse."""
    spec = raised_cosine(0.0)
    err = sym = 0.0
    for s in sigmas:
        plus = moment_quadrature(spec, 1, 2, s)
        minus = moment_quadrature(spec, -1, 2, s)
        err = max(err, abs(isi_sq_series_alpha0(s) - plus))
        sym = max(sym, abs(plus - minus))
    return err, sym


def kkt_residuals(alloc, m, P: float, sigma2: float) -> tuple[float, float]:
    """Largest stationarity residual in a and in the inverting b_k, and the
    largest dual-sign violation at the power cap, both relative."""
    h, b, a = alloc.channels.h, alloc.b, alloc.a
    ec, eh = m.eps_check, m.eps_hat
    sp = math.sqrt(P)
    da = 2 * a * np.sum((b * h) ** 2) * eh - 2 * ec * np.sum(b * h) + 2 * sigma2 * a
    scale_a = 2 * ec * np.sum(b * h) + 1e-300
    db = 2 * a * h * (a * h * b * eh - ec)
    at_cap = b >= sp * (1 - 1e-12)
    scale_b = 2 * a * h * ec + 1e-300
    stat = max(abs(da) / scale_a, float(np.max(np.where(at_cap, 0.0, np.abs(db) / scale_b))))
    # at the cap the multiplier -dMSE/db_k must be non-negative
    dual = float(np.max(np.where(at_cap, np.maximum(db, 0.0) / scale_b, 0.0)))
    return stat, dual


def kkt_oracle_check(n: int, seed: int) -> tuple[float, float, float]:
    """Over ``n`` random instances: worst (solver - oracle) MSE gap, worst
    stationarity residual, worst dual violation."""
    rng = np.random.default_rng([seed, 3])
    gap = stat = dual = 0.0
    cache = {}
    for _ in range(n):
        K = int(rng.integers(1, 21))
        a = float(rng.choice(ALPHAS))
        s = float(rng.choice(SIGMAS))
        kind = rng.choice(["RC", "BTRC"])
        key = (kind, a, s)
        if key not in cache:
            cache[key] = all_moments(raised_cosine(a) if kind == "RC" else btrc(a), s, 6)
        m = cache[key]
        snr = float(rng.uniform(0, 20))
        P = float(rng.uniform(0.5, 2.0))
        sigma2 = P / 10 ** (snr / 10)
        h = np.abs(rng.standard_normal(K) + 1j * rng.standard_normal(K)) / math.sqrt(2)
        sol = solve_isi(m, h, P, sigma2)
        ref = oracle_grid_search(m, h, P, sigma2)
        gap = max(gap, sol.mse - ref.mse)
        st, du = kkt_residuals(sol, m, P, sigma2)
        stat, dual = max(stat, st), max(dual, du)
    return gap, stat, dual


def gradient_check(n_cases: int, seed: int) -> float:
    """Worst relative error of analytic vs central-difference derivatives.

    Each case checks every loss component along a random direction in
    waveform space, and the total along a random direction in parameter space.
    """
    rng = np.random.default_rng([seed, 7])
    worst = 0.0
    h = 1e-5
    for case in range(n_cases):
        K = int(rng.integers(1, 5))
        cfg = DesignConfig(K=K, samples_per_symbol=10, mu=6, hidden=(12, 12, 12), n_train=16,
                           n_val=0, n_test=4, alpha=float(rng.choice([0.2, 0.5, 0.8])),
                           spectral_hinge=bool(case % 2), seed=int(rng.integers(2**31)))
        batch = make_dataset(cfg, 6, 0)
        z = rng.normal(scale=0.5, size=(len(batch), cfg.N_s))
        _, grads = waveform_loss(z, batch, cfg, want_grad=True)
        d = rng.normal(size=z.shape)
        for i, comp in enumerate(("l_mse", "l_f", "l_e", "l_s")):
            fp = getattr(waveform_loss(z + h * d, batch, cfg), comp)
            fm = getattr(waveform_loss(z - h * d, batch, cfg), comp)
            num = (fp - fm) / (2 * h)
            ana = float(np.sum(grads[i] * d))
            worst = max(worst, abs(num - ana) / max(abs(ana), abs(num), 1e-12))
        params = MLPParams.init(cfg.layer_sizes, rng)
        _, gp = loss_total(params, batch, None, cfg, want_grad=True)
        dirs = [rng.normal(size=p.shape) for p in params.arrays()]
        norm = math.sqrt(sum(float(np.sum(dd * dd)) for dd in dirs))
        dirs = [dd / norm for dd in dirs]  # unit step keeps ReLU kinks out of the stencil

        def along(step):
            q = params.copy()
            for p, dd in zip(q.arrays(), dirs):
                p += step * dd
            return loss_total(q, batch, None, cfg).total

        num = (along(h) - along(-h)) / (2 * h)
        ana = sum(float(np.sum(g * dd)) for g, dd in zip(gp.arrays(), dirs))
        worst = max(worst, abs(num - ana) / max(abs(ana), abs(num), 1e-12))
    return worst


def pmf_bruteforce_error(seed: int) -> float:
    """PMF-weighted l_mse against explicit enumeration of every receiver offset."""
    cfg = DesignConfig(K=3, samples_per_symbol=10, mu=6, hidden=(8, 8, 8), n_train=8, n_val=0, n_test=2)
    batch = make_dataset(cfg, 5, 0)
    rng = np.random.default_rng([seed, 11])
    z = rng.normal(size=(len(batch), cfg.N_s))
    pmf = sync_error_pmf(cfg.sigma_eps, cfg.N_s, cfg.mu)
    half = (pmf.size - 1) // 2
    c = (cfg.N_s - 1) // 2
    total = 0.0
    for d in range(len(batch)):
        a, b, h = batch.a[d], batch.b[d], batch.h[d]
        for j, m in enumerate(range(-half, half + 1)):
            y = 0.0
            for qi, q in enumerate(range(-cfg.mu // 2, cfg.mu // 2 + 1)):
                i = c + m + q * cfg.samples_per_symbol
                if 0 <= i < cfg.N_s:
                    y += np.sum(batch.x[d, qi] * b * h) * z[d, i]
            y = a * (y + batch.noise[d])
            total += pmf[j] * (y - batch.r[d]) ** 2
    return abs(waveform_loss(z, batch, cfg).l_mse - total / len(batch))


def equivalence_settings():
    return ((0.2, 0.05), (0.5, 0.1), (0.8, 0.2))


def equivalence_z(trials: int, seed: int) -> float:
    """Worst |per-device - receiver| gap in units of the combined standard error."""
    worst = 0.0
    for a, s in equivalence_settings():
        dev, rx = equivalence_check(ScenarioConfig(sigma_eps=s, trials=trials, seed=seed), raised_cosine(a))
        worst = max(worst, abs(dev.mean - rx.mean) / math.hypot(dev.std_err, rx.std_err))
    return worst


def run_checks(seed: int = 0, quick: bool = True) -> list[CheckResult]:
    out = []

    def add(name, value, limit, fmt="{:.3g}"):
        out.append(CheckResult(name, bool(value <= limit), f"{fmt.format(value)} <= {limit:g}"))

    add("exact_rc_series_vs_quadrature", exact_series_error(), 1e-10)
    add("rc_series_vs_own_integrand", truncated_integrand_error(terms=32), 1e-10)
    err, sym = isi_series_errors()
    add("isi_series_vs_quadrature", err, 1e-6)
    add("isi_series_symmetry", sym, 1e-10)
    gap, stat, dual = kkt_oracle_check(100 if quick else 1000, seed)
    add("kkt_not_worse_than_oracle", gap, 1e-6)
    add("kkt_stationarity", stat, 1e-8)
    add("kkt_dual_feasibility", dual, 1e-8)
    add("loss_gradients", gradient_check(20, seed), 1e-4)
    add("pmf_loss_vs_enumeration", pmf_bruteforce_error(seed), 1e-12)
    add("receiver_error_equivalence_z", equivalence_z(10_000 if quick else 100_000, seed), 3.0)
    x = sample(raised_cosine(0.5), np.arange(-3, 4, dtype=float))
    add("rc_nyquist_zeros", float(np.max(np.abs(x - (np.arange(-3, 4) == 0)))), 1e-12)
    return out
