"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line (collected into the
terminal summary) and then asserts it.  Tolerances are fixed; nothing adapts
to the measured values.  Run alone with ``pytest tests/test_acceptance.py -v``
or directly with ``python tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import pytest

from otawave.designer import (
    DesignConfig,
    constraint_residuals,
    extract_waveform,
    make_dataset,
    train,
)
from otawave.experiments import TABLE2_GAINS, table2_gains
from otawave.simulator import ScenarioConfig, simulate_mse
from otawave.validation import (
    equivalence_settings,
    equivalence_z,
    gradient_check,
    isi_series_errors,
    kkt_oracle_check,
    rc_series_error,
)
from otawave.waveforms import btrc, raised_cosine, table1_waveform

LINES = []
TRIALS = 100_000
SEED = 2024


def report(n, passed, detail):
    line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return passed


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def test_c01_series_vs_quadrature():
    err, dt = timed(rc_series_error)
    ok = err < 1e-4 and dt < 1.0
    assert report(1, ok, f"max |series - quadrature| = {err:.3g} (tol 1e-4), {dt:.2f} s (limit 1 s)")


def test_c02_isi_series():
    (err, sym), dt = timed(isi_series_errors)
    ok = err < 1e-6 and sym < 1e-10 and dt < 1.0
    assert report(2, ok, f"series err {err:.3g} (tol 1e-6), |e1 - e-1| {sym:.3g} (tol 1e-10), {dt:.2f} s")


def test_c03_kkt_vs_oracle():
    (gap, stat, dual), dt = timed(kkt_oracle_check, 1000, SEED)
    ok = gap <= 1e-6 and stat <= 1e-8 and dual <= 1e-8 and dt < 30
    assert report(3, ok, f"1000 instances: solver-oracle gap {gap:.3g} (<= 1e-6), stationarity {stat:.3g}, "
                         f"dual {dual:.3g} (<= 1e-8), {dt:.1f} s (limit 30 s)")


def test_c04_closed_form_vs_monte_carlo():
    t0 = time.perf_counter()
    cfg = ScenarioConfig(K=20, snr_db=10, sigma_eps=0.1, mu=6, trials=TRIALS, seed=SEED)
    parts, ok = [], True
    for spec in (raised_cosine(0.5), btrc(0.5), table1_waveform(0.5)):
        est = simulate_mse(cfg, spec)
        z = abs(est.mean - est.closed_form) / est.std_err
        ok &= z < 3
        parts.append(f"{spec.kind} z={z:.2f}")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    assert report(4, ok, ", ".join(parts) + f" (tol 3 SE), {dt:.1f} s")


def test_c05_table2_gains():
    t0 = time.perf_counter()
    parts, ok = [], True
    for a in (0.2, 0.5, 0.8):
        g_btrc, g_rc = table2_gains(a, 0.1, TRIALS, SEED)
        p_btrc, p_rc = TABLE2_GAINS[a][0.1]
        ok &= abs(g_rc - p_rc) <= 3 and abs(g_btrc - p_btrc) <= 3
        parts.append(f"a={a}: RC {g_rc:.2f}% (ref {p_rc}) BTRC {g_btrc:.2f}% (ref {p_btrc})")
    dt = time.perf_counter() - t0
    ok &= dt < 300
    assert report(5, ok, "; ".join(parts) + f" (tol 3 points), {dt:.1f} s")


def test_c06_receiver_equivalence():
    z = equivalence_z(TRIALS, SEED)
    settings = ", ".join(f"(a={a}, s={s})" for a, s in equivalence_settings())
    assert report(6, z < 3, f"worst |per-device - receiver| = {z:.2f} combined SE over {settings} (tol 3)")


def test_c07_gradients():
    err, dt = timed(gradient_check, 24, SEED)
    ok = err < 1e-4 and dt < 60
    assert report(7, ok, f"24 cases, worst relative error {err:.3g} (tol 1e-4), {dt:.1f} s")


@pytest.fixture(scope="module")
def desk_design():
    cfg = DesignConfig(alpha=0.5, seed=0)
    res = train(cfg)
    test = make_dataset(cfg, cfg.n_test, 2)
    spec = extract_waveform(res.params, test, cfg.samples_per_symbol)
    return cfg, spec


def test_c08abc_desk_constraints(desk_design):
    cfg, spec = desk_design
    r = constraint_residuals(spec, cfg)
    a = r.energy_rel < 0.05
    b = r.oob_mean <= 1.5 * cfg.gamma_thr
    c = r.symmetry_rel < 0.02
    assert report("8abc", a and b and c,
                  f"energy {r.energy_rel:.3g} (< 0.05), out-of-band {r.oob_mean:.3g} (<= {1.5 * cfg.gamma_thr:g}), "
                  f"symmetry {r.symmetry_rel:.3g} (< 0.02)")


def test_c08d_desk_beats_rc(desk_design):
    _, spec = desk_design
    cfg = ScenarioConfig(K=20, snr_db=10, sigma_eps=0.1, mu=6, trials=TRIALS, seed=SEED)
    learned = simulate_mse(cfg, spec)
    rc = simulate_mse(cfg, raised_cosine(0.5))
    assert report("8d", learned.mean < rc.mean,
                  f"learned MSE {learned.mean:.4g} +/- {learned.std_err:.2g} vs RC {rc.mean:.4g} +/- {rc.std_err:.2g}")


def test_c09_data_laws():
    base = ScenarioConfig(K=20, snr_db=10, sigma_eps=0.1, mu=6, trials=TRIALS, seed=SEED)
    est = {d: simulate_mse(replace(base, data_dist=d), raised_cosine(0.5))
           for d in ("uniform_sqrt3", "gaussian_unit", "laplace_unit")}
    names = list(est)
    worst = max(abs(est[x].mean - est[y].mean) / math.hypot(est[x].std_err, est[y].std_err)
                for i, x in enumerate(names) for y in names[i + 1:])
    means = ", ".join(f"{k} {v.mean:.4g}" for k, v in est.items())
    assert report(9, worst < 3, f"{means}; worst pair {worst:.2f} combined SE (tol 3)")


def test_c10_determinism(tmp_path):
    bodies = []
    for run in ("a", "b"):
        out = tmp_path / run
        subprocess.run([sys.executable, "-m", "otawave", "reproduce", "fig6", "--seed", "1", "--out", str(out)],
                       check=True, capture_output=True)
        bodies.append({p.name: p.read_bytes() for p in sorted(out.glob("fig6_*.csv"))})
    same = bool(bodies[0]) and bodies[0] == bodies[1]
    assert report(10, same, f"{len(bodies[0])} CSV files, byte-identical across runs: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([str(Path(__file__)), "-v"]))
