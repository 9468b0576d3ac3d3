"""Experiment plans behind ``otawave reproduce``.

Every plan writes one CSV per curve into an output directory and returns the
list of files it wrote.  CSV bodies depend only on the plan, scale and seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .designer import (
    DesignConfig,
    constraint_residuals,
    extract_waveform,
    fit_cosine,
    make_dataset,
    mask_start_bin,
    train,
    write_fit,
    write_history_csv,
    zero_pad_count,
)
from .simulator import ScenarioConfig, derive_seed, mse_gain, simulate_mse, sweep
from .waveforms import (
    TABLE1_COEFFS,
    TABLE1_RMSE,
    btrc,
    discretize,
    raised_cosine,
    sample,
    spectrum,
    table1_waveform,
    write_spectrum_csv,
    write_waveform_csv,
)

PLANS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "table1", "table2", "validate")
SCALES = ("desk", "full")
REFERENCE_ALPHAS = (0.2, 0.5, 0.8)

# Reference MSE gains (%) of the learned pulse: alpha -> (vs BTRC, vs RC)
TABLE2_GAINS = {
    0.1: {0.1: (2.16, 4.27), 0.2: (4.09, 6.0)},
    0.2: {0.1: (5.65, 12.39), 0.2: (7.20, 13.38)},
    0.3: {0.1: (3.38, 13.14), 0.2: (9.45, 19.95)},
    0.4: {0.1: (5.95, 15.96), 0.2: (12.0, 25.31)},
    0.5: {0.1: (8.82, 21.06), 0.2: (14.54, 29.56)},
    0.6: {0.1: (5.62, 19.68), 0.2: (13.15, 30.97)},
    0.7: {0.1: (5.78, 18.66), 0.2: (12.88, 31.31)},
    0.8: {0.1: (2.49, 15.73), 0.2: (9.36, 29.08)},
    0.9: {0.1: (1.76, 12.58), 0.2: (7.59, 26.14)},
    1.0: {0.1: (2.16, 8.29), 0.2: (4.69, 20.84)},
}


class PlanError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    scale: str = "desk"
    seed: int = 0
    out_dir: Path = Path("out")

    def __post_init__(self):
        if self.name not in PLANS:
            raise PlanError(f"unknown plan {self.name!r}; choose from {', '.join(PLANS)}")
        if self.scale not in SCALES:
            raise PlanError(f"scale must be one of {SCALES}")
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    @property
    def full(self) -> bool:
        return self.scale == "full"


def _fitted_or_none(alpha: float):
    key = round(alpha, 1)
    return table1_waveform(key) if key in TABLE1_COEFFS and abs(alpha - key) < 1e-9 else None


FAMILY = {"RC": raised_cosine, "BTRC": btrc, "Fitted": _fitted_or_none}


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.12g}"


def _write_rows(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _trials(plan: ExperimentPlan) -> int:
    return 100_000 if plan.full else 10_000


def _alpha_tag(a: float) -> str:
    return f"a{a:.1f}"


# ------------------------------------------------------------------ plans

def plan_fig2(plan: ExperimentPlan) -> list[Path]:
    """Target versus desynchronized received signal, RC alpha = 0.3, noise free.

    Gains are taken as ideal inversion (a b_k h_k = 1) so only timing differs.
    """
    rng = np.random.default_rng([plan.seed, 2])
    K, n_sym, sps = 20, 12, 500 if plan.full else 50
    spec = raised_cosine(0.3)
    x = rng.uniform(-math.sqrt(3), math.sqrt(3), (n_sym, K))
    eps = 0.1 * rng.standard_normal(K)
    t = np.arange(-2 * sps, (n_sym + 1) * sps + 1) / sps
    sym = np.arange(n_sym)
    lag = t[:, None] - sym[None, :]
    target = sample(spec, lag) @ x.sum(axis=1)
    received = np.einsum("tsk,sk->t", sample(spec, lag[:, :, None] + eps[None, None, :]), x)
    files = [_write_rows(plan.out_dir / "fig2_signal.csv", ["t", "target", "received"], zip(t, target, received))]
    idx = [int(np.argmin(np.abs(t - s))) for s in sym]
    files.append(_write_rows(plan.out_dir / "fig2_samples.csv", ["symbol", "target", "received"],
                             zip(sym, target[idx], received[idx])))
    return files


def plan_fig3(plan: ExperimentPlan) -> list[Path]:
    sps = 500 if plan.full else 50
    files = []
    for a in REFERENCE_ALPHAS:
        for name, factory in FAMILY.items():
            path = plan.out_dir / f"fig3_{name}_{_alpha_tag(a)}.csv"
            write_waveform_csv(discretize(factory(a), sps, 6), path)
            files.append(path)
    return files


def plan_fig4(plan: ExperimentPlan) -> list[Path]:
    sps, mu, da = (500 if plan.full else 50), 6, 0.1
    files = []
    for a in REFERENCE_ALPHAS:
        for name, factory in FAMILY.items():
            rep = spectrum(discretize(factory(a), sps, mu), zero_pad_count(da, mu, sps),
                           mask_edge=mask_start_bin(a, da))
            path = plan.out_dir / f"fig4_{name}_{_alpha_tag(a)}.csv"
            write_spectrum_csv(rep, path)
            files.append(path)
    return files


def _sweep_files(plan, tag, template, axis, values, alphas) -> list[Path]:
    files = []
    for a in alphas:
        rows = sweep(template, axis, values, FAMILY, alpha=a)
        for name in FAMILY:
            mine = [(r.axis, r.mse, r.stderr, r.trials) for r in rows if r.waveform == name]
            if mine:
                files.append(_write_rows(plan.out_dir / f"{tag}_{name}_{_alpha_tag(a)}.csv",
                                         [axis, "mse", "stderr", "trials"], mine))
    return files


def _alpha_files(plan, tag, template, alphas) -> list[Path]:
    rows = sweep(template, "alpha", alphas, FAMILY)
    files = []
    for name in FAMILY:
        mine = [(r.axis, r.mse, r.stderr, r.trials) for r in rows if r.waveform == name]
        files.append(_write_rows(plan.out_dir / f"{tag}_{name}.csv", ["alpha", "mse", "stderr", "trials"], mine))
    return files


def plan_fig5(plan: ExperimentPlan) -> list[Path]:
    cfg = ScenarioConfig(mu=0, trials=_trials(plan), seed=derive_seed(plan.seed, 5))
    return _alpha_files(plan, "fig5", cfg, [round(0.1 * i, 1) for i in range(1, 10)])


def _k_values(plan):
    return list(range(5, 55, 5)) if plan.full else [5, 10, 20, 30, 40, 50]


def plan_fig6(plan: ExperimentPlan) -> list[Path]:
    cfg = ScenarioConfig(sigma_eps=0.1, trials=_trials(plan), seed=derive_seed(plan.seed, 6))
    return _sweep_files(plan, "fig6", cfg, "K", _k_values(plan), REFERENCE_ALPHAS)


def plan_fig7(plan: ExperimentPlan) -> list[Path]:
    cfg = ScenarioConfig(sigma_eps=0.2, trials=_trials(plan), seed=derive_seed(plan.seed, 7))
    return _sweep_files(plan, "fig7", cfg, "K", _k_values(plan), REFERENCE_ALPHAS)


def plan_fig8(plan: ExperimentPlan) -> list[Path]:
    snrs = list(range(0, 21, 2)) if plan.full else [0, 5, 10, 15, 20]
    cfg = ScenarioConfig(trials=_trials(plan), seed=derive_seed(plan.seed, 8))
    return _sweep_files(plan, "fig8", cfg, "snr_db", snrs, REFERENCE_ALPHAS)


def plan_fig9(plan: ExperimentPlan) -> list[Path]:
    files = []
    for i, dist in enumerate(("uniform_sqrt3", "gaussian_unit", "laplace_unit")):
        cfg = ScenarioConfig(data_dist=dist, trials=_trials(plan), seed=derive_seed(plan.seed, 9, i))
        files += _alpha_files(plan, f"fig9_{dist}", cfg, list(REFERENCE_ALPHAS))
    return files


def plan_fig10(plan: ExperimentPlan) -> list[Path]:
    files = []
    for i, csi in enumerate(("perfect", "noisy")):
        cfg = ScenarioConfig(csi=csi, trials=_trials(plan), seed=derive_seed(plan.seed, 10, i))
        files += _alpha_files(plan, f"fig10_{csi}", cfg, list(REFERENCE_ALPHAS))
    return files


def design_config(scale: str, seed: int, alpha: float, **overrides) -> DesignConfig:
    base = DesignConfig.full_scale if scale == "full" else DesignConfig
    return base(alpha=alpha, seed=seed, **overrides)


def run_design(cfg: DesignConfig, out_dir: Path, tag: str = "design") -> tuple[list[Path], dict]:
    """Train, average, fit and export one learned pulse."""
    res = train(cfg)
    test = make_dataset(cfg, cfg.n_test, 2)
    wave = extract_waveform(res.params, test, cfg.samples_per_symbol)
    fit = fit_cosine(wave)
    files = [out_dir / f"{tag}_waveform.csv", out_dir / f"{tag}_fit.txt", out_dir / f"{tag}_history.csv"]
    write_waveform_csv(wave, files[0])
    write_fit(fit, files[1])
    write_history_csv(res.history, files[2])
    resid = constraint_residuals(wave, cfg)
    return files, {"wave": wave, "fit": fit, "residuals": resid, "history": res.history}


def plan_table1(plan: ExperimentPlan) -> list[Path]:
    files = []
    fits = {}
    for a in REFERENCE_ALPHAS:
        cfg = design_config(plan.scale, derive_seed(plan.seed, 1, int(round(10 * a))), a)
        f, info = run_design(cfg, plan.out_dir, f"table1_{_alpha_tag(a)}")
        files += f
        fits[a] = info["fit"]
    keys = [f"a{j}" for j in range(7)] + ["p", "rmse"]
    header = ["coef"] + [f"alpha={a:g}" for a in REFERENCE_ALPHAS]

    def column(fit):
        return list(fit.coeffs) + [fit.p, fit.rmse]

    cols = [column(fits[a]) for a in REFERENCE_ALPHAS]
    files.append(_write_rows(plan.out_dir / "table1.csv", header,
                             [[k] + [c[i] for c in cols] for i, k in enumerate(keys)]))
    pub = [list(TABLE1_COEFFS[a][0]) + [TABLE1_COEFFS[a][1], TABLE1_RMSE[a]] for a in REFERENCE_ALPHAS]
    files.append(_write_rows(plan.out_dir / "table1_reference.csv", header,
                             [[k] + [c[i] for c in pub] for i, k in enumerate(keys)]))
    return files


def table2_gains(alpha: float, sigma_eps: float, trials: int, seed: int) -> tuple[float, float]:
    """MSE gain (%) of the reference fitted pulse over BTRC and RC, common random numbers."""
    cfg = ScenarioConfig(sigma_eps=sigma_eps, trials=trials, seed=seed)
    m = {name: simulate_mse(cfg, FAMILY[name](alpha)).mean for name in FAMILY}
    return mse_gain(m["BTRC"], m["Fitted"]), mse_gain(m["RC"], m["Fitted"])


def plan_table2(plan: ExperimentPlan) -> list[Path]:
    header = ["alpha", "btrc_sigma0.1", "rc_sigma0.1", "btrc_sigma0.2", "rc_sigma0.2"]
    rows = []
    for a in REFERENCE_ALPHAS:
        row = [a]
        for j, s in enumerate((0.1, 0.2)):
            row += table2_gains(a, s, _trials(plan), derive_seed(plan.seed, 2, int(round(10 * a)), j))
        rows.append(row)
    files = [_write_rows(plan.out_dir / "table2.csv", header, rows)]
    pub = [[a, *TABLE2_GAINS[a][0.1], *TABLE2_GAINS[a][0.2]] for a in sorted(TABLE2_GAINS)]
    files.append(_write_rows(plan.out_dir / "table2_reference.csv", header, pub))
    return files


def plan_validate(plan: ExperimentPlan) -> list[Path]:
    from .validation import run_checks

    results = run_checks(seed=plan.seed, quick=not plan.full)
    path = _write_rows(plan.out_dir / "validate.csv", ["check", "passed", "detail"],
                       [(r.name, int(r.passed), r.detail) for r in results])
    if not all(r.passed for r in results):
        raise ValidationFailed([r for r in results if not r.passed], [path])
    return [path]


class ValidationFailed(Exception):
    def __init__(self, failures, files):
        super().__init__(", ".join(f.name for f in failures))
        self.failures = failures
        self.files = files


RUNNERS: dict[str, Callable[[ExperimentPlan], list[Path]]] = {
    name: globals()[f"plan_{name}"] for name in PLANS
}


# ------------------------------------------------------------------ driver

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, name: str, info: dict, files: list[Path]) -> Path:
    manifest = {
        "plan": name,
        "library_version": __version__,
        "created_unix": time.time(),
        "files": {p.name: _sha256(p) for p in files},
        **info,
    }
    path = out_dir / f"{name}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def prepare_out_dir(out_dir: Path, name: str, force: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    existing = sorted(out_dir.glob(f"{name}_*"))
    if existing and not force:
        raise FileExistsError(f"{out_dir} already holds {name} results; pass --force to overwrite")
    probe = out_dir / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise PlanError(f"{out_dir} is not writable: {exc}") from exc


def run(plan: ExperimentPlan, force: bool = False) -> list[Path]:
    prepare_out_dir(plan.out_dir, plan.name, force)
    info = {"scale": plan.scale, "seed": plan.seed}
    try:
        files = RUNNERS[plan.name](plan)
    except ValidationFailed as exc:
        write_manifest(plan.out_dir, plan.name, {**info, "status": "failed"}, exc.files)
        raise
    files.append(write_manifest(plan.out_dir, plan.name, {**info, "status": "ok"}, files))
    return files
