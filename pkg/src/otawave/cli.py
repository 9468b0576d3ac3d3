"""Command-line driver.

Exit status is 0 on success, 1 when inputs or a validation check fail, and 2
for runtime problems such as refusing to overwrite existing results.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .allocation import read_channels_csv, solve_isi, write_allocation_csv
from .config import ConfigError, dumps, load_config
from .designer import DesignError, fit_cosine, write_fit
from .experiments import (
    PLANS,
    SCALES,
    ExperimentPlan,
    ValidationFailed,
    design_config,
    run,
    run_design,
    write_manifest,
)
from .moments import all_moments, read_moments, write_moments
from .simulator import ScenarioConfig
from .waveforms import FITTED, btrc, raised_cosine, read_waveform_csv, table1_waveform

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(ValueError):
    pass


def _common(p: argparse.ArgumentParser, out_default: str) -> None:
    p.add_argument("--config", type=Path, help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None, help="base random seed")
    p.add_argument("--scale", choices=SCALES, default="desk")
    p.add_argument("--out", type=Path, default=Path(out_default))
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")


def _waveform_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--waveform", choices=("RC", "BTRC", FITTED), default="RC")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--waveform-csv", type=Path, help="sampled pulse (t,z) instead of a named one")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="otawave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="desynchronization moments of a pulse")
    _common(p, "moments.csv")
    _waveform_args(p)
    p.add_argument("--sigma-eps", type=float, default=0.1)
    p.add_argument("--mu", type=int, default=6)
    p.add_argument("--nodes", type=int, default=64)

    p = sub.add_parser("allocate", help="optimal power allocation for given channels")
    _common(p, "allocation.csv")
    _waveform_args(p)
    p.add_argument("--channels", type=Path, required=True, help="CSV with header 'h'")
    p.add_argument("--moments", type=Path, help="moments CSV written by 'moments'")
    p.add_argument("--sigma-eps", type=float, default=0.1)
    p.add_argument("--mu", type=int, default=6)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--P", type=float, default=1.0)

    p = sub.add_parser("simulate", help="Monte-Carlo MSE of one waveform")
    _common(p, "simulate.csv")
    _waveform_args(p)
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("design", help="train the pulse designer")
    _common(p, "design")
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("fit", help="cosine-series fit of a sampled pulse")
    _common(p, "fit.txt")
    p.add_argument("--waveform-csv", type=Path, required=True)

    p = sub.add_parser("reproduce", help="regenerate a figure or table as CSV")
    _common(p, "results")
    p.add_argument("name", choices=PLANS)

    p = sub.add_parser("validate", help="run the invariant suite")
    _common(p, "results")
    return ap


def _spec(args):
    if getattr(args, "waveform_csv", None) is not None:
        return read_waveform_csv(args.waveform_csv)
    if args.waveform == "RC":
        return raised_cosine(args.alpha)
    if args.waveform == "BTRC":
        return btrc(args.alpha)
    return table1_waveform(args.alpha)


def _guard(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config, "scenario") if args.config else ScenarioConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        cfg = replace(cfg, trials=args.trials)
    elif args.scale == "desk" and not args.config:
        cfg = replace(cfg, trials=10_000)
    return cfg


def cmd_moments(args) -> int:
    out = _guard(args.out, args.force)
    m = all_moments(_spec(args), args.sigma_eps, args.mu, args.nodes)
    write_moments(m, out)
    print(f"eps_check={m.eps_check:.10g} eps_hat={m.eps_hat:.10g} -> {out}")
    return EXIT_OK


def cmd_allocate(args) -> int:
    out = _guard(args.out, args.force)
    h = read_channels_csv(args.channels)
    m = read_moments(args.moments) if args.moments else all_moments(_spec(args), args.sigma_eps, args.mu)
    sigma2 = args.P / 10 ** (args.snr_db / 10)
    alloc = solve_isi(m, h, args.P, sigma2)
    write_allocation_csv(alloc, out)
    print(f"a={alloc.a:.10g} i_star={alloc.i_star} mse={alloc.mse:.10g} -> {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulator import simulate_mse

    out = _guard(args.out, args.force)
    cfg = _scenario(args)
    spec = _spec(args)
    est = simulate_mse(cfg, spec)
    out.write_text(
        "waveform,mse,stderr,trials,closed_form\n"
        f"{spec.label},{est.mean:.12g},{est.std_err:.12g},{est.trials},{est.closed_form:.12g}\n"
    )
    print(f"{spec.label}: mse={est.mean:.6g} +/- {est.std_err:.2g} (closed form {est.closed_form:.6g})")
    return EXIT_OK


def cmd_design(args) -> int:
    out_dir = args.out
    if args.config:
        cfg = load_config(args.config, "design")
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    else:
        cfg = design_config(args.scale, args.seed or 0, 0.5 if args.alpha is None else args.alpha)
    if args.alpha is not None:
        cfg = replace(cfg, alpha=args.alpha)
    out_dir.mkdir(parents=True, exist_ok=True)
    if any(out_dir.glob("design_*")) and not args.force:
        raise FileExistsError(f"{out_dir} already holds design results; pass --force to overwrite")
    files, info = run_design(cfg, out_dir)
    cfg_path = out_dir / "design_config.txt"
    cfg_path.write_text(dumps(cfg))
    files.append(cfg_path)
    r = info["residuals"]
    write_manifest(out_dir, "design", {"seed": cfg.seed, "scale": args.scale,
                                       "residuals": r.__dict__}, files)
    print(f"energy_rel={r.energy_rel:.3g} oob_mean={r.oob_mean:.3g} symmetry_rel={r.symmetry_rel:.3g}")
    print(f"fit p={info['fit'].p:.6g} rmse={info['fit'].rmse:.3g} -> {out_dir}")
    return EXIT_OK


def cmd_fit(args) -> int:
    out = _guard(args.out, args.force)
    fit = fit_cosine(read_waveform_csv(args.waveform_csv))
    write_fit(fit, out)
    print(" ".join(f"a{j}={c:.6g}" for j, c in enumerate(fit.coeffs)) + f" p={fit.p:.6g} rmse={fit.rmse:.3g}")
    return EXIT_OK


def cmd_reproduce(args, name=None) -> int:
    plan = ExperimentPlan(name or args.name, args.scale, 0 if args.seed is None else args.seed, args.out)
    try:
        files = run(plan, force=args.force)
    except ValidationFailed as exc:
        for f in exc.failures:
            print(f"FAIL {f.name}: {f.detail}", file=sys.stderr)
        return EXIT_INVALID
    for f in files:
        print(f)
    return EXIT_OK


COMMANDS = {
    "moments": cmd_moments,
    "allocate": cmd_allocate,
    "simulate": cmd_simulate,
    "design": cmd_design,
    "fit": cmd_fit,
    "reproduce": cmd_reproduce,
    "validate": lambda a: cmd_reproduce(a, "validate"),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DesignError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
